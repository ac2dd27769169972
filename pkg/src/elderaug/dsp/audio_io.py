"""RIFF WAV reading/writing for PCM16 and float PCM, mono or stereo.

Reading always yields a mono clip (stereo is downmixed by averaging);
writing emits mono PCM16. Parsing is done by hand so malformed files
produce errors naming the file and the defect.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from elderaug.errors import AudioFormatError
from elderaug.util import atomic_write_bytes

_FORMAT_PCM = 1
_FORMAT_FLOAT = 3
_FORMAT_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Mono waveform as float64 samples nominally in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional (mono)")
        if not np.isfinite(samples).all():
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class WavInfo:
    sample_rate: int
    channels: int
    n_frames: int
    duration_s: float


def _parse_chunks(data: bytes, name: str) -> tuple[dict, bytes]:
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise AudioFormatError(f"{name}: not a RIFF/WAVE file")
    fmt: dict | None = None
    payload: bytes | None = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise AudioFormatError(f"{name}: truncated fmt chunk")
            code, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", body, 0)
            if code == _FORMAT_EXTENSIBLE:
                if len(body) < 26:
                    raise AudioFormatError(f"{name}: truncated extensible fmt chunk")
                (code,) = struct.unpack_from("<H", body, 24)
            fmt = {"code": code, "channels": channels, "rate": rate, "bits": bits}
        elif chunk_id == b"data":
            if len(body) < size:
                raise AudioFormatError(f"{name}: data chunk shorter than declared")
            payload = body
        pos += 8 + size + (size & 1)
    if fmt is None:
        raise AudioFormatError(f"{name}: missing fmt chunk")
    if payload is None:
        raise AudioFormatError(f"{name}: missing data chunk")
    return fmt, payload


def decode_wav(data: bytes, name: str = "<bytes>") -> AudioClip:
    """Decode WAV bytes to a mono AudioClip."""
    fmt, payload = _parse_chunks(data, name)
    channels = fmt["channels"]
    if channels not in (1, 2):
        raise AudioFormatError(f"{name}: {channels} channels unsupported (need 1 or 2)")
    code, bits = fmt["code"], fmt["bits"]
    if code == _FORMAT_PCM and bits == 16:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % 2], dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif code == _FORMAT_FLOAT and bits == 32:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % 4], dtype="<f4")
        samples = raw.astype(np.float64)
    elif code == _FORMAT_FLOAT and bits == 64:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % 8], dtype="<f8")
        samples = raw.astype(np.float64)
    else:
        raise AudioFormatError(f"{name}: unsupported codec (format={code}, bits={bits})")
    if channels == 2:
        samples = samples[: len(samples) - len(samples) % 2].reshape(-1, 2).mean(axis=1)
    if len(samples) == 0:
        raise AudioFormatError(f"{name}: zero-length audio")
    return AudioClip(samples=samples, sample_rate=fmt["rate"])


def read_wav(path: Path | str) -> AudioClip:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise AudioFormatError(f"{path}: {exc.strerror or exc}") from exc
    return decode_wav(data, str(path))


def encode_wav(clip: AudioClip) -> bytes:
    """Encode a mono clip as PCM16 WAV bytes (values clipped to [-1, 1])."""
    scaled = np.clip(np.rint(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    payload = scaled.tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH", 16, _FORMAT_PCM, 1, clip.sample_rate, clip.sample_rate * 2, 2, 16
    )
    header += b"data" + struct.pack("<I", len(payload))
    return header + payload


def write_wav(clip: AudioClip, path: Path | str) -> None:
    """Write a mono PCM16 WAV atomically (temp file + rename)."""
    atomic_write_bytes(Path(path), encode_wav(clip))


def wav_info(path: Path | str) -> WavInfo:
    """Header-only probe: sample rate, channel count, frame count, duration."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise AudioFormatError(f"{path}: {exc.strerror or exc}") from exc
    fmt, payload = _parse_chunks(data, str(path))
    channels = fmt["channels"]
    if channels < 1:
        raise AudioFormatError(f"{path}: invalid channel count {channels}")
    bytes_per_sample = max(1, fmt["bits"] // 8)
    n_frames = len(payload) // (bytes_per_sample * channels)
    if n_frames == 0:
        raise AudioFormatError(f"{path}: zero-length audio")
    return WavInfo(
        sample_rate=fmt["rate"],
        channels=channels,
        n_frames=n_frames,
        duration_s=n_frames / fmt["rate"] if fmt["rate"] else 0.0,
    )
