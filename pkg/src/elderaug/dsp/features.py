"""Log-mel front end, time/frequency masking, and the feature file format.

Masking operates on log-mel features. Because the augmentation pipeline
emits audio files while masking is feature-domain, masked features are
exported to per-utterance binary files; a waveform-domain approximation
(zeroing random time segments) is available for trainers that only accept
audio.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from elderaug.dsp.audio_io import AudioClip
from elderaug.errors import AudioFormatError
from elderaug.util import atomic_write_bytes

LOG_FLOOR = math.log(1e-10)

_FEATURE_MAGIC = b"LMEL"


@dataclass(frozen=True, eq=False)
class MelSpectrogram:
    """Log-energy mel features, frames[n_frames, n_mels]."""

    frames: np.ndarray
    n_mels: int
    win_s: float
    hop_s: float
    sample_rate: int = 16000

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float32)
        if frames.ndim != 2 or frames.shape[1] != self.n_mels:
            raise ValueError("frames must have shape [n_frames, n_mels]")
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


@dataclass(frozen=True)
class MaskPolicy:
    """Masking configuration: per mask, width ~ Uniform[0, param], start
    uniform over valid positions."""

    freq_mask_param: int = 15
    n_freq_masks: int = 2
    time_mask_param: int = 50
    n_time_masks: int = 2
    mask_value: str = "log_floor"  # or "per_utterance_mean"
    seed: int = 0

    def __post_init__(self):
        if min(self.freq_mask_param, self.n_freq_masks, self.time_mask_param, self.n_time_masks) < 0:
            raise ValueError("mask parameters and counts must be >= 0")
        if self.mask_value not in ("log_floor", "per_utterance_mean"):
            raise ValueError(f"unknown mask_value {self.mask_value!r}")


def hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_center_frequencies(n_mels: int, sample_rate: int) -> np.ndarray:
    """Center frequency in Hz of each triangular filter (HTK mel scale)."""
    edges = np.linspace(0.0, float(hz_to_mel(sample_rate / 2)), n_mels + 2)
    return mel_to_hz(edges[1:-1])


def mel_filterbank(n_mels: int, n_fft: int, sample_rate: int) -> np.ndarray:
    """Triangular filters over rfft bins, HTK mel spacing from 0 to Nyquist."""
    n_bins = n_fft // 2 + 1
    bin_hz = np.arange(n_bins) * sample_rate / n_fft
    edges_hz = mel_to_hz(np.linspace(0.0, float(hz_to_mel(sample_rate / 2)), n_mels + 2))
    fbank = np.zeros((n_mels, n_bins), dtype=np.float64)
    for m in range(n_mels):
        lo, center, hi = edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]
        rising = (bin_hz - lo) / max(center - lo, 1e-12)
        falling = (hi - bin_hz) / max(hi - center, 1e-12)
        fbank[m] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fbank


def log_mel(
    clip: AudioClip,
    n_mels: int = 80,
    win_s: float = 0.025,
    hop_s: float = 0.010,
) -> MelSpectrogram:
    """Hann-windowed magnitude STFT -> mel filterbank -> natural log.

    No centering or padding: n_frames = 1 + floor((len - win) / hop).
    Values are floored at ln(1e-10).
    """
    sr = clip.sample_rate
    win = round(win_s * sr)
    hop = round(hop_s * sr)
    if win <= 0 or hop <= 0:
        raise ValueError("window and hop must be positive")
    x = clip.samples
    if len(x) < win:
        raise ValueError(f"clip of {len(x)} samples shorter than one {win}-sample window")
    n_frames = 1 + (len(x) - win) // hop
    n_fft = 1 << max(win - 1, 1).bit_length()

    idx = np.arange(win)[None, :] + hop * np.arange(n_frames)[:, None]
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(win) / win)  # periodic Hann
    frames = x[idx] * window
    mag = np.abs(np.fft.rfft(frames, n=n_fft, axis=1))
    fbank = mel_filterbank(n_mels, n_fft, sr)
    mel = mag @ fbank.T
    out = np.log(np.maximum(mel, 1e-10))
    return MelSpectrogram(
        frames=out.astype(np.float32), n_mels=n_mels, win_s=win_s, hop_s=hop_s, sample_rate=sr
    )


def spec_augment(spec: MelSpectrogram, policy: MaskPolicy) -> MelSpectrogram:
    """Mask random frequency bands and time spans; pure and seed-deterministic.

    Exactly n_freq_masks + n_time_masks rectangles are replaced by the mask
    value; all other cells are copied bit-identically.
    """
    if policy.freq_mask_param > spec.n_mels:
        raise ValueError(
            f"freq_mask_param {policy.freq_mask_param} exceeds n_mels {spec.n_mels}"
        )
    rng = np.random.default_rng(policy.seed)
    frames = spec.frames.copy()
    n_frames, n_mels = frames.shape
    if policy.mask_value == "log_floor":
        fill = np.float32(LOG_FLOOR)
    else:
        fill = np.float32(frames.mean()) if frames.size else np.float32(LOG_FLOOR)

    for _ in range(policy.n_freq_masks):
        width = int(rng.integers(0, policy.freq_mask_param + 1))
        width = min(width, n_mels)
        start = int(rng.integers(0, n_mels - width + 1))
        frames[:, start : start + width] = fill
    for _ in range(policy.n_time_masks):
        width = int(rng.integers(0, policy.time_mask_param + 1))
        width = min(width, n_frames)
        start = int(rng.integers(0, n_frames - width + 1))
        frames[start : start + width, :] = fill

    return MelSpectrogram(
        frames=frames,
        n_mels=spec.n_mels,
        win_s=spec.win_s,
        hop_s=spec.hop_s,
        sample_rate=spec.sample_rate,
    )


def mask_waveform(clip: AudioClip, policy: MaskPolicy, hop_s: float = 0.010) -> AudioClip:
    """Waveform-domain stand-in for time masking: zero random segments.

    Each of the n_time_masks segments spans up to time_mask_param hops.
    Frequency masks have no waveform equivalent and are ignored here.
    """
    rng = np.random.default_rng(policy.seed)
    samples = clip.samples.copy()
    max_len = round(policy.time_mask_param * hop_s * clip.sample_rate)
    for _ in range(policy.n_time_masks):
        width = int(rng.integers(0, max_len + 1))
        width = min(width, len(samples))
        start = int(rng.integers(0, len(samples) - width + 1))
        samples[start : start + width] = 0.0
    return AudioClip(samples=samples, sample_rate=clip.sample_rate)


def write_features(path: Path | str, spec: MelSpectrogram) -> None:
    """Binary feature file: 16-byte header (magic, n_frames, n_mels, flags)
    then row-major little-endian float32."""
    header = _FEATURE_MAGIC + struct.pack("<III", spec.n_frames, spec.n_mels, 0)
    body = spec.frames.astype("<f4").tobytes(order="C")
    atomic_write_bytes(Path(path), header + body)


def read_features(path: Path | str) -> np.ndarray:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 16 or data[:4] != _FEATURE_MAGIC:
        raise AudioFormatError(f"{path}: not a feature file")
    n_frames, n_mels, _flags = struct.unpack_from("<III", data, 4)
    expected = 16 + 4 * n_frames * n_mels
    if len(data) < expected:
        raise AudioFormatError(f"{path}: truncated feature payload")
    flat = np.frombuffer(data, dtype="<f4", count=n_frames * n_mels, offset=16)
    return flat.reshape(n_frames, n_mels).copy()
