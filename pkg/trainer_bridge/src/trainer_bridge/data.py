"""Readers for the workbench's file formats: JSONL manifests and 16 kHz
mono PCM16 WAV audio."""

from __future__ import annotations

import json
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

REQUIRED_RATE = 16000


class BridgeDataError(Exception):
    """Manifest or audio violates the bridge's preconditions."""


@dataclass(frozen=True)
class Entry:
    utt_id: str
    audio_path: Path
    text: str


def read_manifest(path: Path | str) -> list[Entry]:
    """Load (id, audio_path, text) rows; relative paths resolve against the
    manifest's directory."""
    path = Path(path)
    if not path.is_file():
        raise BridgeDataError(f"manifest not found: {path}")
    entries: list[Entry] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BridgeDataError(f"{path}:{lineno}: malformed record: {exc.msg}") from exc
            for key in ("id", "audio_path", "text"):
                if key not in record:
                    raise BridgeDataError(f"{path}:{lineno}: missing field {key!r}")
            if record["id"] in seen:
                raise BridgeDataError(f"{path}:{lineno}: duplicate id {record['id']!r}")
            seen.add(record["id"])
            audio = Path(record["audio_path"])
            if not audio.is_absolute():
                audio = path.parent / audio
            entries.append(Entry(utt_id=record["id"], audio_path=audio, text=record["text"]))
    return entries


def check_audio(entry: Entry) -> None:
    """Require a readable mono 16 kHz PCM16 file; raises before any training."""
    try:
        with wave.open(str(entry.audio_path), "rb") as w:
            rate = w.getframerate()
            channels = w.getnchannels()
            width = w.getsampwidth()
    except (OSError, wave.Error, EOFError) as exc:
        raise BridgeDataError(f"{entry.utt_id}: cannot read {entry.audio_path}: {exc}") from exc
    if rate != REQUIRED_RATE:
        raise BridgeDataError(
            f"{entry.utt_id}: {entry.audio_path} is {rate} Hz, need {REQUIRED_RATE}"
        )
    if channels != 1:
        raise BridgeDataError(f"{entry.utt_id}: {entry.audio_path} has {channels} channels, need mono")
    if width != 2:
        raise BridgeDataError(f"{entry.utt_id}: {entry.audio_path} is not PCM16")


def load_audio(entry: Entry) -> np.ndarray:
    """Decode to float32 samples in [-1, 1]."""
    try:
        with wave.open(str(entry.audio_path), "rb") as w:
            frames = w.readframes(w.getnframes())
    except (OSError, wave.Error, EOFError) as exc:
        raise BridgeDataError(f"{entry.utt_id}: cannot decode {entry.audio_path}: {exc}") from exc
    samples = np.frombuffer(frames, dtype="<i2").astype(np.float32) / 32768.0
    if samples.size == 0:
        raise BridgeDataError(f"{entry.utt_id}: {entry.audio_path} holds no samples")
    return samples


def write_hyp_records(path: Path | str, rows: list[tuple[str, str]]) -> None:
    lines = [
        json.dumps({"hyp_text": text, "id": utt_id}, ensure_ascii=False, sort_keys=True)
        for utt_id, text in rows
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
