import json
import math
import os
import struct
import wave
from pathlib import Path

import pytest

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

SENTENCES = [
    "the doctor told me about my pills",
    "we walk down to the market every morning",
    "tea gets cold so quickly these days",
    "the grandchildren visit on sunday afternoon",
    "neighbors bring fresh bread and old stories",
]


def write_sine_wav(path: Path, seconds: float = 0.4, freq: float = 300.0, rate: int = 16000):
    n = round(seconds * rate)
    frames = b"".join(
        struct.pack("<h", int(12000 * math.sin(2 * math.pi * freq * k / rate))) for k in range(n)
    )
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(frames)


def write_manifest(root: Path, n: int, rate: int = 16000, name: str = "manifest.jsonl") -> Path:
    wav_dir = root / "wav"
    wav_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for i in range(n):
        rel = f"wav/utt{i:03d}.wav"
        write_sine_wav(root / rel, seconds=0.3 + 0.02 * i, freq=200 + 40 * i, rate=rate)
        lines.append(
            json.dumps(
                {
                    "id": f"utt{i:03d}",
                    "audio_path": rel,
                    "text": SENTENCES[i % len(SENTENCES)],
                    "origin": "original",
                }
            )
        )
    path = root / name
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def toy_checkpoint(tmp_path_factory):
    from trainer_bridge.toymodel import build_toy_checkpoint

    return build_toy_checkpoint(tmp_path_factory.mktemp("toymodel"), seed=3)
