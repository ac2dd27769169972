"""Training specification: model size, optimizer settings, seed."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import yaml

MODEL_SIZES = ("small", "medium", "large-v2", "large-v3")

# Official checkpoints for each size; require network (or a local mirror)
# to fetch. `model_path` in the spec file points at a local checkpoint
# instead, which is the only option in air-gapped environments.
MODEL_IDS = {
    "small": "openai/whisper-small",
    "medium": "openai/whisper-medium",
    "large-v2": "openai/whisper-large-v2",
    "large-v3": "openai/whisper-large-v3",
}


@dataclass(frozen=True)
class TrainSpec:
    model_size: str = "small"
    epochs: int = 5
    learning_rate: float = 1e-5
    weight_decay: float = 0.01
    batch_size: int = 16
    warmup: bool = True
    seed: int = 0
    model_path: str | None = None
    max_target_tokens: int = 128

    def __post_init__(self):
        if self.model_size not in MODEL_SIZES:
            raise ValueError(f"model_size must be one of {MODEL_SIZES}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")

    def model_ref(self) -> str:
        return self.model_path or MODEL_IDS[self.model_size]

    def content_hash(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def load_spec(path: Path | str) -> TrainSpec:
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: spec file must be a mapping")
    try:
        return TrainSpec(**raw)
    except TypeError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def save_spec_record(spec: TrainSpec, path: Path | str) -> None:
    record = {**asdict(spec), "spec_hash": spec.content_hash()}
    Path(path).write_text(
        json.dumps(record, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
