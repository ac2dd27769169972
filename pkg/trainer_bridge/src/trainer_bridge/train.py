"""Whisper fine-tuning on a workbench manifest.

AdamW with optional linear warmup, per-step loss logging, checkpoint and
spec record written to the output directory. The model architecture is
whatever the checkpoint defines; nothing here modifies it.
"""

from __future__ import annotations

import json
import logging
import random
from pathlib import Path

import numpy as np

from trainer_bridge.data import BridgeDataError, check_audio, load_audio, read_manifest
from trainer_bridge.spec import TrainSpec, save_spec_record

log = logging.getLogger(__name__)

WARMUP_FRACTION = 0.1


def _load_model_and_processor(ref: str):
    from transformers import WhisperForConditionalGeneration, WhisperProcessor

    try:
        processor = WhisperProcessor.from_pretrained(ref)
        model = WhisperForConditionalGeneration.from_pretrained(ref)
    except OSError as exc:
        raise BridgeDataError(
            f"cannot load model {ref!r}: {exc}. Hub checkpoints need network access; "
            "set model_path in the spec to use a local checkpoint."
        ) from exc
    return model, processor


def _batches(items: list, size: int):
    for start in range(0, len(items), size):
        yield items[start : start + size]


def train(manifest_path: Path | str, spec: TrainSpec, out_dir: Path | str) -> Path:
    """Fine-tune and return the checkpoint directory."""
    import torch

    entries = read_manifest(manifest_path)
    if not entries:
        raise BridgeDataError(f"manifest {manifest_path} is empty")
    for entry in entries:
        check_audio(entry)

    random.seed(spec.seed)
    np.random.seed(spec.seed)
    torch.manual_seed(spec.seed)

    model, processor = _load_model_and_processor(spec.model_ref())
    model.train()

    examples = []
    for entry in entries:
        features = processor.feature_extractor(
            load_audio(entry), sampling_rate=16000, return_tensors="pt"
        ).input_features[0]
        labels = processor.tokenizer(entry.text).input_ids[: spec.max_target_tokens]
        examples.append((features, labels))

    optimizer = torch.optim.AdamW(
        model.parameters(), lr=spec.learning_rate, weight_decay=spec.weight_decay
    )
    total_steps = max(1, spec.epochs * ((len(examples) + spec.batch_size - 1) // spec.batch_size))
    warmup_steps = max(1, int(WARMUP_FRACTION * total_steps)) if spec.warmup else 0

    def lr_lambda(step: int) -> float:
        if spec.warmup and step < warmup_steps:
            return (step + 1) / warmup_steps
        if total_steps == warmup_steps:
            return 1.0
        return max(0.0, (total_steps - step) / max(1, total_steps - warmup_steps))

    scheduler = torch.optim.lr_scheduler.LambdaLR(optimizer, lr_lambda)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    step_log: list[dict] = []
    step = 0
    try:
        for epoch in range(spec.epochs):
            for batch in _batches(examples, spec.batch_size):
                features = torch.stack([f for f, _ in batch])
                max_len = max(len(l) for _, l in batch)
                labels = torch.full((len(batch), max_len), -100, dtype=torch.long)
                for row, (_, ids) in enumerate(batch):
                    labels[row, : len(ids)] = torch.tensor(ids, dtype=torch.long)
                output = model(input_features=features, labels=labels)
                output.loss.backward()
                optimizer.step()
                scheduler.step()
                optimizer.zero_grad()
                loss = float(output.loss.detach())
                step_log.append({"epoch": epoch, "step": step, "loss": loss})
                log.info("epoch %d step %d loss %.4f", epoch, step, loss)
                step += 1
    except RuntimeError as exc:
        if "out of memory" in str(exc).lower():
            raise BridgeDataError(
                f"out of memory at batch_size={spec.batch_size}; "
                f"retry with batch_size={max(1, spec.batch_size // 2)}"
            ) from exc
        raise

    checkpoint = out_dir / "checkpoint"
    model.save_pretrained(checkpoint)
    processor.save_pretrained(checkpoint)
    save_spec_record(spec, out_dir / "spec.json")
    with (out_dir / "train_log.jsonl").open("w", encoding="utf-8") as f:
        for row in step_log:
            f.write(json.dumps(row) + "\n")
    log.info("checkpoint written to %s after %d steps", checkpoint, step)
    return checkpoint
