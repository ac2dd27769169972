"""Batch transcription: checkpoint + test manifest -> hypothesis records.

Decoding is greedy (recorded in the run log). Undecodable audio is skipped
with the ids logged; callers surface a nonzero exit when anything was
skipped.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from trainer_bridge.data import (
    BridgeDataError,
    load_audio,
    read_manifest,
    write_hyp_records,
)
from trainer_bridge.train import _load_model_and_processor

log = logging.getLogger(__name__)


def transcribe(
    checkpoint: Path | str,
    manifest_path: Path | str,
    out_path: Path | str,
    max_new_tokens: int = 48,
) -> list[str]:
    """Write one (id, hyp_text) record per test utterance, in manifest order.

    Returns the ids that were skipped because their audio would not decode.
    """
    import torch

    entries = read_manifest(manifest_path)
    model, processor = _load_model_and_processor(str(checkpoint))
    model.eval()

    rows: list[tuple[str, str]] = []
    skipped: list[str] = []
    with torch.no_grad():
        for entry in entries:
            try:
                audio = load_audio(entry)
            except (BridgeDataError, OSError) as exc:
                log.warning("skipping %s: %s", entry.utt_id, exc)
                skipped.append(entry.utt_id)
                continue
            features = processor.feature_extractor(
                audio, sampling_rate=16000, return_tensors="pt"
            ).input_features
            generated = model.generate(
                features, max_new_tokens=max_new_tokens, do_sample=False, num_beams=1
            )
            text = processor.tokenizer.decode(generated[0], skip_special_tokens=True).strip()
            rows.append((entry.utt_id, text))

    write_hyp_records(out_path, rows)
    run_log = {
        "checkpoint": str(checkpoint),
        "decoding": "greedy",
        "max_new_tokens": max_new_tokens,
        "n_transcribed": len(rows),
        "skipped_ids": skipped,
    }
    Path(str(out_path) + ".log.json").write_text(
        json.dumps(run_log, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    if skipped:
        log.warning("skipped %d utterance(s): %s", len(skipped), skipped)
    return skipped
