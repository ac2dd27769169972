"""Deterministic toy corpus for offline runs, demos, and tests.

Builds a small train manifest of elderly speakers (short tone clips with
generated sentences), a reference speaker pool (4F + 4M), and a matching
run config. Everything derives from one seed.
"""

from __future__ import annotations

import random
from pathlib import Path

import numpy as np

from elderaug.corpus import Manifest, Utterance, save_manifest
from elderaug.dsp import AudioClip, write_wav
from elderaug.util import atomic_write_text, stable_dumps

_WORDS = (
    "the", "old", "garden", "doctor", "told", "me", "about", "my", "blood",
    "pressure", "pills", "every", "morning", "we", "walk", "down", "to",
    "market", "grandchildren", "visit", "on", "sunday", "tea", "gets", "cold",
    "quickly", "these", "days", "radio", "plays", "songs", "from", "before",
    "war", "neighbors", "bring", "fresh", "bread", "stories", "remember",
)


def _sentence(rng: random.Random) -> str:
    n = rng.randint(3, 9)
    words = [rng.choice(_WORDS) for _ in range(n)]
    return " ".join(words)


def _tone_clip(rng: random.Random, sample_rate: int = 16000) -> AudioClip:
    duration = rng.uniform(0.2, 0.5)
    freq = rng.uniform(150.0, 700.0)
    t = np.arange(round(duration * sample_rate)) / sample_rate
    return AudioClip(samples=0.3 * np.sin(2 * np.pi * freq * t), sample_rate=sample_rate)


def build_toy_corpus(
    root: Path | str,
    n_utterances: int = 200,
    n_speakers: int = 8,
    seed: int = 7,
    with_audio: bool = True,
) -> dict[str, Path]:
    """Write train.jsonl, pool.jsonl, run.yaml, and the audio files.

    Returns the paths keyed by artifact name.
    """
    root = Path(root)
    rng = random.Random(seed)
    wav_dir = root / "wav"
    ref_dir = root / "refs"
    root.mkdir(parents=True, exist_ok=True)

    entries = []
    for i in range(n_utterances):
        utt_id = f"utt{i:04d}"
        rel = f"wav/{utt_id}.wav"
        clip = _tone_clip(rng)
        if with_audio:
            wav_dir.mkdir(parents=True, exist_ok=True)
            write_wav(clip, root / rel)
        entries.append(
            Utterance(
                id=utt_id,
                audio_path=rel,
                text=_sentence(rng),
                origin="original",
                speaker_id=f"orig_spk{i % 20:02d}",
                age=rng.randint(70, 95),
                gender="F" if i % 2 == 0 else "M",
                lang="en",
                duration_s=clip.duration_s,
            )
        )
    train_path = root / "train.jsonl"
    save_manifest(Manifest(entries=entries, split="train", root=root), train_path)

    pool_lines = []
    for k in range(n_speakers):
        gender = "F" if k < (n_speakers + 1) // 2 else "M"
        spk_id = f"ref_{gender.lower()}{k:02d}"
        rel = f"refs/{spk_id}.wav"
        if with_audio:
            ref_dir.mkdir(parents=True, exist_ok=True)
            write_wav(_tone_clip(rng), root / rel)
        pool_lines.append(
            stable_dumps(
                {
                    "speaker_id": spk_id,
                    "gender": gender,
                    "reference_audio": rel,
                    "age": rng.randint(70, 90),
                }
            )
        )
    pool_path = root / "pool.jsonl"
    atomic_write_text(pool_path, "\n".join(pool_lines) + "\n")

    config_path = root / "run.yaml"
    atomic_write_text(
        config_path,
        "\n".join(
            [
                "corpus:",
                "  train_manifest: train.jsonl",
                "  lang: en",
                "workdir: out",
                "seed: 1234",
                "augment:",
                "  ratio: 0.5",
                "  ordering: append",
                "paraphrase:",
                "  profile: default",
                "  backend: {kind: mock}",
                "synth:",
                "  pool_file: pool.jsonl",
                "  backend: {kind: mock, native_rate: 22050}",
                "",
            ]
        ),
    )
    return {"train": train_path, "pool": pool_path, "config": config_path}


def main(argv=None) -> int:
    import argparse

    parser = argparse.ArgumentParser(description="Generate the bundled toy corpus.")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--n", type=int, default=200, help="number of utterances")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    paths = build_toy_corpus(args.out, n_utterances=args.n, seed=args.seed)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
