"""End-to-end augmentation composer: ratio-controlled selection, paraphrase
plus synthesis chaining, and merging of original and synthetic manifests.

Every run is deterministic given (config, seed, deterministic backends):
selection uses a seeded sample, speaker assignment a seeded rotation, and
all outputs are assembled in source order regardless of worker count.
"""

from __future__ import annotations

import datetime
import json
import logging
import os
import random
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from elderaug import paraphrase as para
from elderaug import synth as syn
from elderaug.config import cfg_get, cfg_require
from elderaug.corpus import Manifest, Utterance, load_manifest, save_manifest
from elderaug.errors import ConfigError, DataError
from elderaug.util import round_half_up, sha256_file

log = logging.getLogger(__name__)

ORDERINGS = ("append", "interleave")

# Default pool size per augmentation ratio: small ratios get small pools.
_POOL_SCHEDULE = ((0.3, 2), (0.5, 4))
_POOL_SCHEDULE_MAX = 8


def default_pool_size(ratio: float) -> int:
    """Reference-speaker count used when the config does not pin one."""
    for upper, size in _POOL_SCHEDULE:
        if ratio < upper:
            return size
    return _POOL_SCHEDULE_MAX


@dataclass(frozen=True)
class AugmentConfig:
    """Knobs for one augmentation run; the seed is recorded in outputs."""

    ratio: float
    seed: int = 0
    pool_preset: str | None = None
    pool_size_override: int | None = None
    llm_profile: str = "default"
    tts_backend: str = "mock"
    ordering: str = "append"

    def __post_init__(self):
        if not 0.0 < self.ratio <= 1.0:
            raise ValueError(f"ratio must be in (0, 1], got {self.ratio}")
        if self.ordering not in ORDERINGS:
            raise ValueError(f"ordering must be one of {ORDERINGS}")


def select_for_augmentation(m: Manifest, ratio: float, seed: int) -> list[Utterance]:
    """Pick round(ratio * N) originals uniformly without replacement.

    Deterministic per seed; selected entries keep manifest order. ratio = 1
    returns the whole manifest unshuffled.
    """
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio must be in (0, 1], got {ratio}")
    if m.split != "train":
        raise DataError(f"selection requires a train-split manifest, got {m.split!r}")
    if len(m) == 0:
        raise DataError("cannot select from an empty manifest")
    synthetic = [u.id for u in m.entries if u.origin != "original"]
    if synthetic:
        raise DataError(
            f"selection source must be all-original; found synthetic ids {synthetic[:3]}"
        )
    if ratio == 1.0:
        return list(m.entries)
    n_sel = round_half_up(ratio * len(m))
    rng = random.Random(seed)
    indices = sorted(rng.sample(range(len(m)), n_sel))
    return [m.entries[i] for i in indices]


@dataclass
class ParaphraseStage:
    backend: para.ParaphraseBackend
    template: para.PromptTemplate
    params: para.GenerationParams
    cache: para.ParaphraseCache | None = None
    min_words: int = para.DEFAULT_MIN_WORDS
    max_words: int = para.DEFAULT_MAX_WORDS
    retries: int = 2
    validation_retries: int = 3
    backoff_s: float = 0.5
    workers: int = 1

    def run(self, utterances: Sequence[Utterance]) -> list[para.ParaphraseRecord]:
        return para.paraphrase_utterances(
            self.backend,
            self.template,
            self.params,
            utterances,
            cache=self.cache,
            workers=self.workers,
            min_words=self.min_words,
            max_words=self.max_words,
            retries=self.retries,
            validation_retries=self.validation_retries,
            backoff_s=self.backoff_s,
        )


@dataclass
class SynthesisStage:
    backend: syn.TtsBackend
    pool: syn.SpeakerPool
    lang: str | None = None
    retries: int = 2
    backoff_s: float = 0.5
    workers: int = 1

    def run(
        self, records: Sequence[para.ParaphraseRecord], plan: syn.AssignmentPlan, out_dir: Path
    ) -> Manifest:
        return syn.run_batch(
            self.backend,
            records,
            plan,
            self.pool,
            out_dir,
            lang=self.lang,
            workers=self.workers,
            retries=self.retries,
            backoff_s=self.backoff_s,
        )


def build_augmented_set(
    selected: Sequence[Utterance],
    paraphrase_stage: ParaphraseStage,
    synth_stage: SynthesisStage,
    config: AugmentConfig,
    out_dir: Path | str,
) -> tuple[Manifest, list[para.ParaphraseRecord]]:
    """Chain paraphrasing and synthesis over the selected utterances.

    Returns the synthetic manifest (one entry per input, linked via
    source_id) along with the paraphrase records that produced it.
    """
    out_dir = Path(out_dir)
    records = paraphrase_stage.run(selected)
    plan = syn.plan_assignments(len(records), synth_stage.pool, config.seed)
    aug = synth_stage.run(records, plan, out_dir)
    if len(aug) != len(selected):
        raise DataError(
            f"augmented set has {len(aug)} entries for {len(selected)} inputs"
        )
    return aug, records


def rebase_manifest(m: Manifest, dst_dir: Path | str) -> Manifest:
    """Rewrite relative audio paths so they stay valid from dst_dir."""
    dst_dir = Path(dst_dir)
    entries = []
    for u in m.entries:
        p = Path(u.audio_path)
        if not p.is_absolute() and m.root is not None:
            rewritten = os.path.relpath(m.root / p, dst_dir)
            u = replace(u, audio_path=rewritten)
        entries.append(u)
    return Manifest(entries=entries, split=m.split, root=dst_dir)


def merge_train_set(orig: Manifest, aug: Manifest, ordering: str = "append") -> Manifest:
    """Combine original and synthetic manifests into one training manifest.

    `append` concatenates; `interleave` alternates original/synthetic until
    one side runs out. Id sets must be disjoint.
    """
    if ordering not in ORDERINGS:
        raise ValueError(f"ordering must be one of {ORDERINGS}")
    orig_ids = set(orig.ids())
    for u in aug.entries:
        if u.id in orig_ids:
            other = next(o for o in orig.entries if o.id == u.id)
            raise DataError(
                f"id collision between manifests: {u.id!r} "
                f"(original text {other.text!r}, synthetic text {u.text!r})"
            )
    if ordering == "append":
        entries = list(orig.entries) + list(aug.entries)
    else:
        entries = []
        for k in range(max(len(orig), len(aug))):
            if k < len(orig):
                entries.append(orig.entries[k])
            if k < len(aug):
                entries.append(aug.entries[k])
    return Manifest(entries=entries, split="train")


# ---------------------------------------------------------------------------
# Full run orchestration


@dataclass
class RunRecord:
    """Provenance for one augmentation run, written next to its outputs."""

    config: dict
    seed: int
    input_manifest_sha256: str
    d_aug_sha256: str
    d_train_sha256: str
    stage_timings_s: dict = field(default_factory=dict)
    backend_calls: dict = field(default_factory=dict)
    created_at: str = ""

    def save(self, path: Path | str) -> None:
        payload = json.dumps(self.__dict__, ensure_ascii=False, sort_keys=True, indent=2)
        Path(path).write_text(payload + "\n", encoding="utf-8")


@dataclass
class RunPaths:
    workdir: Path
    d_aug: Path
    d_train: Path
    paraphrases: Path
    run_record: Path


def _augment_config_from(cfg: dict) -> AugmentConfig:
    size_override = cfg_get(cfg, "synth.pool_size_override")
    try:
        return AugmentConfig(
            ratio=float(cfg_require(cfg, "augment.ratio")),
            seed=int(cfg_get(cfg, "seed", 0)),
            pool_preset=cfg_get(cfg, "synth.pool_preset"),
            pool_size_override=None if size_override is None else int(size_override),
            llm_profile=cfg_get(cfg, "paraphrase.profile", "default"),
            tts_backend=str(cfg_get(cfg, "synth.backend.kind", "mock")),
            ordering=cfg_get(cfg, "augment.ordering", "append"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def build_paraphrase_backend(cfg: dict, mock: bool) -> para.ParaphraseBackend:
    kind = "mock" if mock else cfg_get(cfg, "paraphrase.backend.kind", "mock")
    if kind == "mock":
        return para.MockParaphraseBackend()
    if kind == "http":
        return para.HttpChatBackend(
            base_url=cfg_require(cfg, "paraphrase.backend.base_url"),
            model=cfg_require(cfg, "paraphrase.backend.model"),
            api_key_env=cfg_get(cfg, "paraphrase.backend.api_key_env"),
            timeout_s=float(cfg_get(cfg, "paraphrase.backend.timeout_s", 60.0)),
        )
    if kind == "command":
        return para.CommandBackend(
            argv=cfg_require(cfg, "paraphrase.backend.argv"),
            model_id=cfg_get(cfg, "paraphrase.backend.model"),
        )
    raise ConfigError(f"unknown paraphrase backend kind {kind!r}")


def build_tts_backend(cfg: dict, mock: bool) -> syn.TtsBackend:
    kind = "mock" if mock else cfg_get(cfg, "synth.backend.kind", "mock")
    if kind == "mock":
        return syn.MockTtsBackend(
            native_rate=int(cfg_get(cfg, "synth.backend.native_rate", 22050)),
            mode=cfg_get(cfg, "synth.backend.mode", "tone"),
        )
    if kind == "http":
        return syn.HttpTtsBackend(
            url=cfg_require(cfg, "synth.backend.url"),
            upload_reference=bool(cfg_get(cfg, "synth.backend.upload_reference", True)),
            timeout_s=float(cfg_get(cfg, "synth.backend.timeout_s", 120.0)),
        )
    if kind == "command":
        return syn.CommandTtsBackend(template=cfg_require(cfg, "synth.backend.template"))
    raise ConfigError(f"unknown TTS backend kind {kind!r}")


def template_from_config(cfg: dict) -> para.PromptTemplate:
    section = cfg_get(cfg, "paraphrase.template")
    if not section:
        return para.DEFAULT_TEMPLATE
    return para.PromptTemplate(
        preparation=section.get("preparation", para.DEFAULT_TEMPLATE.preparation),
        paraphrasing_rules=tuple(
            section.get("paraphrasing_rules", para.DEFAULT_TEMPLATE.paraphrasing_rules)
        ),
        contextual_instruction=section.get(
            "contextual_instruction", para.DEFAULT_TEMPLATE.contextual_instruction
        ),
        transcript_prefix=section.get("transcript_prefix", para.DEFAULT_TEMPLATE.transcript_prefix),
    )


def run_augment(cfg: dict, base_dir: Path | str, mock_backends: bool = False) -> RunPaths:
    """Execute select -> paraphrase -> synthesize -> merge for one config.

    `base_dir` anchors relative paths from the config file. The final
    manifests are only promoted after every stage succeeds, so a failed run
    never leaves a partial D_aug or D_train behind.
    """
    base_dir = Path(base_dir)
    acfg = _augment_config_from(cfg)
    workdir = base_dir / str(cfg_get(cfg, "workdir", "out"))
    workdir.mkdir(parents=True, exist_ok=True)

    manifest_path = base_dir / str(cfg_require(cfg, "corpus.train_manifest"))
    orig = load_manifest(manifest_path, split="train")
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    selected = select_for_augmentation(orig, acfg.ratio, acfg.seed)
    timings["select"] = time.perf_counter() - t0

    llm = build_paraphrase_backend(cfg, mock_backends)
    pstage = ParaphraseStage(
        backend=llm,
        template=template_from_config(cfg),
        params=para.generation_profile(acfg.llm_profile),
        cache=para.ParaphraseCache(workdir / "cache"),
        min_words=int(cfg_get(cfg, "paraphrase.min_words", para.DEFAULT_MIN_WORDS)),
        max_words=int(cfg_get(cfg, "paraphrase.max_words", para.DEFAULT_MAX_WORDS)),
        retries=int(cfg_get(cfg, "paraphrase.retries", 2)),
        validation_retries=int(cfg_get(cfg, "paraphrase.validation_retries", 3)),
        backoff_s=float(cfg_get(cfg, "paraphrase.backoff_s", 0.5)),
        workers=int(cfg_get(cfg, "paraphrase.workers", os.cpu_count() or 1)),
    )

    pool_file = base_dir / str(cfg_require(cfg, "synth.pool_file"))
    pool_size = acfg.pool_size_override
    if pool_size is None and acfg.pool_preset is None:
        pool_size = default_pool_size(acfg.ratio)
    pool = syn.load_speaker_pool(pool_file, preset=acfg.pool_preset, size=pool_size)

    tts = build_tts_backend(cfg, mock_backends)
    sstage = SynthesisStage(
        backend=tts,
        pool=pool,
        lang=cfg_get(cfg, "corpus.lang"),
        retries=int(cfg_get(cfg, "synth.retries", 2)),
        backoff_s=float(cfg_get(cfg, "synth.backoff_s", 0.5)),
        workers=int(cfg_get(cfg, "synth.workers", os.cpu_count() or 1)),
    )

    t0 = time.perf_counter()
    aug_dir = workdir / "aug"
    aug, records = build_augmented_set(selected, pstage, sstage, acfg, aug_dir)
    timings["augment"] = time.perf_counter() - t0

    paraphrases_path = workdir / "paraphrases.jsonl"
    para.save_paraphrase_records(paraphrases_path, records)

    d_aug_path = aug_dir / "d_aug.jsonl"
    save_manifest(aug, d_aug_path)

    t0 = time.perf_counter()
    merged = merge_train_set(
        rebase_manifest(orig, workdir),
        rebase_manifest(aug, workdir),
        ordering=acfg.ordering,
    )
    d_train_path = workdir / "d_train.jsonl"
    save_manifest(merged, d_train_path)
    timings["merge"] = time.perf_counter() - t0

    record = RunRecord(
        config=cfg,
        seed=acfg.seed,
        input_manifest_sha256=sha256_file(manifest_path),
        d_aug_sha256=sha256_file(d_aug_path),
        d_train_sha256=sha256_file(d_train_path),
        stage_timings_s={k: round(v, 6) for k, v in timings.items()},
        backend_calls={"llm": llm.call_count, "tts": tts.call_count},
        created_at=datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
    )
    record_path = workdir / "run_record.json"
    record.save(record_path)
    log.info(
        "augment run complete: %d originals, %d synthetic, d_train=%s",
        len(orig),
        len(aug),
        d_train_path,
    )
    return RunPaths(
        workdir=workdir,
        d_aug=d_aug_path,
        d_train=d_train_path,
        paraphrases=paraphrases_path,
        run_record=record_path,
    )


__all__ = [
    "AugmentConfig",
    "ParaphraseStage",
    "RunPaths",
    "RunRecord",
    "SynthesisStage",
    "build_augmented_set",
    "build_paraphrase_backend",
    "build_tts_backend",
    "default_pool_size",
    "merge_train_set",
    "rebase_manifest",
    "run_augment",
    "select_for_augmentation",
    "template_from_config",
]
