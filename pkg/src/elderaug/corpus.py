"""Manifest data model: utterances, manifests, validation, corpus statistics.

A manifest is a UTF-8 JSONL file, one utterance per line. Required keys:
id, audio_path, text, origin. Optional keys: speaker_id, age, gender, lang,
source_id, duration_s. Unknown keys are preserved on round trip. Audio paths
are interpreted relative to the manifest file's directory unless absolute.
"""

from __future__ import annotations

import collections
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator

from elderaug.errors import ManifestError
from elderaug.util import atomic_write_text, read_jsonl, stable_dumps

ORIGINS = ("original", "synthetic")
GENDERS = ("F", "M", "other")
SPLITS = ("train", "validation", "test", "unsplit")

_KNOWN_FIELDS = (
    "id",
    "audio_path",
    "text",
    "origin",
    "speaker_id",
    "age",
    "gender",
    "lang",
    "source_id",
    "duration_s",
)


@dataclass(frozen=True)
class Utterance:
    """One audio-text pair with speaker metadata and provenance."""

    id: str
    audio_path: str
    text: str
    origin: str
    speaker_id: str | None = None
    age: int | None = None
    gender: str | None = None
    lang: str | None = None
    source_id: str | None = None
    duration_s: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise ValueError("id must be non-empty")
        if not self.text or not self.text.strip():
            raise ValueError(f"utterance {self.id!r}: text is empty")
        if self.origin not in ORIGINS:
            raise ValueError(f"utterance {self.id!r}: origin must be one of {ORIGINS}")
        if self.origin == "synthetic" and not self.source_id:
            raise ValueError(f"utterance {self.id!r}: synthetic entry requires source_id")
        if self.origin == "original" and self.source_id is not None:
            raise ValueError(f"utterance {self.id!r}: original entry must not carry source_id")
        if self.gender is not None and self.gender not in GENDERS:
            raise ValueError(f"utterance {self.id!r}: gender must be one of {GENDERS}")
        if self.age is not None:
            if isinstance(self.age, bool) or not isinstance(self.age, int) or self.age < 0:
                raise ValueError(f"utterance {self.id!r}: age must be a non-negative integer")
        if self.duration_s is not None:
            object.__setattr__(self, "duration_s", float(self.duration_s))
            if self.duration_s < 0:
                raise ValueError(f"utterance {self.id!r}: duration_s must be >= 0")
        overlap = set(self.extra) & set(_KNOWN_FIELDS)
        if overlap:
            raise ValueError(f"utterance {self.id!r}: extra fields shadow known keys {sorted(overlap)}")

    def to_record(self) -> dict:
        record = dict(self.extra)
        for name in _KNOWN_FIELDS:
            value = getattr(self, name)
            if value is not None:
                record[name] = value
        return record

    @classmethod
    def from_record(cls, record: dict) -> "Utterance":
        for key in ("id", "audio_path", "text", "origin"):
            if key not in record:
                raise ValueError(f"missing required field {key!r}")
        known = {name: record[name] for name in _KNOWN_FIELDS if name in record}
        extra = {k: v for k, v in record.items() if k not in _KNOWN_FIELDS}
        return cls(extra=extra, **known)


@dataclass
class Manifest:
    """Ordered collection of utterances with a split label.

    `root` remembers the directory the manifest was loaded from so relative
    audio paths can be resolved; it is not serialized and never compared.
    """

    entries: list[Utterance]
    split: str = "unsplit"
    root: Path | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[Utterance]:
        return iter(self.entries)

    def ids(self) -> list[str]:
        return [u.id for u in self.entries]

    def resolve_audio_path(self, u: Utterance) -> Path:
        p = Path(u.audio_path)
        if p.is_absolute() or self.root is None:
            return p
        return self.root / p


@dataclass(frozen=True)
class ValidationPolicy:
    """Rules applied by validate_manifest beyond the schema invariants."""

    min_age: int | None = None
    check_audio: bool = False
    required_sample_rate: int | None = None
    duration_tolerance: float = 0.01


@dataclass(frozen=True)
class Violation:
    utt_id: str | None
    rule: str
    message: str


def load_manifest(path: Path | str, split: str = "unsplit") -> Manifest:
    """Parse a JSONL manifest, preserving file order.

    Errors name the offending line: malformed JSON, missing fields,
    duplicate ids, or schema violations (e.g. synthetic without source_id).
    """
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    entries: list[Utterance] = []
    seen: set[str] = set()
    try:
        for lineno, record in read_jsonl(path):
            try:
                utt = Utterance.from_record(record)
            except ValueError as exc:
                raise ManifestError(f"{path}:{lineno}: {exc}") from exc
            if utt.id in seen:
                raise ManifestError(f"{path}:{lineno}: duplicate id {utt.id!r}")
            seen.add(utt.id)
            entries.append(utt)
    except ValueError as exc:
        raise ManifestError(str(exc)) from exc
    return Manifest(entries=entries, split=split, root=path.parent)


def save_manifest(m: Manifest, path: Path | str) -> None:
    """Write a manifest in canonical form: sorted keys, compact separators.

    Canonical form makes golden-file comparisons and run-to-run hashes
    stable.
    """
    lines = [stable_dumps(u.to_record()) for u in m.entries]
    payload = "\n".join(lines) + ("\n" if lines else "")
    atomic_write_text(Path(path), payload)


def validate_manifest(m: Manifest, policy: ValidationPolicy | None = None) -> list[Violation]:
    """Check invariants and policy rules; violations are data, not errors."""
    policy = policy or ValidationPolicy()
    violations: list[Violation] = []

    counts = collections.Counter(u.id for u in m.entries)
    for utt_id, count in counts.items():
        if count > 1:
            violations.append(
                Violation(utt_id, "duplicate_id", f"id {utt_id!r} appears {count} times")
            )

    for u in m.entries:
        if policy.min_age is not None:
            if u.age is None:
                violations.append(
                    Violation(u.id, "age_unknown", f"age missing but min_age={policy.min_age} required")
                )
            elif u.age < policy.min_age:
                violations.append(
                    Violation(u.id, "min_age", f"age {u.age} below minimum {policy.min_age}")
                )
        if policy.check_audio:
            violations.extend(_check_audio(m, u, policy))
    return violations


def _check_audio(m: Manifest, u: Utterance, policy: ValidationPolicy) -> list[Violation]:
    from elderaug.dsp import wav_info  # local import: dsp is optional for pure-text flows

    out: list[Violation] = []
    path = m.resolve_audio_path(u)
    if not path.is_file():
        return [Violation(u.id, "audio_missing", f"audio file not found: {path}")]
    try:
        info = wav_info(path)
    except Exception as exc:
        return [Violation(u.id, "audio_undecodable", f"{path}: {exc}")]
    if policy.required_sample_rate is not None and info.sample_rate != policy.required_sample_rate:
        out.append(
            Violation(
                u.id,
                "sample_rate",
                f"{path}: {info.sample_rate} Hz, expected {policy.required_sample_rate}",
            )
        )
    if u.duration_s is not None and info.duration_s > 0:
        drift = abs(u.duration_s - info.duration_s) / info.duration_s
        if drift > policy.duration_tolerance:
            out.append(
                Violation(
                    u.id,
                    "duration_mismatch",
                    f"manifest says {u.duration_s:.3f}s, file has {info.duration_s:.3f}s",
                )
            )
    return out


def age_histogram(m: Manifest, bucket_width: int) -> dict[str, int]:
    """Bucketed age counts; entries without age land in an `unknown` bucket.

    Bucket labels are "lo-hi" inclusive ranges; counts sum to len(m).
    """
    if bucket_width < 1:
        raise ValueError("bucket_width must be >= 1")
    buckets: collections.Counter[int] = collections.Counter()
    unknown = 0
    for u in m.entries:
        if u.age is None:
            unknown += 1
        else:
            buckets[u.age // bucket_width] += 1
    out = {
        f"{idx * bucket_width}-{idx * bucket_width + bucket_width - 1}": buckets[idx]
        for idx in sorted(buckets)
    }
    if unknown:
        out["unknown"] = unknown
    return out


def fill_durations(m: Manifest) -> Manifest:
    """Return a copy with duration_s computed from audio headers when absent."""
    from elderaug.dsp import wav_info

    entries = []
    for u in m.entries:
        if u.duration_s is None:
            info = wav_info(m.resolve_audio_path(u))
            u = replace(u, duration_s=info.duration_s)
        entries.append(u)
    return Manifest(entries=entries, split=m.split, root=m.root)
