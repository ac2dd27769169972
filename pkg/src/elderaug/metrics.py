"""Evaluation kernels: text normalization, minimum-edit alignment, corpus
WER/CER, the Wilcoxon signed-rank paired test, and result tables.

Conventions: WER tokenizes on whitespace, CER on composed (NFC) characters
with spaces removed. Corpus rates are pooled, (sum S + sum D + sum I) /
sum N_ref, not averaged per utterance.
"""

from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from elderaug.errors import DataError
from elderaug.kernels import levenshtein_matrix
from elderaug.util import atomic_write_text, read_jsonl, stable_dumps

EXACT_THRESHOLD = 20


# ---------------------------------------------------------------------------
# Normalization


@dataclass(frozen=True)
class NormPolicy:
    lowercase: bool
    strip_punct: bool
    collapse_whitespace: bool = True
    unicode_form: str = "NFC"
    language: str = "en"

    @classmethod
    def english(cls) -> "NormPolicy":
        return cls(lowercase=True, strip_punct=True, language="en")

    @classmethod
    def korean(cls) -> "NormPolicy":
        # No case in Hangul; punctuation is still stripped before scoring.
        return cls(lowercase=False, strip_punct=True, language="ko")

    @classmethod
    def for_language(cls, lang: str) -> "NormPolicy":
        return cls.korean() if lang == "ko" else cls.english()


def _normalize_once(s: str, policy: NormPolicy) -> str:
    s = unicodedata.normalize(policy.unicode_form, s)
    if policy.lowercase:
        s = s.lower()
    if policy.strip_punct:
        s = "".join(c for c in s if not unicodedata.category(c).startswith("P"))
    if policy.collapse_whitespace:
        s = " ".join(s.split())
    return s


def normalize_text(s: str, policy: NormPolicy) -> str:
    """Apply the policy until a fixed point so normalization is idempotent.

    A second pass is only ever needed for exotic code points where casing
    or mark reattachment de-normalizes the string; almost all inputs
    converge immediately.
    """
    for _ in range(8):
        out = _normalize_once(s, policy)
        if out == s:
            return out
        s = out
    return s


def tokenize(s: str, unit: str) -> list[str]:
    """Split normalized text into scoring units: words or characters.

    Character units exclude spaces entirely.
    """
    if unit == "word":
        return s.split()
    if unit == "char":
        return [c for c in s if c != " "]
    raise ValueError(f"unknown unit {unit!r} (expected 'word' or 'char')")


# ---------------------------------------------------------------------------
# Alignment


@dataclass(frozen=True)
class AlignOp:
    kind: str  # match | substitute | delete | insert
    ref_index: int | None
    hyp_index: int | None


@dataclass(frozen=True)
class Alignment:
    """Minimal unit-cost edit alignment between reference and hypothesis."""

    ops: tuple[AlignOp, ...]
    matches: int
    substitutions: int
    deletions: int
    insertions: int
    n_ref: int

    @property
    def distance(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def error_rate(self) -> float:
        if self.n_ref == 0:
            return 0.0 if self.distance == 0 else math.inf
        return self.distance / self.n_ref


def align(ref_tokens: Sequence[str], hyp_tokens: Sequence[str]) -> Alignment:
    """Levenshtein alignment with deterministic tie-breaking.

    When costs tie during backtrace the preference order is
    match > substitute > delete > insert.
    """
    vocab: dict[str, int] = {}
    for tok in ref_tokens:
        vocab.setdefault(tok, len(vocab))
    for tok in hyp_tokens:
        vocab.setdefault(tok, len(vocab))
    ref_ids = np.fromiter((vocab[t] for t in ref_tokens), dtype=np.int32, count=len(ref_tokens))
    hyp_ids = np.fromiter((vocab[t] for t in hyp_tokens), dtype=np.int32, count=len(hyp_tokens))
    d = levenshtein_matrix(ref_ids, hyp_ids)

    ops: list[AlignOp] = []
    i, j = len(ref_ids), len(hyp_ids)
    matches = subs = dels = ins = 0
    while i > 0 or j > 0:
        here = d[i, j]
        if i > 0 and j > 0 and ref_ids[i - 1] == hyp_ids[j - 1] and d[i - 1, j - 1] == here:
            ops.append(AlignOp("match", i - 1, j - 1))
            matches += 1
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and d[i - 1, j - 1] + 1 == here:
            ops.append(AlignOp("substitute", i - 1, j - 1))
            subs += 1
            i, j = i - 1, j - 1
        elif i > 0 and d[i - 1, j] + 1 == here:
            ops.append(AlignOp("delete", i - 1, None))
            dels += 1
            i -= 1
        else:
            ops.append(AlignOp("insert", None, j - 1))
            ins += 1
            j -= 1
    ops.reverse()
    return Alignment(
        ops=tuple(ops),
        matches=matches,
        substitutions=subs,
        deletions=dels,
        insertions=ins,
        n_ref=len(ref_ids),
    )


# ---------------------------------------------------------------------------
# Corpus scoring


@dataclass(frozen=True)
class UtteranceScore:
    utt_id: str | None
    substitutions: int
    deletions: int
    insertions: int
    n_ref: int

    @property
    def error_rate(self) -> float:
        errors = self.substitutions + self.deletions + self.insertions
        if self.n_ref == 0:
            return 0.0 if errors == 0 else math.inf
        return errors / self.n_ref


@dataclass(frozen=True)
class MetricReport:
    """Pooled corpus error rate plus the per-utterance decomposition."""

    unit: str
    n_utterances: int
    substitutions: int
    deletions: int
    insertions: int
    n_ref: int
    error_rate: float
    per_utterance: tuple[UtteranceScore, ...] = field(repr=False, default=())


def corpus_error_rate(
    pairs: Sequence[tuple[str, str]],
    unit: str,
    policy: NormPolicy,
    ids: Sequence[str] | None = None,
) -> MetricReport:
    """Score (reference, hypothesis) pairs at word or character level."""
    if not pairs:
        raise ValueError("pairs must be non-empty")
    if ids is not None and len(ids) != len(pairs):
        raise ValueError("ids must match pairs in length")
    scores: list[UtteranceScore] = []
    total_s = total_d = total_i = total_n = 0
    for k, (ref, hyp) in enumerate(pairs):
        a = align(
            tokenize(normalize_text(ref, policy), unit),
            tokenize(normalize_text(hyp, policy), unit),
        )
        scores.append(
            UtteranceScore(
                utt_id=ids[k] if ids is not None else None,
                substitutions=a.substitutions,
                deletions=a.deletions,
                insertions=a.insertions,
                n_ref=a.n_ref,
            )
        )
        total_s += a.substitutions
        total_d += a.deletions
        total_i += a.insertions
        total_n += a.n_ref
    if total_n == 0:
        raise DataError("all references are empty after normalization")
    return MetricReport(
        unit=unit,
        n_utterances=len(pairs),
        substitutions=total_s,
        deletions=total_d,
        insertions=total_i,
        n_ref=total_n,
        error_rate=(total_s + total_d + total_i) / total_n,
        per_utterance=tuple(scores),
    )


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank test


@dataclass(frozen=True)
class PairedTestResult:
    n_nonzero: int
    w_statistic: float
    p_value: float
    method: str  # "exact" | "normal_approx"
    significant: bool
    alpha: float
    applicable: bool = True


def _average_ranks(values: list[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda k: values[k])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def _exact_p(scaled_ranks: list[int], w_scaled: int) -> float:
    """Two-sided sign-flip p-value computed over all 2^n assignments.

    Counts the distribution of the doubled positive-rank sum with integer
    convolution, then sums both tails at the observed min statistic. All
    arithmetic is exact (integer counts over a power-of-two denominator).
    """
    total = sum(scaled_ranks)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in scaled_ranks:
        for s in range(total - r, -1, -1):
            if counts[s]:
                counts[s + r] += counts[s]
    lo = sum(counts[: w_scaled + 1])
    hi = sum(counts[total - w_scaled :])
    return min(1.0, (lo + hi) / (1 << len(scaled_ranks)))


def wilcoxon_signed_rank(
    diffs: Sequence[float],
    alpha: float = 0.05,
    exact_threshold: int = EXACT_THRESHOLD,
) -> PairedTestResult:
    """Two-sided Wilcoxon signed-rank test on paired differences.

    Zero differences are dropped; |diffs| are ranked with average ranks for
    ties; W = min(W+, W-). The p-value is exact (full sign-assignment
    enumeration) when the nonzero count is at or below exact_threshold,
    else a normal approximation with tie correction and a 0.5 continuity
    correction. A run with no nonzero differences yields p = 1.0 and is
    flagged not applicable.
    """
    nonzero = [float(d) for d in diffs if d != 0.0]
    n = len(nonzero)
    if n == 0:
        return PairedTestResult(
            n_nonzero=0,
            w_statistic=0.0,
            p_value=1.0,
            method="exact",
            significant=False,
            alpha=alpha,
            applicable=False,
        )
    ranks = _average_ranks([abs(d) for d in nonzero])
    w_plus = sum(r for r, d in zip(ranks, nonzero) if d > 0)
    w_minus = sum(r for r, d in zip(ranks, nonzero) if d < 0)
    w = min(w_plus, w_minus)

    if n <= exact_threshold:
        scaled = [int(round(2 * r)) for r in ranks]
        p = _exact_p(scaled, int(round(2 * w)))
        method = "exact"
    else:
        mu = n * (n + 1) / 4.0
        var = n * (n + 1) * (2 * n + 1) / 24.0
        # tie correction: subtract sum(t^3 - t)/48 over tie group sizes
        seen: dict[float, int] = {}
        for r in ranks:
            seen[r] = seen.get(r, 0) + 1
        var -= sum(t**3 - t for t in seen.values()) / 48.0
        if var <= 0:
            p = 1.0
        else:
            z = (w - mu + 0.5) / math.sqrt(var)
            p = min(1.0, math.erfc(-z / math.sqrt(2.0)))
        method = "normal_approx"

    return PairedTestResult(
        n_nonzero=n,
        w_statistic=float(w),
        p_value=p,
        method=method,
        significant=p < alpha,
        alpha=alpha,
    )


# ---------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class RowResult:
    """One line of a comparison table: a system/config and its rates."""

    wer: float | None
    cer: float | None
    p_value: float | None = None
    significant: bool | None = None


def _fmt_rates(row: RowResult) -> str:
    wer = f"{100.0 * row.wer:.1f}" if row.wer is not None else "-"
    cer = f"{100.0 * row.cer:.1f}" if row.cer is not None else "-"
    return f"{wer} / {cer}"


def emit_report(results: Mapping[str, RowResult], format: str = "table_text") -> str:
    """Render rows in declared order as a fixed-width table or CSV.

    Rates print as percentages with one decimal ("w.w / c.c"); output is
    byte-stable for identical inputs.
    """
    if format == "csv":
        lines = ["name,wer,cer,p_value,significant"]
        for name, row in results.items():
            wer = f"{100.0 * row.wer:.1f}" if row.wer is not None else ""
            cer = f"{100.0 * row.cer:.1f}" if row.cer is not None else ""
            p = f"{row.p_value:.4g}" if row.p_value is not None else ""
            sig = "" if row.significant is None else ("yes" if row.significant else "no")
            lines.append(f"{name},{wer},{cer},{p},{sig}")
        return "\n".join(lines) + "\n"
    if format != "table_text":
        raise ValueError(f"unknown report format {format!r}")

    headers = ("System", "WER / CER (%)", "p-value", "Sig.")
    rows = []
    for name, row in results.items():
        p = f"{row.p_value:.4g}" if row.p_value is not None else "-"
        sig = "-" if row.significant is None else ("*" if row.significant else "n.s.")
        rows.append((name, _fmt_rates(row), p, sig))
    widths = [
        max(len(headers[c]), *(len(r[c]) for r in rows)) if rows else len(headers[c])
        for c in range(4)
    ]
    out = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    out.append("  ".join("-" * w for w in widths))
    for r in rows:
        out.append("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Hypothesis record files


def read_hyp_records(path: Path | str) -> dict[str, str]:
    """Load a JSONL hypothesis file of {id, hyp_text} records."""
    out: dict[str, str] = {}
    try:
        for lineno, record in read_jsonl(path):
            if "id" not in record or "hyp_text" not in record:
                raise DataError(f"{path}:{lineno}: record needs 'id' and 'hyp_text'")
            if record["id"] in out:
                raise DataError(f"{path}:{lineno}: duplicate id {record['id']!r}")
            out[record["id"]] = str(record["hyp_text"])
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    except FileNotFoundError:
        raise DataError(f"hypothesis file not found: {path}") from None
    return out


def write_hyp_records(path: Path | str, records: Mapping[str, str]) -> None:
    lines = [stable_dumps({"id": utt_id, "hyp_text": text}) for utt_id, text in records.items()]
    atomic_write_text(Path(path), "\n".join(lines) + ("\n" if lines else ""))
