"""Elderly-contextual paraphrase generation through a pluggable LLM backend.

The prompt follows a fixed three-step protocol (preparation, paraphrasing
rules, contextual instruction) with the source transcript appended last.
Candidates are validated against word-count and no-repetition rules;
invalid candidates trigger a re-prompt that names the broken rules.
Results are cached by content hash so reruns never call the backend twice
for the same work.
"""

from __future__ import annotations

import datetime
import os
import subprocess
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from elderaug.corpus import Utterance
from elderaug.errors import BackendError, DataError, EctValidationError
from elderaug.metrics import NormPolicy, normalize_text
from elderaug.util import (
    atomic_write_text,
    call_with_retries,
    read_jsonl,
    sha256_text,
    stable_dumps,
)


DEFAULT_MIN_WORDS = 3
DEFAULT_MAX_WORDS = 20


# ---------------------------------------------------------------------------
# Prompt protocol


@dataclass(frozen=True)
class PromptTemplate:
    """Three-step paraphrase instruction set.

    The transcript is appended on the final line after `transcript_prefix`,
    so a rendered prompt contains it exactly once.
    """

    preparation: str
    paraphrasing_rules: tuple[str, ...]
    contextual_instruction: str
    transcript_prefix: str = "Sentence: "

    def __post_init__(self):
        if not self.preparation.strip():
            raise ValueError("preparation instruction must be non-empty")
        if not self.paraphrasing_rules or any(not r.strip() for r in self.paraphrasing_rules):
            raise ValueError("paraphrasing rules must be non-empty")
        if not self.contextual_instruction.strip():
            raise ValueError("contextual instruction must be non-empty")
        object.__setattr__(self, "paraphrasing_rules", tuple(self.paraphrasing_rules))


DEFAULT_TEMPLATE = PromptTemplate(
    preparation="Make a sentence into a CSV file.",
    paraphrasing_rules=(
        "Write a sentence, related to the CSV file.",
        "Do not repeat the original sentence.",
        "Use a minimum of 3 words and a maximum of 20 words.",
    ),
    contextual_instruction=(
        "Change the given sentence into a sentence frequently used by elderly people."
    ),
)


def build_prompt(template: PromptTemplate, transcript: str) -> str:
    """Render the three steps plus the transcript, in protocol order."""
    if not transcript or not transcript.strip():
        raise ValueError("transcript must be non-empty")
    parts = [template.preparation]
    parts.extend(template.paraphrasing_rules)
    parts.append(template.contextual_instruction)
    parts.append("")
    parts.append(f"{template.transcript_prefix}{transcript}")
    return "\n".join(parts)


# ---------------------------------------------------------------------------
# Generation parameters


@dataclass
class GenerationParams:
    temperature: float = 0.0
    top_p: float = 0.9
    max_tokens: int = 512
    frequency_penalty: float = 0.2
    presence_penalty: float = 0.1
    extra: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.top_p <= 1.0:
            raise ValueError("top_p must be in [0, 1]")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")

    def to_record(self) -> dict:
        return {
            "temperature": self.temperature,
            "top_p": self.top_p,
            "max_tokens": self.max_tokens,
            "frequency_penalty": self.frequency_penalty,
            "presence_penalty": self.presence_penalty,
            "extra": dict(sorted(self.extra.items())),
        }


def generation_profile(name: str) -> GenerationParams:
    """Named generation presets; "default" matches the GPT-style settings,
    "gemini-flash" the high-temperature low-thinking profile."""
    if name == "default":
        return GenerationParams()
    if name == "gemini-flash":
        return GenerationParams(temperature=1.0, extra={"thinking_level": "low"})
    raise ValueError(f"unknown generation profile {name!r}")


def params_fingerprint(template: PromptTemplate, params: GenerationParams) -> str:
    payload = stable_dumps(
        {
            "preparation": template.preparation,
            "rules": list(template.paraphrasing_rules),
            "contextual": template.contextual_instruction,
            "prefix": template.transcript_prefix,
            "params": params.to_record(),
        }
    )
    return sha256_text(payload)


# ---------------------------------------------------------------------------
# Records


@dataclass(frozen=True)
class ParaphraseRecord:
    source_id: str
    source_text: str
    ect_text: str
    backend_id: str
    params_fingerprint: str
    created_at: str

    def to_record(self) -> dict:
        return {
            "source_id": self.source_id,
            "source_text": self.source_text,
            "ect_text": self.ect_text,
            "backend_id": self.backend_id,
            "params_fingerprint": self.params_fingerprint,
            "created_at": self.created_at,
        }

    @classmethod
    def from_record(cls, record: dict) -> "ParaphraseRecord":
        return cls(**{k: record[k] for k in (
            "source_id", "source_text", "ect_text", "backend_id",
            "params_fingerprint", "created_at",
        )})


def save_paraphrase_records(path: Path | str, records: Sequence[ParaphraseRecord]) -> None:
    lines = [stable_dumps(r.to_record()) for r in records]
    atomic_write_text(Path(path), "\n".join(lines) + ("\n" if lines else ""))


def load_paraphrase_records(path: Path | str) -> list[ParaphraseRecord]:
    try:
        return [ParaphraseRecord.from_record(rec) for _, rec in read_jsonl(path)]
    except (ValueError, KeyError) as exc:
        raise DataError(f"bad paraphrase record file {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Validation


def validate_ect(
    original: str,
    candidate: str,
    min_words: int = DEFAULT_MIN_WORDS,
    max_words: int = DEFAULT_MAX_WORDS,
) -> list[str]:
    """Check a paraphrase candidate; an empty list means it passed.

    Words are whitespace tokens (Korean eojeol are space-delimited, so one
    rule covers both languages). Repetition compares both strings after
    English-policy normalization, so trivial re-casing does not count as a
    new paraphrase.
    """
    violations: list[str] = []
    stripped = candidate.strip()
    if not stripped:
        return ["empty: candidate has no content"]
    n_words = len(stripped.split())
    if n_words < min_words or n_words > max_words:
        violations.append(
            f"word_count: {n_words} words, need between {min_words} and {max_words}"
        )
    policy = NormPolicy.english()
    if normalize_text(stripped, policy) == normalize_text(original, policy):
        violations.append("repetition: candidate repeats the original sentence")
    return violations


# ---------------------------------------------------------------------------
# Backends


class ParaphraseBackend:
    """Chat-style completion: one user turn in, one text candidate out."""

    model_id: str = "unknown"
    call_count: int = 0

    def complete(self, prompt: str, params: GenerationParams) -> str:
        raise NotImplementedError


class HttpChatBackend(ParaphraseBackend):
    """POSTs a chat-completion request to `base_url`/chat/completions.

    The API key is read from the environment variable named by
    `api_key_env`; it never lives in config files.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key_env: str | None = None,
        timeout_s: float = 60.0,
        session=None,
    ):
        import requests

        self.base_url = base_url.rstrip("/")
        self.model_id = model
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s
        self._session = session or requests.Session()

    def complete(self, prompt: str, params: GenerationParams) -> str:
        self.call_count += 1
        headers = {"Content-Type": "application/json"}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env, "")
            if not key:
                raise BackendError(f"environment variable {self.api_key_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": self.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
            "frequency_penalty": params.frequency_penalty,
            "presence_penalty": params.presence_penalty,
        }
        body.update(params.extra)
        try:
            resp = self._session.post(
                f"{self.base_url}/chat/completions",
                json=body,
                headers=headers,
                timeout=self.timeout_s,
            )
        except OSError as exc:
            raise BackendError(f"LLM request failed: {exc}") from exc
        if resp.status_code != 200:
            raise BackendError(f"LLM backend returned HTTP {resp.status_code}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise BackendError(f"unexpected LLM response shape: {exc}") from exc


class CommandBackend(ParaphraseBackend):
    """Runs an external command; prompt on stdin, paraphrase on stdout."""

    def __init__(self, argv: Sequence[str], model_id: str | None = None, timeout_s: float = 120.0):
        self.argv = list(argv)
        self.model_id = model_id or Path(self.argv[0]).name
        self.timeout_s = timeout_s

    def complete(self, prompt: str, params: GenerationParams) -> str:
        self.call_count += 1
        try:
            proc = subprocess.run(
                self.argv,
                input=prompt,
                capture_output=True,
                text=True,
                timeout=self.timeout_s,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise BackendError(f"paraphrase command failed: {exc}") from exc
        if proc.returncode != 0:
            raise BackendError(
                f"paraphrase command exited {proc.returncode}: {proc.stderr.strip()[:200]}"
            )
        return proc.stdout.strip()


class MockParaphraseBackend(ParaphraseBackend):
    """Offline echo-with-prefix mock: deterministic and always valid.

    Prefixes the transcript (recovered from the prompt's final line) and
    truncates it so the result stays inside the default word bounds.
    """

    model_id = "mock-echo"

    def __init__(self, prefix: str = "Well, you see,"):
        self.prefix = prefix
        self.call_count = 0

    def complete(self, prompt: str, params: GenerationParams) -> str:
        self.call_count += 1
        line = prompt.rstrip().splitlines()[-1]
        if ": " in line:
            line = line.split(": ", 1)[1]
        words = line.split()[: DEFAULT_MAX_WORDS - 3]
        return f"{self.prefix} {' '.join(words)}".strip()


# ---------------------------------------------------------------------------
# Cache


class ParaphraseCache:
    """Append-only file store: one JSON entry per content-hash key.

    Entries hold the generated text and its provenance, not the source
    utterance, so distinct utterances with identical text share one cache
    entry while keeping their own ids. Concurrent readers are safe; writers
    are serialized and every write is atomic, so a crash never leaves a
    partial entry.
    """

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, key: str) -> dict | None:
        path = self._path(key)
        if not path.is_file():
            return None
        import json

        return json.loads(path.read_text(encoding="utf-8"))

    def put(self, key: str, entry: dict) -> None:
        with self._lock:
            atomic_write_text(self._path(key), stable_dumps(entry))


def cache_key(model_id: str, prompt: str, params: GenerationParams) -> str:
    return sha256_text(stable_dumps({"model": model_id, "prompt": prompt, "params": params.to_record()}))


# ---------------------------------------------------------------------------
# Generation


def _utcnow() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def generate_ect(
    backend: ParaphraseBackend,
    template: PromptTemplate,
    params: GenerationParams,
    u: Utterance,
    cache: ParaphraseCache | None = None,
    min_words: int = DEFAULT_MIN_WORDS,
    max_words: int = DEFAULT_MAX_WORDS,
    retries: int = 2,
    validation_retries: int = 3,
    backoff_s: float = 0.5,
    sleep: Callable[[float], None] = time.sleep,
    clock: Callable[[], str] = _utcnow,
) -> ParaphraseRecord:
    """Produce one validated paraphrase record for an utterance.

    Cache hits return the stored record without touching the backend.
    Backend failures retry with exponential backoff (`retries` extra
    attempts); invalid candidates re-prompt up to `validation_retries`
    times with the broken rules appended to the prompt.
    """
    prompt = build_prompt(template, u.text)
    key = cache_key(backend.model_id, prompt, params)
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return ParaphraseRecord(source_id=u.id, source_text=u.text, **hit)

    fingerprint = params_fingerprint(template, params)
    attempt_prompt = prompt
    candidate = ""
    violations: list[str] = []
    for _ in range(1 + validation_retries):
        candidate = call_with_retries(
            lambda: backend.complete(attempt_prompt, params),
            retries=retries,
            backoff_s=backoff_s,
            exceptions=(BackendError,),
            sleep=sleep,
        )
        violations = validate_ect(u.text, candidate, min_words, max_words)
        if not violations:
            entry = {
                "ect_text": candidate.strip(),
                "backend_id": backend.model_id,
                "params_fingerprint": fingerprint,
                "created_at": clock(),
            }
            if cache is not None:
                cache.put(key, entry)
            return ParaphraseRecord(source_id=u.id, source_text=u.text, **entry)
        attempt_prompt = (
            f"{prompt}\n\nYour previous answer was rejected: "
            f"{'; '.join(violations)}. Provide a corrected sentence."
        )
    raise EctValidationError(
        f"paraphrase for {u.id!r} failed validation after "
        f"{1 + validation_retries} attempts: {'; '.join(violations)}",
        candidate=candidate,
        violations=violations,
    )


def paraphrase_utterances(
    backend: ParaphraseBackend,
    template: PromptTemplate,
    params: GenerationParams,
    utterances: Sequence[Utterance],
    cache: ParaphraseCache | None = None,
    workers: int = 1,
    **kwargs,
) -> list[ParaphraseRecord]:
    """Paraphrase a batch; results come back in input order regardless of
    completion order."""

    def one(u: Utterance) -> ParaphraseRecord:
        return generate_ect(backend, template, params, u, cache=cache, **kwargs)

    if workers <= 1:
        return [one(u) for u in utterances]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, utterances))
