"""Reference-speaker pool management and batch TTS synthesis.

Each paraphrase is synthesized with one speaker from a curated elderly
pool; assignments are round-robin so per-speaker counts never differ by
more than one. Output audio is always mono 16 kHz PCM16 WAV, resampled
from the backend's native rate when needed. Batches are resumable:
existing valid outputs are skipped.
"""

from __future__ import annotations

import hashlib
import random
import shlex
import subprocess
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from elderaug.corpus import Manifest, Utterance
from elderaug.dsp import AudioClip, decode_wav, read_wav, resample, wav_info, write_wav
from elderaug.errors import AudioFormatError, BackendError, DataError
from elderaug.paraphrase import ParaphraseRecord
from elderaug.util import call_with_retries, read_jsonl


TARGET_RATE = 16000

GENDER_PRESETS = {
    "8F0M": (8, 0),
    "6F2M": (6, 2),
    "4F4M": (4, 4),
    "2F6M": (2, 6),
    "0F8M": (0, 8),
}


# ---------------------------------------------------------------------------
# Pool


@dataclass(frozen=True)
class ReferenceSpeaker:
    speaker_id: str
    gender: str  # F | M
    reference_audio: str
    age: int | None = None

    def __post_init__(self):
        if not self.speaker_id:
            raise ValueError("speaker_id must be non-empty")
        if self.gender not in ("F", "M"):
            raise ValueError(f"speaker {self.speaker_id!r}: gender must be F or M")


@dataclass
class SpeakerPool:
    speakers: list[ReferenceSpeaker]
    preset_name: str | None = None

    def __post_init__(self):
        ids = [s.speaker_id for s in self.speakers]
        if len(ids) != len(set(ids)):
            raise ValueError("speaker ids must be unique")

    def __len__(self) -> int:
        return len(self.speakers)

    def by_id(self, speaker_id: str) -> ReferenceSpeaker:
        for s in self.speakers:
            if s.speaker_id == speaker_id:
                return s
        raise KeyError(speaker_id)


def gender_preset(name: str) -> tuple[int, int]:
    """Required (female_count, male_count) for a named pool composition."""
    try:
        return GENDER_PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown gender preset {name!r}; choose from {sorted(GENDER_PRESETS)}"
        ) from None


def select_pool(
    speakers: Sequence[ReferenceSpeaker],
    preset: str | None = None,
    size: int | None = None,
) -> SpeakerPool:
    """Build the active pool from configured speakers.

    A preset fixes per-gender counts (taking speakers in file order); a
    plain size takes the first `size` speakers. Fails when the configured
    speakers cannot satisfy the request.
    """
    if preset is not None:
        females, males = gender_preset(preset)
        chosen_f = [s for s in speakers if s.gender == "F"][:females]
        chosen_m = [s for s in speakers if s.gender == "M"][:males]
        if len(chosen_f) < females or len(chosen_m) < males:
            raise DataError(
                f"pool preset {preset} needs {females}F+{males}M but only "
                f"{sum(s.gender == 'F' for s in speakers)}F+"
                f"{sum(s.gender == 'M' for s in speakers)}M configured"
            )
        ordered = [s for s in speakers if s in set(chosen_f) | set(chosen_m)]
        return SpeakerPool(speakers=ordered, preset_name=preset)
    if size is not None:
        if size < 1 or size > len(speakers):
            raise DataError(f"pool size {size} not satisfiable with {len(speakers)} speakers")
        return SpeakerPool(speakers=list(speakers[:size]))
    return SpeakerPool(speakers=list(speakers))


def load_speaker_pool(
    path: Path | str,
    preset: str | None = None,
    size: int | None = None,
    validate_audio: bool = True,
) -> SpeakerPool:
    """Load speakers from a JSONL pool file and verify reference audio.

    Every reference clip must exist and decode; failures surface here, at
    load time, never mid-synthesis.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"speaker pool file not found: {path}")
    speakers: list[ReferenceSpeaker] = []
    try:
        for lineno, record in read_jsonl(path):
            try:
                spk = ReferenceSpeaker(
                    speaker_id=record["speaker_id"],
                    gender=record["gender"],
                    reference_audio=record["reference_audio"],
                    age=record.get("age"),
                )
            except (KeyError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: bad speaker record: {exc}") from exc
            speakers.append(spk)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    pool = select_pool(speakers, preset=preset, size=size)
    if validate_audio:
        for spk in pool.speakers:
            ref = Path(spk.reference_audio)
            if not ref.is_absolute():
                ref = path.parent / ref
            try:
                wav_info(ref)
            except AudioFormatError as exc:
                raise DataError(
                    f"speaker {spk.speaker_id!r}: reference audio unusable: {exc}"
                ) from exc
    return pool


# ---------------------------------------------------------------------------
# Assignment


@dataclass(frozen=True)
class AssignmentPlan:
    """(sample_index, speaker_id) pairs, balanced across the pool."""

    assignments: tuple[tuple[int, str], ...]

    def speaker_for(self, index: int) -> str:
        return self.assignments[index][1]


def plan_assignments(n: int, pool: SpeakerPool, seed: int) -> AssignmentPlan:
    """Round-robin speaker assignment for n samples.

    The seed only rotates which speaker starts the round-robin, so counts
    stay exactly balanced (max - min <= 1) while speaker-text pairings vary
    across seeds. Deterministic for fixed (n, pool order, seed).
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    k = len(pool)
    if k == 0:
        if n == 0:
            return AssignmentPlan(assignments=())
        raise DataError("cannot plan assignments with an empty speaker pool")
    start = random.Random(seed).randrange(k)
    order = pool.speakers[start:] + pool.speakers[:start]
    return AssignmentPlan(
        assignments=tuple((i, order[i % k].speaker_id) for i in range(n))
    )


# ---------------------------------------------------------------------------
# Backends


class TtsBackend:
    """Turns (text, reference speaker) into a decoded waveform at the
    backend's native rate."""

    backend_id: str = "unknown"
    call_count: int = 0

    def synthesize(self, text: str, speaker: ReferenceSpeaker) -> AudioClip:
        raise NotImplementedError


class HttpTtsBackend(TtsBackend):
    """POSTs text plus the reference clip (multipart) and expects WAV bytes.

    When `upload_reference` is false only the speaker id is sent, for
    servers that host the voices themselves.
    """

    def __init__(self, url: str, upload_reference: bool = True, timeout_s: float = 120.0, session=None):
        import requests

        self.url = url
        self.backend_id = url
        self.upload_reference = upload_reference
        self.timeout_s = timeout_s
        self._session = session or requests.Session()

    def synthesize(self, text: str, speaker: ReferenceSpeaker) -> AudioClip:
        self.call_count += 1
        data = {"text": text, "speaker_id": speaker.speaker_id}
        files = None
        if self.upload_reference:
            files = {"reference_audio": Path(speaker.reference_audio).read_bytes()}
        try:
            resp = self._session.post(self.url, data=data, files=files, timeout=self.timeout_s)
        except OSError as exc:
            raise BackendError(f"TTS request failed: {exc}") from exc
        if resp.status_code != 200:
            raise BackendError(f"TTS backend returned HTTP {resp.status_code}")
        if not resp.content:
            raise BackendError("TTS backend returned empty audio")
        try:
            return decode_wav(resp.content, name=f"<{self.url}>")
        except AudioFormatError as exc:
            raise BackendError(f"TTS backend returned undecodable audio: {exc}") from exc


class CommandTtsBackend(TtsBackend):
    """Runs a command template with {text_file}, {ref_audio}, {out_wav}
    placeholders and reads the produced WAV."""

    def __init__(self, template: str, timeout_s: float = 600.0):
        self.template = template
        self.backend_id = shlex.split(template)[0] if template.strip() else "command"
        self.timeout_s = timeout_s

    def synthesize(self, text: str, speaker: ReferenceSpeaker) -> AudioClip:
        self.call_count += 1
        with tempfile.TemporaryDirectory(prefix="elderaug-tts-") as tmp:
            text_file = Path(tmp) / "text.txt"
            out_wav = Path(tmp) / "out.wav"
            text_file.write_text(text, encoding="utf-8")
            argv = [
                tok.format(
                    text_file=text_file, ref_audio=speaker.reference_audio, out_wav=out_wav
                )
                for tok in shlex.split(self.template)
            ]
            try:
                proc = subprocess.run(argv, capture_output=True, text=True, timeout=self.timeout_s)
            except (OSError, subprocess.TimeoutExpired) as exc:
                raise BackendError(f"TTS command failed: {exc}") from exc
            if proc.returncode != 0:
                raise BackendError(
                    f"TTS command exited {proc.returncode}: {proc.stderr.strip()[:200]}"
                )
            if not out_wav.is_file():
                raise BackendError("TTS command produced no output file")
            try:
                return read_wav(out_wav)
            except AudioFormatError as exc:
                raise BackendError(f"TTS command produced undecodable audio: {exc}") from exc


class MockTtsBackend(TtsBackend):
    """Offline tone/silence mock with a configurable native rate.

    Tone frequency is derived from (text, speaker) so outputs are
    deterministic; duration scales with text length.
    """

    backend_id = "mock-tone"

    def __init__(
        self,
        native_rate: int = 22050,
        mode: str = "tone",
        seconds_per_char: float = 0.02,
        min_seconds: float = 0.25,
    ):
        if mode not in ("tone", "silence"):
            raise ValueError("mode must be 'tone' or 'silence'")
        self.native_rate = native_rate
        self.mode = mode
        self.seconds_per_char = seconds_per_char
        self.min_seconds = min_seconds
        self.call_count = 0

    def synthesize(self, text: str, speaker: ReferenceSpeaker) -> AudioClip:
        self.call_count += 1
        duration = max(self.min_seconds, len(text) * self.seconds_per_char)
        n = max(1, round(duration * self.native_rate))
        if self.mode == "silence":
            samples = np.zeros(n)
        else:
            digest = hashlib.sha256(f"{speaker.speaker_id}\x00{text}".encode("utf-8")).digest()
            freq = 200.0 + (int.from_bytes(digest[:4], "little") % 600)
            t = np.arange(n) / self.native_rate
            samples = 0.2 * np.sin(2.0 * np.pi * freq * t)
        return AudioClip(samples=samples, sample_rate=self.native_rate)


# ---------------------------------------------------------------------------
# Synthesis


def synthetic_utterance_id(source_id: str, speaker_id: str) -> str:
    """Collision-free, human-traceable id for a synthetic clip."""
    return f"{source_id}~ect~{speaker_id}"


def synthesize_clip(
    backend: TtsBackend,
    text: str,
    speaker: ReferenceSpeaker,
    out_path: Path | str,
    utt_id: str,
    source_id: str,
    lang: str | None = None,
    audio_path: str | None = None,
    retries: int = 2,
    backoff_s: float = 0.5,
    sleep: Callable[[float], None] = time.sleep,
) -> Utterance:
    """Synthesize one clip to a mono 16 kHz PCM16 WAV and describe it.

    `audio_path` is the path string recorded in the manifest (usually
    relative to the manifest's directory); `out_path` is where the file is
    physically written.
    """
    if not text or not text.strip():
        raise ValueError("text must be non-empty")
    out_path = Path(out_path)
    clip = call_with_retries(
        lambda: backend.synthesize(text, speaker),
        retries=retries,
        backoff_s=backoff_s,
        exceptions=(BackendError,),
        sleep=sleep,
    )
    if len(clip) == 0:
        raise BackendError(f"backend produced zero-length audio for {utt_id!r}")
    if clip.sample_rate != TARGET_RATE:
        clip = resample(clip, TARGET_RATE)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    try:
        write_wav(clip, out_path)
    except OSError as exc:
        raise DataError(f"cannot write {out_path}: {exc}") from exc
    return Utterance(
        id=utt_id,
        audio_path=audio_path or str(out_path),
        text=text,
        origin="synthetic",
        source_id=source_id,
        speaker_id=speaker.speaker_id,
        gender=speaker.gender,
        age=speaker.age,
        lang=lang,
        duration_s=len(clip) / TARGET_RATE,
    )


def _existing_wav_duration(out_path: Path) -> float | None:
    """Probe a previous run's output; valid files are reused on resume."""
    if not out_path.is_file():
        return None
    try:
        info = wav_info(out_path)
    except AudioFormatError:
        return None
    if info.sample_rate != TARGET_RATE or info.channels != 1:
        return None
    return info.duration_s


def run_batch(
    backend: TtsBackend,
    records: Sequence[ParaphraseRecord],
    plan: AssignmentPlan,
    pool: SpeakerPool,
    out_dir: Path | str,
    lang: str | None = None,
    workers: int = 1,
    retries: int = 2,
    backoff_s: float = 0.5,
    sleep: Callable[[float], None] = time.sleep,
) -> Manifest:
    """Synthesize one clip per paraphrase record into out_dir/wav.

    The i-th record is paired with the i-th planned speaker. Already
    existing valid outputs are skipped so interrupted batches resume
    cheaply; the returned manifest is assembled in input order.
    """
    if len(records) != len(plan.assignments):
        raise ValueError(
            f"{len(records)} records but {len(plan.assignments)} planned assignments"
        )
    out_dir = Path(out_dir)
    wav_dir = out_dir / "wav"
    wav_dir.mkdir(parents=True, exist_ok=True)

    def one(item: tuple[int, ParaphraseRecord]) -> Utterance:
        index, rec = item
        speaker = pool.by_id(plan.speaker_for(index))
        utt_id = synthetic_utterance_id(rec.source_id, speaker.speaker_id)
        rel = f"wav/{utt_id}.wav"
        out_path = out_dir / rel
        existing_duration = _existing_wav_duration(out_path)
        if existing_duration is not None:
            return Utterance(
                id=utt_id,
                audio_path=rel,
                text=rec.ect_text,
                origin="synthetic",
                source_id=rec.source_id,
                speaker_id=speaker.speaker_id,
                gender=speaker.gender,
                age=speaker.age,
                lang=lang,
                duration_s=existing_duration,
            )
        try:
            return synthesize_clip(
                backend,
                rec.ect_text,
                speaker,
                out_path,
                utt_id=utt_id,
                source_id=rec.source_id,
                lang=lang,
                audio_path=rel,
                retries=retries,
                backoff_s=backoff_s,
                sleep=sleep,
            )
        except BackendError as exc:
            raise BackendError(f"synthesis failed for {rec.source_id!r}: {exc}") from exc

    items = list(enumerate(records))
    if workers <= 1:
        entries = [one(item) for item in items]
    else:
        with ThreadPoolExecutor(max_workers=workers) as tp:
            entries = list(tp.map(one, items))
    return Manifest(entries=entries, split="unsplit", root=out_dir)
