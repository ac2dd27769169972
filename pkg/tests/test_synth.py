import collections

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elderaug.dsp import read_wav
from elderaug.errors import BackendError, DataError
from elderaug.paraphrase import ParaphraseRecord
from elderaug.synth import (
    MockTtsBackend,
    ReferenceSpeaker,
    SpeakerPool,
    TtsBackend,
    gender_preset,
    load_speaker_pool,
    plan_assignments,
    run_batch,
    select_pool,
    synthesize_clip,
    synthetic_utterance_id,
)


def make_pool(k: int = 3) -> SpeakerPool:
    speakers = [
        ReferenceSpeaker(
            speaker_id=f"spk{i}", gender="F" if i % 2 == 0 else "M", reference_audio=f"ref{i}.wav"
        )
        for i in range(k)
    ]
    return SpeakerPool(speakers=speakers)


def make_records(n: int) -> list[ParaphraseRecord]:
    return [
        ParaphraseRecord(
            source_id=f"u{i}",
            source_text=f"source text {i}",
            ect_text=f"well you see sentence {i}",
            backend_id="mock",
            params_fingerprint="f" * 8,
            created_at="2026-01-01T00:00:00+00:00",
        )
        for i in range(n)
    ]


class TestGenderPreset:
    @pytest.mark.parametrize(
        "name,expected",
        [("4F4M", (4, 4)), ("8F0M", (8, 0)), ("0F8M", (0, 8)), ("6F2M", (6, 2)), ("2F6M", (2, 6))],
    )
    def test_known_presets(self, name, expected):
        assert gender_preset(name) == expected

    def test_unknown_preset(self):
        with pytest.raises(ValueError, match="3F3M"):
            gender_preset("3F3M")

    def test_select_pool_insufficient_gender(self):
        speakers = [
            ReferenceSpeaker(speaker_id=f"f{i}", gender="F", reference_audio="x.wav")
            for i in range(4)
        ] + [
            ReferenceSpeaker(speaker_id=f"m{i}", gender="M", reference_audio="x.wav")
            for i in range(4)
        ]
        with pytest.raises(DataError, match="2F6M"):
            select_pool(speakers, preset="2F6M")
        pool = select_pool(speakers, preset="4F4M")
        counts = collections.Counter(s.gender for s in pool.speakers)
        assert counts == {"F": 4, "M": 4}
        assert pool.preset_name == "4F4M"


class TestPlanAssignments:
    def test_counts_10_over_3(self):
        plan = plan_assignments(10, make_pool(3), seed=0)
        counts = collections.Counter(s for _, s in plan.assignments)
        assert sorted(counts.values()) == [3, 3, 4]
        assert len(plan.assignments) == 10

    def test_n_equals_k(self):
        plan = plan_assignments(8, make_pool(8), seed=5)
        counts = collections.Counter(s for _, s in plan.assignments)
        assert all(c == 1 for c in counts.values())
        assert len(counts) == 8

    def test_empty_pool_rejected(self):
        with pytest.raises(DataError):
            plan_assignments(5, SpeakerPool(speakers=[]), seed=0)

    def test_empty_pool_zero_n_ok(self):
        assert plan_assignments(0, SpeakerPool(speakers=[]), seed=0).assignments == ()

    def test_deterministic_per_seed(self):
        pool = make_pool(5)
        assert plan_assignments(13, pool, seed=9) == plan_assignments(13, pool, seed=9)

    def test_seed_rotates_start_only(self):
        pool = make_pool(4)
        starts = {plan_assignments(8, pool, seed=s).assignments[0][1] for s in range(40)}
        assert len(starts) > 1  # different seeds really change pairings
        for s in range(10):
            plan = plan_assignments(8, pool, seed=s)
            ids = [spk for _, spk in plan.assignments]
            # round-robin: every consecutive window of K covers the whole pool
            assert set(ids[:4]) == {f"spk{i}" for i in range(4)}

    @given(
        n=st.integers(min_value=0, max_value=10_000),
        k=st.integers(min_value=1, max_value=64),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    @settings(max_examples=120, deadline=None)
    def test_balance_property(self, n, k, seed):
        plan = plan_assignments(n, make_pool(k), seed=seed)
        counts = collections.Counter(s for _, s in plan.assignments)
        assert sum(counts.values()) == n
        if counts:
            assert max(counts.values()) - min(counts.values()) <= 1


class TestMockBackend:
    def test_deterministic(self):
        backend = MockTtsBackend()
        spk = ReferenceSpeaker(speaker_id="s", gender="F", reference_audio="r.wav")
        a = backend.synthesize("hello there", spk)
        b = backend.synthesize("hello there", spk)
        assert np.array_equal(a.samples, b.samples)
        assert a.sample_rate == 22050

    def test_silence_mode(self):
        backend = MockTtsBackend(mode="silence", native_rate=16000)
        spk = ReferenceSpeaker(speaker_id="s", gender="M", reference_audio="r.wav")
        clip = backend.synthesize("quiet", spk)
        assert np.all(clip.samples == 0.0)


class TestSynthesizeClip:
    def test_mock_silence_duration(self, tmp_path):
        backend = MockTtsBackend(mode="silence", native_rate=16000, min_seconds=1.0)
        spk = ReferenceSpeaker(speaker_id="s0", gender="F", reference_audio="r.wav")
        out = tmp_path / "out.wav"
        utt = synthesize_clip(
            backend, "say something", spk, out, utt_id="x~ect~s0", source_id="x"
        )
        assert utt.origin == "synthetic"
        assert utt.source_id == "x"
        assert utt.speaker_id == "s0"
        assert abs(utt.duration_s - 1.0) <= 1 / 16000

    def test_resamples_to_16k(self, tmp_path):
        backend = MockTtsBackend(native_rate=22050)
        spk = ReferenceSpeaker(speaker_id="s0", gender="F", reference_audio="r.wav")
        out = tmp_path / "out.wav"
        synthesize_clip(backend, "resample me please", spk, out, utt_id="y~ect~s0", source_id="y")
        clip = read_wav(out)
        assert clip.sample_rate == 16000

    def test_empty_text_rejected(self, tmp_path):
        backend = MockTtsBackend()
        spk = ReferenceSpeaker(speaker_id="s0", gender="F", reference_audio="r.wav")
        with pytest.raises(ValueError):
            synthesize_clip(backend, " ", spk, tmp_path / "o.wav", utt_id="i", source_id="s")

    def test_backend_retries_then_fails(self, tmp_path):
        class Failing(TtsBackend):
            call_count = 0

            def synthesize(self, text, speaker):
                self.call_count += 1
                raise BackendError("down")

        backend = Failing()
        spk = ReferenceSpeaker(speaker_id="s0", gender="F", reference_audio="r.wav")
        with pytest.raises(BackendError):
            synthesize_clip(
                backend, "text here", spk, tmp_path / "o.wav",
                utt_id="i", source_id="s", retries=2, backoff_s=0.0,
            )
        assert backend.call_count == 3


class TestPoolLoading:
    def test_missing_reference_audio_fails_at_load(self, tmp_path):
        pool_file = tmp_path / "pool.jsonl"
        pool_file.write_text(
            '{"speaker_id": "s0", "gender": "F", "reference_audio": "missing.wav"}\n'
        )
        with pytest.raises(DataError, match="reference audio"):
            load_speaker_pool(pool_file)

    def test_load_ok_and_relative_paths(self, tmp_path, toy_corpus):
        pool = load_speaker_pool(toy_corpus["pool"])
        assert len(pool) == 8
        genders = collections.Counter(s.gender for s in pool.speakers)
        assert genders == {"F": 4, "M": 4}


class TestRunBatch:
    def test_balanced_output(self, tmp_path):
        records = make_records(6)
        pool = make_pool(2)
        plan = plan_assignments(6, pool, seed=0)
        backend = MockTtsBackend(native_rate=16000, min_seconds=0.1)
        manifest = run_batch(backend, records, plan, pool, tmp_path)
        assert len(manifest) == 6
        counts = collections.Counter(u.speaker_id for u in manifest)
        assert sorted(counts.values()) == [3, 3]
        for u in manifest:
            assert u.origin == "synthetic"
            assert u.id == synthetic_utterance_id(u.source_id, u.speaker_id)
            clip = read_wav(tmp_path / u.audio_path)
            assert clip.sample_rate == 16000

    def test_resume_skips_existing(self, tmp_path):
        records = make_records(6)
        pool = make_pool(2)
        plan = plan_assignments(6, pool, seed=0)
        backend = MockTtsBackend(native_rate=16000, min_seconds=0.1)
        first = run_batch(backend, records, plan, pool, tmp_path)
        assert backend.call_count == 6
        # delete two outputs; resume should call the backend exactly twice
        for u in list(first)[:2]:
            (tmp_path / u.audio_path).unlink()
        backend2 = MockTtsBackend(native_rate=16000, min_seconds=0.1)
        second = run_batch(backend2, records, plan, pool, tmp_path)
        assert backend2.call_count == 2
        assert [u.id for u in second] == [u.id for u in first]

    def test_length_mismatch_rejected_before_synthesis(self, tmp_path):
        records = make_records(4)
        pool = make_pool(2)
        plan = plan_assignments(3, pool, seed=0)
        backend = MockTtsBackend()
        with pytest.raises(ValueError, match="planned assignments"):
            run_batch(backend, records, plan, pool, tmp_path)
        assert backend.call_count == 0

    def test_failure_names_record(self, tmp_path):
        class FailOn(TtsBackend):
            call_count = 0

            def synthesize(self, text, speaker):
                self.call_count += 1
                if "sentence 2" in text:
                    raise BackendError("refused")
                return MockTtsBackend(native_rate=16000, min_seconds=0.1).synthesize(text, speaker)

        records = make_records(4)
        pool = make_pool(2)
        plan = plan_assignments(4, pool, seed=0)
        with pytest.raises(BackendError, match="u2"):
            run_batch(FailOn(), records, plan, pool, tmp_path, retries=0, backoff_s=0.0)

    def test_worker_count_does_not_change_output(self, tmp_path):
        records = make_records(8)
        pool = make_pool(3)
        plan = plan_assignments(8, pool, seed=1)
        m1 = run_batch(MockTtsBackend(min_seconds=0.1), records, plan, pool, tmp_path / "a", workers=1)
        m4 = run_batch(MockTtsBackend(min_seconds=0.1), records, plan, pool, tmp_path / "b", workers=4)
        assert [u.id for u in m1] == [u.id for u in m4]
        assert [u.duration_s for u in m1] == [u.duration_s for u in m4]
