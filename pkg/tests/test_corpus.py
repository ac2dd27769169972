import json

import pytest
from hypothesis import given, strategies as st

from elderaug.corpus import (
    Manifest,
    Utterance,
    ValidationPolicy,
    age_histogram,
    load_manifest,
    save_manifest,
    validate_manifest,
)
from elderaug.errors import ManifestError

from conftest import make_manifest, make_utterance


class TestUtterance:
    def test_synthetic_requires_source_id(self):
        with pytest.raises(ValueError, match="source_id"):
            make_utterance(origin="synthetic")

    def test_original_rejects_source_id(self):
        with pytest.raises(ValueError, match="source_id"):
            make_utterance(origin="original", source_id="u0")

    def test_empty_text_rejected(self):
        with pytest.raises(ValueError, match="text"):
            make_utterance(text="   ")

    def test_bad_gender_rejected(self):
        with pytest.raises(ValueError, match="gender"):
            make_utterance(gender="X")

    def test_extra_fields_must_not_shadow_known(self):
        with pytest.raises(ValueError, match="shadow"):
            Utterance(
                id="u1",
                audio_path="a.wav",
                text="hi there you",
                origin="original",
                extra={"text": "other"},
            )


class TestLoadManifest:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert len(load_manifest(path)) == 0

    def test_single_wellformed_line(self, tmp_path):
        path = tmp_path / "one.jsonl"
        path.write_text(
            json.dumps(
                {"id": "u1", "audio_path": "a.wav", "text": "hello there friend", "origin": "original"}
            )
            + "\n"
        )
        m = load_manifest(path)
        assert len(m) == 1
        assert m.entries[0].id == "u1"
        assert m.entries[0].text == "hello there friend"

    def test_missing_text_field_names_line_and_field(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps({"id": "u1", "audio_path": "a.wav", "origin": "original"}) + "\n")
        with pytest.raises(ManifestError, match=r":1: .*'text'"):
            load_manifest(path)

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "u1"\n')
        with pytest.raises(ManifestError, match=":1:"):
            load_manifest(path)

    def test_duplicate_id_rejected(self, tmp_path):
        rec = {"id": "u1", "audio_path": "a.wav", "text": "hi there you", "origin": "original"}
        path = tmp_path / "dup.jsonl"
        path.write_text(json.dumps(rec) + "\n" + json.dumps(rec) + "\n")
        with pytest.raises(ManifestError, match="duplicate id"):
            load_manifest(path)

    def test_synthetic_without_source_rejected(self, tmp_path):
        rec = {"id": "s1", "audio_path": "a.wav", "text": "hi there you", "origin": "synthetic"}
        path = tmp_path / "syn.jsonl"
        path.write_text(json.dumps(rec) + "\n")
        with pytest.raises(ManifestError, match="source_id"):
            load_manifest(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ManifestError, match="not found"):
            load_manifest(tmp_path / "nope.jsonl")


class TestRoundTrip:
    def test_load_save_identity(self, tmp_path):
        m = make_manifest(6)
        path = tmp_path / "m.jsonl"
        save_manifest(m, path)
        loaded = load_manifest(path, split="train")
        assert loaded == m

    def test_byte_stable_round_trip(self, tmp_path):
        m = make_manifest(4)
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        save_manifest(m, p1)
        save_manifest(load_manifest(p1, split="train"), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_unknown_extra_fields_preserved(self, tmp_path):
        rec = {
            "id": "u1",
            "audio_path": "a.wav",
            "text": "hi there you",
            "origin": "original",
            "custom_tag": {"nested": [1, 2]},
        }
        path = tmp_path / "x.jsonl"
        path.write_text(json.dumps(rec) + "\n")
        m = load_manifest(path)
        assert m.entries[0].extra == {"custom_tag": {"nested": [1, 2]}}
        out = tmp_path / "y.jsonl"
        save_manifest(m, out)
        assert json.loads(out.read_text())["custom_tag"] == {"nested": [1, 2]}


class TestValidate:
    def test_clean_manifest_min_age(self):
        m = make_manifest(5)  # ages 70..74
        assert validate_manifest(m, ValidationPolicy(min_age=70)) == []

    def test_below_min_age_cites_id(self):
        entries = [make_utterance(utt_id="a", age=72), make_utterance(utt_id="b", age=65)]
        m = Manifest(entries=entries, split="train")
        violations = validate_manifest(m, ValidationPolicy(min_age=70))
        assert len(violations) == 1
        assert violations[0].utt_id == "b"
        assert violations[0].rule == "min_age"

    def test_duplicate_id_reported(self):
        entries = [make_utterance(utt_id="u1"), make_utterance(utt_id="u1")]
        m = Manifest(entries=entries, split="train")
        violations = validate_manifest(m)
        assert [v.rule for v in violations] == ["duplicate_id"]

    def test_missing_age_with_min_age(self):
        m = Manifest(entries=[make_utterance(utt_id="q", age=None)], split="train")
        violations = validate_manifest(m, ValidationPolicy(min_age=70))
        assert violations[0].rule == "age_unknown"

    def test_check_audio_missing_file(self, tmp_path):
        m = Manifest(entries=[make_utterance()], split="train", root=tmp_path)
        violations = validate_manifest(m, ValidationPolicy(check_audio=True))
        assert violations[0].rule == "audio_missing"

    def test_duration_mismatch_flagged(self, toy_corpus):
        m = load_manifest(toy_corpus["train"])
        entries = [m.entries[0]]
        import dataclasses

        bad = dataclasses.replace(entries[0], duration_s=entries[0].duration_s * 2)
        m2 = Manifest(entries=[bad], root=m.root)
        violations = validate_manifest(m2, ValidationPolicy(check_audio=True))
        assert [v.rule for v in violations] == ["duration_mismatch"]


class TestAgeHistogram:
    def test_simple(self):
        entries = [make_utterance(utt_id=f"u{i}", age=a) for i, a in enumerate((72, 75, 75))]
        m = Manifest(entries=entries)
        assert age_histogram(m, 10) == {"70-79": 3}

    def test_empty(self):
        assert age_histogram(Manifest(entries=[]), 10) == {}

    def test_unknown_bucket(self):
        entries = [make_utterance(utt_id="a", age=72), make_utterance(utt_id="b", age=None)]
        m = Manifest(entries=entries)
        assert age_histogram(m, 10) == {"70-79": 1, "unknown": 1}

    def test_zero_width_rejected(self):
        with pytest.raises(ValueError):
            age_histogram(Manifest(entries=[]), 0)

    @given(
        ages=st.lists(st.one_of(st.none(), st.integers(min_value=0, max_value=120)), max_size=40),
        width=st.integers(min_value=1, max_value=25),
    )
    def test_counts_sum_to_entries(self, ages, width):
        entries = [make_utterance(utt_id=f"u{i}", age=a) for i, a in enumerate(ages)]
        m = Manifest(entries=entries)
        assert sum(age_histogram(m, width).values()) == len(entries)


class TestFillDurations:
    def test_durations_computed_from_headers(self, toy_corpus):
        import dataclasses

        from elderaug.corpus import fill_durations

        m = load_manifest(toy_corpus["train"])
        stripped = Manifest(
            entries=[dataclasses.replace(u, duration_s=None) for u in m.entries],
            split=m.split,
            root=m.root,
        )
        filled = fill_durations(stripped)
        for original, recomputed in zip(m.entries, filled.entries):
            assert recomputed.duration_s == pytest.approx(original.duration_s, rel=1e-6)

    def test_required_sample_rate_policy(self, toy_corpus):
        m = load_manifest(toy_corpus["train"])
        ok = validate_manifest(m, ValidationPolicy(check_audio=True, required_sample_rate=16000))
        assert ok == []
        bad = validate_manifest(m, ValidationPolicy(check_audio=True, required_sample_rate=22050))
        assert len(bad) == len(m)
        assert all(v.rule == "sample_rate" for v in bad)
