import pytest

from elderaug.config import apply_override, cfg_get, load_run_config
from elderaug.corpus import Manifest, load_manifest
from elderaug.errors import ConfigError, DataError, EctValidationError
from elderaug.paraphrase import GenerationParams, DEFAULT_TEMPLATE, ParaphraseBackend
from elderaug.pipeline import (
    ParaphraseStage,
    default_pool_size,
    merge_train_set,
    rebase_manifest,
    run_augment,
    select_for_augmentation,
)
from elderaug.util import round_half_up

from conftest import make_manifest, make_utterance


class TestSelect:
    def test_exact_count(self):
        m = make_manifest(100)
        assert len(select_for_augmentation(m, 0.5, seed=0)) == 50

    def test_ratio_one_returns_all_in_order(self):
        m = make_manifest(20)
        selected = select_for_augmentation(m, 1.0, seed=3)
        assert selected == list(m.entries)

    def test_deterministic_per_seed(self):
        m = make_manifest(40)
        a = select_for_augmentation(m, 0.3, seed=7)
        b = select_for_augmentation(m, 0.3, seed=7)
        c = select_for_augmentation(m, 0.3, seed=8)
        assert a == b
        assert [u.id for u in a] != [u.id for u in c]

    def test_selection_keeps_manifest_order(self):
        m = make_manifest(30)
        selected = select_for_augmentation(m, 0.4, seed=1)
        positions = [m.entries.index(u) for u in selected]
        assert positions == sorted(positions)

    def test_rounding_half_away_from_zero(self):
        m = make_manifest(5)
        # 0.5 * 5 = 2.5 -> 3
        assert len(select_for_augmentation(m, 0.5, seed=0)) == 3
        assert round_half_up(2.5) == 3

    def test_bad_inputs(self):
        m = make_manifest(5)
        with pytest.raises(ValueError):
            select_for_augmentation(m, 0.0, seed=0)
        with pytest.raises(ValueError):
            select_for_augmentation(m, 1.2, seed=0)
        with pytest.raises(DataError):
            select_for_augmentation(Manifest(entries=[], split="train"), 0.5, seed=0)
        with pytest.raises(DataError):
            select_for_augmentation(make_manifest(5, split="test"), 0.5, seed=0)


class TestPoolSchedule:
    @pytest.mark.parametrize(
        "ratio,expected", [(0.1, 2), (0.2, 2), (0.3, 4), (0.4, 4), (0.5, 8), (0.7, 8), (1.0, 8)]
    )
    def test_default_sizes(self, ratio, expected):
        assert default_pool_size(ratio) == expected


class TestMerge:
    def test_sizes_add(self):
        orig = make_manifest(100)
        aug_entries = [
            make_utterance(utt_id=f"s{i}", origin="synthetic", source_id=f"u{i}")
            for i in range(100)
        ]
        merged = merge_train_set(orig, Manifest(entries=aug_entries))
        assert len(merged) == 200
        assert merged.split == "train"

    def test_empty_aug_is_identity(self):
        orig = make_manifest(7)
        merged = merge_train_set(orig, Manifest(entries=[]))
        assert merged.entries == orig.entries

    def test_id_collision_reports_both(self):
        orig = make_manifest(3)
        clash = [make_utterance(utt_id="u1", origin="synthetic", source_id="u0", text="synthetic text")]
        with pytest.raises(DataError, match="u1") as err:
            merge_train_set(orig, Manifest(entries=clash))
        assert "synthetic text" in str(err.value)

    def test_interleave(self):
        orig = make_manifest(3)
        aug_entries = [
            make_utterance(utt_id=f"s{i}", origin="synthetic", source_id=f"u{i}")
            for i in range(2)
        ]
        merged = merge_train_set(orig, Manifest(entries=aug_entries), ordering="interleave")
        assert [u.id for u in merged] == ["u0", "s0", "u1", "s1", "u2"]

    def test_origin_tags_preserved(self):
        orig = make_manifest(2)
        aug_entries = [make_utterance(utt_id="s0", origin="synthetic", source_id="u0")]
        merged = merge_train_set(orig, Manifest(entries=aug_entries))
        assert [u.origin for u in merged] == ["original", "original", "synthetic"]


class TestConfig:
    def test_load_and_override(self, tmp_path):
        cfg_file = tmp_path / "run.yaml"
        cfg_file.write_text("augment:\n  ratio: 0.5\nseed: 1\n")
        cfg = load_run_config(cfg_file, overrides=["augment.ratio=0.3", "seed=9"])
        assert cfg_get(cfg, "augment.ratio") == 0.3
        assert cfg["seed"] == 9

    def test_parse_error_names_line(self, tmp_path):
        cfg_file = tmp_path / "bad.yaml"
        cfg_file.write_text("augment:\n  ratio: [unclosed\n")
        with pytest.raises(ConfigError, match="bad.yaml:"):
            load_run_config(cfg_file)

    def test_override_types(self):
        cfg = {}
        apply_override(cfg, "a.b=3")
        apply_override(cfg, "a.flag=true")
        apply_override(cfg, "a.name=hello")
        assert cfg == {"a": {"b": 3, "flag": True, "name": "hello"}}

    def test_bad_override(self):
        with pytest.raises(ConfigError):
            apply_override({}, "no-equals-sign")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_run_config(tmp_path / "none.yaml")


class TestRunAugment:
    def _run(self, toy_corpus, workdir_name, overrides=()):
        from elderaug.config import load_run_config

        cfg = load_run_config(toy_corpus["config"], overrides=[f"workdir={workdir_name}", *overrides])
        return run_augment(cfg, toy_corpus["root"], mock_backends=True)

    def test_counting_and_lineage(self, toy_corpus):
        paths = self._run(toy_corpus, "out_count", ["augment.ratio=0.5"])
        d_train = load_manifest(paths.d_train, split="train")
        n = 24
        assert len(d_train) == n + round_half_up(0.5 * n)
        originals = {u.id for u in d_train if u.origin == "original"}
        for u in d_train:
            if u.origin == "synthetic":
                assert u.source_id in originals
                assert u.duration_s is not None

    def test_rerun_byte_identical(self, toy_corpus):
        p1 = self._run(toy_corpus, "out_det1")
        p2 = self._run(toy_corpus, "out_det2")
        assert p1.d_aug.read_bytes() == p2.d_aug.read_bytes()
        assert p1.d_train.read_bytes() == p2.d_train.read_bytes()

    def test_worker_count_invariance(self, toy_corpus):
        p1 = self._run(toy_corpus, "out_w1", ["paraphrase.workers=1", "synth.workers=1"])
        p2 = self._run(toy_corpus, "out_w4", ["paraphrase.workers=4", "synth.workers=4"])
        assert p1.d_aug.read_bytes() == p2.d_aug.read_bytes()
        assert p1.d_train.read_bytes() == p2.d_train.read_bytes()

    def test_run_record_written(self, toy_corpus):
        import json

        paths = self._run(toy_corpus, "out_record")
        record = json.loads(paths.run_record.read_text())
        assert record["backend_calls"]["llm"] >= 0
        assert record["d_train_sha256"]
        assert record["seed"] == 1234

    def test_failed_validation_aborts_without_manifest(self, toy_corpus, tmp_path):
        class AlwaysBad(ParaphraseBackend):
            model_id = "bad"

            def complete(self, prompt, params):
                return "Nope."

        m = load_manifest(toy_corpus["train"], split="train")
        stage = ParaphraseStage(
            backend=AlwaysBad(),
            template=DEFAULT_TEMPLATE,
            params=GenerationParams(),
            validation_retries=1,
            backoff_s=0.0,
        )
        with pytest.raises(EctValidationError, match="utt0000"):
            stage.run(m.entries[:3])

    def test_tiny_ratio_rounds_to_zero_selected(self, toy_corpus):
        # 0.01 * 24 rounds to 0: run still completes, D_train == D_orig
        paths = self._run(toy_corpus, "out_tiny", ["augment.ratio=0.01"])
        d_train = load_manifest(paths.d_train, split="train")
        assert len(d_train) == 24
        assert all(u.origin == "original" for u in d_train)

    def test_audio_paths_resolve_from_merged_manifest(self, toy_corpus):
        from elderaug.dsp import read_wav

        paths = self._run(toy_corpus, "out_paths", ["augment.ratio=0.25"])
        d_train = load_manifest(paths.d_train, split="train")
        for u in list(d_train)[:4] + [u for u in d_train if u.origin == "synthetic"][:4]:
            clip = read_wav(d_train.resolve_audio_path(u))
            assert clip.sample_rate == 16000


class TestRebase:
    def test_relative_paths_rewritten(self, tmp_path):
        src = tmp_path / "src"
        dst = tmp_path / "dst"
        src.mkdir()
        dst.mkdir()
        m = Manifest(entries=[make_utterance()], root=src)
        rebased = rebase_manifest(m, dst)
        assert rebased.entries[0].audio_path == "../src/wav/u1.wav"

    def test_absolute_paths_untouched(self, tmp_path):
        u = make_utterance(audio_path="/abs/file.wav")
        m = Manifest(entries=[u], root=tmp_path)
        rebased = rebase_manifest(m, tmp_path / "sub")
        assert rebased.entries[0].audio_path == "/abs/file.wav"
