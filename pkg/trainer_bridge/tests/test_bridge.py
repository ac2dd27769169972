import json
import re
import subprocess
import sys

import pytest

from trainer_bridge.data import BridgeDataError, read_manifest
from trainer_bridge.spec import TrainSpec, load_spec
from trainer_bridge.train import train
from trainer_bridge.transcribe import transcribe

from conftest import write_manifest


class TestSpec:
    def test_defaults_match_protocol(self):
        spec = TrainSpec()
        assert spec.epochs == 5
        assert spec.learning_rate == 1e-5
        assert spec.weight_decay == 0.01
        assert spec.batch_size == 16
        assert spec.warmup is True

    def test_identical_spec_and_seed_identical_hash(self):
        a = TrainSpec(model_path="x", seed=4)
        b = TrainSpec(model_path="x", seed=4)
        c = TrainSpec(model_path="x", seed=5)
        assert a.content_hash() == b.content_hash()
        assert a.content_hash() != c.content_hash()

    def test_load_spec_yaml(self, tmp_path):
        path = tmp_path / "spec.yaml"
        path.write_text("model_size: medium\nepochs: 2\nseed: 9\n")
        spec = load_spec(path)
        assert spec.model_size == "medium"
        assert spec.epochs == 2

    def test_unknown_size_rejected(self):
        with pytest.raises(ValueError):
            TrainSpec(model_size="tiny")


class TestManifestReading:
    def test_reads_and_resolves_paths(self, tmp_path):
        manifest = write_manifest(tmp_path, 3)
        entries = read_manifest(manifest)
        assert len(entries) == 3
        assert entries[0].audio_path.is_file()

    def test_wrong_rate_fails_before_training(self, tmp_path, toy_checkpoint):
        manifest = write_manifest(tmp_path, 2, rate=22050)
        spec = TrainSpec(model_path=str(toy_checkpoint), epochs=1, batch_size=2)
        with pytest.raises(BridgeDataError, match="22050"):
            train(manifest, spec, tmp_path / "out")
        assert not (tmp_path / "out" / "checkpoint").exists()

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(BridgeDataError, match="not found"):
            read_manifest(tmp_path / "none.jsonl")


class TestTranscribe:
    def test_empty_manifest_empty_records(self, tmp_path, toy_checkpoint):
        manifest = tmp_path / "empty.jsonl"
        manifest.write_text("")
        out = tmp_path / "hyp.jsonl"
        skipped = transcribe(toy_checkpoint, manifest, out)
        assert skipped == []
        assert out.read_text() == ""

    def test_undecodable_audio_skipped_with_ids(self, tmp_path, toy_checkpoint):
        manifest = write_manifest(tmp_path, 3)
        (tmp_path / "wav" / "utt001.wav").write_bytes(b"not audio at all")
        out = tmp_path / "hyp.jsonl"
        skipped = transcribe(toy_checkpoint, manifest, out)
        assert skipped == ["utt001"]
        rows = [json.loads(l) for l in out.read_text().splitlines()]
        assert [r["id"] for r in rows] == ["utt000", "utt002"]


class TestSmoke:
    """Full path: 20-utterance manifest -> train 1 epoch -> transcribe ->
    primary scorer accepts the records and reports a finite WER."""

    def test_train_transcribe_score(self, tmp_path, toy_checkpoint):
        manifest = write_manifest(tmp_path, 20, name="train.jsonl")
        spec = TrainSpec(model_path=str(toy_checkpoint), epochs=1, batch_size=4, seed=1)
        out_dir = tmp_path / "run"
        checkpoint = train(manifest, spec, out_dir)
        assert (checkpoint / "model.safetensors").is_file() or any(checkpoint.iterdir())

        log_rows = [json.loads(l) for l in (out_dir / "train_log.jsonl").read_text().splitlines()]
        assert len(log_rows) == 5  # 20 utterances / batch 4, 1 epoch
        assert all("loss" in r and r["loss"] == r["loss"] for r in log_rows)

        spec_record = json.loads((out_dir / "spec.json").read_text())
        assert spec_record["spec_hash"] == spec.content_hash()

        hyp_path = tmp_path / "hyp.jsonl"
        skipped = transcribe(checkpoint, manifest, hyp_path, max_new_tokens=12)
        assert skipped == []
        rows = [json.loads(l) for l in hyp_path.read_text().splitlines()]
        assert len(rows) == 20
        assert [r["id"] for r in rows] == [e.utt_id for e in read_manifest(manifest)]

        proc = subprocess.run(
            [
                sys.executable, "-m", "elderaug.cli", "score",
                "--ref", str(manifest), "--hyp", str(hyp_path), "--unit", "word",
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        match = re.search(r"WER (\d+(?:\.\d+)?)%", proc.stdout)
        assert match, proc.stdout
        assert float(match.group(1)) == float(match.group(1))  # finite, parseable

    def test_cli_round_trip(self, tmp_path, toy_checkpoint):
        manifest = write_manifest(tmp_path, 4, name="test.jsonl")
        spec_path = tmp_path / "spec.yaml"
        spec_path.write_text(
            f"model_path: {toy_checkpoint}\nepochs: 1\nbatch_size: 2\nmodel_size: small\n"
        )
        out_dir = tmp_path / "cli_run"
        proc = subprocess.run(
            [
                sys.executable, "-m", "trainer_bridge.cli", "train",
                "--manifest", str(manifest), "--spec", str(spec_path),
                "--out-dir", str(out_dir),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        hyp = tmp_path / "hyp_cli.jsonl"
        proc = subprocess.run(
            [
                sys.executable, "-m", "trainer_bridge.cli", "transcribe",
                "--checkpoint", str(out_dir / "checkpoint"),
                "--manifest", str(manifest), "--out", str(hyp), "--max-new-tokens", "8",
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert len(hyp.read_text().splitlines()) == 4
