import json
import subprocess
import sys
from pathlib import Path

import pytest

from advtox.resources import default_data_dir

DATA = default_data_dir()


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "advtox.cli", *args],
                          capture_output=True, text=True)


# module-level pipeline artifacts shared by the tests below
@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_pipeline")
    train = run_cli("train", "--task", "multiclass",
                    "--dataset", str(DATA / "corpus_multiclass.csv"),
                    "--out", str(root / "train"), "--seed", "42")
    assert train.returncode == 0, train.stderr
    attack = run_cli("attack", "--dataset", str(DATA / "seeds_toxic_50.csv"),
                     "--recipe", "toxictrap-default",
                     "--model", str(root / "train" / "model.json"),
                     "--out", str(root / "attack"), "--seed", "0")
    assert attack.returncode == 0, attack.stderr
    return root


class TestPipelineArtifacts:
    def test_train_artifacts(self, pipeline):
        model = json.loads((pipeline / "train" / "model.json").read_text())
        assert model["format_version"] == 1
        metrics = json.loads((pipeline / "train" / "train_metrics.json").read_text())
        assert metrics["schema_version"] == 1
        assert metrics["config"]["train"]["seed"] == 42
        assert metrics["report"]["accuracy"] >= 0.85

    def test_attack_artifacts(self, pipeline):
        metrics = json.loads((pipeline / "attack" / "metrics.json").read_text())
        assert metrics["metrics"]["total_seeds"] == 50
        assert metrics["config"]["seed"] == 0
        assert metrics["config"]["recipe_resolved"]["name"] == "toxictrap-default"
        lines = (pipeline / "attack" / "results.jsonl").read_text().splitlines()
        assert len(lines) == 50
        assert json.loads(lines[0])["schema_version"] == 1

    def test_rerun_is_byte_identical(self, pipeline, tmp_path):
        rerun = run_cli("attack", "--dataset", str(DATA / "seeds_toxic_50.csv"),
                        "--recipe", "toxictrap-default",
                        "--model", str(pipeline / "train" / "model.json"),
                        "--out", str(tmp_path / "attack2"), "--seed", "0")
        assert rerun.returncode == 0, rerun.stderr
        first = (pipeline / "attack" / "metrics.json").read_bytes()
        second = (tmp_path / "attack2" / "metrics.json").read_bytes()
        assert first == second
        assert (pipeline / "attack" / "results.jsonl").read_bytes() == \
            (tmp_path / "attack2" / "results.jsonl").read_bytes()


class TestExitCodes:
    def test_unknown_recipe_exits_1_and_lists_names(self, pipeline):
        r = run_cli("attack", "--dataset", str(DATA / "seeds_toxic_50.csv"),
                    "--recipe", "nope",
                    "--model", str(pipeline / "train" / "model.json"),
                    "--out", "/tmp/advtox-nope")
        assert r.returncode == 1
        assert "toxictrap-default" in r.stderr

    def test_missing_oracle_exits_1(self):
        r = run_cli("attack", "--dataset", str(DATA / "seeds_toxic_50.csv"),
                    "--recipe", "pwws-toxic", "--out", "/tmp/advtox-nope")
        assert r.returncode == 1

    def test_bad_dataset_exits_2(self, pipeline, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("body,label\nx,benign\n", encoding="utf-8")
        r = run_cli("attack", "--dataset", str(bad), "--recipe", "pwws-toxic",
                    "--model", str(pipeline / "train" / "model.json"),
                    "--out", str(tmp_path / "out"))
        assert r.returncode == 2
        assert "text" in r.stderr

    def test_bias_without_identity_columns_exits_2(self, pipeline, tmp_path):
        bad = tmp_path / "noid.csv"
        bad.write_text("text,label\nhello there,benign\nyou idiot,toxic\n",
                       encoding="utf-8")
        r = run_cli("bias", "--dataset", str(bad),
                    "--model", str(pipeline / "train" / "model.json"),
                    "--out", str(tmp_path / "bias"))
        assert r.returncode == 2
        assert "identity" in r.stderr

    def test_unreachable_remote_exits_3(self, tmp_path):
        r = run_cli("attack", "--dataset", str(DATA / "seeds_toxic_50.csv"),
                    "--recipe", "pwws-toxic",
                    "--remote", "http://127.0.0.1:1",
                    "--out", str(tmp_path / "out"))
        assert r.returncode == 3


class TestAdvtrainEvalBias:
    def test_advtrain_then_eval_shows_asr_drop(self, pipeline, tmp_path):
        adv = run_cli("advtrain", "--task", "multiclass",
                      "--dataset", str(DATA / "corpus_multiclass.csv"),
                      "--attacks", "toxictrap-default",
                      "--out", str(tmp_path / "advtrain"),
                      "--seed", "42", "--budget", "150")
        assert adv.returncode == 0, adv.stderr
        report = json.loads((tmp_path / "advtrain" / "advtrain_report.json")
                            .read_text())
        assert report["report"]["mode"] == "sat"

        base_metrics = json.loads((pipeline / "attack" / "metrics.json")
                                  .read_text())["metrics"]
        robust_attack = run_cli(
            "attack", "--dataset", str(DATA / "seeds_toxic_50.csv"),
            "--recipe", "toxictrap-default",
            "--model", str(tmp_path / "advtrain" / "robust_model.json"),
            "--out", str(tmp_path / "attack_robust"), "--seed", "0")
        assert robust_attack.returncode == 0, robust_attack.stderr
        robust_metrics = json.loads(
            (tmp_path / "attack_robust" / "metrics.json").read_text())["metrics"]
        assert robust_metrics["asr"] < base_metrics["asr"]

    def test_eval_writes_table(self, pipeline, tmp_path):
        r = run_cli("eval", "--dataset", str(DATA / "seeds_toxic_50.csv"),
                    "--model", str(pipeline / "train" / "model.json"),
                    "--recipes", "pwws-toxic,deepwordbug-toxic",
                    "--unseen", "pwws-toxic",
                    "--out", str(tmp_path / "eval"))
        assert r.returncode == 0, r.stderr
        table = json.loads((tmp_path / "eval" / "robustness_table.json")
                           .read_text())["table"]
        assert table["pwws-toxic"]["unseen"] is True
        assert table["deepwordbug-toxic"]["metrics"]["asr"] is not None

    def test_bias_report(self, pipeline, tmp_path):
        r = run_cli("bias", "--dataset", str(DATA / "corpus_bias.csv"),
                    "--model", str(pipeline / "train" / "model.json"),
                    "--out", str(tmp_path / "bias"))
        assert r.returncode == 0, r.stderr
        doc = json.loads((tmp_path / "bias" / "bias_report.json").read_text())
        assert set(doc["base"]["groups"]) == {
            "male", "female", "black", "white", "heterosexual", "homosexual"}
