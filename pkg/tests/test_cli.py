import json
import os

import pytest

from conftest import TINY_TRAIN, run_cli
from robabsa.cli import RunConfig, resolve
from robabsa.corpus import dump_conllu, tree_from_heads
from robabsa.model import ModelConfig
from robabsa.training import TrainConfig


@pytest.fixture(autouse=True)
def no_env(monkeypatch):
    monkeypatch.delenv("ROBABSA_CONFIG", raising=False)


@pytest.fixture(scope="module")
def augmented(tmp_path_factory):
    out = tmp_path_factory.mktemp("aug")
    assert run_cli("augment", "--out", out, "--figures", "true") == 0
    return out


@pytest.fixture(scope="module")
def tiny_cfg(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "tiny.cfg"
    path.write_text(TINY_TRAIN)
    return path


# --- settings precedence ---------------------------------------------------------------

def test_defaults():
    s = resolve({}, {})
    assert s.run == RunConfig() and s.model == ModelConfig()
    assert s.train == TrainConfig()


@pytest.mark.parametrize("file_value, flag_value, expected", [
    (None, None, 0.2), ("0.4", None, 0.4), (None, "0.6", 0.6), ("0.4", "0.6", 0.6)])
def test_precedence(file_value, flag_value, expected):
    file_values = {} if file_value is None else {"theta_a": file_value}
    flags = {} if flag_value is None else {"theta_a": flag_value}
    assert resolve(file_values, flags).run.theta_a == expected


def test_seed_reaches_training():
    s = resolve({"seed": "5"}, {})
    assert s.run.seed == 5 and s.train.seed == 5


def test_env_config_is_read_and_flag_wins(tmp_path, monkeypatch):
    cfg = tmp_path / "a.cfg"
    cfg.write_text("theta_a = 1e9\ntheta-n = 1e9\ntheta_m = 1e9\nfigures = false\n")
    out = tmp_path / "o"
    assert run_cli("augment", "--out", out, env_config=cfg, monkeypatch=monkeypatch) == 0
    summary = dict(line.split("\t") for line in (out / "summary.tsv").read_text().splitlines())
    assert summary["D_a_count"] == summary["D_n_count"] == summary["D_m_count"] == "0"
    assert run_cli("augment", "--out", out, "--theta-a", "0.2", env_config=cfg, monkeypatch=monkeypatch) == 0
    summary = dict(line.split("\t") for line in (out / "summary.tsv").read_text().splitlines())
    assert int(summary["D_a_count"]) > 0 and summary["D_m_count"] == "0"


def test_explicit_config_beats_env(tmp_path, monkeypatch):
    env = tmp_path / "env.cfg"
    env.write_text("bogus_key = 1\n")
    good = tmp_path / "good.cfg"
    good.write_text("figures = false\ntheta_a = 1e9\n")
    assert run_cli("augment", "--out", tmp_path / "o", env_config=env, monkeypatch=monkeypatch) == 2
    assert run_cli("augment", "--config", good, "--out", tmp_path / "o",
                   env_config=env, monkeypatch=monkeypatch) == 0


# --- exit codes ------------------------------------------------------------------------

def test_missing_lexicon_is_user_error(tmp_path):
    assert run_cli("augment", "--out", tmp_path, "--sentiment-lexicon", tmp_path / "nope.tsv") == 2


def test_unknown_flag_and_bad_value(tmp_path):
    assert run_cli("augment", "--no-such-flag", "1") == 2
    assert run_cli("augment", "--out", tmp_path, "--theta-a", "abc") == 2
    assert run_cli("train", "--out", tmp_path, "--regime", "zzz") == 2
    assert run_cli("augment", "--out", tmp_path, "--paraphraser", "nope") == 2


def test_regime_without_synthetic_is_user_error(tmp_path, tiny_cfg):
    assert run_cli("train", "--config", tiny_cfg, "--out", tmp_path, "--regime", "a") == 2
    assert run_cli("eval", "--out", tmp_path / "empty") == 2


def test_gradcheck_failure_exits_one(tmp_path, monkeypatch):
    from robabsa import gradcheck
    from robabsa.autodiff.gradcheck import CheckResult
    monkeypatch.setattr(gradcheck, "run_suite",
                        lambda *a: gradcheck.SuiteResult([CheckResult("x", 1, 1.0, 1e-4)], 0.0))
    assert run_cli("gradcheck", "--out", tmp_path) == 1
    assert "FAIL" in (tmp_path / "gradcheck.txt").read_text()


def test_gradcheck_small_run(tmp_path):
    assert run_cli("gradcheck", "--out", tmp_path, "--op-seeds", 2, "--model-seeds", 2) == 0
    rows = (tmp_path / "gradcheck.tsv").read_text().splitlines()
    assert rows[0].startswith("check\t") and all(r.endswith("\t1") for r in rows[1:])


def test_infinite_threshold_is_empty_success(tmp_path):
    assert run_cli("augment", "--out", tmp_path, "--theta-a", "1e9", "--figures", "false") == 0
    assert (tmp_path / "D_a.jsonl").read_text() == ""


# --- outputs ---------------------------------------------------------------------------

def test_augment_outputs(augmented):
    for name in ("D_a.jsonl", "D_a.conllu", "D_n.jsonl", "D_m.jsonl", "reparse.txt", "summary.json",
                 "summary.tsv", "confidence.png"):
        assert (augmented / name).exists(), name
    summary = json.loads((augmented / "summary.json").read_text())
    tsv = dict(line.split("\t") for line in (augmented / "summary.tsv").read_text().splitlines())
    for kind, stem in (("SentimentMod", "D_a"), ("BackgroundRewrite", "D_n"), ("AspectAddition", "D_m")):
        assert summary[kind]["count"] == int(tsv[f"{stem}_count"]) > 0


def test_augment_is_byte_identical(augmented, tmp_path):
    assert run_cli("augment", "--out", tmp_path, "--figures", "true") == 0
    for name in sorted(os.listdir(augmented)):
        assert (tmp_path / name).read_bytes() == (augmented / name).read_bytes(), name


def test_train_eval_dump(augmented, tiny_cfg, tmp_path):
    out = tmp_path / "run"
    args = ("--config", tiny_cfg, "--synthetic", augmented, "--regime", "a+c", "--seed", 3)
    assert run_cli("train", *args, "--out", out, "--figures", "true") == 0
    for name in ("train.log.jsonl", "train_summary.tsv", "training.png", "checkpoint/params.bin"):
        assert (out / name).exists(), name
    again = tmp_path / "again"
    assert run_cli("train", *args, "--out", again, "--figures", "true") == 0
    for name in ("checkpoint/params.bin", "train.log.jsonl", "train_summary.tsv", "training.png"):
        assert (out / name).read_bytes() == (again / name).read_bytes(), name

    assert run_cli("eval", "--out", out, "--figures", "true") == 0
    report = json.loads((out / "report.json").read_text())
    rows = dict(line.split("\t") for line in (out / "report.tsv").read_text().splitlines())
    assert float(rows["overall"]) == pytest.approx(report["accuracy"], abs=1e-6)
    assert {k[4:] for k in rows if k.startswith("tag:")} == set(report["tags"])
    assert (out / "accuracy.png").exists()

    assert run_cli("dump-reprs", "--out", out, "--which", "r_s") == 0
    lines = (out / "r_s.tsv").read_text().splitlines()
    assert len(lines) == 1 + report["total"]


def test_export_and_import_parses(augmented, tmp_path):
    syn = tmp_path / "syn"
    syn.mkdir()
    for name in ("D_n.jsonl", "D_n.conllu"):
        (syn / name).write_bytes((augmented / name).read_bytes())
    assert run_cli("export-sentences", "--synthetic", syn, "--out", tmp_path) == 0
    sentences = (tmp_path / "reparse.txt").read_text().splitlines()
    assert sentences
    trees = []
    for line in sentences:
        forms = line.split()
        trees.append(tree_from_heads(forms, [0] + list(range(1, len(forms))),
                                     ["root"] + ["dep"] * (len(forms) - 1)))
    dump_conllu(trees, tmp_path / "parsed.conllu")
    assert run_cli("import-parses", "--synthetic", syn, "--parses", tmp_path / "parsed.conllu") == 0
    assert run_cli("export-sentences", "--synthetic", syn, "--out", tmp_path / "after") == 0
    assert (tmp_path / "after" / "reparse.txt").read_text() == ""
    # wrong number of parses is a user error
    assert run_cli("import-parses", "--synthetic", syn, "--parses", tmp_path / "parsed.conllu") == 2
