"""CLI behavior: flags, files, exit codes, and help snapshots."""

import json
from pathlib import Path

import pytest

from hybridref.cli import main

SNAPSHOT_DIR = Path(__file__).parent / "snapshots"
SUBCOMMANDS = ["synth", "convert", "train", "score", "eval", "ensemble", "gradcheck"]


@pytest.mark.parametrize("command", SUBCOMMANDS)
def test_help_snapshot(command, capsys):
    with pytest.raises(SystemExit) as exc:
        main([command, "--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    snapshot = SNAPSHOT_DIR / f"help_{command}.txt"
    assert snapshot.exists(), f"missing snapshot {snapshot}; regenerate with tests/make_snapshots.py"
    assert out == snapshot.read_text()
    # every flag documents its default value
    assert "--seed" in out and "--config" in out and "--verbose" in out


def test_root_help_lists_all_subcommands(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    out = capsys.readouterr().out
    for command in SUBCOMMANDS:
        assert command in out


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_synth_is_deterministic(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main(["synth", "--seed", "7", "--size", "20", "--dev-size", "4", "--out", str(a)]) == 0
    assert main(["synth", "--seed", "7", "--size", "20", "--dev-size", "4", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 20


def test_convert_on_documented_example(tmp_path):
    premise = ("The cookstove was warming the kitchen, and the lamplight made it "
               "seem even warmer.")
    rows = [
        "index\tsentence1\tsentence2\tlabel",
        f"0\t{premise}\tThe lamplight made the cookstove seem even warmer.\t0",
        f"1\t{premise}\tThe lamplight made the kitchen seem even warmer.\t1",
        f"2\t{premise}\tThe lamplight made the lamplight seem even warmer.\t0",
    ]
    tsv = tmp_path / "wnli.tsv"
    tsv.write_text("\n".join(rows) + "\n")
    out = tmp_path / "instances.jsonl"
    report = tmp_path / "report.json"
    assert main(["convert", "--input", str(tsv), "--output", str(out),
                 "--report", str(report)]) == 0
    (record,) = [json.loads(line) for line in out.read_text().splitlines()]
    assert [c["text"] for c in record["candidates"]] == \
        ["the cookstove", "the kitchen", "the lamplight"]
    assert [c["label"] for c in record["candidates"]] == ["negative", "positive", "negative"]
    rep = json.loads(report.read_text())
    assert rep["n_pairs"] == 3 and rep["n_instances"] == 1


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_run")
    train_path, dev_path = root / "train.jsonl", root / "dev.jsonl"
    main(["synth", "--seed", "3", "--size", "16", "--dev-size", "6",
          "--out", str(train_path), "--dev-out", str(dev_path)])
    run_dir = root / "run"
    config = root / "cfg.json"
    config.write_text(json.dumps({
        "encoder": {"d_model": 8, "num_layers": 1, "num_heads": 1,
                    "ffn_multiplier": 2, "max_positions": 32},
        "training": {"batch_size": 8, "warmup_steps": 1, "max_epochs": 2,
                     "select_epochs": [1, 2], "track_train_accuracy": False},
    }))
    code = main(["train", "--train", str(train_path), "--dev", str(dev_path),
                 "--out", str(run_dir), "--config", str(config), "--seed", "2"])
    assert code == 0
    return root, train_path, dev_path, run_dir, config


def test_train_writes_all_artifacts(small_run):
    _, _, _, run_dir, _ = small_run
    for name in ("run_config.json", "encoder_config.json", "vocab.json",
                 "selected.ckpt", "swa.ckpt", "metrics.jsonl", "steps.jsonl", "summary.json"):
        assert (run_dir / name).exists(), name
    assert sorted(p.name for p in (run_dir / "checkpoints").iterdir()) == \
        ["epoch_0001.ckpt", "epoch_0002.ckpt"]
    metrics = [json.loads(l) for l in (run_dir / "metrics.jsonl").read_text().splitlines()]
    assert [m["epoch"] for m in metrics] == [1, 2]
    assert set(metrics[0]) == {"epoch", "train_loss", "dev_acc", "lr", "train_acc"}
    steps = [json.loads(l) for l in (run_dir / "steps.jsonl").read_text().splitlines()]
    assert set(steps[0]) == {"step", "lr", "l_mlm", "l_ssm", "l_rank", "total"}
    enc_cfg = json.loads((run_dir / "encoder_config.json").read_text())
    assert enc_cfg["vocab_size"] > 5  # resolved from the corpus


def test_score_output_schema(small_run, tmp_path):
    _, _, dev_path, run_dir, _ = small_run
    out = tmp_path / "scores.jsonl"
    assert main(["score", "--ckpt", str(run_dir), "--data", str(dev_path),
                 "--out", str(out)]) == 0
    lines = [json.loads(l) for l in out.read_text().splitlines()]
    assert len(lines) == 6 * 2
    assert set(lines[0]) == {"instance_id", "candidate_index", "p_mlm", "p_ssm", "score"}
    assert 0.0 < lines[0]["score"] <= 1.0


def test_score_mlm_only_mode(small_run, tmp_path):
    _, _, dev_path, run_dir, _ = small_run
    out = tmp_path / "scores_mlm.jsonl"
    assert main(["score", "--ckpt", str(run_dir), "--data", str(dev_path),
                 "--out", str(out), "--mode", "mlm_only"]) == 0
    first = json.loads(out.read_text().splitlines()[0])
    assert first["p_ssm"] is None and first["score"] == first["p_mlm"]


def test_eval_ranking_and_both(small_run, tmp_path):
    _, train_path, dev_path, run_dir, _ = small_run
    out = tmp_path / "report.json"
    assert main(["eval", "--ckpt", str(run_dir), "--data", str(dev_path),
                 "--formulation", "ranking", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["formulation"] == "ranking" and report["threshold"] is None

    both = tmp_path / "both.json"
    assert main(["eval", "--ckpt", str(run_dir), "--data", str(dev_path),
                 "--formulation", "both", "--dev", str(train_path),
                 "--out", str(both)]) == 0
    doc = json.loads(both.read_text())
    assert set(doc) == {"ranking", "classification"}
    assert doc["classification"]["threshold"] is not None


def test_eval_classification_requires_dev(small_run, tmp_path, capsys):
    _, _, dev_path, run_dir, _ = small_run
    code = main(["eval", "--ckpt", str(run_dir), "--data", str(dev_path),
                 "--formulation", "classification", "--out", str(tmp_path / "r.json")])
    assert code == 2
    assert "--dev is required" in capsys.readouterr().err


def test_ensemble_from_run_dir(small_run, tmp_path):
    _, _, _, run_dir, _ = small_run
    out = tmp_path / "final.jsonl"
    assert main(["ensemble", "--pred-dir", str(run_dir), "--window", "2",
                 "--out", str(out)]) == 0
    lines = [json.loads(l) for l in out.read_text().splitlines()]
    assert len(lines) == 6
    assert set(lines[0]) == {"id", "prediction", "votes", "mean_scores"}


def test_swa_checkpoint_loads(small_run, tmp_path):
    _, _, dev_path, run_dir, _ = small_run
    out = tmp_path / "swa_scores.jsonl"
    assert main(["score", "--ckpt", str(run_dir), "--data", str(dev_path),
                 "--out", str(out), "--which", "swa"]) == 0
    assert len(out.read_text().splitlines()) == 12


def test_missing_input_is_exit_1(tmp_path, capsys):
    code = main(["train", "--train", str(tmp_path / "no.jsonl"),
                 "--dev", str(tmp_path / "no.jsonl"), "--out", str(tmp_path / "run")])
    assert code == 1
    assert "data error" in capsys.readouterr().err


def test_bad_config_is_exit_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"training": {"bogus_knob": 1}}))
    code = main(["gradcheck", "--config", str(cfg)])
    assert code == 2
    assert "configuration error" in capsys.readouterr().err


def test_gradcheck_exits_0_on_default_model():
    assert main(["gradcheck"]) == 0
