"""Training run directory layout and loading helpers.

A run directory written by `hybridref train --out DIR` contains:

    run_config.json           resolved run configuration
    encoder_config.json       resolved encoder configuration (concrete vocab_size)
    vocab.json                tokenizer vocabulary
    checkpoints/epoch_NNNN.ckpt   per-epoch parameters (flat binary container)
    selected.ckpt             parameters of the selected epoch
    swa.ckpt                  SWA-averaged parameters (when collected)
    metrics.jsonl             per epoch: epoch, train_loss, dev_acc, lr, train_acc
    steps.jsonl               per step: step, lr, l_mlm, l_ssm, l_rank, total
    predictions/epoch_NNNN.jsonl  per instance: id, scores, prediction, gold
    summary.json              best epoch, dev accuracy, epochs run
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from hybridref.data.tokenizer import Vocab
from hybridref.encoder import EncoderConfig, EncoderParams
from hybridref.errors import DataError
from hybridref.evaluation import ranking_prediction
from hybridref.model import HeadParams, HybridModel
from hybridref.tensor import load_params, save_params
from hybridref.training.loop import EpochMetrics, TrainingSink


class RunDirectorySink(TrainingSink):
    """Streams per-step/per-epoch artifacts into a run directory."""

    def __init__(self, out_dir, dev_instances):
        self.root = Path(out_dir)
        (self.root / "checkpoints").mkdir(parents=True, exist_ok=True)
        (self.root / "predictions").mkdir(parents=True, exist_ok=True)
        self._gold = {inst.id: inst.positive_index() for inst in dev_instances}
        self._steps = open(self.root / "steps.jsonl", "w", encoding="utf-8")
        self._metrics = open(self.root / "metrics.jsonl", "w", encoding="utf-8")

    def on_step(self, step: int, lr: float, breakdown: dict) -> None:
        record = {"step": step, "lr": lr,
                  "l_mlm": breakdown["l_mlm"], "l_ssm": breakdown["l_ssm"],
                  "l_rank": breakdown["l_rank"], "total": breakdown["total"]}
        self._steps.write(json.dumps(record) + "\n")

    def on_epoch(self, epoch: int, metrics: EpochMetrics,
                 predictions: dict[str, list[float]],
                 model_arrays: dict[str, np.ndarray]) -> None:
        self._metrics.write(json.dumps(metrics.to_dict()) + "\n")
        self._metrics.flush()
        save_params(self.root / "checkpoints" / f"epoch_{epoch:04d}.ckpt", model_arrays)
        with open(self.root / "predictions" / f"epoch_{epoch:04d}.jsonl", "w", encoding="utf-8") as fh:
            for inst_id, scores in predictions.items():
                fh.write(json.dumps({
                    "id": inst_id,
                    "scores": scores,
                    "prediction": ranking_prediction(scores),
                    "gold": self._gold.get(inst_id),
                }) + "\n")

    def close(self) -> None:
        self._steps.close()
        self._metrics.close()


def write_run_artifacts(out_dir, result, run_config_dict: dict) -> None:
    root = Path(out_dir)
    (root / "run_config.json").write_text(json.dumps(run_config_dict, indent=2, sort_keys=True) + "\n")
    (root / "encoder_config.json").write_text(result.encoder_config.to_json() + "\n")
    (root / "vocab.json").write_text(result.vocab.to_json() + "\n")
    save_params(root / "selected.ckpt", result.selected_arrays)
    if result.swa_arrays is not None:
        save_params(root / "swa.ckpt", result.swa_arrays)
    summary = {
        "best_epoch": result.state.best_epoch,
        "best_dev_accuracy": result.state.best_dev_accuracy,
        "epochs_run": len(result.state.epoch_metrics),
        "steps_run": result.state.step,
        "swa_snapshots": result.state.swa_count,
    }
    (root / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def load_model_dir(run_dir, which: str = "selected") -> tuple[HybridModel, Vocab]:
    """Rebuild (model, vocab) from a run directory.

    `which` is "selected", "swa", or an epoch number for a per-epoch file.
    """
    root = Path(run_dir)
    try:
        config = EncoderConfig.from_json((root / "encoder_config.json").read_text())
        vocab = Vocab.from_json((root / "vocab.json").read_text())
    except OSError as exc:
        raise DataError(f"{run_dir}: not a run directory: {exc}") from exc
    if which == "selected":
        ckpt = root / "selected.ckpt"
    elif which == "swa":
        ckpt = root / "swa.ckpt"
    else:
        try:
            epoch = int(which)
        except ValueError:
            raise DataError(f"--which must be 'selected', 'swa', or an epoch number, got {which!r}")
        ckpt = root / "checkpoints" / f"epoch_{epoch:04d}.ckpt"
    if not ckpt.exists():
        raise DataError(f"checkpoint {ckpt} does not exist")
    arrays = load_params(ckpt)
    model = _empty_model(config)
    model.load_arrays(arrays)
    return model, vocab


def _empty_model(config: EncoderConfig) -> HybridModel:
    rng = np.random.default_rng(0)
    enc = EncoderParams.init(config, rng)
    heads = HeadParams.init(config.d_model, rng)
    return HybridModel(config, enc, heads)


def read_prediction_file(path) -> dict[str, list[float]]:
    """id -> score vector from one per-epoch prediction file."""
    out: dict[str, list[float]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out[rec["id"]] = [float(s) for s in rec["scores"]]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path}:{line_no}: malformed prediction record: {exc}") from exc
    return out
