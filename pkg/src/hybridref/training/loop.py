"""Epoch loop: seeded shuffling, pairwise batching, Adam with the linear
warmup/decay schedule, per-epoch dev predictions, SWA accumulation, and
selection of the best epoch inside the configured window."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from hybridref.data.instances import Instance
from hybridref.data.tokenizer import Vocab
from hybridref.encoder import EncoderConfig
from hybridref.errors import ConfigError, TrainingError
from hybridref.evaluation import eval_ranking, score_matrix
from hybridref.losses import LossConfig, loss_total
from hybridref.model import HybridModel, ScoreMode, score_candidate
from hybridref.tensor import Tape
from hybridref.training.optim import Adam, lr_at
from hybridref.training.swa import SwaAccumulator

ABLATIONS = ("full", "no_ssm", "no_mlm", "no_rank")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3   # desk-scale default; 1e-5 suits a large pretrained encoder
    batch_size: int = 16
    warmup_steps: int = 100
    max_epochs: int = 10
    select_epochs: tuple[int, int] = (8, 10)
    seed: int = 0
    swa_enabled: bool = True
    swa_start: Optional[int] = None  # defaults to the selection window start
    loss: LossConfig = field(default_factory=LossConfig)
    ablation: str = "full"
    stop_when_train_perfect: bool = False
    track_train_accuracy: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.warmup_steps < 0:
            raise ConfigError("warmup_steps must be >= 0")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        lo, hi = self.select_epochs
        if not 1 <= lo <= hi:
            raise ConfigError(f"select_epochs window ({lo}, {hi}) is invalid")
        if self.swa_start is not None and self.swa_start < 1:
            raise ConfigError("swa_start must be >= 1")
        if self.ablation not in ABLATIONS:
            raise ConfigError(f"ablation must be one of {ABLATIONS}, got {self.ablation!r}")

    def with_ablation(self, variant: str) -> "TrainConfig":
        return replace(self, ablation=variant)

    def effective_loss(self) -> LossConfig:
        return self.loss.ablated(self.ablation)


def score_mode_for(loss_cfg: LossConfig) -> ScoreMode:
    if loss_cfg.enable_mlm and loss_cfg.enable_ssm:
        return ScoreMode.FULL
    return ScoreMode.MLM_ONLY if loss_cfg.enable_mlm else ScoreMode.SSM_ONLY


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    dev_accuracy: float
    lr: float
    train_accuracy: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "dev_acc": self.dev_accuracy,
            "lr": self.lr,
            "train_acc": self.train_accuracy,
        }


@dataclass
class TrainState:
    step: int = 0
    epoch_metrics: list[EpochMetrics] = field(default_factory=list)
    epoch_predictions: list[dict[str, list[float]]] = field(default_factory=list)
    best_epoch: int = 0
    best_dev_accuracy: float = 0.0
    swa_count: int = 0


@dataclass
class TrainResult:
    model: HybridModel
    vocab: Vocab
    encoder_config: EncoderConfig
    state: TrainState
    selected_arrays: dict[str, np.ndarray]
    swa_arrays: Optional[dict[str, np.ndarray]]


class TrainingSink:
    """Hook points for writing logs/checkpoints; the default discards everything."""

    def on_step(self, step: int, lr: float, breakdown: dict) -> None:
        pass

    def on_epoch(self, epoch: int, metrics: EpochMetrics,
                 predictions: dict[str, list[float]],
                 model_arrays: dict[str, np.ndarray]) -> None:
        pass


def build_vocab(instance_sets: Sequence[Sequence[Instance]]) -> Vocab:
    texts: list[str] = []
    for instances in instance_sets:
        for inst in instances:
            texts.append(inst.sentence)
            for c in inst.candidates:
                texts.append(c.text)
    return Vocab.from_texts(texts)


def _pair_losses(model: HybridModel, vocab: Vocab, inst: Instance,
                 loss_cfg: LossConfig, mode: ScoreMode):
    pos_idx, neg_idx = inst.training_pair()
    pos = score_candidate(model, vocab, inst, pos_idx, mode)
    neg = score_candidate(model, vocab, inst, neg_idx, mode)
    return loss_total(
        loss_cfg,
        p_mlm_pos=pos.p_mlm,
        p_mlm_neg=neg.p_mlm,
        p_ssm_pos=pos.p_ssm,
        p_ssm_neg=neg.p_ssm,
        score_pos=pos.combined,
        score_neg=neg.combined,
        ssm_logit_pos=pos.ssm_logit,
        ssm_logit_neg=neg.ssm_logit,
    )


def train(
    train_instances: Sequence[Instance],
    dev_instances: Sequence[Instance],
    encoder_config: EncoderConfig,
    cfg: TrainConfig,
    vocab: Optional[Vocab] = None,
    sink: Optional[TrainingSink] = None,
) -> TrainResult:
    """Fit the model on (positive, negative) candidate pairs.

    Returns the parameters of the best dev-accuracy epoch inside the
    (clipped) selection window, along with the SWA running average collected
    from `swa_start` onwards.
    """
    if not train_instances:
        raise ConfigError("training corpus is empty")
    if not dev_instances:
        raise ConfigError("dev corpus is empty")
    loss_cfg = cfg.effective_loss()  # raises if everything is disabled
    mode = score_mode_for(loss_cfg)
    sink = sink or TrainingSink()

    for inst in train_instances:
        inst.training_pair()

    if vocab is None:
        vocab = build_vocab([train_instances, dev_instances])
    if encoder_config.vocab_size != len(vocab):
        encoder_config = replace(encoder_config, vocab_size=len(vocab))

    model = HybridModel.init(encoder_config, cfg.seed)
    adam = Adam(model.parameters())
    swa = SwaAccumulator()
    state = TrainState()

    n_pairs = len(train_instances)
    steps_per_epoch = math.ceil(n_pairs / cfg.batch_size)
    total_steps = cfg.max_epochs * steps_per_epoch
    if cfg.warmup_steps >= total_steps:
        raise ConfigError(
            f"warmup_steps ({cfg.warmup_steps}) must be < total steps "
            f"({total_steps} = {cfg.max_epochs} epochs x {steps_per_epoch} steps)"
        )
    select_lo, select_hi = cfg.select_epochs
    swa_start = cfg.swa_start if cfg.swa_start is not None else select_lo

    shuffle_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 1)))
    snapshots: dict[int, dict[str, np.ndarray]] = {}

    for epoch in range(1, cfg.max_epochs + 1):
        order = shuffle_rng.permutation(n_pairs)
        epoch_loss = 0.0
        for start in range(0, n_pairs, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            model.zero_grad()
            sums: dict[str, float] = {"l_mlm": 0.0, "l_ssm": 0.0, "l_rank": 0.0, "total": 0.0}
            with Tape() as tape:
                batch_loss = None
                for idx in batch:
                    breakdown = _pair_losses(model, vocab, train_instances[idx], loss_cfg, mode)
                    for key in sums:
                        sums[key] += getattr(breakdown, key)
                    term = breakdown.total_tensor
                    batch_loss = term if batch_loss is None else batch_loss + term
                batch_loss = batch_loss * (1.0 / len(batch))
                if not np.isfinite(batch_loss.item()):
                    raise TrainingError(f"non-finite loss at step {state.step}")
                tape.backward(batch_loss)
            lr = lr_at(state.step, cfg.learning_rate, cfg.warmup_steps, total_steps)
            adam.step(lr)
            state.step += 1
            epoch_loss += batch_loss.item() * len(batch)
            sink.on_step(state.step, lr, {k: v / len(batch) for k, v in sums.items()})

        dev_scores = score_matrix(model, vocab, dev_instances, mode)
        dev_accuracy = eval_ranking(model, vocab, dev_instances, mode, scores=dev_scores).accuracy
        train_accuracy = None
        if cfg.track_train_accuracy or cfg.stop_when_train_perfect:
            train_accuracy = eval_ranking(model, vocab, train_instances, mode).accuracy
        metrics = EpochMetrics(
            epoch=epoch,
            train_loss=epoch_loss / n_pairs,
            dev_accuracy=dev_accuracy,
            lr=lr_at(state.step, cfg.learning_rate, cfg.warmup_steps, total_steps),
            train_accuracy=train_accuracy,
        )
        state.epoch_metrics.append(metrics)
        state.epoch_predictions.append(dev_scores)
        snapshots[epoch] = model.state_arrays()
        if cfg.swa_enabled and epoch >= swa_start:
            swa.update(snapshots[epoch])
            state.swa_count = swa.count
        sink.on_epoch(epoch, metrics, dev_scores, snapshots[epoch])
        if cfg.stop_when_train_perfect and train_accuracy == 1.0:
            break

    completed = len(state.epoch_metrics)
    lo, hi = min(select_lo, completed), min(select_hi, completed)
    if (select_lo, select_hi) != (lo, hi):
        warnings.warn(
            f"selection window ({select_lo}, {select_hi}) clipped to ({lo}, {hi}): "
            f"only {completed} epochs ran",
            RuntimeWarning,
        )
    best_epoch, best_acc = lo, state.epoch_metrics[lo - 1].dev_accuracy
    for epoch in range(lo + 1, hi + 1):
        acc = state.epoch_metrics[epoch - 1].dev_accuracy
        if acc > best_acc:
            best_epoch, best_acc = epoch, acc
    state.best_epoch, state.best_dev_accuracy = best_epoch, best_acc

    selected = snapshots[best_epoch]
    model.load_arrays(selected)
    swa_arrays = swa.value() if (cfg.swa_enabled and swa.count > 0) else None
    return TrainResult(
        model=model,
        vocab=vocab,
        encoder_config=encoder_config,
        state=state,
        selected_arrays=selected,
        swa_arrays=swa_arrays,
    )
