"""Training losses: masked-LM negative log-likelihood, similarity
cross-entropy, and the smoothed pairwise rank loss over combined scores.

The rank term is log(1 + exp(-gamma * (delta + beta))) with
delta = score(positive) - score(negative); `margin_sign="minus"` flips the
margin to (delta - beta) for the conventional subtracted-margin variant.
Every function accepts floats or scalar tensors and returns a scalar tensor,
so the same code path serves both the optimizer and the float-level tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from hybridref.errors import ConfigError, DataError, DomainError
from hybridref.tensor import Tensor, as_tensor, log, neg, softplus

MARGIN_SIGNS = ("plus", "minus")


@dataclass(frozen=True)
class LossConfig:
    gamma: float = 10.0
    beta: float = 0.6
    beta_mlm: float = 0.6
    beta_ssm: float = 0.5
    margin_sign: str = "plus"
    enable_mlm: bool = True
    enable_ssm: bool = True
    enable_rank: bool = True
    per_head_rank: bool = False     # adds rank terms on the raw head scores
    mlm_negative_term: bool = False  # symmetric -log(1 - p_mlm(negative)) variant

    def __post_init__(self):
        if not 1.0 <= self.gamma <= 10.0:
            raise ConfigError(f"gamma must lie in [1, 10], got {self.gamma}")
        for name in ("beta", "beta_mlm", "beta_ssm"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.margin_sign not in MARGIN_SIGNS:
            raise ConfigError(f"margin_sign must be one of {MARGIN_SIGNS}, got {self.margin_sign!r}")
        if not (self.enable_mlm or self.enable_ssm):
            raise ConfigError("at least one head must stay enabled")
        if not (self.enable_mlm or self.enable_ssm or self.enable_rank):
            raise ConfigError("all loss components are disabled")

    def ablated(self, variant: str) -> "LossConfig":
        """Named ablations: 'full', 'no_ssm', 'no_mlm', 'no_rank'."""
        if variant == "full":
            return self
        if variant == "no_ssm":
            return replace(self, enable_ssm=False)
        if variant == "no_mlm":
            return replace(self, enable_mlm=False)
        if variant == "no_rank":
            return replace(self, enable_rank=False)
        raise ConfigError(f"unknown ablation variant {variant!r}")


@dataclass
class PairLossBreakdown:
    l_mlm: float
    l_ssm: float
    l_rank: float
    total: float
    delta: float
    total_tensor: Optional[Tensor] = field(default=None, repr=False)


def _scalar(value, name: str) -> Tensor:
    t = as_tensor(value)
    if t.data.shape != ():
        raise DomainError(f"{name} must be a scalar, got shape {t.data.shape}")
    return t


def loss_mlm(p_mlm_positive) -> Tensor:
    """Negative log-likelihood of the positive candidate under the masked LM."""
    t = _scalar(p_mlm_positive, "p_mlm_positive")
    v = t.item()
    if v <= 0.0 or v > 1.0:
        raise DomainError(f"p_mlm_positive must lie in (0, 1], got {v}")
    return neg(log(t))


def loss_ssm(p_ssm_positive, p_ssm_negative) -> Tensor:
    """Binary cross-entropy: -log(p+) - log(1 - p-)."""
    tp = _scalar(p_ssm_positive, "p_ssm_positive")
    tn = _scalar(p_ssm_negative, "p_ssm_negative")
    for name, t in (("p_ssm_positive", tp), ("p_ssm_negative", tn)):
        v = t.item()
        if not 0.0 < v < 1.0:
            raise DomainError(f"{name} must lie strictly inside (0, 1), got {v}")
    return neg(log(tp)) + neg(log(as_tensor(1.0) - tn))


def loss_ssm_from_logits(logit_positive, logit_negative) -> Tensor:
    """Same cross-entropy in terms of the pre-sigmoid logits.

    -log sigmoid(x+) - log(1 - sigmoid(x-)) == softplus(-x+) + softplus(x-),
    which stays finite even where sigmoid saturates to exactly 0 or 1 in
    double precision.
    """
    lp = _scalar(logit_positive, "logit_positive")
    ln = _scalar(logit_negative, "logit_negative")
    return softplus(neg(lp)) + softplus(ln)


def _rank_term(delta: Tensor, gamma: float, beta: float, margin_sign: str) -> Tensor:
    margin = delta + beta if margin_sign == "plus" else delta - beta
    return softplus(margin * (-gamma))


def loss_rank(score_positive, score_negative, cfg: LossConfig) -> tuple[Tensor, float]:
    """Smoothed rank loss on the score gap; returns (loss, delta)."""
    sp = _scalar(score_positive, "score_positive")
    sn = _scalar(score_negative, "score_negative")
    delta = sp - sn
    return _rank_term(delta, cfg.gamma, cfg.beta, cfg.margin_sign), delta.item()


def loss_total(
    cfg: LossConfig,
    p_mlm_pos=None,
    p_mlm_neg=None,
    p_ssm_pos=None,
    p_ssm_neg=None,
    score_pos=None,
    score_neg=None,
    ssm_logit_pos=None,
    ssm_logit_neg=None,
) -> PairLossBreakdown:
    """Sum of the enabled components for one (positive, negative) pair.

    Callers pass the head probabilities the enabled components need plus the
    combined scores for the rank term; a breakdown with the scalar values and
    the differentiable total comes back. When the similarity logits are
    supplied, the cross-entropy uses the saturation-proof softplus form.
    """
    zero = Tensor(0.0)
    l_mlm = l_ssm = l_rank = zero
    if cfg.enable_mlm:
        if p_mlm_pos is None:
            raise DataError("loss_total: masked-LM component enabled but p_mlm_pos missing")
        l_mlm = loss_mlm(p_mlm_pos)
        if cfg.mlm_negative_term:
            if p_mlm_neg is None:
                raise DataError("loss_total: mlm_negative_term set but p_mlm_neg missing")
            tn = _scalar(p_mlm_neg, "p_mlm_neg")
            capped = min(tn.item(), 1.0 - 1e-12)
            if capped < tn.item():
                tn = as_tensor(capped)
            l_mlm = l_mlm + neg(log(as_tensor(1.0) - tn))
    if cfg.enable_ssm:
        if ssm_logit_pos is not None and ssm_logit_neg is not None:
            l_ssm = loss_ssm_from_logits(ssm_logit_pos, ssm_logit_neg)
        else:
            if p_ssm_pos is None or p_ssm_neg is None:
                raise DataError("loss_total: similarity component enabled but head scores missing")
            l_ssm = loss_ssm(p_ssm_pos, p_ssm_neg)
    delta_value = 0.0
    if cfg.enable_rank:
        if score_pos is None or score_neg is None:
            raise DataError("loss_total: rank component enabled but combined scores missing")
        l_rank, delta_value = loss_rank(score_pos, score_neg, cfg)
        if cfg.per_head_rank:
            if cfg.enable_mlm:
                if p_mlm_neg is None:
                    raise DataError("loss_total: per_head_rank needs p_mlm_neg")
                d = _scalar(p_mlm_pos, "p_mlm_pos") - _scalar(p_mlm_neg, "p_mlm_neg")
                l_rank = l_rank + _rank_term(d, cfg.gamma, cfg.beta_mlm, cfg.margin_sign)
            if cfg.enable_ssm:
                d = _scalar(p_ssm_pos, "p_ssm_pos") - _scalar(p_ssm_neg, "p_ssm_neg")
                l_rank = l_rank + _rank_term(d, cfg.gamma, cfg.beta_ssm, cfg.margin_sign)
    total = l_mlm + l_ssm + l_rank
    return PairLossBreakdown(
        l_mlm=l_mlm.item(),
        l_ssm=l_ssm.item(),
        l_rank=l_rank.item(),
        total=total.item(),
        delta=delta_value,
        total_tensor=total,
    )
