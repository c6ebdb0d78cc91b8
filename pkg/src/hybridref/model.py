"""Scoring heads over the shared encoder and the packed-example builders.

A candidate C for the pronoun in sentence S is scored two ways:

  * masked-LM head: S with the pronoun replaced by N [MASK] tokens; the score
    is the geometric mean of the candidate tokens' softmax probabilities at
    the masks, each conditioned on the fully masked sentence.
  * similarity head: [CLS] S [SEP] C [SEP]; candidate token embeddings are
    attention-pooled against the [CLS] vector (scaled bilinear scores), and a
    second bilinear form against the pronoun's first-token embedding feeds a
    logistic output.

The final candidate score is the mean of the two head probabilities, or the
surviving head's probability alone when one head is ablated.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import sqrt
from typing import Optional

import numpy as np

from hybridref.data.instances import Instance
from hybridref.data.tokenizer import CLS_ID, MASK_ID, SEP_ID, Vocab, tokenize
from hybridref.encoder import EncoderConfig, EncoderParams, encode, mlm_logits
from hybridref.errors import DataError, DomainError
from hybridref.tensor import (
    Tensor,
    gather_rows,
    init_truncated_normal,
    log_softmax_last_dim,
    matmul,
    reduce_mean,
    reshape,
    sigmoid,
    softmax_last_dim,
    take_per_row,
    transpose,
)
from hybridref.tensor import exp as texp

HEAD_INIT_STDDEV = 0.01


class ScoreMode(str, Enum):
    FULL = "full"
    MLM_ONLY = "mlm_only"   # similarity head ablated
    SSM_ONLY = "ssm_only"   # masked-LM head ablated


@dataclass
class HeadParams:
    w1: Tensor  # candidate-pooling bilinear map, (d, d)
    w2: Tensor  # pronoun-candidate bilinear map, (d, d)

    @classmethod
    def init(cls, d_model: int, rng: np.random.Generator) -> "HeadParams":
        w1 = init_truncated_normal((d_model, d_model), stddev=HEAD_INIT_STDDEV, rng=rng)
        w2 = init_truncated_normal((d_model, d_model), stddev=HEAD_INIT_STDDEV, rng=rng)
        w1.name, w2.name = "ssm_head.w1", "ssm_head.w2"
        return cls(w1, w2)


@dataclass
class PackedMlmExample:
    token_ids: np.ndarray
    segment_ids: np.ndarray
    mask_positions: list[int]
    target_token_ids: list[int]

    def __post_init__(self):
        n = len(self.mask_positions)
        if n < 1 or len(self.target_token_ids) != n:
            raise DataError("packed masked-LM example needs N >= 1 aligned mask/target tokens")
        for k, pos in enumerate(self.mask_positions):
            if k and pos != self.mask_positions[k - 1] + 1:
                raise DataError("mask positions must be consecutive")
            if self.token_ids[pos] != MASK_ID:
                raise DataError(f"position {pos} does not hold the [MASK] token")


@dataclass
class PackedSsmExample:
    token_ids: np.ndarray
    segment_ids: np.ndarray
    pronoun_first_position: int
    candidate_positions: list[int]
    cls_position: int = 0

    def __post_init__(self):
        if not self.candidate_positions:
            raise DataError("packed similarity example needs a nonempty candidate span")
        for k, pos in enumerate(self.candidate_positions):
            if k and pos != self.candidate_positions[k - 1] + 1:
                raise DataError("candidate positions must be consecutive")
            if self.segment_ids[pos] != 1:
                raise DataError("candidate tokens must sit in segment 1")
        if self.segment_ids[self.pronoun_first_position] != 0:
            raise DataError("pronoun must sit in the sentence segment")


@dataclass
class ScorePair:
    p_mlm: Optional[float]
    p_ssm: Optional[float]
    combined: float

    def __post_init__(self):
        if not (0.0 < self.combined <= 1.0):
            raise DomainError(f"combined score must lie in (0, 1], got {self.combined}")


class HybridModel:
    """Encoder plus both head parameter sets; one flat named-parameter view."""

    def __init__(self, config: EncoderConfig, encoder_params: EncoderParams, heads: HeadParams):
        self.config = config
        self.encoder = encoder_params
        self.heads = heads

    @classmethod
    def init(cls, config: EncoderConfig, seed: int) -> "HybridModel":
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        enc = EncoderParams.init(config, rng)
        heads = HeadParams.init(config.d_model, rng)
        return cls(config, enc, heads)

    def parameters(self) -> dict[str, Tensor]:
        params = self.encoder.parameters()
        params["ssm_head.w1"] = self.heads.w1
        params["ssm_head.w2"] = self.heads.w2
        return params

    def zero_grad(self) -> None:
        for p in self.parameters().values():
            p.zero_grad()

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.parameters().items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        params = self.parameters()
        missing = set(params) - set(arrays)
        extra = set(arrays) - set(params)
        if missing or extra:
            raise DataError(f"parameter name mismatch: missing {sorted(missing)}, extra {sorted(extra)}")
        for name, p in params.items():
            arr = np.asarray(arrays[name], dtype=np.float64)
            if arr.shape != p.data.shape:
                raise DataError(f"parameter {name}: shape {arr.shape} != {p.data.shape}")
            p.data = arr.copy()


# ---------------------------------------------------------------------------
# packing
# ---------------------------------------------------------------------------

def _pronoun_token_range(tokens, instance: Instance) -> tuple[int, int]:
    """Token index range (half-open) overlapping the pronoun's char span."""
    p = instance.pronoun
    hit = [i for i, t in enumerate(tokens) if t.start < p.end and t.end > p.start]
    if not hit:
        raise DataError(f"instance {instance.id}: pronoun span matches no tokens")
    return hit[0], hit[-1] + 1


def _trim_window(pre: list, post: list, budget: int, instance_id: str):
    """Drop tail-of-post then head-of-pre tokens until pre+post fits the budget."""
    if budget < 0:
        raise DataError(f"instance {instance_id}: sequence cannot fit the position budget")
    overflow = len(pre) + len(post) - budget
    if overflow <= 0:
        return pre, post
    drop_post = min(overflow, len(post))
    post = post[:len(post) - drop_post]
    pre = pre[overflow - drop_post:] if overflow > drop_post else pre
    return pre, post


def pack_mlm(vocab: Vocab, instance: Instance, candidate_text: str,
             max_positions: int) -> PackedMlmExample:
    """[CLS] S-with-pronoun-masked [SEP]; one mask per candidate token."""
    targets = [t.id for t in tokenize(vocab, candidate_text)]
    if not targets:
        raise DataError(f"instance {instance.id}: candidate {candidate_text!r} tokenizes to nothing")
    tokens = tokenize(vocab, instance.sentence)
    p_start, p_end = _pronoun_token_range(tokens, instance)
    pre = [t.id for t in tokens[:p_start]]
    post = [t.id for t in tokens[p_end:]]
    n = len(targets)
    pre, post = _trim_window(pre, post, max_positions - n - 2, instance.id)
    ids = [CLS_ID] + pre + [MASK_ID] * n + post + [SEP_ID]
    first_mask = 1 + len(pre)
    return PackedMlmExample(
        token_ids=np.asarray(ids, dtype=np.intp),
        segment_ids=np.zeros(len(ids), dtype=np.intp),
        mask_positions=list(range(first_mask, first_mask + n)),
        target_token_ids=targets,
    )


def pack_ssm(vocab: Vocab, instance: Instance, candidate_text: str,
             max_positions: int) -> PackedSsmExample:
    """[CLS] S [SEP] C [SEP] with segment ids 0/1 and marked spans."""
    cand_ids = [t.id for t in tokenize(vocab, candidate_text)]
    if not cand_ids:
        raise DataError(f"instance {instance.id}: candidate {candidate_text!r} tokenizes to nothing")
    tokens = tokenize(vocab, instance.sentence)
    p_start, p_end = _pronoun_token_range(tokens, instance)
    pre = [t.id for t in tokens[:p_start]]
    pron = [t.id for t in tokens[p_start:p_end]]
    post = [t.id for t in tokens[p_end:]]
    budget = max_positions - len(cand_ids) - len(pron) - 3  # [CLS], 2x [SEP]
    pre, post = _trim_window(pre, post, budget, instance.id)
    s_ids = pre + pron + post
    ids = [CLS_ID] + s_ids + [SEP_ID] + cand_ids + [SEP_ID]
    seg_boundary = 1 + len(s_ids) + 1
    segs = [0] * seg_boundary + [1] * (len(cand_ids) + 1)
    cand_first = seg_boundary
    return PackedSsmExample(
        token_ids=np.asarray(ids, dtype=np.intp),
        segment_ids=np.asarray(segs, dtype=np.intp),
        pronoun_first_position=1 + len(pre),
        candidate_positions=list(range(cand_first, cand_first + len(cand_ids))),
    )


# ---------------------------------------------------------------------------
# head scoring (differentiable)
# ---------------------------------------------------------------------------

def mlm_probability_from_logits(logits: Tensor, target_ids) -> Tensor:
    """exp(mean_k log softmax(logits_k)[target_k]): the geometric mean of the
    per-mask target probabilities, each conditioned on the fully masked input."""
    logp = log_softmax_last_dim(logits)
    picked = take_per_row(logp, target_ids)
    return texp(reduce_mean(picked))


def score_mlm(encoder_params: EncoderParams, example: PackedMlmExample) -> Tensor:
    """Geometric mean of the candidate tokens' probabilities at the masks."""
    mask = np.ones(len(example.token_ids), dtype=bool)
    hidden = encode(encoder_params, example.token_ids, example.segment_ids, mask)
    logits = mlm_logits(encoder_params, hidden, example.mask_positions)
    return mlm_probability_from_logits(logits, example.target_token_ids)


def pool_candidate(hidden: Tensor, w1: Tensor, cls_position: int,
                   candidate_positions) -> tuple[Tensor, Tensor]:
    """Attention-pool candidate token embeddings against the [CLS] vector.

    Weights are softmax(s^T W1 h_k / sqrt(d)); returns (pooled (d,), weights (N,)).
    """
    d = hidden.shape[1]
    s = gather_rows(hidden, [cls_position])                  # (1, d)
    h = gather_rows(hidden, np.asarray(candidate_positions))  # (N, d)
    scores = matmul(matmul(s, w1), transpose(h)) * (1.0 / sqrt(d))  # (1, N)
    alphas = softmax_last_dim(scores)
    pooled = matmul(alphas, h)                               # (1, d)
    return reshape(pooled, (d,)), reshape(alphas, (len(candidate_positions),))


def match_probability(pronoun_vec: Tensor, w2: Tensor, pooled: Tensor) -> tuple[Tensor, Tensor]:
    """Bilinear pronoun/candidate match: (sigmoid(p^T W2 c), p^T W2 c)."""
    d = pooled.shape[0]
    sim = reshape(matmul(matmul(reshape(pronoun_vec, (1, d)), w2), reshape(pooled, (d, 1))), ())
    return sigmoid(sim), sim


def ssm_forward(encoder_params: EncoderParams, heads: HeadParams,
                example: PackedSsmExample) -> tuple[Tensor, Tensor]:
    """(probability, bilinear logit) of the pronoun/candidate match."""
    mask = np.ones(len(example.token_ids), dtype=bool)
    hidden = encode(encoder_params, example.token_ids, example.segment_ids, mask)
    pooled, _ = pool_candidate(hidden, heads.w1, example.cls_position, example.candidate_positions)
    pron = gather_rows(hidden, [example.pronoun_first_position])        # (1, d)
    return match_probability(pron, heads.w2, pooled)


def score_ssm(encoder_params: EncoderParams, heads: HeadParams,
              example: PackedSsmExample) -> Tensor:
    """Logistic bilinear match between the pronoun vector and the pooled candidate."""
    return ssm_forward(encoder_params, heads, example)[0]


def score_combined(p_mlm, p_ssm) -> Tensor:
    """Mean of the two head probabilities; inputs must lie in (0, 1]."""
    for name, value in (("p_mlm", p_mlm), ("p_ssm", p_ssm)):
        v = value.item() if isinstance(value, Tensor) else float(value)
        if not (0.0 < v <= 1.0):
            raise DomainError(f"score_combined: {name} must lie in (0, 1], got {v}")
    if not isinstance(p_mlm, Tensor):
        p_mlm = Tensor(p_mlm)
    if not isinstance(p_ssm, Tensor):
        p_ssm = Tensor(p_ssm)
    return (p_mlm + p_ssm) * 0.5


@dataclass
class CandidateScores:
    """Differentiable head outputs for one (instance, candidate)."""
    p_mlm: Optional[Tensor]
    p_ssm: Optional[Tensor]
    combined: Tensor
    ssm_logit: Optional[Tensor] = None  # pre-sigmoid value, for stable cross-entropy


def score_candidate(model: HybridModel, vocab: Vocab, instance: Instance,
                    candidate_index: int, mode: ScoreMode = ScoreMode.FULL) -> CandidateScores:
    """Pack and score one candidate; ablation modes skip the disabled head."""
    candidate = instance.candidates[candidate_index]
    p_mlm = p_ssm = ssm_logit = None
    if mode in (ScoreMode.FULL, ScoreMode.MLM_ONLY):
        ex = pack_mlm(vocab, instance, candidate.text, model.config.max_positions)
        p_mlm = score_mlm(model.encoder, ex)
    if mode in (ScoreMode.FULL, ScoreMode.SSM_ONLY):
        ex = pack_ssm(vocab, instance, candidate.text, model.config.max_positions)
        p_ssm, ssm_logit = ssm_forward(model.encoder, model.heads, ex)
    if mode is ScoreMode.FULL:
        combined = score_combined(p_mlm, p_ssm)
    elif mode is ScoreMode.MLM_ONLY:
        combined = p_mlm
    else:
        combined = p_ssm
    return CandidateScores(p_mlm, p_ssm, combined, ssm_logit)


def score_instance(model: HybridModel, vocab: Vocab, instance: Instance,
                   candidate_index: int, mode: ScoreMode = ScoreMode.FULL) -> ScorePair:
    """Forward-only scoring of one candidate, as plain floats."""
    scores = score_candidate(model, vocab, instance, candidate_index, mode)
    return ScorePair(
        p_mlm=scores.p_mlm.item() if scores.p_mlm is not None else None,
        p_ssm=scores.p_ssm.item() if scores.p_ssm is not None else None,
        combined=scores.combined.item(),
    )


def score_all_candidates(model: HybridModel, vocab: Vocab, instance: Instance,
                         mode: ScoreMode = ScoreMode.FULL) -> list[ScorePair]:
    return [score_instance(model, vocab, instance, i, mode) for i in range(len(instance.candidates))]
