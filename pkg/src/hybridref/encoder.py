"""Small BERT-style bidirectional encoder shared by both scoring heads.

Post-layer-norm residual arrangement, learned position embeddings, GELU
feed-forward, and a plain linear masked-token output projection. Sequences
are encoded one at a time; there are no cross-example operations, so an
example encodes identically alone or inside a batch.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from math import sqrt

import numpy as np

from hybridref.errors import ConfigError, ShapeError, VocabError
from hybridref.tensor import (
    Tensor,
    gather_rows,
    gelu,
    init_truncated_normal,
    layer_norm,
    matmul,
    reshape,
    softmax_last_dim,
    transpose,
)

LAYER_NORM_EPS = 1e-12
ATTENTION_MASK_BIAS = -1e30  # exp() underflows to exactly 0 after max-subtraction
ENCODER_INIT_STDDEV = 0.02

_CONFIG_FIELDS = (
    "vocab_size",
    "d_model",
    "num_layers",
    "num_heads",
    "ffn_multiplier",
    "max_positions",
    "num_segments",
    "tie_mlm_embeddings",
)


@dataclass(frozen=True)
class EncoderConfig:
    """Encoder hyperparameters; defaults are the desk-scale configuration.

    `vocab_size` may be None in a config file; the trainer resolves it from
    the corpus vocabulary before the model is built.
    """

    vocab_size: int | None = None
    d_model: int = 32
    num_layers: int = 2
    num_heads: int = 2
    ffn_multiplier: int = 4
    max_positions: int = 64
    num_segments: int = 2
    tie_mlm_embeddings: bool = False

    def __post_init__(self):
        for name in ("vocab_size", "d_model", "num_layers", "num_heads", "ffn_multiplier", "max_positions"):
            value = getattr(self, name)
            if name == "vocab_size" and value is None:
                continue
            if value <= 0:
                raise ConfigError(f"EncoderConfig.{name} must be positive")
        if self.d_model % self.num_heads != 0:
            raise ConfigError(
                f"d_model ({self.d_model}) must be divisible by num_heads ({self.num_heads})"
            )
        if self.max_positions > 512:
            raise ConfigError(f"max_positions must be <= 512, got {self.max_positions}")
        if self.num_segments != 2:
            raise ConfigError(f"num_segments must be 2, got {self.num_segments}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderConfig":
        unknown = set(d) - set(_CONFIG_FIELDS)
        if unknown:
            raise ConfigError(f"unknown EncoderConfig fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "EncoderConfig":
        return cls.from_dict(json.loads(text))


class EncoderParams:
    """All encoder tensors, addressable by stable dotted names."""

    def __init__(self, config: EncoderConfig, tensors: dict[str, Tensor]):
        self.config = config
        self._tensors = tensors

    @classmethod
    def init(cls, config: EncoderConfig, rng: np.random.Generator) -> "EncoderParams":
        if config.vocab_size is None:
            raise ConfigError("EncoderConfig.vocab_size must be resolved before building parameters")
        d = config.d_model
        f = config.ffn_multiplier * d
        std = ENCODER_INIT_STDDEV

        def normal(shape):
            return init_truncated_normal(shape, stddev=std, rng=rng)

        def zeros(shape):
            return Tensor(np.zeros(shape), requires_grad=True)

        def ones(shape):
            return Tensor(np.ones(shape), requires_grad=True)

        t: dict[str, Tensor] = {
            "token_embeddings": normal((config.vocab_size, d)),
            "position_embeddings": normal((config.max_positions, d)),
            "segment_embeddings": normal((config.num_segments, d)),
            "embedding_norm.gain": ones((d,)),
            "embedding_norm.bias": zeros((d,)),
        }
        for i in range(config.num_layers):
            p = f"layer{i}."
            t[p + "attn.wq"] = normal((d, d))
            t[p + "attn.bq"] = zeros((d,))
            t[p + "attn.wk"] = normal((d, d))
            t[p + "attn.bk"] = zeros((d,))
            t[p + "attn.wv"] = normal((d, d))
            t[p + "attn.bv"] = zeros((d,))
            t[p + "attn.wo"] = normal((d, d))
            t[p + "attn.bo"] = zeros((d,))
            t[p + "attn_norm.gain"] = ones((d,))
            t[p + "attn_norm.bias"] = zeros((d,))
            t[p + "ffn.w1"] = normal((d, f))
            t[p + "ffn.b1"] = zeros((f,))
            t[p + "ffn.w2"] = normal((f, d))
            t[p + "ffn.b2"] = zeros((d,))
            t[p + "ffn_norm.gain"] = ones((d,))
            t[p + "ffn_norm.bias"] = zeros((d,))
        if not config.tie_mlm_embeddings:
            t["mlm_head.weight"] = normal((d, config.vocab_size))
        t["mlm_head.bias"] = zeros((config.vocab_size,))
        for name, tensor in t.items():
            tensor.name = name
        return cls(config, t)

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def parameters(self) -> dict[str, Tensor]:
        return dict(self._tensors)


def _self_attention(x: Tensor, params: EncoderParams, layer: int, mask_bias: Tensor) -> Tensor:
    cfg = params.config
    n = x.shape[0]
    heads, dh = cfg.num_heads, cfg.d_model // cfg.num_heads
    p = f"layer{layer}.attn."
    q = matmul(x, params[p + "wq"]) + params[p + "bq"]
    k = matmul(x, params[p + "wk"]) + params[p + "bk"]
    v = matmul(x, params[p + "wv"]) + params[p + "bv"]
    q3 = transpose(reshape(q, (n, heads, dh)), (1, 0, 2))      # (H, n, dh)
    k3t = transpose(reshape(k, (n, heads, dh)), (1, 2, 0))     # (H, dh, n)
    v3 = transpose(reshape(v, (n, heads, dh)), (1, 0, 2))      # (H, n, dh)
    scores = matmul(q3, k3t) * (1.0 / sqrt(dh)) + mask_bias    # (H, n, n)
    attn = softmax_last_dim(scores)
    ctx = reshape(transpose(matmul(attn, v3), (1, 0, 2)), (n, cfg.d_model))
    return matmul(ctx, params[p + "wo"]) + params[p + "bo"]


def encode(
    params: EncoderParams,
    token_ids,
    segment_ids,
    attention_mask,
) -> Tensor:
    """Contextual embedding of one packed sequence; returns a (len, d) tensor.

    `attention_mask` marks real positions with True; False (padding) key
    positions receive exactly zero attention weight from every position.
    """
    cfg = params.config
    ids = np.asarray(token_ids, dtype=np.intp)
    segs = np.asarray(segment_ids, dtype=np.intp)
    mask = np.asarray(attention_mask, dtype=bool)
    n = ids.shape[0]
    if segs.shape[0] != n or mask.shape[0] != n:
        raise ShapeError(
            f"encode: token/segment/mask lengths differ: {n}, {segs.shape[0]}, {mask.shape[0]}"
        )
    if n > cfg.max_positions:
        raise ShapeError(
            f"encode: sequence of length {n} exceeds max_positions={cfg.max_positions}; "
            "pre-truncate before packing"
        )
    if n == 0:
        raise ShapeError("encode: empty sequence")
    if ids.min() < 0 or ids.max() >= cfg.vocab_size:
        raise VocabError(f"encode: token id out of range for vocab of {cfg.vocab_size}")
    if segs.min() < 0 or segs.max() >= cfg.num_segments:
        raise VocabError("encode: segment ids must be 0 or 1")

    x = (
        gather_rows(params["token_embeddings"], ids)
        + gather_rows(params["position_embeddings"], np.arange(n))
        + gather_rows(params["segment_embeddings"], segs)
    )
    x = layer_norm(x, params["embedding_norm.gain"], params["embedding_norm.bias"], LAYER_NORM_EPS)

    bias_row = np.where(mask, 0.0, ATTENTION_MASK_BIAS)
    mask_bias = Tensor(bias_row.reshape(1, 1, n))

    for i in range(cfg.num_layers):
        attn_out = _self_attention(x, params, i, mask_bias)
        x = layer_norm(x + attn_out, params[f"layer{i}.attn_norm.gain"],
                       params[f"layer{i}.attn_norm.bias"], LAYER_NORM_EPS)
        h = gelu(matmul(x, params[f"layer{i}.ffn.w1"]) + params[f"layer{i}.ffn.b1"])
        ffn_out = matmul(h, params[f"layer{i}.ffn.w2"]) + params[f"layer{i}.ffn.b2"]
        x = layer_norm(x + ffn_out, params[f"layer{i}.ffn_norm.gain"],
                       params[f"layer{i}.ffn_norm.bias"], LAYER_NORM_EPS)
    return x


def mlm_logits(params: EncoderParams, hidden: Tensor, positions) -> Tensor:
    """Vocabulary logits at the selected positions: (len(positions), vocab)."""
    pos = np.asarray(positions, dtype=np.intp)
    if pos.size and (pos.min() < 0 or pos.max() >= hidden.shape[0]):
        raise ShapeError(
            f"mlm_logits: position out of range for sequence of length {hidden.shape[0]}"
        )
    rows = gather_rows(hidden, pos)
    if params.config.tie_mlm_embeddings:
        weight = transpose(params["token_embeddings"])
    else:
        weight = params["mlm_head.weight"]
    return matmul(rows, weight) + params["mlm_head.bias"]
