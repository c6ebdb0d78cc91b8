"""Differentiable primitives over `Tensor`.

Each op computes its output through the active kernel backend, then (when a
tape is active) records a replay closure and a gradient rule. Gradient rules
return one array per input, or None for inputs that need no gradient.
"""

from __future__ import annotations

import numpy as np

from hybridref import kernels
from hybridref.errors import DomainError, ParameterError, ShapeError
from hybridref.tensor.core import Tensor, as_tensor, record_op


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _rows(a: np.ndarray) -> np.ndarray:
    """View/copy of `a` as a C-contiguous 2-d array (rows x last axis)."""
    return np.ascontiguousarray(a.reshape(-1, a.shape[-1]))


def _flat(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a).ravel()


# ---------------------------------------------------------------------------
# elementwise arithmetic (numpy broadcasting rules)
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data + b.data, requires_grad=a.requires_grad or b.requires_grad)
    record_op(
        "add", (a, b), out,
        lambda: a.data + b.data,
        lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)),
    )
    return out


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data - b.data, requires_grad=a.requires_grad or b.requires_grad)
    record_op(
        "sub", (a, b), out,
        lambda: a.data - b.data,
        lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)),
    )
    return out


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data * b.data, requires_grad=a.requires_grad or b.requires_grad)
    record_op(
        "mul", (a, b), out,
        lambda: a.data * b.data,
        lambda g: (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        ),
    )
    return out


def neg(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(-a.data, requires_grad=a.requires_grad)
    record_op("neg", (a,), out, lambda: -a.data, lambda g: (-g,))
    return out


# ---------------------------------------------------------------------------
# matrix product
# ---------------------------------------------------------------------------

def matmul(a, b) -> Tensor:
    """Matrix product for 2d @ 2d, batched 3d @ 3d, and 3d @ 2d operands."""
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    ok = (
        (ad.ndim == 2 and bd.ndim == 2 and ad.shape[1] == bd.shape[0])
        or (ad.ndim == 3 and bd.ndim == 3 and ad.shape[0] == bd.shape[0] and ad.shape[2] == bd.shape[1])
        or (ad.ndim == 3 and bd.ndim == 2 and ad.shape[2] == bd.shape[0])
    )
    if not ok:
        raise ShapeError(f"matmul: incompatible shapes {ad.shape} and {bd.shape}")
    out = Tensor(ad @ bd, requires_grad=a.requires_grad or b.requires_grad)

    def backward(g: np.ndarray):
        if ad.ndim == 2 and bd.ndim == 2:
            return g @ bd.T, ad.T @ g
        if bd.ndim == 2:  # 3d @ 2d
            k, n = bd.shape
            gb = ad.reshape(-1, k).T @ g.reshape(-1, n)
            return g @ bd.T, gb
        return g @ bd.transpose(0, 2, 1), ad.transpose(0, 2, 1) @ g

    record_op("matmul", (a, b), out, lambda: a.data @ b.data, backward)
    return out


# ---------------------------------------------------------------------------
# shape manipulation
# ---------------------------------------------------------------------------

def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    old = a.data.shape
    out = Tensor(a.data.reshape(shape), requires_grad=a.requires_grad)
    record_op(
        "reshape", (a,), out,
        lambda: a.data.reshape(shape),
        lambda g: (g.reshape(old),),
    )
    return out


def transpose(a, axes=None) -> Tensor:
    a = as_tensor(a)
    if axes is None:
        axes = tuple(reversed(range(a.data.ndim)))
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    out = Tensor(a.data.transpose(axes), requires_grad=a.requires_grad)
    record_op(
        "transpose", (a,), out,
        lambda: a.data.transpose(axes),
        lambda g: (g.transpose(inv),),
    )
    return out


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat needs at least one tensor")
    datas = [t.data for t in tensors]
    out = Tensor(np.concatenate(datas, axis=axis),
                 requires_grad=any(t.requires_grad for t in tensors))
    sizes = [d.shape[axis] for d in datas]
    offsets = np.cumsum(sizes)[:-1]

    def backward(g: np.ndarray):
        return tuple(np.split(g, offsets, axis=axis))

    record_op("concat", tuple(tensors), out,
              lambda: np.concatenate([t.data for t in tensors], axis=axis), backward)
    return out


def gather_rows(a, indices) -> Tensor:
    """Select rows (axis 0) by integer index; duplicates accumulate in backward."""
    a = as_tensor(a)
    idx = np.asarray(indices, dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= a.data.shape[0]):
        raise ShapeError(f"gather_rows: index out of range for {a.data.shape[0]} rows")
    out = Tensor(a.data[idx], requires_grad=a.requires_grad)

    def backward(g: np.ndarray):
        ga = np.zeros_like(a.data)
        np.add.at(ga, idx, g)
        return (ga,)

    record_op("gather_rows", (a,), out, lambda: a.data[idx], backward)
    return out


def take_per_row(a, cols) -> Tensor:
    """out[i] = a[i, cols[i]] for a 2-d input."""
    a = as_tensor(a)
    if a.data.ndim != 2:
        raise ShapeError(f"take_per_row needs a 2-d tensor, got {a.data.shape}")
    cols = np.asarray(cols, dtype=np.intp)
    n = a.data.shape[0]
    if cols.shape != (n,):
        raise ShapeError(f"take_per_row: need one column per row, got {cols.shape} for {n} rows")
    if cols.size and (cols.min() < 0 or cols.max() >= a.data.shape[1]):
        raise ShapeError(f"take_per_row: column out of range for {a.data.shape[1]} columns")
    rows = np.arange(n)
    out = Tensor(a.data[rows, cols], requires_grad=a.requires_grad)

    def backward(g: np.ndarray):
        ga = np.zeros_like(a.data)
        np.add.at(ga, (rows, cols), g)
        return (ga,)

    record_op("take_per_row", (a,), out, lambda: a.data[rows, cols], backward)
    return out


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------

def reduce_sum(a, axis=None) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data.sum(axis=axis), requires_grad=a.requires_grad)

    def backward(g: np.ndarray):
        if axis is None:
            return (np.broadcast_to(g, a.data.shape),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.data.shape),)

    record_op("sum", (a,), out, lambda: a.data.sum(axis=axis), backward)
    return out


def reduce_mean(a, axis=None) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data.mean(axis=axis), requires_grad=a.requires_grad)
    n = a.data.size if axis is None else a.data.shape[axis]

    def backward(g: np.ndarray):
        if axis is None:
            return (np.broadcast_to(g / n, a.data.shape),)
        return (np.broadcast_to(np.expand_dims(g, axis) / n, a.data.shape),)

    record_op("mean", (a,), out, lambda: a.data.mean(axis=axis), backward)
    return out


# ---------------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------------

def log(a) -> Tensor:
    a = as_tensor(a)
    if np.any(a.data <= 0.0):
        raise DomainError("log: input must be strictly positive")
    out = Tensor(np.log(a.data), requires_grad=a.requires_grad)
    record_op("log", (a,), out, lambda: np.log(a.data), lambda g: (g / a.data,))
    return out


def exp(a) -> Tensor:
    a = as_tensor(a)
    y = np.exp(a.data)
    out = Tensor(y, requires_grad=a.requires_grad)
    record_op("exp", (a,), out, lambda: np.exp(a.data), lambda g: (g * y,))
    return out


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    y = kernels.sigmoid_fwd(_flat(a.data)).reshape(a.data.shape)
    out = Tensor(y, requires_grad=a.requires_grad)
    yflat = y.ravel()

    record_op(
        "sigmoid", (a,), out,
        lambda: kernels.sigmoid_fwd(_flat(a.data)).reshape(a.data.shape),
        lambda g: (kernels.sigmoid_bwd(yflat, _flat(g)).reshape(a.data.shape),),
    )
    return out


def gelu(a) -> Tensor:
    a = as_tensor(a)
    xflat = _flat(a.data)
    out = Tensor(kernels.gelu_fwd(xflat).reshape(a.data.shape), requires_grad=a.requires_grad)
    record_op(
        "gelu", (a,), out,
        lambda: kernels.gelu_fwd(_flat(a.data)).reshape(a.data.shape),
        lambda g: (kernels.gelu_bwd(xflat, _flat(g)).reshape(a.data.shape),),
    )
    return out


def softplus(a) -> Tensor:
    """log(1 + exp(x)), evaluated as max(x, 0) + log1p(exp(-|x|))."""
    a = as_tensor(a)
    xflat = _flat(a.data)
    out = Tensor(kernels.softplus_fwd(xflat).reshape(a.data.shape), requires_grad=a.requires_grad)
    record_op(
        "softplus", (a,), out,
        lambda: kernels.softplus_fwd(_flat(a.data)).reshape(a.data.shape),
        lambda g: (kernels.softplus_bwd(xflat, _flat(g)).reshape(a.data.shape),),
    )
    return out


def _check_last_dim(a: Tensor, op: str) -> None:
    if a.data.ndim == 0 or a.data.shape[-1] < 1:
        raise ShapeError(f"{op}: last dimension must exist and be >= 1, got shape {a.data.shape}")


def softmax_last_dim(a) -> Tensor:
    a = as_tensor(a)
    _check_last_dim(a, "softmax_last_dim")
    y2 = kernels.softmax_fwd(_rows(a.data))
    out = Tensor(y2.reshape(a.data.shape), requires_grad=a.requires_grad)
    record_op(
        "softmax_last_dim", (a,), out,
        lambda: kernels.softmax_fwd(_rows(a.data)).reshape(a.data.shape),
        lambda g: (kernels.softmax_bwd(y2, _rows(g)).reshape(a.data.shape),),
    )
    return out


def log_softmax_last_dim(a) -> Tensor:
    a = as_tensor(a)
    _check_last_dim(a, "log_softmax_last_dim")
    logp2 = kernels.log_softmax_fwd(_rows(a.data))
    out = Tensor(logp2.reshape(a.data.shape), requires_grad=a.requires_grad)
    record_op(
        "log_softmax_last_dim", (a,), out,
        lambda: kernels.log_softmax_fwd(_rows(a.data)).reshape(a.data.shape),
        lambda g: (kernels.log_softmax_bwd(logp2, _rows(g)).reshape(a.data.shape),),
    )
    return out


def layer_norm(a, gain, bias, eps: float = 1e-12) -> Tensor:
    """Normalize each last-axis slice to mean 0 / variance 1, then scale and shift."""
    if eps <= 0.0:
        raise ParameterError(f"layer_norm: eps must be > 0, got {eps}")
    a, gain, bias = as_tensor(a), as_tensor(gain), as_tensor(bias)
    _check_last_dim(a, "layer_norm")
    d = a.data.shape[-1]
    if gain.data.shape != (d,) or bias.data.shape != (d,):
        raise ShapeError(
            f"layer_norm: gain/bias must have shape ({d},), got {gain.data.shape} and {bias.data.shape}"
        )
    y2, xhat, inv_std = kernels.layernorm_fwd(_rows(a.data), gain.data, bias.data, eps)
    out = Tensor(y2.reshape(a.data.shape), requires_grad=a.requires_grad or gain.requires_grad or bias.requires_grad)

    def forward():
        y, _, _ = kernels.layernorm_fwd(_rows(a.data), gain.data, bias.data, eps)
        return y.reshape(a.data.shape)

    def backward(g: np.ndarray):
        gx, ggain, gbias = kernels.layernorm_bwd(_rows(g), xhat, inv_std, gain.data)
        return gx.reshape(a.data.shape), ggain, gbias

    record_op("layer_norm", (a, gain, bias), out, forward, backward)
    return out


def dropout(a, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; rate 0 is the identity. Train-time only."""
    a = as_tensor(a)
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout: rate must be in [0, 1), got {rate}")
    if rate == 0.0:
        return a
    keep = (rng.random(a.data.shape) >= rate)
    scale = 1.0 / (1.0 - rate)
    mask = keep * scale
    out = Tensor(a.data * mask, requires_grad=a.requires_grad)
    record_op("dropout", (a,), out, lambda: a.data * mask, lambda g: (g * mask,))
    return out


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

def init_truncated_normal(shape, mean: float = 0.0, stddev: float = 0.01,
                          truncation: float = 2.0, rng=0) -> Tensor:
    """Normal samples with |x - mean| <= truncation * stddev, by rejection.

    `rng` is an int seed or a numpy Generator; a given seed always produces
    the same tensor.
    """
    if stddev <= 0.0:
        raise ParameterError(f"init_truncated_normal: stddev must be > 0, got {stddev}")
    if truncation <= 0.0:
        raise ParameterError(f"init_truncated_normal: truncation must be > 0, got {truncation}")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    n = int(np.prod(shape)) if shape else 1
    limit = truncation * stddev
    out = np.empty(n, dtype=np.float64)
    filled = 0
    while filled < n:
        draw = gen.normal(mean, stddev, size=n - filled)
        keep = draw[np.abs(draw - mean) <= limit]
        out[filled:filled + keep.size] = keep
        filled += keep.size
    return Tensor(out.reshape(shape), requires_grad=True)


# ---------------------------------------------------------------------------
# operator sugar on Tensor
# ---------------------------------------------------------------------------

Tensor.__add__ = lambda self, other: add(self, other)
Tensor.__radd__ = lambda self, other: add(other, self)
Tensor.__sub__ = lambda self, other: sub(self, other)
Tensor.__rsub__ = lambda self, other: sub(other, self)
Tensor.__mul__ = lambda self, other: mul(self, other)
Tensor.__rmul__ = lambda self, other: mul(other, self)
Tensor.__neg__ = lambda self: neg(self)
Tensor.__matmul__ = lambda self, other: matmul(self, other)
Tensor.sum = lambda self, axis=None: reduce_sum(self, axis)
Tensor.mean = lambda self, axis=None: reduce_mean(self, axis)
Tensor.reshape = lambda self, shape: reshape(self, shape)
Tensor.transpose = lambda self, axes=None: transpose(self, axes)
