"""Pure-numpy implementations of the hot forward/backward kernels.

Shapes are normalized by the callers: every row-wise kernel receives a
C-contiguous 2-d float64 array whose last axis is the reduced one.
Matrix products stay on numpy/BLAS in both backends; the kernels here cover
the fused row-wise ops where temporaries dominate at small sizes.
"""

import numpy as np
from scipy.special import erf

INV_SQRT2 = 0.7071067811865476
INV_SQRT_2PI = 0.3989422804014327


def softmax_fwd(x: np.ndarray) -> np.ndarray:
    z = x - x.max(axis=-1, keepdims=True)
    np.exp(z, out=z)
    z /= z.sum(axis=-1, keepdims=True)
    return z


def softmax_bwd(y: np.ndarray, gy: np.ndarray) -> np.ndarray:
    dot = (gy * y).sum(axis=-1, keepdims=True)
    return y * (gy - dot)


def log_softmax_fwd(x: np.ndarray) -> np.ndarray:
    m = x.max(axis=-1, keepdims=True)
    z = x - m
    lse = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    return z - lse


def log_softmax_bwd(logp: np.ndarray, gy: np.ndarray) -> np.ndarray:
    return gy - np.exp(logp) * gy.sum(axis=-1, keepdims=True)


def layernorm_fwd(x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float):
    """Returns (y, xhat, inv_std); xhat and inv_std are reused by the backward pass."""
    mu = x.mean(axis=-1, keepdims=True)
    var = np.square(x - mu).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv_std
    return xhat * gain + bias, xhat, inv_std


def layernorm_bwd(gy: np.ndarray, xhat: np.ndarray, inv_std: np.ndarray, gain: np.ndarray):
    dxhat = gy * gain
    m1 = dxhat.mean(axis=-1, keepdims=True)
    m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
    gx = inv_std * (dxhat - m1 - xhat * m2)
    ggain = (gy * xhat).reshape(-1, xhat.shape[-1]).sum(axis=0)
    gbias = gy.reshape(-1, xhat.shape[-1]).sum(axis=0)
    return gx, ggain, gbias


def gelu_fwd(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x * INV_SQRT2))


def gelu_bwd(x: np.ndarray, gy: np.ndarray) -> np.ndarray:
    cdf = 0.5 * (1.0 + erf(x * INV_SQRT2))
    pdf = INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return gy * (cdf + x * pdf)


def sigmoid_fwd(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_bwd(y: np.ndarray, gy: np.ndarray) -> np.ndarray:
    return gy * y * (1.0 - y)


def softplus_fwd(x: np.ndarray) -> np.ndarray:
    # log(1 + exp(x)) evaluated as max(x, 0) + log1p(exp(-|x|))
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def softplus_bwd(x: np.ndarray, gy: np.ndarray) -> np.ndarray:
    return gy * sigmoid_fwd(x)


def adam_update(
    p: np.ndarray,
    g: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
    step: int,
) -> None:
    """In-place Adam update with bias correction; `step` counts from 1."""
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * np.square(g)
    mhat = m / (1.0 - beta1**step)
    vhat = v / (1.0 - beta2**step)
    p -= lr * mhat / (np.sqrt(vhat) + eps)
