"""Backend parity: the compiled kernels must match the numpy fallback."""

import numpy as np
import pytest

from hybridref import kernels
from hybridref.kernels import get_backend, numpy_backend

try:
    compiled = get_backend("compiled")
except Exception:
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")


def _c(a):
    return np.ascontiguousarray(a)


@needs_compiled
@pytest.mark.parametrize("rows,cols", [(1, 1), (3, 7), (16, 64), (5, 333)])
def test_rowwise_parity(rows, cols):
    rng = np.random.default_rng(rows * 1000 + cols)
    x = _c(rng.normal(scale=3.0, size=(rows, cols)))
    g = _c(rng.normal(size=(rows, cols)))
    for fwd, bwd in (("softmax_fwd", "softmax_bwd"), ("log_softmax_fwd", "log_softmax_bwd")):
        a_y = getattr(numpy_backend, fwd)(x)
        b_y = getattr(compiled, fwd)(x)
        np.testing.assert_allclose(a_y, b_y, rtol=1e-12, atol=1e-14)
        a_g = getattr(numpy_backend, bwd)(_c(a_y), g)
        b_g = getattr(compiled, bwd)(_c(a_y), g)
        np.testing.assert_allclose(a_g, b_g, rtol=1e-12, atol=1e-14)


@needs_compiled
def test_layernorm_parity():
    rng = np.random.default_rng(5)
    x = _c(rng.normal(size=(9, 32)))
    gain = _c(rng.normal(size=32))
    bias = _c(rng.normal(size=32))
    gy = _c(rng.normal(size=(9, 32)))
    ya, xha, isa = numpy_backend.layernorm_fwd(x, gain, bias, 1e-12)
    yb, xhb, isb = compiled.layernorm_fwd(x, gain, bias, 1e-12)
    np.testing.assert_allclose(ya, yb, rtol=1e-12, atol=1e-13)
    ga = numpy_backend.layernorm_bwd(gy, _c(xha), _c(isa), gain)
    gb = compiled.layernorm_bwd(gy, _c(xha), _c(isa), gain)
    for u, v in zip(ga, gb):
        np.testing.assert_allclose(u, v, rtol=1e-12, atol=1e-13)


@needs_compiled
def test_elementwise_parity():
    rng = np.random.default_rng(6)
    x = _c(rng.normal(scale=4.0, size=257))
    gy = _c(rng.normal(size=257))
    for fwd, bwd, bwd_arg in (
        ("gelu_fwd", "gelu_bwd", "x"),
        ("sigmoid_fwd", "sigmoid_bwd", "y"),
        ("softplus_fwd", "softplus_bwd", "x"),
    ):
        ya = getattr(numpy_backend, fwd)(x)
        yb = getattr(compiled, fwd)(x)
        np.testing.assert_allclose(ya, yb, rtol=1e-12, atol=1e-15)
        first = _c(ya) if bwd_arg == "y" else x
        ga = getattr(numpy_backend, bwd)(first, gy)
        gb = getattr(compiled, bwd)(first, gy)
        np.testing.assert_allclose(ga, gb, rtol=1e-12, atol=1e-15)


@needs_compiled
def test_adam_parity():
    rng = np.random.default_rng(7)
    p1 = _c(rng.normal(size=100))
    p2 = p1.copy()
    m1, v1 = np.zeros(100), np.zeros(100)
    m2, v2 = np.zeros(100), np.zeros(100)
    for t in range(1, 20):
        g = _c(rng.normal(size=100))
        numpy_backend.adam_update(p1, g, m1, v1, 1e-2, 0.9, 0.999, 1e-8, t)
        compiled.adam_update(p2, g.copy(), m2, v2, 1e-2, 0.9, 0.999, 1e-8, t)
    np.testing.assert_allclose(p1, p2, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(m1, m2, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(v1, v2, rtol=1e-12, atol=1e-14)


def test_active_backend_exposes_all_names():
    for name in (
        "softmax_fwd", "softmax_bwd", "log_softmax_fwd", "log_softmax_bwd",
        "layernorm_fwd", "layernorm_bwd", "gelu_fwd", "gelu_bwd",
        "sigmoid_fwd", "sigmoid_bwd", "softplus_fwd", "softplus_bwd", "adam_update",
    ):
        assert callable(getattr(kernels, name))
    assert kernels.BACKEND_NAME in ("compiled", "python")
