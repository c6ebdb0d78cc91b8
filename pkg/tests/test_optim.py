"""Schedule shape, Adam semantics, SWA exactness."""

import numpy as np
import pytest

from hybridref.errors import ConfigError, DataError, TrainingError
from hybridref.tensor import Tensor
from hybridref.training.optim import Adam, lr_at
from hybridref.training.swa import SwaAccumulator


def test_lr_schedule_anchors():
    assert lr_at(0, 1e-3, 100, 400) == 0.0
    assert lr_at(100, 1e-3, 100, 400) == 1e-3
    assert lr_at(400, 1e-3, 100, 400) == 0.0
    halfway = (100 + 400) // 2
    assert lr_at(halfway, 1e-3, 100, 400) == pytest.approx(5e-4, rel=1e-12)


def test_lr_schedule_piecewise_linear_and_peaked():
    lrs = [lr_at(s, 2e-3, 10, 50) for s in range(51)]
    assert max(lrs) == 2e-3 and lrs.index(max(lrs)) == 10
    assert all(v >= 0 for v in lrs)
    ramp = np.diff(lrs[:11])
    decay = np.diff(lrs[10:])
    assert np.allclose(ramp, ramp[0]) and np.allclose(decay, decay[0])


def test_lr_schedule_no_warmup():
    assert lr_at(0, 1e-3, 0, 10) == 1e-3
    assert lr_at(10, 1e-3, 0, 10) == 0.0


def test_lr_schedule_validation():
    with pytest.raises(ConfigError):
        lr_at(0, 1e-3, 10, 10)
    with pytest.raises(ConfigError):
        lr_at(11, 1e-3, 2, 10)


def test_adam_zero_gradient_is_noop(rng):
    p = Tensor(rng.normal(size=(3, 3)), requires_grad=True)
    p.zero_grad()
    before = p.data.copy()
    Adam({"p": p}).step(1e-2)
    np.testing.assert_array_equal(p.data, before)


def test_adam_constant_gradient_closed_form():
    # with g constant from step 1, bias correction is exact: |update| = lr/(1+eps)
    p = Tensor(np.zeros(4), requires_grad=True)
    adam = Adam({"p": p})
    for _ in range(25):
        before = p.data.copy()
        p.grad = np.full(4, 2.5)
        adam.step(1e-2)
        delta = p.data - before
        np.testing.assert_allclose(np.abs(delta), 1e-2 / (1 + 1e-8 / 2.5), rtol=1e-9)
        assert (delta < 0).all()


def test_adam_deterministic(rng):
    def run():
        p = Tensor(np.ones(5), requires_grad=True)
        adam = Adam({"p": p})
        gen = np.random.default_rng(3)
        for _ in range(10):
            p.grad = gen.normal(size=5)
            adam.step(3e-3)
        return p.data

    np.testing.assert_array_equal(run(), run())


def test_adam_nan_gradient_names_parameter():
    p = Tensor(np.ones(3), requires_grad=True)
    q = Tensor(np.ones(3), requires_grad=True)
    p.zero_grad()
    q.grad = np.array([1.0, np.nan, 0.0])
    with pytest.raises(TrainingError, match="'q'"):
        Adam({"p": p, "q": q}).step(1e-3)


def test_adam_missing_grad_treated_as_zero():
    p = Tensor(np.ones(3), requires_grad=True)  # grad never allocated
    Adam({"p": p}).step(1e-2)
    np.testing.assert_array_equal(p.data, np.ones(3))


def test_swa_identical_snapshots_are_identity(rng):
    snap = {"w": rng.normal(size=(4, 4))}
    acc = SwaAccumulator()
    for _ in range(5):
        acc.update(snap)
    np.testing.assert_array_equal(acc.value()["w"], snap["w"])
    assert acc.count == 5


def test_swa_matches_arithmetic_mean(rng):
    snaps = [{"w": rng.normal(size=(6, 3)), "b": rng.normal(size=2)} for _ in range(7)]
    acc = SwaAccumulator()
    for s in snaps:
        acc.update(s)
    mean = acc.value()
    for name in ("w", "b"):
        want = np.mean([s[name] for s in snaps], axis=0)
        np.testing.assert_allclose(mean[name], want, atol=1e-12)


def test_swa_errors():
    acc = SwaAccumulator()
    with pytest.raises(DataError):
        acc.value()
    acc.update({"w": np.ones(2)})
    with pytest.raises(DataError):
        acc.update({"w2": np.ones(2)})
