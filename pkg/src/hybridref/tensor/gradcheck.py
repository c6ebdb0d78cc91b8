"""Central finite-difference verification of tape gradients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from hybridref.tensor.core import Tape, Tensor


@dataclass
class GradCheckReport:
    n_checked: int = 0
    n_failed: int = 0
    max_rel_err: float = 0.0
    failures: list[tuple[str, int, float, float, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.n_failed == 0

    def summary(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return (
            f"gradcheck {status}: {self.n_checked} components, "
            f"{self.n_failed} failed, max rel err {self.max_rel_err:.3e}"
        )


def finite_difference_check(
    loss_fn: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    h: float = 1e-5,
    rel_tol: float = 1e-4,
    denom_floor: float = 1e-3,
    max_failures: int = 20,
) -> GradCheckReport:
    """Compare tape gradients of `loss_fn()` against central differences.

    `loss_fn` must be a deterministic scalar forward pass over `params`.
    The relative error denominator is floored at `denom_floor`, so components
    whose gradient magnitude is below the floor are effectively held to an
    absolute tolerance of rel_tol * denom_floor; central differences at
    h=1e-5 resolve far below that in double precision.
    """
    with Tape() as tape:
        loss = loss_fn()
        for p in params.values():
            p.zero_grad()
        tape.backward(loss)
    analytic = {name: p.grad.copy() for name, p in params.items()}

    report = GradCheckReport()
    for name, p in params.items():
        flat = p.data.reshape(-1)
        aflat = analytic[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = loss_fn().item()
            flat[i] = orig - h
            f_minus = loss_fn().item()
            flat[i] = orig
            fd = (f_plus - f_minus) / (2.0 * h)
            a = aflat[i]
            rel = abs(a - fd) / max(abs(a), abs(fd), denom_floor)
            report.n_checked += 1
            report.max_rel_err = max(report.max_rel_err, rel)
            if rel >= rel_tol:
                report.n_failed += 1
                if len(report.failures) < max_failures:
                    report.failures.append((name, i, float(a), float(fd), float(rel)))
    return report
