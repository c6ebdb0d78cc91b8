"""Dense float64 tensors plus a tape recording primitive ops for reverse mode.

A `Tape` is installed as a context manager; every primitive executed while it
is active appends one `OpRecord`. `Tape.backward(loss)` walks the records in
reverse and accumulates gradients into `Tensor.grad` (+= semantics, so batch
accumulation works; call `zero_grad` explicitly between steps). Running ops
with no active tape is forward-only, which is what the finite-difference
checker and evaluation paths use.

Everything is double precision; a tape is confined to one thread.
"""

from __future__ import annotations

import threading
from typing import Callable, Iterable, Optional

import numpy as np

from hybridref.errors import ShapeError

_tls = threading.local()


def _tape_stack() -> list:
    stack = getattr(_tls, "stack", None)
    if stack is None:
        stack = []
        _tls.stack = stack
    return stack


def active_tape() -> Optional["Tape"]:
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    """A float64 ndarray with an optional gradient buffer."""

    __slots__ = ("data", "grad", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.data.shape}")
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False, name=self.name)

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad}{tag})"

    # Arithmetic sugar; real implementations live in hybridref.tensor.ops and
    # are attached at import time to avoid a circular import.
    def __add__(self, other):  # pragma: no cover - wired in ops
        raise NotImplementedError

    def sum(self, axis=None):  # pragma: no cover - wired in ops
        raise NotImplementedError

    def mean(self, axis=None):  # pragma: no cover - wired in ops
        raise NotImplementedError


def as_tensor(value) -> Tensor:
    """Wrap scalars/arrays as constant tensors; pass tensors through."""
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=np.float64))


class OpRecord:
    """One executed primitive: inputs, output, a replay closure, a gradient rule."""

    __slots__ = ("name", "inputs", "output", "forward", "backward")

    def __init__(
        self,
        name: str,
        inputs: tuple[Tensor, ...],
        output: Tensor,
        forward: Callable[[], np.ndarray],
        backward: Callable[[np.ndarray], tuple],
    ):
        self.name = name
        self.inputs = inputs
        self.output = output
        self.forward = forward
        self.backward = backward


class Tape:
    """Ordered record of primitive ops; inputs of every op precede it."""

    def __init__(self):
        self.records: list[OpRecord] = []

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        stack = _tape_stack()
        assert stack and stack[-1] is self, "tape stack corrupted"
        stack.pop()

    def record(self, rec: OpRecord) -> None:
        self.records.append(rec)

    def replay(self) -> None:
        """Re-execute every recorded op in order, overwriting output buffers.

        With unchanged inputs this reproduces the original outputs bit for bit.
        """
        for rec in self.records:
            rec.output.data = rec.forward()

    def backward(self, loss: Tensor) -> dict[Tensor, np.ndarray]:
        """Accumulate d(loss)/d(leaf) into every reachable requires_grad leaf.

        Returns the map of leaf tensors to the gradient contribution of this
        call. Leaves not reachable from `loss` receive nothing (their grad
        stays whatever zero_grad left there). Calling backward again without
        zeroing accumulates, matching the += contract.
        """
        if loss.data.shape != ():
            raise ShapeError(f"backward needs a scalar loss, got shape {loss.data.shape}")
        grads: dict[int, np.ndarray] = {id(loss): np.ones((), dtype=np.float64)}
        holders: dict[int, Tensor] = {id(loss): loss}
        for rec in reversed(self.records):
            g = grads.pop(id(rec.output), None)
            if g is None:
                continue
            holders.pop(id(rec.output), None)
            input_grads = rec.backward(g)
            for t, gi in zip(rec.inputs, input_grads):
                if gi is None or not t.requires_grad:
                    continue
                key = id(t)
                if key in grads:
                    grads[key] = grads[key] + gi
                else:
                    grads[key] = gi
                    holders[key] = t
        result: dict[Tensor, np.ndarray] = {}
        for key, g in grads.items():
            t = holders[key]
            g = np.asarray(g, dtype=np.float64).reshape(t.data.shape)
            if t.grad is None:
                t.grad = g.copy()
            else:
                t.grad += g
            result[t] = g
        return result


def record_op(
    name: str,
    inputs: Iterable[Tensor],
    output: Tensor,
    forward: Callable[[], np.ndarray],
    backward: Callable[[np.ndarray], tuple],
) -> None:
    tape = active_tape()
    if tape is not None:
        tape.record(OpRecord(name, tuple(inputs), output, forward, backward))
