"""Running arithmetic mean of parameter snapshots (stochastic weight averaging)."""

from __future__ import annotations

import numpy as np

from hybridref.errors import DataError


class SwaAccumulator:
    def __init__(self):
        self._mean: dict[str, np.ndarray] | None = None
        self.count = 0

    def update(self, arrays: dict[str, np.ndarray]) -> None:
        self.count += 1
        if self._mean is None:
            self._mean = {n: np.array(a, dtype=np.float64) for n, a in arrays.items()}
            return
        if set(arrays) != set(self._mean):
            raise DataError("SWA snapshot parameter names changed between updates")
        for n, a in arrays.items():
            self._mean[n] += (a - self._mean[n]) / self.count

    def value(self) -> dict[str, np.ndarray]:
        if self._mean is None:
            raise DataError("SWA accumulator has no snapshots")
        return {n: a.copy() for n, a in self._mean.items()}
