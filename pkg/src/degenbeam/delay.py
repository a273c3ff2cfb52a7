"""Exact transport of the delayed tip-velocity history.

The delayed feedback channel is the tip velocity carried unchanged
along a lag axis s in [0, 1]: the value at lag s*tau today is whatever
entered s*tau ago.  On a time grid with dt = tau / N the transport is
realized exactly by a ring buffer of N + 1 samples; one push per step
shifts the whole history with zero dissipation and zero dispersion.
"""

from __future__ import annotations

from typing import Callable

import numpy as np


class HistoryBuffer:
    """Ring buffer of tip-velocity samples at lags 0, dt, ..., tau."""

    def __init__(self, n_hist: int, tau: float):
        if n_hist < 1:
            raise ValueError(f"n_hist = {n_hist} must be at least 1")
        if tau <= 0.0:
            raise ValueError(f"tau = {tau:g} must be positive")
        self.n_hist = int(n_hist)
        self.tau = float(tau)
        self.dt = self.tau / self.n_hist
        self._data = np.zeros(self.n_hist + 1)
        self._head = 0  # index of the lag-0 sample

    # -- construction --

    @classmethod
    def from_history(cls, f0: Callable[[float], float], n_hist: int,
                     tau: float) -> "HistoryBuffer":
        """Pre-fill from the initial history f0.

        ``f0(theta)`` gives the tip velocity at time theta <= 0; slot j
        is filled with f0(-j * dt), so the lag-0 slot holds f0(0) until
        the driver overwrites it with the actual initial tip velocity.
        """
        buf = cls(n_hist, tau)
        for j in range(buf.n_hist + 1):
            buf._data[(buf._head + j) % buf._data.size] = float(f0(-j * buf.dt))
        return buf

    # -- access --

    def set_current(self, trace: float) -> None:
        """Overwrite the lag-0 sample (used once, at start of a run)."""
        self._data[self._head] = float(trace)

    def sample_steps(self, k: int) -> float:
        """Value pushed k steps ago (k = 0 is the current sample)."""
        if not (0 <= k <= self.n_hist):
            raise ValueError(f"lag index {k} outside [0, {self.n_hist}]")
        return float(self._data[(self._head + k) % self._data.size])

    def sample(self, lag: float) -> float:
        """Value at a time lag that must sit on the buffer grid."""
        steps = lag / self.dt
        k = round(steps)
        if abs(steps - k) > 1e-9:
            raise ValueError(
                f"lag {lag:g} is not aligned with the buffer step {self.dt:g}")
        return self.sample_steps(int(k))

    def push_and_sample(self, new_trace: float) -> float:
        """Advance one step: store the new lag-0 sample, return lag tau.

        The returned value is the sample now exactly tau old, i.e. the
        one pushed n_hist steps ago.
        """
        self._head = (self._head - 1) % self._data.size
        self._data[self._head] = float(new_trace)
        return self.sample_steps(self.n_hist)

    def as_array(self) -> np.ndarray:
        """Samples ordered by lag: index j holds the value at lag j*dt."""
        idx = (self._head + np.arange(self._data.size)) % self._data.size
        return self._data[idx].copy()

    @property
    def s_grid(self) -> np.ndarray:
        """Normalized lag grid s in [0, 1] matching :meth:`as_array`."""
        return np.linspace(0.0, 1.0, self.n_hist + 1)

    def dump_rows(self) -> list[tuple[float, float]]:
        """(lag, value) pairs, for CSV export."""
        arr = self.as_array()
        return [(j * self.dt, float(arr[j])) for j in range(arr.size)]
