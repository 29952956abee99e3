"""Uniformly sampled real time signals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import WindowMismatch

_UNIFORMITY_RTOL = 1e-9


@dataclass(frozen=True)
class TimeSignal:
    """Real samples on a uniform time grid."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("need at least two samples")
        if v.shape != t.shape:
            raise ValueError("times and values length mismatch")
        dt = np.diff(t)
        if not np.all(np.abs(dt - dt[0]) <= _UNIFORMITY_RTOL * abs(dt[0])):
            raise ValueError("time grid is not uniform")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("non-finite sample")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        t.setflags(write=False)
        v.setflags(write=False)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def resample_to(self, times: np.ndarray) -> "TimeSignal":
        """Band-limited resampling onto another uniform grid.

        Raises WindowMismatch when the grids overlap on less than 90% of
        the target window.
        """
        times = np.asarray(times, dtype=float)
        lo = max(times[0], self.times[0])
        hi = min(times[-1], self.times[-1])
        span = times[-1] - times[0]
        if span <= 0 or (hi - lo) < 0.9 * span:
            raise WindowMismatch(
                f"overlap [{lo:g}, {hi:g}] covers less than 90% of target window"
            )
        from scipy.signal import resample

        n_up = max(len(self.times), int(np.ceil(self.duration / (times[1] - times[0]))) + 1)
        up, t_up = resample(self.values, n_up, t=self.times)
        vals = np.interp(times, t_up, up, left=0.0, right=0.0)
        return TimeSignal(times, vals)
