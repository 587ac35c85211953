"""Convex minorants of sampled paths and vertex queries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bessel import PathGrid

__all__ = ["PiecewiseLinear", "HorizonError", "convex_minorant", "first_vertex_after"]


class HorizonError(Exception):
    """Raised when a query lies beyond the covered span of a structure."""


@dataclass
class PiecewiseLinear:
    """A piecewise-linear function given by its breakpoints."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        self.breakpoints = np.asarray(self.breakpoints, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if len(self.breakpoints) < 2:
            raise ValueError("need at least two breakpoints")
        if np.any(np.diff(self.breakpoints) <= 0):
            raise ValueError("breakpoints must be strictly increasing")

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.breakpoints)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.breakpoints[0]) or np.any(t > self.breakpoints[-1]):
            raise HorizonError("query outside the covered span")
        out = np.interp(t, self.breakpoints, self.values)
        return float(out) if out.ndim == 0 else out

    def segment_index(self, t: float) -> int:
        """Index i with breakpoints[i] <= t < breakpoints[i+1]."""
        if t < self.breakpoints[0] or t >= self.breakpoints[-1]:
            raise HorizonError("query outside the covered span")
        return int(np.searchsorted(self.breakpoints, t, side="right") - 1)


def lower_hull(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull of (xs, ys), xs strictly increasing."""
    n = len(xs)
    stack = np.empty(n, dtype=np.intp)
    m = 0
    for i in range(n):
        x, y = xs[i], ys[i]
        while m >= 2:
            x1, y1 = xs[stack[m - 1]], ys[stack[m - 1]]
            x0, y0 = xs[stack[m - 2]], ys[stack[m - 2]]
            if (y1 - y0) * (x - x0) >= (y - y0) * (x1 - x0):
                m -= 1
            else:
                break
        stack[m] = i
        m += 1
    return stack[:m].copy()


def convex_minorant(path: PathGrid) -> PiecewiseLinear:
    """Greatest convex function below the linear interpolation of the grid.

    Computed as the lower convex hull of the (time, value) point set;
    returned slopes are strictly increasing.
    """
    if len(path) < 2:
        raise ValueError("need at least two path points")
    idx = lower_hull(path.times, path.values)
    return PiecewiseLinear(path.times[idx], path.values[idx])


def first_vertex_after(pl: PiecewiseLinear, t: float) -> float:
    """Smallest breakpoint strictly greater than t."""
    if t < pl.breakpoints[0]:
        raise HorizonError("t precedes the covered span")
    if t >= pl.breakpoints[-1]:
        raise HorizonError("no vertex after t within the covered span")
    return float(pl.breakpoints[np.searchsorted(pl.breakpoints, t, side="right")])
