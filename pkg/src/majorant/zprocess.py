"""The degenerate level-z process Z: three equivalent constructions,
general mixtures over the starting level, the future-infimum process,
and the reflection that recovers Brownian motion.

Z is a mixture of shifted 3-d Bessel processes.  The three constructions
(limit description, path decomposition at the global infimum, explicit
mixture) realize the same law; each is sampled exactly at the requested
grid times.  First hits of the infimum level are sampled exactly from
the stable first-passage law, with the descending piece drawn as a 3-d
Bessel bridge conditioned on the passage time, so there is no
grid-crossing bias anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .bessel import PathGrid, descend_then_rise
from .rng import as_generator

__all__ = [
    "ZSpec",
    "ZPath",
    "sample_z",
    "sample_general_mixture",
    "future_infimum",
    "reflect_at_future_infimum",
    "sample_infimum_level",
]

VARIANTS = ("limit", "path-decomposition", "mixture")


@dataclass(frozen=True)
class ZSpec:
    """Parameters of the degenerate process: level, construction, and an
    optional general mixing density for the starting level."""

    z: float
    variant: str = "path-decomposition"
    gamma: Callable[[float], float] | None = None

    def __post_init__(self) -> None:
        if not self.z > 0:
            raise ValueError("z must be positive")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.gamma is not None:
            mass, _ = quad(self.gamma, 0.0, self.z, limit=200)
            if abs(mass - 1.0) > 1e-8:
                raise ValueError("gamma must integrate to 1 over [0, z]")


@dataclass
class ZPath:
    """A sampled Z path with its exactly-known infimum metadata.

    ``floor`` is the shift level of the Bessel part (the global infimum
    for the hitting-style constructions); ``tau`` the exact hitting time
    of the floor when the construction realizes it, else None;
    ``glob_inf`` the exact global infimum when determined at
    construction; ``tail_inf`` an exact draw of the path infimum beyond
    the final grid time, by the Markov property of the Bessel part.
    """

    path: PathGrid
    z: float
    variant: str
    floor: float
    tau: float | None
    glob_inf: float | None
    tail_inf: float

    @property
    def horizon(self) -> float:
        return float(self.path.times[-1])


def _newton_unit_cdf(u_target, cdf, pdf):
    """Invert an increasing polynomial CDF on [0,1]; safeguarded Newton."""
    u_target = np.asarray(u_target, dtype=float)
    lo = np.zeros_like(u_target)
    hi = np.ones_like(u_target)
    x = np.full_like(u_target, 0.5)
    for _ in range(120):
        f = cdf(x) - u_target
        lo = np.where(f < 0, x, lo)
        hi = np.where(f > 0, x, hi)
        d = pdf(x)
        step = np.where(d > 1e-14, f / np.where(d > 1e-14, d, 1.0), 0.0)
        xn = x - step
        bad = (xn <= lo) | (xn >= hi) | (d <= 1e-14)
        x = np.where(bad, 0.5 * (lo + hi), xn)
        if np.all(np.abs(f) < 1e-13):
            break
    return x


def sample_infimum_level(rng, z: float, size=None):
    """Global-infimum levels of Z: density 6x^2/z^3 - 4x^3/z^4 on (0, z)."""
    gen = as_generator(rng)
    scalar = size is None
    u = gen.uniform(size=1 if scalar else size)
    x = z * _newton_unit_cdf(u, lambda v: 2 * v**3 - v**4, lambda v: 6 * v**2 - 4 * v**3)
    return float(x[0]) if scalar else x


def _sample_mixture_level(gen, z: float, size):
    """Starting levels h with density 12 h^2 (z-h) / z^4 on (0, z)."""
    u = gen.uniform(size=size)
    return z * _newton_unit_cdf(u, lambda v: 4 * v**3 - 3 * v**4, lambda v: 12 * v**2 * (1 - v))


def _smoothstep_level(gen, z: float) -> float:
    """Level with density 6k(z-k)/z^3 on (0, z)."""
    u = gen.uniform()
    return z * float(0.5 - np.sin(np.arcsin(np.clip(1.0 - 2.0 * u, -1, 1)) / 3.0))


def _check_z_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 1 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    if times[0] != 0.0:
        raise ValueError("times must start at 0")
    return times


def _bes3_shifted(gen, start: float, shift: float, times_pos: np.ndarray) -> np.ndarray:
    """shift + BES_{start}(3) at increasing positive times; exact."""
    coords = np.array([start, 0.0, 0.0])
    out = np.empty(len(times_pos))
    tprev = 0.0
    for j, t in enumerate(times_pos):
        coords = coords + gen.standard_normal(3) * np.sqrt(t - tprev)
        out[j] = shift + np.linalg.norm(coords)
        tprev = t
    return out


def _finish(times, values, z, variant, floor, tau, glob_inf, gen) -> ZPath:
    """Assemble a ZPath, drawing the exact beyond-horizon infimum."""
    zT = values[-1]
    if tau is not None and tau > times[-1]:
        tail = floor if glob_inf is None else glob_inf
    else:
        tail = floor + gen.uniform() * max(zT - floor, 0.0)
    return ZPath(
        path=PathGrid(times, values), z=z, variant=variant,
        floor=floor, tau=tau, glob_inf=glob_inf, tail_inf=float(tail),
    )


def sample_z(rng, spec: ZSpec, times) -> ZPath:
    """One Z path at the given times (starting at 0, where Z = z exactly).

    limit: level K' with density 6k(z-k)/z^3; with probability
    Unif(0,K')/z descend from z to K' then rise as BES(3), otherwise rise
    immediately as K' + BES_{z-K'}(3).
    path-decomposition: global infimum J with density 6x^2/z^3-4x^3/z^4;
    descend from z to J, then rise as BES(3).
    mixture: starting level h with density 12h^2(z-h)/z^4; the path is
    z - h + BES_h(3).
    All three produce the same law.
    """
    times = _check_z_times(times)
    gen = as_generator(rng)
    z = spec.z
    pos = times[1:]

    def _descend(floor: float):
        if len(pos):
            return descend_then_rise(gen, z, floor, pos)
        return np.array([]), (z - floor) ** 2 / gen.standard_normal() ** 2

    if spec.variant == "path-decomposition":
        j = sample_infimum_level(gen, z)
        vals, tau = _descend(j)
        return _finish(times, np.concatenate([[z], vals]), z, spec.variant, j, tau, j, gen)
    if spec.variant == "mixture":
        h = float(_sample_mixture_level(gen, z, size=1)[0])
        vals = _bes3_shifted(gen, h, z - h, pos) if len(pos) else np.array([])
        return _finish(times, np.concatenate([[z], vals]), z, spec.variant, z - h, None, None, gen)
    # limit construction
    ktil = _smoothstep_level(gen, z)
    p = gen.uniform() * ktil / z
    if gen.uniform() < p:
        vals, tau = _descend(ktil)
        return _finish(times, np.concatenate([[z], vals]), z, spec.variant, ktil, tau, ktil, gen)
    vals = _bes3_shifted(gen, z - ktil, ktil, pos) if len(pos) else np.array([])
    return _finish(times, np.concatenate([[z], vals]), z, spec.variant, ktil, None, None, gen)


def sample_general_mixture(rng, z: float, gamma: Callable[[float], float], times,
                           gamma_max: float | None = None) -> ZPath:
    """The general construction: infimum level J drawn from the density
    gamma on [0, z], then z + BM to the first hit of J, then BES(3) up.

    gamma must be bounded (rejection sampling against its grid maximum)
    and integrate to 1 over [0, z] within 1e-8.
    """
    times = _check_z_times(times)
    mass, _ = quad(gamma, 0.0, z, limit=200)
    if abs(mass - 1.0) > 1e-8:
        raise ValueError("gamma must integrate to 1 over [0, z]")
    gen = as_generator(rng)
    if gamma_max is None:
        grid = np.linspace(0.0, z, 4097)
        gamma_max = max(float(np.max([gamma(g) for g in grid])) * (1.0 + 1e-9), 1e-300)
    while True:
        cand = gen.uniform(0.0, z)
        if gen.uniform() * gamma_max <= gamma(cand):
            j = cand
            break
    pos = times[1:]
    if len(pos):
        vals, tau = descend_then_rise(gen, z, j, pos)
    else:
        vals, tau = np.array([]), (z - j) ** 2 / gen.standard_normal() ** 2
    return _finish(times, np.concatenate([[z], vals]), z, "general", j, tau, j, gen)


def sample_z_values(rng, z: float, variant: str, times, n: int) -> np.ndarray:
    """n independent copies of (Z(t) for t in times), exact and vectorized.

    ``times`` here are strictly positive query times (Z(0) = z is
    definitional).  Used by the equivalence batteries; single-path grids
    should go through :func:`sample_z`.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ValueError("times must be positive and strictly increasing")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    gen = as_generator(rng)
    if variant == "path-decomposition":
        j = sample_infimum_level(gen, z, size=n)
        return _descend_rise_values(gen, z, j, times)
    if variant == "mixture":
        h = _sample_mixture_level(gen, z, size=n)
        return _shifted_bes3_values(gen, h, z - h, times)
    ktil = z * _newton_unit_cdf(gen.uniform(size=n), lambda v: v * v * (3 - 2 * v), lambda v: 6 * v * (1 - v))
    p = gen.uniform(size=n) * ktil / z
    hit = gen.uniform(size=n) < p
    out = np.empty((n, len(times)))
    if hit.any():
        out[hit] = _descend_rise_values(gen, z, ktil[hit], times)
    if (~hit).any():
        out[~hit] = _shifted_bes3_values(gen, (z - ktil)[~hit], ktil[~hit], times)
    return out


def _shifted_bes3_values(gen, start, shift, times) -> np.ndarray:
    """Vectorized shift + BES_start(3) at the given positive times."""
    n = len(start)
    coords = np.zeros((n, 3))
    coords[:, 0] = start
    out = np.empty((n, len(times)))
    tprev = 0.0
    for j, t in enumerate(times):
        coords = coords + gen.standard_normal((n, 3)) * math.sqrt(t - tprev)
        out[:, j] = shift + np.linalg.norm(coords, axis=1)
        tprev = t
    return out


def _descend_rise_values(gen, z: float, floor, times) -> np.ndarray:
    """Vectorized z + BM to the first hit of floor, then floor + BES(3)."""
    floor = np.asarray(floor, dtype=float)
    n = len(floor)
    tau = (z - floor) ** 2 / gen.standard_normal(n) ** 2
    coords = np.zeros((n, 3))
    coords[:, 0] = z - floor
    post = np.zeros((n, 3))
    risen = np.zeros(n, dtype=bool)
    out = np.empty((n, len(times)))
    tprev = 0.0
    for j, t in enumerate(times):
        g = gen.standard_normal((n, 3))
        cross = (~risen) & (tau <= t)
        desc = (~risen) & (tau > t)
        if desc.any():
            rem_prev = tau[desc] - tprev
            rem_new = tau[desc] - t
            shrink = rem_new / rem_prev
            var = (t - tprev) * rem_new / rem_prev
            coords[desc] = coords[desc] * shrink[:, None] + g[desc] * np.sqrt(np.maximum(var, 0.0))[:, None]
            out[desc, j] = floor[desc] + np.linalg.norm(coords[desc], axis=1)
        if cross.any():
            post[cross] = g[cross] * np.sqrt(t - tau[cross])[:, None]
            out[cross, j] = floor[cross] + np.linalg.norm(post[cross], axis=1)
            risen = risen | cross
        old = risen & ~cross
        if old.any():
            post[old] = post[old] + g[old] * math.sqrt(t - tprev)
            out[old, j] = floor[old] + np.linalg.norm(post[old], axis=1)
        tprev = t
    return out


def future_infimum(zp: ZPath, rng=None) -> PathGrid:
    """J(t) = inf over [t, infinity) of Z, exact in law at the grid times.

    Built from the running minimum of the grid values, the exact
    beyond-horizon infimum draw, and (when the construction realized the
    hit) the exact value J before its hitting time.
    """
    times = zp.path.times
    vals = zp.path.values
    suffix = np.minimum.accumulate(vals[::-1])[::-1]
    j = np.minimum(suffix, zp.tail_inf)
    if zp.tau is not None and zp.glob_inf is not None:
        j = np.where(times <= zp.tau, zp.glob_inf, j)
    return PathGrid(times, j)


def reflect_at_future_infimum(zp: ZPath, j: PathGrid) -> PathGrid:
    """The reflected path 2 J(t) - 2 J(0) + z - Z(t); a Brownian motion in law."""
    if len(j) != len(zp.path) or np.any(j.times != zp.path.times):
        raise ValueError("grids of the path and its future infimum must match")
    b = 2.0 * j.values - 2.0 * j.values[0] + zp.z - zp.path.values
    return PathGrid(zp.path.times, b)
