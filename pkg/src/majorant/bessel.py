"""Path-level samplers: Brownian motion, Bessel processes and bridges,
Brownian excursions, the uniform-minimum path decomposition, and the
monotone coupling of Bessel bridges.

Exactness policy: everything with a Gaussian representation (Brownian
motion, driftless Bessel processes, 3-d Bessel bridges, excursions) is
sampled exactly as a norm of Gaussian coordinates.  Only the
constant-drift Bessel process and the coupled-bridge SDE use an
Euler-Maruyama discretization, with documented weak-order-1 bias.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rng import RngStream, as_generator

__all__ = [
    "PathGrid",
    "BridgeSpec",
    "sample_bm",
    "sample_bes",
    "sample_bessel_bridge",
    "sample_excursion",
    "sample_coupled_bridges",
    "williams_sample",
    "brownian_bridge_coords",
]


@dataclass
class PathGrid:
    """A sampled path: strictly increasing times with one value per time."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.ndim != 1 or self.times.shape != self.values.shape:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if len(self.times) < 1:
            raise ValueError("a path needs at least one point")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class BridgeSpec:
    """Endpoint data of an n-dimensional Bessel bridge."""

    n: int
    t0: float
    h: float
    t1: float
    g: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("dimension must be >= 1")
        if not self.t1 > self.t0:
            raise ValueError("t1 must exceed t0")
        if self.h < 0 or self.g < 0:
            raise ValueError("bridge endpoints must be nonnegative")

    @property
    def span(self) -> float:
        return self.t1 - self.t0


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 1 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be a strictly increasing 1-d array")
    return times


def sample_bm(rng, times, x0: float = 0.0, mu: float = 0.0) -> PathGrid:
    """Brownian motion with drift at the given times; exact Gaussian increments."""
    times = _check_times(times)
    if times[0] < 0:
        raise ValueError("times must start at or after 0")
    gen = as_generator(rng)
    dts = np.diff(np.concatenate([[0.0], times]))
    incr = gen.standard_normal(len(dts)) * np.sqrt(dts) + mu * dts
    return PathGrid(times, x0 + np.cumsum(incr))


def sample_bes(rng, n: int, h: float, mu: float, times, dt_max: float | None = None) -> PathGrid:
    """n-dimensional Bessel process from h with constant drift mu.

    mu = 0: exact, as the norm of n independent Brownian coordinates
    started at (h, 0, ..., 0).  mu > 0: Euler-Maruyama on the generator
    drift (n-1)/(2x) + mu with per-step reflection, simulated on a grid
    of step <= dt_max (default 1e-4 * horizon) refined through the
    requested times; weak order 1.
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    if h < 0 or mu < 0:
        raise ValueError("h and mu must be nonnegative")
    times = _check_times(times)
    if times[0] < 0:
        raise ValueError("times must be nonnegative")
    gen = as_generator(rng)
    if mu == 0.0:
        coords = np.zeros(n)
        coords[0] = h
        out = np.empty(len(times))
        tprev = 0.0
        for j, t in enumerate(times):
            coords = coords + gen.standard_normal(n) * np.sqrt(t - tprev)
            out[j] = np.linalg.norm(coords)
            tprev = t
        return PathGrid(times, out)
    horizon = times[-1]
    if dt_max is None:
        dt_max = 1e-4 * horizon
    grid = _refined_grid(times, dt_max)
    x = h
    out = np.empty(len(times))
    k = 0
    if times[0] == 0.0:
        out[0] = h
        k = 1
    tprev = 0.0
    sqrt_dt_cap = 4.0
    for t in grid:
        dt = t - tprev
        drift = mu * dt + (0.0 if x <= 0 else min((n - 1) / (2 * x) * dt, sqrt_dt_cap * np.sqrt(dt)))
        x = abs(x + drift + np.sqrt(dt) * gen.standard_normal())
        if k < len(times) and t == times[k]:
            out[k] = x
            k += 1
        tprev = t
    return PathGrid(times, out)


def _refined_grid(times: np.ndarray, dt_max: float) -> np.ndarray:
    """Union of the requested times with a uniform grid of step <= dt_max."""
    horizon = times[-1]
    base = np.linspace(0.0, horizon, max(int(np.ceil(horizon / dt_max)), 1) + 1)
    grid = np.union1d(base, times)
    return grid[grid > 0]


def brownian_bridge_coords(gen, t0, c0, t1, c1, times):
    """Coordinates of a d-dim Brownian bridge from c0 at t0 to c1 at t1.

    Exact: free increments over the augmented grid, then the standard
    bridge correction pinning the endpoint.  times must lie in (t0, t1].
    Returns an array of shape (len(times), d).
    """
    c0 = np.atleast_1d(np.asarray(c0, dtype=float))
    c1 = np.atleast_1d(np.asarray(c1, dtype=float))
    d = len(c0)
    aug = np.concatenate([[t0], times]) if times[-1] == t1 else np.concatenate([[t0], times, [t1]])
    dts = np.diff(aug)
    incr = gen.standard_normal((len(dts), d)) * np.sqrt(dts)[:, None]
    w = np.cumsum(incr, axis=0)
    wT = w[-1]
    frac = (aug[1:] - t0) / (t1 - t0)
    bridged = c0[None, :] + w + frac[:, None] * ((c1 - c0)[None, :] - wT[None, :])
    return bridged if times[-1] == t1 else bridged[:-1]


def _tilted_endpoint(gen, h: float, g: float, span: float) -> np.ndarray:
    """Endpoint vector of norm g for the 3-d bridge representation.

    Conditional on its norm, the endpoint of a Brownian path started at
    (h, 0, 0) has a von Mises-Fisher direction with concentration
    kappa = h g / span; pinning the endpoint at the aligned direction
    would bias the radial law whenever both endpoints are positive.
    """
    if h == 0.0 or g == 0.0:
        return np.array([g, 0.0, 0.0])
    kappa = h * g / span
    u = gen.uniform()
    if kappa < 1e-8:
        w = 2.0 * u - 1.0
    else:
        w = 1.0 + np.log(u + (1.0 - u) * np.exp(-2.0 * kappa)) / kappa
    w = min(max(w, -1.0), 1.0)
    phi_ang = gen.uniform(0.0, 2.0 * np.pi)
    r = np.sqrt(max(1.0 - w * w, 0.0))
    return g * np.array([w, r * np.cos(phi_ang), r * np.sin(phi_ang)])


def sample_bessel_bridge(rng, spec: BridgeSpec, times) -> PathGrid:
    """Exact 3-d Bessel bridge as the norm of a 3-d Brownian bridge.

    The bridge runs from (h, 0, 0) to an endpoint of norm g whose
    direction carries the exact conditional (tilted) law; endpoints are
    matched exactly when t0/t1 are among the requested times.  Only
    n = 3 is supported.
    """
    if spec.n != 3:
        raise ValueError("only 3-dimensional Bessel bridges are supported")
    times = _check_times(times)
    if times[0] < spec.t0 or times[-1] > spec.t1:
        raise ValueError("times must lie within [t0, t1]")
    gen = as_generator(rng)
    interior = times[(times > spec.t0) & (times < spec.t1)]
    vals = {}
    if len(interior):
        end = _tilted_endpoint(gen, spec.h, spec.g, spec.span)
        coords = brownian_bridge_coords(
            gen, spec.t0, [spec.h, 0.0, 0.0], spec.t1, end,
            np.concatenate([interior, [spec.t1]]),
        )[:-1]
        for t, c in zip(interior, coords):
            vals[t] = float(np.linalg.norm(c))
    out = np.empty(len(times))
    for j, t in enumerate(times):
        if t == spec.t0:
            out[j] = spec.h
        elif t == spec.t1:
            out[j] = spec.g
        else:
            out[j] = vals[t]
    return PathGrid(times, out)


def sample_excursion(rng, t0: float, t1: float, times) -> PathGrid:
    """Brownian excursion on [t0, t1]: the 3-d Bessel bridge pinned at 0."""
    return sample_bessel_bridge(rng, BridgeSpec(3, t0, 0.0, t1, 0.0), times)


def sample_coupled_bridges(rng, spec1: BridgeSpec, spec2: BridgeSpec, times,
                           n_steps: int = 2048) -> tuple[PathGrid, PathGrid]:
    """Two 3-d Bessel bridges driven by shared noise, ordered pathwise.

    Requires the same interval, n = 3, h1 <= h2 and g1 <= g2.  The upper
    bridge follows the Euler-Maruyama recursion of the bridge SDE; the
    lower bridge is carried as the nonnegative gap to the upper one,
    discretizing the difference SDE (whose continuum solution stays
    nonnegative, which is what makes the coupling monotone).  Ordering
    therefore holds by construction; the scheme is weak order 1 with the
    near-zero drift softened at scale sqrt(dt).
    """
    if (spec1.t0, spec1.t1) != (spec2.t0, spec2.t1):
        raise ValueError("bridges must share the same interval")
    if spec1.n != 3 or spec2.n != 3:
        raise ValueError("only n = 3 is supported")
    if spec1.h > spec2.h or spec1.g > spec2.g:
        raise ValueError("endpoint ordering h1 <= h2, g1 <= g2 violated")
    times = _check_times(times)
    if times[0] < spec1.t0 or times[-1] > spec1.t1:
        raise ValueError("times must lie within the bridge interval")
    gen = as_generator(rng)
    grid = np.union1d(np.linspace(spec1.t0, spec1.t1, n_steps + 1), times)
    w2 = spec2.h
    gap = spec2.h - spec1.h
    out1 = np.empty(len(times))
    out2 = np.empty(len(times))
    k = 0
    b = spec1.t1
    for i in range(len(grid)):
        t = grid[i]
        if i > 0:
            dt = t - grid[i - 1]
            rem = b - grid[i - 1]
            dB = np.sqrt(dt) * gen.standard_normal()
            kappa = 0.5 * np.sqrt(dt)
            if t >= b:
                w2, gap = spec2.g, spec2.g - spec1.g
            else:
                w1 = max(w2 - gap, 0.0)
                b2 = _bridge_drift(max(w2, kappa), spec2.g, rem)
                b1 = _bridge_drift(max(w1, kappa), spec1.g, rem)
                gap = max(gap + (b2 - b1) * dt, 0.0)
                w2 = abs(w2 + b2 * dt + dB)
        if k < len(times) and t == times[k]:
            out2[k] = w2
            out1[k] = max(w2 - gap, 0.0)
            k += 1
    return PathGrid(times, out1), PathGrid(times, out2)


def _bridge_drift(x: float, g: float, rem: float) -> float:
    """Exact 3-d Bessel-bridge drift at radius x, endpoint g, time-to-go rem.

    This is d/dx log p3(x, g; rem) for the absorbed difference kernel,
    the h-transform drift of the bridge (the 1/x generator term cancels
    against the kernel's 1/x prefactor).  For g = 0 it reduces to the
    excursion drift 1/x - x/rem.
    """
    u = 2.0 * x * g / rem
    if u < 1e-6:
        return 1.0 / x - (x + g) / rem
    e = np.exp(-u)
    return (-(x - g) + (x + g) * e) / (rem * (1.0 - e))


def descend_then_rise(rng, start: float, floor: float, times) -> tuple[np.ndarray, float]:
    """Exact path of `start + BM` until it first hits `floor`, then
    floor + BES(3) from 0 afterwards, evaluated at the given times.

    The first passage time is drawn exactly from its stable law; the
    descending piece conditioned on the passage time is a 3-d Bessel
    bridge from start-floor to 0, removing all grid-crossing bias.
    Returns (values, tau).
    """
    gen = as_generator(rng)
    times = _check_times(times)
    drop = start - floor
    if drop < 0:
        raise ValueError("floor must not exceed the start level")
    if drop == 0.0:
        tau = 0.0
    else:
        tau = drop**2 / gen.standard_normal() ** 2
    vals = np.empty(len(times))
    pre = times[times < tau]
    if len(pre):
        coords = brownian_bridge_coords(gen, 0.0, [drop, 0.0, 0.0], tau, [0.0, 0.0, 0.0], pre)
        vals[: len(pre)] = floor + np.linalg.norm(coords, axis=1)
    post = times[times >= tau]
    if len(post):
        coords = np.zeros(3)
        tprev = tau
        for j, t in enumerate(post):
            coords = coords + gen.standard_normal(3) * np.sqrt(t - tprev)
            vals[len(pre) + j] = floor + np.linalg.norm(coords)
            tprev = t
    return vals, tau


def williams_sample(rng, h: float, times) -> PathGrid:
    """BES_h(3) by splitting at its uniform global minimum.

    The minimum level is Unif(0, h); the pre-minimum piece is h + BM run
    to its first passage of that level, the post-minimum piece an
    independent BES(3) started there.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    gen = as_generator(rng)
    times = _check_times(times)
    j3 = gen.uniform(0.0, h)
    vals, _ = descend_then_rise(gen, h, j3, times)
    return PathGrid(times, vals)
