"""Small fixed-order quadrature helpers for density oracles.

Gauss-Legendre panels on (0, 1) with rational maps onto half-lines; the
squared map resolves slowly decaying power-law tails that defeat the
plain linear map.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = ["gauss_legendre_unit", "map_halfline", "map_halfline_sqrt"]


@lru_cache(maxsize=32)
def gauss_legendre_unit(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on (0, 1)."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def map_halfline(u: np.ndarray, scale: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """u in (0,1) -> x in (0,inf) via x = s u/(1-u); returns (x, jacobian)."""
    return scale * u / (1.0 - u), scale / (1.0 - u) ** 2


def map_halfline_sqrt(u: np.ndarray, scale: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """u in (0,1) -> x in (0,inf) via x = s (u/(1-u))^2; handles power tails."""
    r = u / (1.0 - u)
    return scale * r * r, scale * 2.0 * r / (1.0 - u) ** 2
