"""Kolmogorov-Smirnov machinery and the uniform experiment report type."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import stats

__all__ = ["TestReport", "ks_two_sample", "ks_one_sample"]


@dataclass
class TestReport:
    """Outcome of one statistical experiment or sub-test.

    ``verdict`` must be consistent with the declared threshold; reports
    serialize deterministically (runtime is excluded from the canonical
    form so reruns are byte-identical).
    """

    name: str
    n: dict[str, int]
    statistic: float
    p_value: float | None
    seed: int
    tolerance: dict[str, float]
    verdict: bool
    metadata: dict[str, Any] = field(default_factory=dict)
    runtime_s: float | None = None

    def __post_init__(self) -> None:
        if self.p_value is not None and not (0.0 <= self.p_value <= 1.0):
            raise ValueError("p_value must lie in [0, 1]")

    def to_dict(self, canonical: bool = True) -> dict[str, Any]:
        out = {
            "name": self.name,
            "n": dict(self.n),
            "statistic": self.statistic,
            "p_value": self.p_value,
            "seed": self.seed,
            "tolerance": dict(self.tolerance),
            "verdict": bool(self.verdict),
            "metadata": _plain(self.metadata),
        }
        if not canonical:
            out["runtime_s"] = self.runtime_s
        return out

    def to_json(self, canonical: bool = True) -> str:
        return json.dumps(self.to_dict(canonical=canonical), sort_keys=True)


def _plain(obj):
    """Recursively convert numpy scalars/arrays for JSON serialization."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def ks_two_sample(s1, s2, name: str = "ks-two-sample", seed: int = 0,
                  p_threshold: float = 0.01) -> TestReport:
    """Exact two-sample KS statistic with the asymptotic p-value."""
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    if len(s1) == 0 or len(s2) == 0:
        raise ValueError("samples must be nonempty")
    res = stats.ks_2samp(s1, s2, method="asymp")
    return TestReport(
        name=name,
        n={"n1": len(s1), "n2": len(s2)},
        statistic=float(res.statistic),
        p_value=float(res.pvalue),
        seed=seed,
        tolerance={"p_threshold": p_threshold},
        verdict=bool(res.pvalue > p_threshold),
    )


def ks_one_sample(s, cdf, name: str = "ks-one-sample", seed: int = 0,
                  p_threshold: float = 0.01) -> TestReport:
    """One-sample KS against a callable CDF (checked for monotonicity)."""
    s = np.asarray(s, dtype=float)
    if len(s) == 0:
        raise ValueError("sample must be nonempty")
    probe = cdf(np.sort(s))
    probe = np.asarray(probe, dtype=float)
    if np.any(np.diff(probe) < -1e-12) or probe.min() < -1e-12 or probe.max() > 1 + 1e-12:
        raise ValueError("cdf must be nondecreasing with range within [0, 1]")
    res = stats.ks_1samp(s, cdf, method="asymp")
    return TestReport(
        name=name,
        n={"n": len(s)},
        statistic=float(res.statistic),
        p_value=float(res.pvalue),
        seed=seed,
        tolerance={"p_threshold": p_threshold},
        verdict=bool(res.pvalue > p_threshold),
    )
