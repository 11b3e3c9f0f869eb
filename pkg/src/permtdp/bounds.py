"""Simultaneous lower bounds on true discovery proportions.

Given observed per-voxel p-values and a nondecreasing critical vector l, the
bound for a subset S is

    max over u in 1..|S| of  1 - u + #{i in S : p_i < l_u},

computed in O(|S| log |S|) with a sort and one advancing pointer (l is
nondecreasing, so the count never moves backward).  With probability at least
1 - alpha the bound undershoots the true discovery count of every subset
simultaneously, provided l was calibrated at level alpha.

The count is strict while the calibration side hands a row to l when its
sorted p-values are weakly above the curve.  Rank p-values tie with the
curve routinely (both live on coarse rational grids), and a tie must not
count as a discovery: the calibrated guarantee covers rows that fail
domination outright, not rows that touch the curve at their own supremum.
With strict counting the fraction of null datasets claiming any discovery
is at most floor(alpha*w)/w regardless of tie structure.

The parametric reference pipeline uses the same bound with l_i = i*alpha/h,
where h is the largest subset size whose worst-case members survive a
level-alpha Simes test.  ``closed_testing_oracle`` recomputes the bound by
exhaustive enumeration over subsets; it exists to check the formula, not to
be fast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibration import Calibration
from .model import TdpResult, VoxelSubset

__all__ = [
    "CriticalVector",
    "HommelH",
    "tdp_lower_bound",
    "hommel_h",
    "parametric_critical_vector",
    "calibrated_critical_vector",
    "closed_testing_oracle",
]


@dataclass(frozen=True)
class CriticalVector:
    """A nondecreasing critical vector with its provenance."""

    values: np.ndarray
    source: str                     # "permutation" | "parametric"
    alpha: float | None = None
    h: int | None = None            # parametric bookkeeping

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("critical vector must be a nonempty 1D array")
        if np.any(np.isnan(v)):
            raise ValueError("critical vector contains NaN")
        if not np.all(v[1:] >= v[:-1]):
            raise ValueError("critical vector must be nondecreasing")
        if self.source not in ("permutation", "parametric"):
            raise ValueError(f"unknown critical vector source {self.source!r}")
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return int(self.values.size)


def calibrated_critical_vector(calibration: Calibration) -> CriticalVector:
    return CriticalVector(
        values=calibration.critical_vector,
        source="permutation",
        alpha=calibration.alpha,
    )


def _check_observed(observed_p: np.ndarray) -> np.ndarray:
    p = np.asarray(observed_p, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("observed p-values must be a 1D vector")
    if np.any(np.isnan(p)) or np.any(p < 0) or np.any(p > 1):
        raise ValueError("observed p-values must lie in [0, 1]")
    return p


def tdp_lower_bound(
    subset: VoxelSubset, observed_p: np.ndarray, critical: CriticalVector
) -> TdpResult:
    """Lower confidence bound on the number of true discoveries in a subset."""
    p = _check_observed(observed_p)
    if subset.indices[-1] >= p.size:
        raise ValueError(
            f"subset index {int(subset.indices[-1])} out of range for {p.size} p-values"
        )
    s = subset.size
    if critical.m < s:
        raise ValueError(f"critical vector has {critical.m} entries but subset has {s}")
    q = np.sort(p[subset.indices])
    l = critical.values
    best = 0
    best_u = 1
    count = 0
    for u in range(1, s + 1):
        lu = l[u - 1]
        while count < s and q[count] < lu:
            count += 1
        value = 1 - u + count
        if value > best:
            best = value
            best_u = u
    return TdpResult(lower_bound=best, size=s, argmax_u=best_u)


@dataclass(frozen=True)
class HommelH:
    h: int
    alpha: float

    def __post_init__(self) -> None:
        if self.h < 0:
            raise ValueError("h cannot be negative")


def hommel_h(observed_p: np.ndarray, alpha: float) -> HommelH:
    """Largest i whose i worst p-values all stay on the Simes line j*alpha/i.

    Staying on the line is weak (>=), matching the strict discovery count.
    Scans sizes downward and stops at the first qualifying one.  h = 0 means
    not even i = 1 qualifies (every p-value is strictly below alpha), so
    everything is discoverable at this level.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    p = np.sort(_check_observed(observed_p))
    m = p.size
    for i in range(m, 0, -1):
        steps = np.arange(1, i + 1, dtype=np.float64)
        if np.all(p[m - i :] >= steps * alpha / i):
            return HommelH(h=i, alpha=float(alpha))
    return HommelH(h=0, alpha=float(alpha))


def parametric_critical_vector(h: HommelH, m: int) -> CriticalVector:
    """The vector i*alpha/h; h = 0 yields the everything-discoverable sentinel.

    With h = 0 every single hypothesis is rejected by its own Simes test, so
    the bound must return |S| for every subset; +inf entries encode that.
    """
    if m < 1:
        raise ValueError(f"m must be positive, got {m}")
    if h.h == 0:
        values = np.full(m, np.inf)
    else:
        values = np.arange(1, m + 1, dtype=np.float64) * (h.alpha / h.h)
    return CriticalVector(values=values, source="parametric", alpha=h.alpha, h=h.h)


def closed_testing_oracle(
    subset: VoxelSubset, observed_p: np.ndarray, critical: CriticalVector
) -> int:
    """Bound by brute force: |S| minus the largest surviving sub-subset.

    A candidate U survives when its sorted p-values sit weakly above the
    critical prefix l_1..l_|U| (a tie with the curve is not a rejection).
    Enumerates all 2^|S| candidates, so the subset is capped at 12 indices.
    """
    p = _check_observed(observed_p)
    if subset.size > 12:
        raise ValueError(
            f"subset of size {subset.size} too large for exhaustive enumeration (max 12)"
        )
    if critical.m < subset.size:
        raise ValueError(f"critical vector has {critical.m} entries but subset has {subset.size}")
    sub_p = p[subset.indices]
    k = subset.size
    l = critical.values
    best = 0
    for mask in range(1, 1 << k):
        members = [j for j in range(k) if mask >> j & 1]
        size = len(members)
        if size <= best:
            continue
        q = np.sort(sub_p[members])
        if np.all(q >= l[:size]):
            best = size
    return k - best
