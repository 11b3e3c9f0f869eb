"""Monotone families of critical vectors and their inversion.

A family assigns to each parameter value lam a critical vector
l_1(lam) <= ... <= l_m(lam), nondecreasing in lam for every index.  Four
families are provided:

- ``simes_shift``: the shifted Simes line (i - delta) * lam / (m - delta).
- ``aorc_shift``: the shifted asymptotically optimal rejection curve
  (i - delta) * lam / ((m - delta) - (i - delta) * (1 - lam)).
- ``higher_criticism``: the curve along which the standardized empirical
  exceedance sqrt(m) * (i/m - p) / sqrt(p (1 - p)) is constant.  The defining
  quadratic is even in lam, so the parameter is oriented by root choice: for
  lam <= 0 the lower root (which is the even closed form), for lam > 0 the
  upper root.  This makes the family strictly monotone on the whole real line
  with l_i(0) = i/m exactly.
- ``beta_quantile``: the lam-quantile of Beta(i, m + 1 - i), the distribution
  of the i-th order statistic of m uniforms.

Indices i <= delta of the shifted families evaluate to -inf: they impose no
domination constraint and can never count toward a discovery bound, which is
the operational meaning of the shift.

``max_lambda_dominated`` inverts a family on a sorted p-value row: the largest
lam whose whole critical vector stays below the row.  Closed forms exist for
all families except higher criticism, which uses monotone bisection; every
closed form is nudged down by ulps if needed so that the returned lam is
feasible under the evaluated curve in float arithmetic, and is cross-checked
against the bisection fallback in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "FAMILY_KINDS",
    "CriticalFamily",
    "evaluate",
    "critical_curve",
    "max_lambda_dominated",
    "max_lambda_rows",
    "max_lambda_bisection",
]

FAMILY_KINDS = ("simes_shift", "aorc_shift", "higher_criticism", "beta_quantile")


@dataclass(frozen=True)
class CriticalFamily:
    """A named family over m hypotheses with an optional integer-valued shift.

    ``lambda_max`` caps the parameter supremum for the families whose
    admissible range has no natural upper end (aorc_shift, higher_criticism);
    simes_shift tops out at 1 (where l_m reaches 1) and beta_quantile at 1
    (the quantile level).
    """

    kind: str
    m: int
    delta: float = 0.0
    lambda_max: float = 100.0

    def __post_init__(self) -> None:
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}; expected one of {FAMILY_KINDS}")
        if self.m < 1:
            raise ValueError(f"m must be positive, got {self.m}")
        if not np.isfinite(self.delta) or self.delta < 0:
            raise ValueError(f"delta must be a nonnegative real, got {self.delta}")
        if self.delta >= self.m:
            raise ValueError(f"delta={self.delta} must be smaller than m={self.m}")
        if self.kind in ("higher_criticism", "beta_quantile") and self.delta != 0:
            raise ValueError(f"{self.kind} does not take a shift (delta={self.delta})")
        if not np.isfinite(self.lambda_max) or self.lambda_max <= 0:
            raise ValueError(f"lambda_max must be positive and finite, got {self.lambda_max}")

    @property
    def sup_lambda(self) -> float:
        """Largest parameter value the inversion may return."""
        if self.kind in ("simes_shift", "beta_quantile"):
            return 1.0
        return float(self.lambda_max)

    def validate_lambda(self, lam: float) -> float:
        lam = float(lam)
        if not np.isfinite(lam):
            raise ValueError(f"lambda must be finite, got {lam}")
        if self.kind in ("simes_shift", "aorc_shift") and lam < 0:
            raise ValueError(f"{self.kind} requires lambda >= 0, got {lam}")
        if self.kind == "beta_quantile" and not 0.0 <= lam <= 1.0:
            raise ValueError(f"beta_quantile requires lambda in [0, 1], got {lam}")
        return lam

    def label(self) -> str:
        if self.kind in ("simes_shift", "aorc_shift") and self.delta:
            return f"{self.kind}(delta={self.delta:g})"
        return self.kind


def _curve_rows(family: CriticalFamily, lam: np.ndarray) -> np.ndarray:
    """Critical vectors for a vector of parameters: shape (len(lam), m).

    Broadcast form of the per-family formulas; the scalar path goes through
    here too so that every caller sees bitwise-identical values.
    """
    m = family.m
    delta = family.delta
    lam = np.asarray(lam, dtype=np.float64).reshape(-1, 1)
    idx = np.arange(1, m + 1, dtype=np.float64)

    if family.kind == "simes_shift":
        out = np.broadcast_to((idx - delta) / (m - delta), (lam.shape[0], m)) * lam
    elif family.kind == "aorc_shift":
        # (m-delta) - (i-delta)(1-lam) rewritten as (m-i) + (i-delta)*lam:
        # no cancellation, and l_m(lam>0) is exactly 1
        scaled = (idx - delta) * lam
        with np.errstate(invalid="ignore"):
            out = scaled / ((m - idx) + scaled)
        # lam == 0 is the monotone lower closure l = 0 (the i = m entry is 0/0)
        out = np.where(lam == 0.0, 0.0, out)
    elif family.kind == "higher_criticism":
        lam2 = lam * lam
        s = np.abs(lam) * np.sqrt(lam2 + 4.0 * idx * (1.0 - idx / m))
        upper = (2.0 * idx + lam2 + s) / (2.0 * (m + lam2))
        lower = 2.0 * idx * idx / (m * (2.0 * idx + lam2 + s))
        # both roots are <= 1 in exact arithmetic; clip the ulp overshoot
        out = np.minimum(np.where(lam >= 0, upper, lower), 1.0)
    else:  # beta_quantile
        q = np.broadcast_to(lam, (lam.shape[0], m))
        out = special.betaincinv(idx, m + 1.0 - idx, q)
        # the solver fails quietly in deep tails: NaN, or a finite value whose
        # forward image is nowhere near q; re-solve whatever flunks round-trip
        finite = np.isfinite(out)
        back = special.betainc(idx, m + 1.0 - idx, np.where(finite, out, 0.5))
        bad = (q > 0.0) & (q < 1.0) & ~(finite & (np.abs(back - q) <= 1e-6 * q))
        if np.any(bad):
            rows_bad, cols_bad = np.nonzero(bad)
            out = out.copy()
            out[rows_bad, cols_bad] = _beta_quantile_deep_tail(
                idx[cols_bad], m + 1.0 - idx[cols_bad], q[rows_bad, cols_bad]
            )

    if delta > 0:
        out = np.where(idx <= delta, -np.inf, out)
    return out


def _beta_quantile_deep_tail(a: np.ndarray, b: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Beta quantiles where betaincinv gives up (q underflowing its solver).

    Bisects log(x) against the forward betainc, which stays accurate down to
    the subnormal range.  Keeps the endpoint with betainc <= q, so the result
    never overshoots the true quantile by more than the final interval.
    """
    lo = np.full(q.shape, -745.0)   # exp underflows to 0 just below
    hi = np.zeros(q.shape)
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        below = special.betainc(a, b, np.exp(mid)) <= q
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return np.exp(lo)


def critical_curve(family: CriticalFamily, lam: float) -> np.ndarray:
    """The full critical vector l_1(lam) .. l_m(lam)."""
    lam = family.validate_lambda(lam)
    return _curve_rows(family, np.asarray([lam]))[0]


def evaluate(family: CriticalFamily, lam: float, i: int) -> float:
    """Single critical value l_i(lam); i is 1-based."""
    if not 1 <= i <= family.m:
        raise ValueError(f"index i={i} outside 1..{family.m}")
    return float(critical_curve(family, lam)[i - 1])


def _dominates(family: CriticalFamily, lam: np.ndarray, sorted_rows: np.ndarray) -> np.ndarray:
    """Per-row: does the sorted row dominate the curve at the row's lam?"""
    curves = _curve_rows(family, lam)
    return np.all(sorted_rows >= curves, axis=1)


def max_lambda_rows(family: CriticalFamily, sorted_rows: np.ndarray) -> np.ndarray:
    """Row-wise sup{lam : sorted_row dominates l(lam)} for a (w, m) array.

    Rows must be ascending-sorted p-values in (0, 1].  The sup is capped at
    the family's ``sup_lambda``; it is attained (closed inequality) because
    the families are continuous in lam.
    """
    rows = np.asarray(sorted_rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != family.m:
        raise ValueError(f"expected shape (w, {family.m}), got {rows.shape}")
    if rows.shape[0] == 0:
        return np.empty(0)
    if np.any(rows[:, 0] <= 0) or np.any(rows[:, -1] > 1):
        raise ValueError("p-values must lie in (0, 1]")
    if np.any(rows[:, 1:] < rows[:, :-1]):
        raise ValueError("rows must be sorted ascending")

    m = family.m
    delta = family.delta
    idx = np.arange(1, m + 1, dtype=np.float64)
    cap = family.sup_lambda

    if family.kind == "simes_shift":
        live = idx > delta
        lam = np.min(rows[:, live] * (m - delta) / (idx[live] - delta), axis=1)
        lam = np.minimum(lam, cap)
    elif family.kind == "aorc_shift":
        live = idx > delta
        p = rows[:, live]
        span = idx[live] - delta
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(p < 1.0, p * (m - idx[live]) / (span * (1.0 - p)), np.inf)
        lam = np.minimum(np.min(terms, axis=1), cap)
    elif family.kind == "beta_quantile":
        lam = np.min(special.betainc(idx, m + 1.0 - idx, rows), axis=1)
    else:
        lam = _bisect_rows(family, rows)

    # Float-faithful postcondition: each row must dominate the curve at its
    # own lam.  Closed-form rounding can overshoot; where the curve is steep
    # in p per unit lam a one-ulp walk stalls, so grow the step geometrically.
    # Settled rows drop out so the curve grid is only rebuilt for laggards.
    pending = np.arange(rows.shape[0])
    for k in range(48):
        ok = _dominates(family, lam[pending], rows[pending])
        pending = pending[~ok]
        if pending.size == 0:
            break
        lam[pending] -= np.spacing(np.abs(lam[pending])) * (1 << k)
    else:
        raise AssertionError("inversion failed to reach a feasible lambda")

    # Rounding can also land below the float-sup, and two rows tying on the
    # same rational must both report the candidate a direct domination check
    # accepts; climb while the next ulp up still dominates.
    pending = np.arange(rows.shape[0])
    for _ in range(64):
        up = np.minimum(np.nextafter(lam[pending], np.inf), cap)
        ok = (up > lam[pending]) & _dominates(family, up, rows[pending])
        if not ok.any():
            break
        pending = pending[ok]
        lam[pending] = up[ok]
    return lam


def max_lambda_dominated(family: CriticalFamily, sorted_p: np.ndarray) -> float:
    """sup{lam : the sorted p-value row dominates l(lam)} for one row."""
    row = np.asarray(sorted_p, dtype=np.float64).reshape(1, -1)
    return float(max_lambda_rows(family, row)[0])


def _bisect_rows(
    family: CriticalFamily, rows: np.ndarray, rel_tol: float = 1e-10
) -> np.ndarray:
    """Vectorized monotone bisection for families without a closed inverse.

    Maintains a feasible lower endpoint per row and returns it, so the result
    always dominates in float arithmetic.
    """
    w = rows.shape[0]
    cap = family.sup_lambda
    hi = np.full(w, cap)
    done_at_cap = _dominates(family, hi, rows)

    # Expand a feasible lower endpoint; curves vanish as lam -> family floor.
    lo = np.full(w, -1.0 if family.kind == "higher_criticism" else 0.0)
    for _ in range(80):
        feas = _dominates(family, lo, rows)
        if feas.all():
            break
        if family.kind != "higher_criticism":
            raise AssertionError("lambda = 0 must be feasible for this family")
        lo[~feas] *= 4.0
    else:
        raise AssertionError("could not bracket a feasible lambda")

    # Per-row trajectories are independent; freeze a row once it converges so
    # batch results match single-row runs bitwise.
    lo_a, hi_a = lo.copy(), hi.copy()
    while True:
        scale = np.maximum(1.0, np.maximum(np.abs(lo_a), np.abs(hi_a)))
        active = ~done_at_cap & (hi_a - lo_a > rel_tol * scale)
        if not np.any(active):
            break
        mid = 0.5 * (lo_a + hi_a)
        feas = _dominates(family, mid, rows)
        take = active & feas
        lo_a[take] = mid[take]
        drop = active & ~feas
        hi_a[drop] = mid[drop]
    out = np.where(done_at_cap, cap, lo_a)
    return out


def max_lambda_bisection(
    family: CriticalFamily, sorted_p: np.ndarray, rel_tol: float = 1e-10
) -> float:
    """Bisection fallback for one row; reference implementation for tests."""
    row = np.asarray(sorted_p, dtype=np.float64).reshape(1, -1)
    if row.shape[1] != family.m:
        raise ValueError(f"expected {family.m} p-values, got {row.shape[1]}")
    return float(_bisect_rows(family, row, rel_tol=rel_tol)[0])
