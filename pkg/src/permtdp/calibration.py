"""Calibrating a critical-vector family on a permutation p-value matrix.

Each row of the matrix is reduced to the largest family parameter it
dominates (``max_lambda_rows``).  The calibrated parameter lambda_alpha is
then the k-th smallest of the w per-row values with k = floor(alpha*w) + 1:
the largest lambda for which at least a (1 - alpha) fraction of rows still
dominate the critical vector, the identity row included.  The resulting
vector l(lambda_alpha) supports simultaneous discovery-proportion bounds over
all voxel subsets at confidence 1 - alpha.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .families import CriticalFamily, critical_curve, max_lambda_rows
from .stats import PValueMatrix

__all__ = ["Calibration", "calibrate", "calibrate_values", "condition_count"]

# Absorbs float rounding when alpha*w is mathematically integral (0.3*10 != 3.0).
_GRID_EPS = 1e-9


def _order_index(alpha: float, w: int) -> int:
    """k = floor(alpha*w) + 1, 1-based position in the ascending sort."""
    return int(np.floor(alpha * w + _GRID_EPS)) + 1


def required_count(alpha: float, w: int) -> int:
    """ceil((1 - alpha) * w), the domination count lambda_alpha must keep."""
    return int(np.ceil((1.0 - alpha) * w - _GRID_EPS))


@dataclass(frozen=True)
class Calibration:
    family: CriticalFamily
    alpha: float
    lambda_alpha: float
    per_permutation_lambdas: np.ndarray   # (w,), in row order
    critical_vector: np.ndarray           # (m,), l(lambda_alpha)

    @property
    def w(self) -> int:
        return int(self.per_permutation_lambdas.shape[0])


def _select_lambda(lambdas: np.ndarray, alpha: float) -> float:
    w = lambdas.shape[0]
    k = _order_index(alpha, w)
    if k == 1:
        warnings.warn(
            f"alpha*w = {alpha * w:g} < 1: no permutation budget at this resolution, "
            "the calibration is powerless (lambda_alpha = smallest per-row lambda)",
            stacklevel=3,
        )
    return float(np.partition(lambdas, k - 1)[k - 1])


def calibrate_values(
    values: np.ndarray, family: CriticalFamily, alpha: float
) -> Calibration:
    """Calibrate on a raw (w, m) p-value array (rows need not be sorted)."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("p-value array must be 2D")
    if values.shape[1] != family.m:
        raise ValueError(
            f"p-value matrix has {values.shape[1]} columns but family has m={family.m}"
        )
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    sorted_rows = np.sort(values, axis=1)
    lambdas = max_lambda_rows(family, sorted_rows)
    lam = _select_lambda(lambdas, alpha)
    return Calibration(
        family=family,
        alpha=float(alpha),
        lambda_alpha=lam,
        per_permutation_lambdas=lambdas,
        critical_vector=critical_curve(family, lam),
    )


def calibrate(pvals: PValueMatrix, family: CriticalFamily, alpha: float) -> Calibration:
    """Calibrate a family at simultaneous confidence 1 - alpha."""
    return calibrate_values(pvals.values, family, alpha)


def condition_count(
    pvals: "PValueMatrix | np.ndarray", family: CriticalFamily, lam: float
) -> int:
    """Number of rows whose sorted p-values dominate l(lam) elementwise."""
    values = pvals.values if isinstance(pvals, PValueMatrix) else np.asarray(pvals, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != family.m:
        raise ValueError(f"expected a (w, {family.m}) p-value array, got shape {values.shape}")
    curve = critical_curve(family, lam)
    sorted_rows = np.sort(values, axis=1)
    return int(np.sum(np.all(sorted_rows >= curve[None, :], axis=1)))
