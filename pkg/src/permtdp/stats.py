"""Permutation statistic and p-value matrices.

For w transformations (the identity always first) and m voxels, the statistic
matrix holds one t value per (transformation, voxel).  One-sample rows are
random sign flips of the subject contrasts; two-sample rows are random
shuffles of the group labels.  P-values are per-voxel ranks: within a column,
the p-value of entry j counts the transformations at least as extreme as j,
divided by w, so every entry is a multiple of 1/w and at least 1/w.

A column with zero sample variance gets a signed-infinity sentinel when its
mean is nonzero (infinitely strong evidence, sign preserved) and exactly 0
when the mean is zero too.  Infinite sentinels compare larger than every
finite statistic and tie with equal-signed infinities, which keeps the rank
p-values well defined.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .model import SubjectContrasts
from .randomness import generator

__all__ = [
    "ALTERNATIVES",
    "PermutationScheme",
    "StatisticMatrix",
    "PValueMatrix",
    "one_sample_statistics",
    "two_sample_statistics",
    "pvalue_matrix",
    "parametric_pvalues",
]

ALTERNATIVES = ("two_sided", "greater", "less")


@dataclass(frozen=True)
class PermutationScheme:
    """How the data are rerandomized: sign flips or group-label shuffles."""

    kind: str                 # "sign_flip" | "group_label"
    w: int                    # number of transformations, identity included
    seed: int
    group_labels: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("sign_flip", "group_label"):
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if self.w < 2:
            raise ValueError(f"need at least 2 transformations, got w={self.w}")
        if self.kind == "group_label":
            if self.group_labels is None:
                raise ValueError("group_label scheme requires group_labels")
            labels = tuple(int(g) for g in self.group_labels)
            if set(labels) != {1, 2}:
                raise ValueError("group_labels must use both labels 1 and 2")
            if labels.count(1) < 2 or labels.count(2) < 2:
                raise ValueError("each group needs at least 2 subjects")
            object.__setattr__(self, "group_labels", labels)
        elif self.group_labels is not None:
            raise ValueError("sign_flip scheme takes no group_labels")


@dataclass(frozen=True)
class StatisticMatrix:
    values: np.ndarray        # (w, m) float64; row 0 is the observed data
    scheme: PermutationScheme
    alternative: str

    def __post_init__(self) -> None:
        if self.alternative not in ALTERNATIVES:
            raise ValueError(f"alternative must be one of {ALTERNATIVES}")
        if self.values.shape[0] != self.scheme.w:
            raise ValueError("statistic row count does not match scheme.w")

    @property
    def observed(self) -> np.ndarray:
        return self.values[0]

    @property
    def m(self) -> int:
        return int(self.values.shape[1])


@dataclass(frozen=True)
class PValueMatrix:
    values: np.ndarray        # (w, m) float64 in (0, 1]
    scheme: PermutationScheme
    alternative: str

    def __post_init__(self) -> None:
        v = self.values
        if v.ndim != 2:
            raise ValueError("p-value matrix must be 2D")
        if np.any(v <= 0) or np.any(v > 1):
            raise ValueError("p-values must lie in (0, 1]")

    @property
    def observed(self) -> np.ndarray:
        return self.values[0]

    @property
    def w(self) -> int:
        return int(self.values.shape[0])

    @property
    def m(self) -> int:
        return int(self.values.shape[1])


def _sign_flips(scheme: PermutationScheme, n_subjects: int) -> np.ndarray:
    rng = generator(scheme.seed)
    flips = rng.integers(0, 2, size=(scheme.w - 1, n_subjects)) * 2 - 1
    return np.vstack([np.ones((1, n_subjects), dtype=np.int64), flips]).astype(np.float64)


def _label_rows(scheme: PermutationScheme, n_subjects: int) -> np.ndarray:
    labels = np.asarray(scheme.group_labels, dtype=np.int64)
    if labels.shape[0] != n_subjects:
        raise ValueError(f"{labels.shape[0]} group labels for {n_subjects} subjects")
    rng = generator(scheme.seed)
    order = np.argsort(rng.random((scheme.w - 1, n_subjects)), axis=1)
    return np.vstack([labels[None, :], labels[order]])


def _finish_t(mean_term: np.ndarray, var: np.ndarray, scale: float) -> np.ndarray:
    """t = mean_term / sqrt(var * scale) with the zero-variance sentinel."""
    var = np.maximum(var, 0.0)   # cancellation can leave tiny negatives
    zero = var == 0.0
    denom = np.sqrt(np.where(zero, 1.0, var) * scale)
    t = mean_term / denom
    if np.any(zero):
        sentinel = np.where(mean_term > 0, np.inf, np.where(mean_term < 0, -np.inf, 0.0))
        t = np.where(zero, sentinel, t)
    return t


def one_sample_statistics(
    contrasts: SubjectContrasts,
    scheme: PermutationScheme,
    alternative: str = "two_sided",
) -> StatisticMatrix:
    """One-sample t statistics under random sign flips of each subject row.

    For flip vector e and contrasts D, the per-voxel statistic is
    mean(e*D) / sqrt(var(e*D) / J) with the unbiased variance (divisor J-1).
    """
    if scheme.kind != "sign_flip":
        raise ValueError(f"one_sample_statistics requires a sign_flip scheme, got {scheme.kind!r}")
    data = contrasts.data
    n = contrasts.n_subjects
    flips = _sign_flips(scheme, n)
    means = flips @ data / n
    sumsq = np.einsum("ij,ij->j", data, data)
    var = (sumsq[None, :] - n * means**2) / (n - 1)
    t = _finish_t(means, var, 1.0 / n)
    return StatisticMatrix(values=t, scheme=scheme, alternative=alternative)


def two_sample_statistics(
    contrasts: SubjectContrasts,
    scheme: PermutationScheme,
    alternative: str = "two_sided",
) -> StatisticMatrix:
    """Pooled-variance two-sample t statistics under group-label shuffles.

    The statistic is (mean1 - mean2) / sqrt(s_pooled^2 * (1/n1 + 1/n2)).
    """
    if scheme.kind != "group_label":
        raise ValueError(f"two_sample_statistics requires a group_label scheme, got {scheme.kind!r}")
    data = contrasts.data
    n = contrasts.n_subjects
    rows = _label_rows(scheme, n)
    g1 = (rows == 1).astype(np.float64)
    g2 = 1.0 - g1
    n1 = int(g1[0].sum())
    n2 = n - n1
    sq = data * data
    mean1 = g1 @ data / n1
    mean2 = g2 @ data / n2
    ss1 = g1 @ sq - n1 * mean1**2
    ss2 = g2 @ sq - n2 * mean2**2
    pooled = (ss1 + ss2) / (n1 + n2 - 2)
    t = _finish_t(mean1 - mean2, pooled, 1.0 / n1 + 1.0 / n2)
    return StatisticMatrix(values=t, scheme=scheme, alternative=alternative)


def _extremity_key(values: np.ndarray, alternative: str) -> np.ndarray:
    # larger key = more extreme; the "less" tail negates so >= covers all three
    if alternative == "two_sided":
        return np.abs(values)
    if alternative == "greater":
        return values
    return -values


def _ge_counts_block(keys: np.ndarray) -> np.ndarray:
    w = keys.shape[0]
    out = np.empty(keys.shape, dtype=np.float64)
    srt = np.sort(keys, axis=0)
    for c in range(keys.shape[1]):
        out[:, c] = w - np.searchsorted(srt[:, c], keys[:, c], side="left")
    return out


def pvalue_matrix(statistics: StatisticMatrix, threads: int = 1) -> PValueMatrix:
    """Per-voxel rank p-values for every transformation row.

    Entry (j, i) is #{k : row k at voxel i is at least as extreme as row j} / w,
    with extremity set by the matrix's alternative.  Columns are independent,
    so the work parallelizes across column blocks when threads > 1; results do
    not depend on the thread count.
    """
    keys = _extremity_key(statistics.values, statistics.alternative)
    if np.any(np.isnan(keys)):
        raise ValueError("statistic matrix contains NaN")
    w, m = keys.shape
    if threads > 1 and m > 1:
        blocks = np.array_split(np.arange(m), min(threads, m))
        counts = np.empty(keys.shape, dtype=np.float64)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {pool.submit(_ge_counts_block, keys[:, b]): b for b in blocks}
            for fut, b in futures.items():
                counts[:, b] = fut.result()
    else:
        counts = _ge_counts_block(keys)
    return PValueMatrix(
        values=counts / w, scheme=statistics.scheme, alternative=statistics.alternative
    )


def parametric_pvalues(observed: np.ndarray, df: int, alternative: str = "two_sided") -> np.ndarray:
    """Student-t reference p-values for an observed statistic row."""
    if alternative not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}")
    if df < 1:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    t = np.asarray(observed, dtype=np.float64)
    if alternative == "two_sided":
        return 2.0 * sps.t.sf(np.abs(t), df)
    if alternative == "greater":
        return sps.t.sf(t, df)
    return sps.t.cdf(t, df)
