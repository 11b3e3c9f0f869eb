"""Monte-Carlo studies: error-rate validation, power grids, coverage.

Data follow an equicorrelated normal model: each observation row is
sqrt(rho2) * g * 1 + sqrt(1 - rho2) * z with a shared scalar g and an
i.i.d. vector z, so every pair of variables has correlation rho2.  A signal
of fixed magnitude is added to the active columns; the magnitude is solved
numerically so the plain one-sample t-test would detect it with power 0.8.

All replicates draw from streams keyed by (seed, replicate, purpose), so a
study is reproducible bit for bit and replicates could run in any order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize
from scipy import stats as sps

from .bounds import (
    calibrated_critical_vector,
    hommel_h,
    parametric_critical_vector,
    tdp_lower_bound,
)
from .calibration import calibrate_values
from .families import FAMILY_KINDS, CriticalFamily
from .model import SubjectContrasts, VoxelSubset
from .randomness import derive_seed, generator
from .stats import (
    PermutationScheme,
    one_sample_statistics,
    parametric_pvalues,
    pvalue_matrix,
    two_sample_statistics,
)

__all__ = [
    "SimulationSpec",
    "GridPointResult",
    "SimulationResult",
    "signal_magnitude",
    "generate_dataset",
    "apply_distortion",
    "run_fwer_validation",
    "run_power_grid",
    "run_coverage",
]

_COUNT_EPS = 1e-9

# purpose codes for derived streams
_DRAW, _SELECT, _SCHEME, _BATTERY = 1, 2, 3, 4

CSV_COLUMNS = ("rho2", "nu", "family", "delta", "method", "mean_tdp", "sd_tdp",
               "replications", "seed")


@dataclass(frozen=True)
class SimulationSpec:
    """One grid point of a study."""

    n: int
    m: int
    rho2: float
    nu: float
    alpha: float
    w: int
    replications: int
    family: str = "simes_shift"
    delta: float = 0.0
    seed: int = 0
    distortion_kappa: "float | None" = None

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"need at least 2 observations, got n={self.n}")
        if self.m < 1:
            raise ValueError(f"need at least 1 variable, got m={self.m}")
        if not 0.0 <= self.rho2 <= 1.0:
            raise ValueError(f"rho2 must lie in [0, 1], got {self.rho2}")
        if not 0.0 <= self.nu <= 1.0:
            raise ValueError(f"nu must lie in [0, 1], got {self.nu}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.w < 2:
            raise ValueError(f"need at least 2 permutations, got w={self.w}")
        if self.replications < 1:
            raise ValueError("need at least 1 replication")
        if self.family not in FAMILY_KINDS:
            raise ValueError(f"unknown family {self.family!r}")
        if self.distortion_kappa is not None and self.distortion_kappa <= 1.0:
            raise ValueError("distortion kappa must exceed 1")
        CriticalFamily(self.family, m=self.m, delta=self.delta)   # validates the pair

    @property
    def n_active(self) -> int:
        """Active columns: the leading ceil(m * (1 - nu)), nudged against
        float noise so mathematically integral products stay integral."""
        return int(math.ceil(self.m * (1.0 - self.nu) - _COUNT_EPS))

    def critical_family(self) -> CriticalFamily:
        return CriticalFamily(self.family, m=self.m, delta=self.delta)


@lru_cache(maxsize=None)
def signal_magnitude(n: int, alpha: float, power: float = 0.8) -> float:
    """Per-observation mean shift giving the one-sample t-test this power.

    Solves the noncentral-t power equation for the two-sided level-alpha
    test with n observations and unit noise variance.  Cached: every
    replicate of a grid point asks for the same magnitude.
    """
    if n < 2:
        raise ValueError("need at least 2 observations")
    if not 0.0 < power < 1.0:
        raise ValueError("power must lie in (0, 1)")
    df = n - 1
    tcrit = sps.t.ppf(1.0 - alpha / 2.0, df)

    def attained(ncp: float) -> float:
        return float(sps.nct.sf(tcrit, df, ncp) + sps.nct.cdf(-tcrit, df, ncp)) - power

    hi = 1.0
    while attained(hi) < 0:
        hi *= 2.0
        if hi > 1e6:
            raise RuntimeError("power equation failed to bracket")
    ncp = optimize.brentq(attained, 0.0, hi, xtol=1e-12, rtol=1e-12)
    return float(ncp / math.sqrt(n))


def _noise(rng: np.random.Generator, n: int, m: int, rho2: float) -> np.ndarray:
    g = rng.standard_normal((n, 1))
    z = rng.standard_normal((n, m))
    return math.sqrt(rho2) * g + math.sqrt(1.0 - rho2) * z


def generate_dataset(spec: SimulationSpec, replicate: int) -> SubjectContrasts:
    """One replicate's observations-by-variables matrix, signal included."""
    rng = generator(spec.seed, replicate, _DRAW)
    data = _noise(rng, spec.n, spec.m, spec.rho2)
    a = spec.n_active
    if a > 0:
        data[:, :a] += signal_magnitude(spec.n, spec.alpha)
    return SubjectContrasts(data)


def apply_distortion(values: np.ndarray, kappa: float, null_columns: np.ndarray) -> np.ndarray:
    """Make null p-values anticonservative: p <- p^kappa, kappa > 1.

    The transform hits every permutation row of the selected columns alike,
    so rows stay exchangeable and the calibration guarantee is untouched
    while null p-values crowd toward zero.
    """
    if kappa <= 1.0:
        raise ValueError("distortion kappa must exceed 1")
    out = np.array(values, dtype=np.float64, copy=True)
    out[:, null_columns] **= kappa
    return out


def _null_columns(spec: SimulationSpec) -> np.ndarray:
    mask = np.ones(spec.m, dtype=bool)
    mask[: spec.n_active] = False
    return mask


def _permutation_bound(
    spec: SimulationSpec, pvals: np.ndarray, subset: VoxelSubset
) -> int:
    if spec.distortion_kappa is not None:
        pvals = apply_distortion(pvals, spec.distortion_kappa, _null_columns(spec))
    cal = calibrate_values(pvals, spec.critical_family(), spec.alpha)
    return tdp_lower_bound(subset, pvals[0], calibrated_critical_vector(cal)).lower_bound


def _parametric_bound(
    spec: SimulationSpec, observed_t: np.ndarray, df: int, subset: VoxelSubset
) -> int:
    p = parametric_pvalues(observed_t, df)
    if spec.distortion_kappa is not None:
        p = np.array(p, copy=True)
        nulls = _null_columns(spec)
        p[nulls] **= spec.distortion_kappa
    vector = parametric_critical_vector(hommel_h(p, spec.alpha), spec.m)
    return tdp_lower_bound(subset, p, vector).lower_bound


@dataclass(frozen=True)
class GridPointResult:
    spec: SimulationSpec
    method: str                    # "permutation" | "parametric"
    values: tuple                  # per-replicate measurements, replicate order

    @property
    def mean_tdp(self) -> float:
        return float(np.mean(self.values)) / self.spec.m

    @property
    def sd_tdp(self) -> float:
        if len(self.values) < 2:
            return 0.0
        return float(np.std(self.values, ddof=1)) / self.spec.m

    def csv_row(self) -> dict:
        return {
            "rho2": self.spec.rho2,
            "nu": self.spec.nu,
            "family": self.spec.family,
            "delta": self.spec.delta,
            "method": self.method,
            "mean_tdp": self.mean_tdp,
            "sd_tdp": self.sd_tdp,
            "replications": self.spec.replications,
            "seed": self.spec.seed,
        }


@dataclass(frozen=True)
class SimulationResult:
    kind: str                      # "fwer" | "power" | "coverage"
    points: tuple
    summary: dict

    def to_dict(self) -> dict:
        return {
            "schema_version": "1",
            "kind": self.kind,
            "summary": self.summary,
            "points": [
                {**p.csv_row(), "values": [float(v) for v in p.values]} for p in self.points
            ],
        }

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for p in self.points:
                row = p.csv_row()
                fh.write(",".join("%.10g" % row[c] if isinstance(row[c], float) else str(row[c])
                                  for c in CSV_COLUMNS) + "\n")


def run_fwer_validation(spec: SimulationSpec, pool_size: int = 103) -> SimulationResult:
    """Global-null error rate of the full two-sample pipeline.

    Each replicate draws a pool of exchangeable null subjects, shuffles the
    subject numbers, keeps the first ``spec.n``, and splits them into two
    equal pseudo-groups.  A replicate counts against the error rate when the
    whole-set bound claims any discovery.
    """
    if spec.nu != 1.0:
        raise ValueError("error-rate validation requires nu = 1 (global null)")
    if spec.n % 2 != 0:
        raise ValueError("two-sample split needs an even n")
    if pool_size < spec.n:
        raise ValueError(f"pool of {pool_size} cannot supply {spec.n} subjects")
    half = spec.n // 2
    labels = (1,) * half + (2,) * half
    everything = VoxelSubset(np.arange(spec.m))
    df = spec.n - 2
    perm_bounds, param_bounds = [], []
    for rep in range(spec.replications):
        pool = _noise(generator(spec.seed, rep, _DRAW), pool_size, spec.m, spec.rho2)
        order = generator(spec.seed, rep, _SELECT).permutation(pool_size)
        data = SubjectContrasts(pool[order[: spec.n]])
        scheme = PermutationScheme(
            kind="group_label", w=spec.w, seed=derive_seed(spec.seed, rep, _SCHEME),
            group_labels=labels,
        )
        stats = two_sample_statistics(data, scheme)
        perm_bounds.append(_permutation_bound(spec, pvalue_matrix(stats).values, everything))
        param_bounds.append(_parametric_bound(spec, stats.observed, df, everything))
    points = (
        GridPointResult(spec, "permutation", tuple(perm_bounds)),
        GridPointResult(spec, "parametric", tuple(param_bounds)),
    )
    reps = spec.replications
    summary = {"alpha": spec.alpha, "replications": reps}
    for point in points:
        rate = float(np.mean([v >= 1 for v in point.values]))
        summary[f"fwer_{point.method}"] = rate
        summary[f"se_{point.method}"] = math.sqrt(rate * (1.0 - rate) / reps)
        summary[f"mean_tdp_{point.method}"] = point.mean_tdp
    return SimulationResult(kind="fwer", points=points, summary=summary)


def run_power_grid(
    specs: "list[SimulationSpec]",
    methods: tuple = ("permutation", "parametric"),
) -> SimulationResult:
    """Mean whole-set discovery proportion per grid point and method.

    Methods share each replicate's dataset, so cross-method differences are
    paired and their Monte-Carlo error shrinks accordingly.
    """
    if not specs:
        raise ValueError("empty simulation grid")
    points = []
    for spec in specs:
        everything = VoxelSubset(np.arange(spec.m))
        per_method = {name: [] for name in methods}
        for rep in range(spec.replications):
            data = generate_dataset(spec, rep)
            scheme = PermutationScheme(
                kind="sign_flip", w=spec.w, seed=derive_seed(spec.seed, rep, _SCHEME)
            )
            stats = one_sample_statistics(data, scheme)
            if "permutation" in per_method:
                per_method["permutation"].append(
                    _permutation_bound(spec, pvalue_matrix(stats).values, everything)
                )
            if "parametric" in per_method:
                per_method["parametric"].append(
                    _parametric_bound(spec, stats.observed, spec.n - 1, everything)
                )
        for name in methods:
            points.append(GridPointResult(spec, name, tuple(per_method[name])))
    return SimulationResult(kind="power", points=tuple(points), summary={
        "grid_points": len(specs), "methods": list(methods),
    })


def run_coverage(spec: SimulationSpec, n_subsets: int = 20) -> SimulationResult:
    """Simultaneous coverage of the bound over random subset batteries.

    Per replicate, a battery of random subsets is checked at once: a
    violation means some subset's bound exceeded its true active count.
    The guarantee is simultaneous, so one replicate contributes one
    success/failure regardless of battery size.
    """
    active = np.zeros(spec.m, dtype=bool)
    active[: spec.n_active] = True
    violations_perm, violations_param = [], []
    for rep in range(spec.replications):
        data = generate_dataset(spec, rep)
        scheme = PermutationScheme(
            kind="sign_flip", w=spec.w, seed=derive_seed(spec.seed, rep, _SCHEME)
        )
        stats = one_sample_statistics(data, scheme)
        pvals = pvalue_matrix(stats).values
        cal = calibrate_values(pvals, spec.critical_family(), spec.alpha)
        perm_vector = calibrated_critical_vector(cal)
        param_p = parametric_pvalues(stats.observed, spec.n - 1)
        param_vector = parametric_critical_vector(hommel_h(param_p, spec.alpha), spec.m)
        battery_rng = generator(spec.seed, rep, _BATTERY)
        bad_perm = bad_param = False
        for _ in range(n_subsets):
            size = int(battery_rng.integers(1, spec.m + 1))
            subset = VoxelSubset(battery_rng.choice(spec.m, size=size, replace=False))
            truth = int(active[subset.indices].sum())
            if tdp_lower_bound(subset, pvals[0], perm_vector).lower_bound > truth:
                bad_perm = True
            if tdp_lower_bound(subset, param_p, param_vector).lower_bound > truth:
                bad_param = True
        violations_perm.append(bad_perm)
        violations_param.append(bad_param)
    reps = spec.replications
    points = (
        GridPointResult(spec, "permutation", tuple(float(v) for v in violations_perm)),
        GridPointResult(spec, "parametric", tuple(float(v) for v in violations_param)),
    )
    summary = {"alpha": spec.alpha, "replications": reps, "n_subsets": n_subsets}
    for point in points:
        rate = float(np.mean(point.values))
        summary[f"coverage_{point.method}"] = 1.0 - rate
        summary[f"se_{point.method}"] = math.sqrt(max(rate * (1.0 - rate), 1e-12) / reps)
    return SimulationResult(kind="coverage", points=points, summary=summary)
