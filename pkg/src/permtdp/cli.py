"""Command-line entry points.

Subcommands mirror the analysis pipeline: ``calibrate`` fits the critical
vector, ``tdp`` bounds one subset, ``cluster`` reports supra-threshold
clusters, ``simulate`` and ``validate-fwer`` drive the Monte-Carlo harness,
and ``serve`` starts the HTTP session service.  Results go to stdout as
JSON (or CSV files where noted); failures print a machine-readable JSON
error on stderr and exit 2 for anything wrong with the invocation or its
input files.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .bounds import calibrated_critical_vector, tdp_lower_bound
from .calibration import calibrate
from .clusters import build_report, threshold_clusters
from .families import FAMILY_KINDS, CriticalFamily
from .matrixio import SCHEMA_VERSION, read_json, read_matrix, read_subset, write_tdp_map
from .model import build_geometry
from .nifti import NiftiError, mask_geometry, read_nifti_volume, subjects_from_volume
from .simulate import SimulationSpec, run_fwer_validation, run_power_grid
from .stats import (
    PermutationScheme,
    one_sample_statistics,
    pvalue_matrix,
    two_sample_statistics,
)

__all__ = ["main"]

# short names accepted on the command line, e.g. --family simes
_FAMILY_ALIASES = {
    "simes": "simes_shift",
    "aorc": "aorc_shift",
    "hc": "higher_criticism",
    "higher-criticism": "higher_criticism",
    "beta": "beta_quantile",
}


class CliError(ValueError):
    """Bad invocation or unusable input; rendered as JSON, exit 2."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", message)


def _emit_error(code: str, message: str) -> None:
    record = {"schema_version": SCHEMA_VERSION, "error": {"code": code, "message": message}}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)


def _print_json(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _resolve_family(name: str) -> str:
    kind = _FAMILY_ALIASES.get(name.lower(), name.lower())
    if kind not in FAMILY_KINDS:
        known = sorted(set(_FAMILY_ALIASES) | set(FAMILY_KINDS))
        raise CliError("usage", f"unknown family {name!r}; expected one of {', '.join(known)}")
    return kind


def load_inputs(data_path, geometry_path=None):
    """Contrast matrix plus (optional) geometry from their file paths.

    4D NIfTI data brings its own grid (all-voxel geometry when no mask is
    given); delimited matrices carry no geometry unless a mask supplies one.
    """
    geometry = None
    if geometry_path:
        geometry = mask_geometry(read_nifti_volume(geometry_path))
    if str(data_path).endswith(".nii"):
        volume = read_nifti_volume(data_path)
        if geometry is None:
            geometry = build_geometry(volume.dims, np.ones(volume.dims, dtype=bool))
        data = subjects_from_volume(volume, geometry)
    else:
        data = read_matrix(data_path)
        if geometry is not None and geometry.m != data.m:
            raise ValueError(
                f"data has {data.m} voxel columns but the geometry mask has {geometry.m}"
            )
    return data, geometry


def run_pipeline(data, *, family, alpha, delta=0.0, w=1000, seed=0, labels=None, threads=1):
    """statistics -> p-values -> calibration over one contrast matrix.

    ``labels`` (a sequence of group labels) switches to the two-sample
    statistic under label shuffles; otherwise sign flips.
    """
    if labels:
        scheme = PermutationScheme(kind="group_label", w=w, seed=seed,
                                   group_labels=tuple(labels))
        stats = two_sample_statistics(data, scheme)
    else:
        scheme = PermutationScheme(kind="sign_flip", w=w, seed=seed)
        stats = one_sample_statistics(data, scheme)
    pvals = pvalue_matrix(stats, threads=threads)
    fam = CriticalFamily(_resolve_family(family), m=data.m, delta=delta)
    cal = calibrate(pvals, fam, alpha)
    return stats, pvals, cal


def _load_data(args):
    try:
        return load_inputs(args.data, args.geometry)
    except ValueError as err:
        if "geometry mask" in str(err):
            raise CliError("usage", str(err))
        raise


def _pipeline(args, data):
    if args.labels:
        try:
            labels = tuple(int(part) for part in args.labels.split(","))
        except ValueError:
            raise CliError("usage", f"--labels must be comma-separated integers, got {args.labels!r}")
    else:
        labels = None
    return run_pipeline(
        data, family=args.family, alpha=args.alpha, delta=args.delta,
        w=args.permutations, seed=args.seed, labels=labels, threads=args.threads,
    )


def _cmd_calibrate(args) -> int:
    data, _ = _load_data(args)
    _, _, cal = _pipeline(args, data)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "alpha": cal.alpha,
        "family": cal.family.kind,
        "delta": cal.family.delta,
        "w": cal.w,
        "lambda_alpha": cal.lambda_alpha,
    }
    if args.include_lambdas:
        payload["per_permutation_lambdas"] = [float(v) for v in cal.per_permutation_lambdas]
    _print_json(payload)
    return 0


def _cmd_tdp(args) -> int:
    data, geometry = _load_data(args)
    subset = read_subset(args.subset, geometry=geometry, m=data.m)
    _, pvals, cal = _pipeline(args, data)
    result = tdp_lower_bound(subset, pvals.values[0], calibrated_critical_vector(cal))
    _print_json({
        "schema_version": SCHEMA_VERSION,
        "size": result.size,
        "lower_bound": result.lower_bound,
        "tdp": float(result.tdp),
        "argmax_u": result.argmax_u,
    })
    return 0


def _cmd_cluster(args) -> int:
    data, geometry = _load_data(args)
    if geometry is None:
        raise CliError("usage", "cluster requires --geometry (or 4D NIfTI --data)")
    stats, pvals, cal = _pipeline(args, data)
    subsets = threshold_clusters(stats.observed, geometry, args.threshold, args.connectivity)
    report = build_report(
        subsets,
        pvals.values[0],
        calibrated_critical_vector(cal),
        stats.observed,
        geometry,
        threshold=args.threshold,
        connectivity=args.connectivity,
    )
    if args.tdp_map:
        fmt = "csv" if str(args.tdp_map).endswith(".csv") else "nifti"
        write_tdp_map(report, geometry, args.tdp_map, format=fmt)
    _print_json(report.to_dict(voxels=args.voxels))
    return 0


def _simulation_spec(record: dict, context: str) -> SimulationSpec:
    try:
        return SimulationSpec(**record)
    except TypeError as err:
        raise CliError("usage", f"{context}: {err}")


def _cmd_simulate(args) -> int:
    grid = read_json(args.grid)
    if isinstance(grid, dict):
        grid.pop("schema_version", None)
        grid = grid.get("specs")
    if not isinstance(grid, list) or not grid:
        raise CliError("usage", f"{args.grid}: expected a nonempty list of grid points")
    specs = [_simulation_spec(point, f"{args.grid} entry {k}") for k, point in enumerate(grid)]
    result = run_power_grid(specs)
    result.to_csv(args.out)
    _print_json({
        "schema_version": SCHEMA_VERSION,
        "kind": result.kind,
        "summary": result.summary,
        "out": str(args.out),
    })
    return 0


def _cmd_validate_fwer(args) -> int:
    record = read_json(args.spec)
    if not isinstance(record, dict):
        raise CliError("usage", f"{args.spec}: expected a JSON object of spec fields")
    record.pop("schema_version", None)
    pool_size = record.pop("pool_size", 103)
    spec = _simulation_spec(record, str(args.spec))
    result = run_fwer_validation(spec, pool_size=pool_size)
    if args.out:
        result.to_csv(args.out)
    _print_json(result.to_dict())
    return 0


def _parse_bind(bind: str) -> "tuple[str, int]":
    host, sep, port = bind.rpartition(":")
    if not sep or not port.isdigit():
        raise CliError("usage", f"--bind must look like host:port, got {bind!r}")
    return host or "127.0.0.1", int(port)


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    host, port = _parse_bind(args.bind)
    app = create_app(data_dir=args.data_dir, max_sessions=args.max_sessions)
    uvicorn.run(app, host=host, port=port)
    return 0


def _add_pipeline_flags(parser) -> None:
    parser.add_argument("--data", required=True, help="contrast matrix: CSV/TSV or 4D NIfTI")
    parser.add_argument("--geometry", help="3D NIfTI mask defining the voxel grid")
    parser.add_argument("--alpha", type=float, default=0.05)
    parser.add_argument("--family", default="simes",
                        help="simes | aorc | hc | beta (or full family names)")
    parser.add_argument("--delta", type=float, default=0.0, help="shift for simes/aorc")
    parser.add_argument("--permutations", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--labels",
                        help="comma-separated group labels; switches to the two-sample statistic")
    parser.add_argument("--threads", type=int, default=1)


def build_parser() -> _Parser:
    parser = _Parser(prog="permtdp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("calibrate", help="fit the permutation critical vector")
    _add_pipeline_flags(p)
    p.add_argument("--include-lambdas", action="store_true",
                   help="also emit the per-permutation lambda values")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("tdp", help="lower-bound true discoveries in one subset")
    _add_pipeline_flags(p)
    p.add_argument("--subset", required=True, help="JSON file listing voxel indices or coords")
    p.set_defaults(func=_cmd_tdp)

    p = sub.add_parser("cluster", help="report supra-threshold clusters with TDP bounds")
    _add_pipeline_flags(p)
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--connectivity", type=int, default=26)
    p.add_argument("--voxels", action="store_true", help="include voxel indices per cluster")
    p.add_argument("--tdp-map", help="also write a per-voxel TDP map (.nii or .csv)")
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("simulate", help="run a power/comparison grid")
    p.add_argument("--grid", required=True, help="JSON list of simulation grid points")
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("validate-fwer", help="global-null error-rate study")
    p.add_argument("--spec", required=True, help="JSON simulation spec (nu must be 1)")
    p.add_argument("--out", help="optional CSV output path")
    p.set_defaults(func=_cmd_validate_fwer)

    p = sub.add_parser("serve", help="start the HTTP session service")
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.add_argument("--data-dir", help="directory for session snapshots")
    p.add_argument("--max-sessions", type=int, default=64)
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            raise CliError("usage", "missing subcommand; see permtdp --help")
        return args.func(args)
    except CliError as err:
        _emit_error(err.code, str(err))
        return 2
    except NiftiError as err:
        _emit_error(err.code, str(err))
        return 2
    except FileNotFoundError as err:
        _emit_error("missing_file", str(err))
        return 2
    except OSError as err:
        _emit_error("io_error", str(err))
        return 2
    except ValueError as err:
        _emit_error("invalid_input", str(err))
        return 2


if __name__ == "__main__":
    sys.exit(main())
