"""Permutation-calibrated simultaneous lower bounds on true discovery
proportions, with cluster formation and drill-down for volumetric maps.

The numerical core is importable from the package root.  The command line
lives in :mod:`permtdp.cli` and the HTTP session service in
:mod:`permtdp.service`; neither is imported here, so plain library use
does not pull in the web stack.
"""

from .bounds import (
    CriticalVector,
    HommelH,
    calibrated_critical_vector,
    closed_testing_oracle,
    hommel_h,
    parametric_critical_vector,
    tdp_lower_bound,
)
from .calibration import Calibration, calibrate, calibrate_values, condition_count
from .clusters import (
    CONNECTIVITIES,
    ClusterEntry,
    ClusterReport,
    build_report,
    drill_down,
    tdp_map,
    threshold_clusters,
)
from .families import FAMILY_KINDS, CriticalFamily, critical_curve, evaluate
from .model import (
    SubjectContrasts,
    TdpResult,
    VolumeGeometry,
    VoxelSubset,
    build_geometry,
    subset_from_coords,
)
from .nifti import (
    Nifti1Volume,
    NiftiError,
    mask_geometry,
    read_nifti_volume,
    subjects_from_volume,
    write_nifti_volume,
)
from .simulate import (
    SimulationSpec,
    generate_dataset,
    run_coverage,
    run_fwer_validation,
    run_power_grid,
    signal_magnitude,
)
from .stats import (
    PermutationScheme,
    PValueMatrix,
    StatisticMatrix,
    one_sample_statistics,
    parametric_pvalues,
    pvalue_matrix,
    two_sample_statistics,
)

__version__ = "0.1.0"

__all__ = [
    "CONNECTIVITIES",
    "FAMILY_KINDS",
    "Calibration",
    "ClusterEntry",
    "ClusterReport",
    "CriticalFamily",
    "CriticalVector",
    "HommelH",
    "Nifti1Volume",
    "NiftiError",
    "PValueMatrix",
    "PermutationScheme",
    "SimulationSpec",
    "StatisticMatrix",
    "SubjectContrasts",
    "TdpResult",
    "VolumeGeometry",
    "VoxelSubset",
    "build_geometry",
    "build_report",
    "calibrate",
    "calibrate_values",
    "calibrated_critical_vector",
    "closed_testing_oracle",
    "condition_count",
    "critical_curve",
    "drill_down",
    "evaluate",
    "generate_dataset",
    "hommel_h",
    "mask_geometry",
    "one_sample_statistics",
    "parametric_critical_vector",
    "parametric_pvalues",
    "pvalue_matrix",
    "read_nifti_volume",
    "run_coverage",
    "run_fwer_validation",
    "run_power_grid",
    "signal_magnitude",
    "subjects_from_volume",
    "subset_from_coords",
    "tdp_lower_bound",
    "tdp_map",
    "threshold_clusters",
    "two_sample_statistics",
    "write_nifti_volume",
    "__version__",
]
