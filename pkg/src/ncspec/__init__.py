"""ncspec — spectra and outliers of polynomials in Ginibre and deterministic
matrices.

The pipeline: parse a noncommutative polynomial (:mod:`ncspec.ncpoly`), build
its certified linearization (:mod:`ncspec.linearize`), decide membership in
the limiting spectrum via the operator-valued criterion
(:mod:`ncspec.freespec`), and predict/match outlier eigenvalues with the
low-rank determinant machinery (:mod:`ncspec.outliers`).  `ncspec.cli` wires
everything to config files, CSV/JSON artifacts and SVG figures, with the
built-in models of :mod:`ncspec.presets` runnable as `ncspec example <id>`.
"""

from ncspec.ncpoly import (
    MatrixAssignment,
    NcPolynomial,
    adjoint,
    evaluate,
    parse_polynomial,
    render,
    zero_circulars,
)
from ncspec.linearize import (
    Linearization,
    ResolventSolver,
    eval_resolvent,
    linearize,
    verify_schur,
)
from ncspec.randmat import (
    BalancedSign,
    DiagSpec,
    EnsembleSpec,
    FromFile,
    GueRealization,
    eigenvalues,
    generate_deterministic,
    read_eigenvalues_csv,
    sample_iid,
    smallest_singular,
    write_eigenvalues_csv,
)
from ncspec.freespec import (
    HermitizedModel,
    SpectrumMap,
    SpectrumVerdict,
    Tolerances,
    choi_matrix,
    delta1,
    delta1_radius,
    edge_of_support,
    is_outside_spectrum,
    spectrum_grid,
    write_spectrum_csv,
)
from ncspec.outliers import (
    Annulus,
    Decomposition,
    MapComplement,
    OutlierReport,
    Rectangle,
    contraction_radius,
    det_ratio,
    factor_perturbation,
    match_outliers,
    outlier_indicator,
    predicted_outliers,
    write_report_json,
)
from ncspec.presets import ExamplePreset, get_example
from ncspec.cli import RunConfig, load_config, main, preset_config

__all__ = [
    "MatrixAssignment",
    "NcPolynomial",
    "adjoint",
    "evaluate",
    "parse_polynomial",
    "render",
    "zero_circulars",
    "Linearization",
    "ResolventSolver",
    "linearize",
    "eval_resolvent",
    "verify_schur",
    "BalancedSign",
    "DiagSpec",
    "EnsembleSpec",
    "FromFile",
    "GueRealization",
    "eigenvalues",
    "generate_deterministic",
    "read_eigenvalues_csv",
    "sample_iid",
    "smallest_singular",
    "write_eigenvalues_csv",
    "HermitizedModel",
    "SpectrumMap",
    "SpectrumVerdict",
    "Tolerances",
    "choi_matrix",
    "delta1",
    "delta1_radius",
    "edge_of_support",
    "is_outside_spectrum",
    "spectrum_grid",
    "write_spectrum_csv",
    "Annulus",
    "Decomposition",
    "MapComplement",
    "OutlierReport",
    "Rectangle",
    "contraction_radius",
    "det_ratio",
    "factor_perturbation",
    "match_outliers",
    "outlier_indicator",
    "predicted_outliers",
    "write_report_json",
    "ExamplePreset",
    "get_example",
    "RunConfig",
    "load_config",
    "main",
    "preset_config",
]

__version__ = "0.1.0"
