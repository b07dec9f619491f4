"""Local Frechet curve regression for sphere-valued functional data.

Geometry primitives on the unit sphere, weighted Frechet mean solvers,
Riemannian functional PCA in the time-varying tangent space, three
curve predictors (Nadaraya-Watson type, intrinsic local linear and
extrinsic projection local linear), a simulation harness and a k-fold
cross-validation pipeline.
"""

__version__ = "0.1.0"

from .errors import (
    AllNodesFailedError,
    AntipodalPointsError,
    ConfigError,
    DegenerateSpectrumError,
    DegenerateWeightsError,
    DegenerateWindowError,
    EmptyFileError,
    EmptyReportError,
    EmptySampleError,
    EmptyWindowError,
    GridMismatchError,
    InvalidFoldCountError,
    InvalidPointError,
    LocFrechetError,
    MalformedRowError,
    NonConvergenceError,
    NonMonotoneTimeError,
)
from .geometry import (
    ManifoldCurve,
    SpherePoint,
    TangentVector,
    TimeGrid,
    curve_distance,
    exp_map,
    geodesic_distance,
    log_map,
    project_to_tangent,
)
from .frechet import (
    SolverOptions,
    WeightedPointSet,
    frechet_curve_mean,
    icosphere,
    weighted_frechet_mean,
)
from .tangent import (
    CovarianceOperator,
    EigenSystem,
    TangentCurve,
    empirical_covariance,
    fit_tangent_basis,
    inner_product_H,
    load_eigensystem,
    log_map_sample,
    reconstruct,
    rfpca,
    save_eigensystem,
    scores,
    sinusoid_basis,
)
from .extrinsic import (
    BandwidthSpec,
    LocalMoments,
    bandwidth_from_log_model,
    bandwidth_from_power_model,
    empirical_local_moments,
    extrinsic_predict,
    kernel_weight_H,
    predict_coefficient,
    slope_eigenvalue,
)
from .intrinsic import (
    GeodesicKernel,
    LocalLinearWeights,
    geodesic_kernel,
    ll_predict_node,
    ll_weights_node,
    nw_predict_node,
    predict_curve,
)
from .simulation import (
    BivariateCurveSample,
    SimulationConfig,
    embed_unit_ball,
    generate_dataset,
    generate_responses,
    load_dataset,
    save_dataset,
    simulate_diffusions,
    to_sphere,
)
from .evaluation import (
    CVReport,
    ExperimentConfig,
    MagsatRecord,
    angular_error_curve,
    ingest_magsat_csv,
    kfold_split,
    run_cv,
    summarize,
    synthetic_magsat_csv,
    tangent_cv_error,
    write_report,
)
