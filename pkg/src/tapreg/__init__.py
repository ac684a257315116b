"""TAP free energy for Bayesian linear regression under a spherical prior.

Library layout:

* model         — instance generation, sphere geometry, serialization
* tap           — TAP value, gradient, Hessian quadratic form, surrogate
* solver        — constrained least squares on spheres; TAP maximization
* asymptotics   — ridge / spectrum limits via T(t)
* rs            — replica-symmetric fixed point and free energy
* oracle        — ridge MAP, exact Gaussian log-partition, spherical MC
* concavity     — curvature probe along the minimal design eigenvector
* estimators    — scikit-learn facades (TapRegressor, RidgeMapRegressor)
* harness, cli  — experiment sweeps, CSV/SVG outputs, `tapreg` tool
"""

from .asymptotics import (
    RidgeAsymptotics,
    lambda_min_limit,
    ridge_asymptotics,
    stieltjes_T,
    trace_inverse_limit,
)
from .concavity import CurvatureReport, MinEigpair, directional_curvature, min_eigpair, scan_nonconcavity
from .estimators import RidgeMapRegressor, TapRegressor
from .exceptions import NumericalError
from .harness import (
    ExperimentConfig,
    ExperimentRecord,
    preset,
    run_experiment,
    write_outputs,
)
from .model import (
    ModelParams,
    OperatorNormCheck,
    ProblemInstance,
    generate_instance,
    instance_from_json,
    instance_to_json,
    operator_norm_check,
    project_to_sphere,
)
from .oracle import (
    FreeEnergyEstimate,
    RidgeSolution,
    gaussian_log_partition,
    mc_spherical_free_energy,
    ridge_solve,
    tap_ridge_distance,
)
from .rs import RsSolution, i_rs, mmse, single_crossing_suite, solve_fixed_point
from .solver import (
    OptResult,
    SecularSolution,
    SolverOptions,
    constrained_least_squares,
    maximize_tap,
    profile_over_q,
)
from .tap import (
    EPS_Q,
    GPoint,
    HFamily,
    TapEvaluation,
    f_tap,
    g_pair,
    gap,
    grad_f_tap,
    h_family,
    hessian_quadratic_form,
    surrogate_constant_c,
)

__version__ = "0.1.0"
