"""screenkit: safe screening rules and acceleration heuristics for composite problems.

Solves min_beta f(X beta) + sum_g Omega_g(beta_g) by proximal cyclic block
coordinate descent with gap-based safe feature elimination, unsafe
acceleration rules (strong rules, aggressive warm starts, working sets) with
a safe handoff, sequential path screening, sample-wise SVM screening, and
active-set identification diagnostics.
"""

from .data import DataError, Dataset, load_csv, load_libsvm, make_synthetic, write_libsvm
from .duality import (
    DualPoint,
    SafeBall,
    dual_point,
    dual_value,
    duality_gap,
    gap_safe_ball,
    lambda_max,
    primal_value,
)
from .identification import (
    IdentificationReport,
    delta_z,
    fit_linear_rate,
    identification_report,
    k0_bound_linear,
    k0_bound_sublinear,
    measure_k0,
    oracle_active_set,
)
from .linalg import DesignMatrix, GroupStructure, group_adjoint, matvec, spectral_norm
from .losses import QuadraticLoss
from .path import PathSpec, lambda_grid, solve_path
from .penalties import (
    Box,
    ElasticNet,
    GroupL2,
    L1,
    NonNegative,
    dual_gauge,
    make_penalty,
    penalty_conjugate,
    penalty_value,
    prox,
    sphere_test,
)
from .screening import (
    ScreenState,
    aggressive_radius,
    kkt_repair,
    previous_active_set,
    safe_screen,
    sequential_screen,
    strong_rule_set,
    working_set_scores,
)
from .solver import SolveOptions, SolveTrace, Solution, WarmStart, cd_epoch, solve, solve_svm

__version__ = "0.1.0"

__all__ = [
    "Box", "DataError", "Dataset", "DesignMatrix", "DualPoint", "ElasticNet",
    "GroupL2", "GroupStructure", "IdentificationReport", "L1", "NonNegative",
    "PathSpec", "QuadraticLoss", "SafeBall", "ScreenState", "SolveOptions",
    "SolveTrace", "Solution", "WarmStart", "aggressive_radius", "cd_epoch",
    "delta_z", "dual_gauge", "dual_point", "dual_value", "duality_gap",
    "fit_linear_rate", "gap_safe_ball", "group_adjoint", "identification_report",
    "k0_bound_linear", "k0_bound_sublinear", "kkt_repair", "lambda_grid",
    "lambda_max", "load_csv", "load_libsvm", "make_penalty", "make_synthetic",
    "matvec", "measure_k0", "oracle_active_set", "penalty_conjugate",
    "penalty_value", "previous_active_set", "primal_value", "prox",
    "safe_screen", "sequential_screen", "solve", "solve_path", "solve_svm",
    "spectral_norm", "sphere_test", "strong_rule_set", "working_set_scores",
    "write_libsvm",
]
