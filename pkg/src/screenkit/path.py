"""Regularization-path driver: geometric grids, warm starts, sequential screening.

Screening masks are never carried across path points (active sets are
lambda-specific); only the iterate and the previous dual point move forward.
Warm-starting the dynamic solver makes its epoch-0 gap ball exactly the
sequential (homotopy) ball: the previous iterate re-fed through the rescaled
gradient mapping under the new penalty.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import GroupStructure
from .solver import SolveOptions, WarmStart, solve


@dataclass(frozen=True)
class PathSpec:
    lambdas: np.ndarray

    def __post_init__(self):
        lams = np.asarray(self.lambdas, dtype=np.float64)
        if lams.ndim != 1 or lams.size < 1:
            raise ValueError("lambda grid must be a nonempty vector")
        if np.any(lams <= 0):
            raise ValueError("lambda grid must be positive")
        if np.any(np.diff(lams) >= 0):
            raise ValueError("lambda grid must be strictly decreasing")
        object.__setattr__(self, "lambdas", lams)

    @property
    def n_points(self):
        return self.lambdas.size


def lambda_grid(lam_max, ratio=0.01, n_points=100):
    """Geometric grid lam_max * ratio**(t/(T-1)), t = 0..T-1."""
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie in (0, 1)")
    if lam_max <= 0:
        raise ValueError("lam_max must be positive")
    t = np.arange(n_points) / (n_points - 1)
    return PathSpec(lambdas=lam_max * ratio**t)


@dataclass
class PathResult:
    lambdas: np.ndarray
    solutions: list
    traces: list
    failures: list = field(default_factory=list)  # (index, message) pairs


def solve_path(X, loss, penalty_family, spec, opts=None, groups=None):
    """Solve along a decreasing lambda grid with warm starts.

    `penalty_family` is either a penalty exposing with_lambda or a callable
    lam -> penalty. Any per-lambda failure is recorded and the path continues
    from the last good iterate.
    """
    opts = opts if opts is not None else SolveOptions()
    if groups is None:
        groups = GroupStructure.singletons(X)
    family = penalty_family if callable(penalty_family) else penalty_family.with_lambda

    solutions = []
    traces = []
    failures = []
    beta_prev = None
    warm = None
    for t, lam in enumerate(spec.lambdas):
        try:
            penalty = family(float(lam))
            sol, trace = solve(
                X, loss, penalty, opts, groups=groups, beta0=beta_prev, warm=warm
            )
        except Exception as exc:  # record and continue from the last good iterate
            solutions.append(None)
            traces.append(None)
            failures.append((t, str(exc)))
            continue
        solutions.append(sol)
        traces.append(trace)
        beta_prev = sol.beta.copy()
        warm = WarmStart(theta_prev=sol.theta.theta.copy(), lam_prev=float(lam))
    return PathResult(
        lambdas=spec.lambdas, solutions=solutions, traces=traces, failures=failures
    )
