"""Dual feasible points, duality gaps, and the gap safe ball.

The dual point is the rescaled gradient mapping theta = -grad f(X beta) / alpha
with alpha = max(1, gauge(-X^T grad f(X beta))); with a mu_D-strongly concave
dual objective, B(theta, sqrt(2 * Gap / mu_D)) contains every dual optimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# negative gaps beyond this relative size indicate an implementation bug,
# smaller ones are float rounding and get clamped to zero
_GAP_CLAMP_REL = 1e-10


class InconsistencyError(RuntimeError):
    """Weak duality violated beyond float tolerance."""


@dataclass(frozen=True)
class DualPoint:
    theta: np.ndarray
    alpha: float  # scaling actually applied, >= 1


@dataclass(frozen=True)
class SafeBall:
    center: np.ndarray
    radius: float

    @property
    def is_unbounded(self):
        return not np.isfinite(self.radius)


def dual_point(X, loss, penalty, beta, groups=None, resid=None):
    """Dual-feasible point from the rescaled gradient mapping at beta.

    `resid` may pass a precomputed y - X beta snapshot (quadratic loss) to
    avoid one matvec; callers own its consistency with beta.
    """
    if resid is None:
        z = X.matvec(np.asarray(beta, dtype=np.float64))
        neg_grad = -loss.gradient(z)
    else:
        neg_grad = np.asarray(resid, dtype=np.float64)
    corr = X.rmatvec(neg_grad)
    gauge = penalty.gauge_polar(corr, groups)
    alpha = max(1.0, gauge)
    if np.isinf(alpha):
        # conic dual domain with an infeasible gradient mapping: the scaled
        # point degenerates to the (always feasible) origin
        theta = np.zeros(X.n_rows)
    else:
        theta = neg_grad / alpha
    return DualPoint(theta=theta, alpha=alpha)


def primal_value(X, loss, penalty, beta, groups=None, resid=None):
    if resid is None:
        z = X.matvec(np.asarray(beta, dtype=np.float64))
    else:
        z = loss.y - np.asarray(resid, dtype=np.float64)
    return loss.value(z) + penalty.value(np.asarray(beta, dtype=np.float64), groups)


def dual_value(X, loss, penalty, theta, groups=None):
    theta = np.asarray(theta, dtype=np.float64)
    return loss.dual_value(theta) - penalty.conjugate(X.rmatvec(theta), groups)


def duality_gap(X, loss, penalty, beta, dpoint, groups=None, resid=None):
    """Gap(beta, theta) = P(beta) - D(theta); tiny float negatives are clamped to 0."""
    p_val = primal_value(X, loss, penalty, beta, groups, resid=resid)
    if np.isinf(p_val):
        return np.inf
    d_val = dual_value(X, loss, penalty, dpoint.theta, groups)
    gap = p_val - d_val
    if gap < 0:
        if gap >= -_GAP_CLAMP_REL * max(1.0, loss.y_norm_sq):
            return 0.0
        raise InconsistencyError(
            f"negative duality gap {gap:.3e} exceeds rounding tolerance"
        )
    return gap


def gap_safe_ball(dpoint, gap, mu_dual):
    """B(theta, sqrt(2 * gap / mu_dual)); an infinite gap yields a sentinel ball."""
    if np.isinf(gap):
        return SafeBall(center=dpoint.theta, radius=np.inf)
    gap = max(float(gap), 0.0)
    return SafeBall(center=dpoint.theta, radius=float(np.sqrt(2.0 * gap / mu_dual)))


def lambda_max(X, loss, penalty, groups=None):
    """Smallest lam for which the all-anchor solution is optimal (norm penalties)."""
    corr = X.rmatvec(loss.y)
    kind = getattr(penalty, "kind", None)
    if kind in ("l1", "enet"):
        return float(np.max(np.abs(corr), initial=0.0))
    if kind == "group_l2":
        if groups is None:
            raise ValueError("group_l2 lambda_max needs the group structure")
        return float(np.max(groups.group_correlation_norms(corr), initial=0.0))
    raise ValueError(f"lambda_max is undefined for penalty kind {kind!r}")
