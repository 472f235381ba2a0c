"""The screening engine: cumulative active masks, safe and unsafe rules, KKT repair.

Safe eliminations are individually certified and therefore cumulative: once a
group is screened by a safe ball it never re-enters. Unsafe rules (strong
rules, previous active set, aggressive radii, working sets) tag their
eliminations so repair logic and the safe handoff can distinguish them.
"""

from __future__ import annotations

import numpy as np

from .duality import dual_point, gap_safe_ball

RULE_NONE = 0
RULE_SAFE = 1
RULE_STRONG = 2
RULE_AGGRESSIVE = 3
RULE_WORKING_SET = 4

RULE_NAMES = {
    RULE_NONE: "",
    RULE_SAFE: "safe",
    RULE_STRONG: "strong",
    RULE_AGGRESSIVE: "aggressive",
    RULE_WORKING_SET: "working_set",
}

# boundary tolerance shared with the oracle active-set definition: a group
# whose margin is within this of zero counts as active / not discardable
BOUNDARY_TOL = 1e-9


class ScreenState:
    """Cumulative per-group screening mask plus anchor values for screened groups."""

    def __init__(self, groups, p):
        g = groups.n_groups
        self.active = np.ones(g, dtype=bool)
        self.safe = np.zeros(g, dtype=bool)
        self.rule_kind = np.zeros(g, dtype=np.int8)
        self.screened_at = np.full(g, -1, dtype=np.int64)
        self.fixed_beta = np.zeros(p)
        self.groups = groups

    @property
    def n_screened_safe(self):
        return int(self.safe.sum())

    @property
    def n_screened_unsafe(self):
        return int((~self.active & ~self.safe).sum())

    def unsafe_groups(self):
        return np.flatnonzero(~self.active & ~self.safe)

    def commit(self, new_mask, epoch, rule, anchors=None):
        """Single commit step: mark `new_mask` groups screened under `rule`.

        Safe commits never un-screen; anchors (a p-vector) record the
        certified values for newly screened groups.
        """
        new = new_mask & self.active
        if not new.any():
            return 0
        self.active[new] = False
        if rule == RULE_SAFE:
            self.safe[new] = True
        self.rule_kind[new] = rule
        self.screened_at[new] = epoch
        if anchors is not None:
            for g in np.flatnonzero(new):
                idx = self.groups.indices[g]
                self.fixed_beta[idx] = anchors[idx]
        return int(new.sum())

    def reactivate(self, group_ids):
        """Undo unsafe eliminations (safe ones are permanent)."""
        group_ids = np.asarray(group_ids, dtype=np.intp)
        for g in group_ids:
            if self.safe[g]:
                continue
            self.active[g] = True
            self.rule_kind[g] = RULE_NONE
            self.screened_at[g] = -1
        return self

    def reactivate_all_unsafe(self):
        return self.reactivate(self.unsafe_groups())


def safe_screen(state, ball, X, penalty, groups, epoch=0):
    """Apply the sphere test under `ball` to every active group; returns newly screened count.

    The per-group tests are evaluated in one vectorized pass and the mask is
    updated in a single commit.
    """
    if ball.is_unbounded:
        return 0
    corr = X.rmatvec(ball.center)
    mask, anchors = penalty.screen(corr, ball.radius, groups, X.col_norms)
    return state.commit(mask, epoch, RULE_SAFE, anchors)


def strong_rule_set(theta_prev, lam_prev, lam_new, X, penalty, groups):
    """Generalized strong rule: groups presumed discardable at lam_new given the lam_prev dual.

    Unsafe and advisory; the mask is never merged into the cumulative safe mask.
    """
    if lam_new > lam_prev:
        raise ValueError("strong rule requires lam_new <= lam_prev")
    if not penalty.is_norm:
        raise ValueError("strong rule is defined for norm penalties")
    corr = X.rmatvec(np.asarray(theta_prev, dtype=np.float64))
    margins = penalty.with_lambda(lam_new).margins(corr, groups)
    return margins > abs(lam_prev - lam_new) + BOUNDARY_TOL


def previous_active_set(theta_prev, lam_new, X, penalty, groups):
    """Discard groups strictly inactive at the previous dual point (unsafe, advisory)."""
    corr = X.rmatvec(np.asarray(theta_prev, dtype=np.float64))
    pen = penalty.with_lambda(lam_new) if penalty.has_lambda else penalty
    return pen.margins(corr, groups) > BOUNDARY_TOL


def aggressive_radius(primal_history, k, s, gap_k, eta, mu_dual):
    """Unsafe radius from the primal-progress estimate.

    E_tilde = (1 - eta) * |P(beta_{k-s}) - P(beta_k)| + eta * gap_k; before s
    epochs of history exist the safe gap radius is returned instead.
    """
    if k < s:
        return float(np.sqrt(2.0 * max(gap_k, 0.0) / mu_dual))
    p_then = primal_history[k - s]
    p_now = primal_history[k]
    est = (1.0 - eta) * abs(p_then - p_now) + eta * gap_k
    return float(np.sqrt(2.0 * max(est, 0.0) / mu_dual))


def working_set_scores(theta, X, penalty, groups):
    """Distance-to-boundary score per group; smaller means more important.

    Zero-norm groups score +inf (they never enter a working set).
    """
    corr = X.rmatvec(np.asarray(theta, dtype=np.float64))
    margins = penalty.margins(corr, groups)
    if penalty.kind == "group_l2":
        norms = groups.norms
    else:
        col_scores = np.where(
            X.col_norms > 0, penalty.col_margins(corr) / np.where(X.col_norms > 0, X.col_norms, 1.0), np.inf
        )
        return np.minimum.reduceat(col_scores[groups.flat], groups.offsets[:-1])
    return np.where(norms > 0, margins / np.where(norms > 0, norms, 1.0), np.inf)


def kkt_repair(beta, X, loss, penalty, groups, state, tol=1e-9):
    """Optimality check on unsafely screened groups after a restricted solve.

    A group violates when the dual point of the restricted solution sits on
    the boundary of its subdifferential (margin <= tol); violators should be
    re-activated.
    """
    suspects = state.unsafe_groups()
    if suspects.size == 0:
        return []
    dp = dual_point(X, loss, penalty, beta, groups)
    corr = X.rmatvec(dp.theta)
    margins = penalty.margins(corr, groups)
    return [int(g) for g in suspects if margins[g] <= tol]


def sequential_screen(state, X, loss, penalty, groups, beta_prev, epoch=0):
    """Homotopy screen: gap ball of the previous-lambda iterate re-evaluated at the new penalty.

    The previous dual point is re-fed through the rescaled gradient mapping
    under the new penalty, so the center is feasible by construction.
    """
    from .duality import duality_gap  # local to avoid cycle in doc order

    dp = dual_point(X, loss, penalty, beta_prev, groups)
    gap = duality_gap(X, loss, penalty, beta_prev, dp, groups)
    ball = gap_safe_ball(dp, gap, loss.mu_dual)
    n = safe_screen(state, ball, X, penalty, groups, epoch=epoch)
    return n, ball
