"""Proximal cyclic block coordinate descent with screening hooks, plus the SVM dual solver.

One solve owns one mutable state; the inner CD loop is sequential (cyclic
order is semantic), screening tests within a step are evaluated vectorized
and committed atomically. Independent solves may share a read-only matrix.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .duality import DualPoint, dual_point, lambda_max
from .linalg import DesignMatrix, GroupStructure
from .penalties import feasible_start
from .screening import (
    RULE_AGGRESSIVE,
    RULE_SAFE,
    RULE_STRONG,
    RULE_WORKING_SET,
    ScreenState,
    aggressive_radius,
    strong_rule_set,
    working_set_scores,
)

RULES = ("none", "static", "dynamic_gap", "strong_then_safe",
         "aggressive_then_safe", "working_set")

_GAP_CLAMP_REL = 1e-10


@dataclass
class SolveOptions:
    tol_eps: float = 1e-6          # stop when gap <= tol_eps * ||y||^2
    max_epochs: int = 100_000
    screen_every: int = 10
    rule: str = "dynamic_gap"
    aggressive_s: int = 10
    aggressive_eta: float = 1e-3
    seed: int = 0
    ws_seed_size: int = 100
    ws_growth_factor: float = 2.0
    rebuild_every: int = 100       # residual cache rebuilt from scratch this often

    def __post_init__(self):
        if self.tol_eps <= 0:
            raise ValueError("tol_eps must be positive")
        if self.screen_every < 1:
            raise ValueError("screen_every must be >= 1")
        if self.rule not in RULES:
            raise ValueError(f"rule must be one of {RULES}")


@dataclass
class WarmStart:
    """Previous-solution context used by sequential and strong rules."""
    theta_prev: np.ndarray
    lam_prev: float


class SolveTrace:
    """Per-logged-epoch record: objective values, safe radius, screen counts.

    Rows are appended at the screening cadence plus the final epoch;
    `primal_history` additionally holds P(beta_k) for every epoch k.
    """

    CSV_COLUMNS = ("epoch", "primal", "dual", "gap", "radius", "n_screened", "ms")

    def __init__(self):
        self.epoch = []
        self.primal = []
        self.dual = []
        self.gap = []
        self.radius = []
        self.n_screened = []
        self.n_unsafe = []
        self.ms = []
        self.masks = []          # active-group masks, copied per logged epoch
        self.dual_points = []    # safe-ball centers, copied per logged epoch
        self.betas = []          # iterate snapshots, copied per logged epoch
        self.primal_history = []

    def append(self, epoch, primal, dual, gap, radius, n_screened, n_unsafe, ms,
               mask, theta, beta=None):
        self.epoch.append(int(epoch))
        self.primal.append(float(primal))
        self.dual.append(float(dual))
        self.gap.append(float(gap))
        self.radius.append(float(radius))
        self.n_screened.append(int(n_screened))
        self.n_unsafe.append(int(n_unsafe))
        self.ms.append(float(ms))
        self.masks.append(mask.copy())
        self.dual_points.append(theta.copy())
        self.betas.append(None if beta is None else beta.copy())

    @property
    def n_rows(self):
        return len(self.epoch)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(",".join(self.CSV_COLUMNS) + "\n")
            for i in range(self.n_rows):
                fh.write(
                    f"{self.epoch[i]},{self.primal[i]!r},{self.dual[i]!r},"
                    f"{self.gap[i]!r},{self.radius[i]!r},{self.n_screened[i]},"
                    f"{self.ms[i]!r}\n"
                )


@dataclass
class Solution:
    beta: np.ndarray
    theta: DualPoint
    final_gap: float
    epochs_used: int
    state: ScreenState
    converged: bool
    phase1_epochs: int = 0


def _kernel_params(penalty):
    return (
        int(penalty.kernel_kind),
        float(getattr(penalty, "lam", 0.0)),
        float(getattr(penalty, "en_alpha", 0.0)),
        float(getattr(penalty, "lo", 0.0)),
        float(getattr(penalty, "hi", 0.0)),
    )


def cd_epoch(X, loss, penalty, groups, beta, resid, active=None):
    """One cyclic pass over the active groups; beta and resid update in place.

    Block steps are 1/(nu_f * ||X_g||^2); skipped groups are untouched, so
    screened blocks keep their anchor values exactly.
    """
    if active is None:
        active = np.ones(groups.n_groups, dtype=bool)
    gnorm_sq = (groups.norms ** 2) * loss.nu
    if np.any(active & (gnorm_sq == 0.0)):
        raise RuntimeError("zero-norm active group: should have been pre-screened")
    kind, lam, en_alpha, lo, hi = _kernel_params(penalty)
    if X.is_sparse:
        m = X._sparse
        _kernels.cd_pass_sparse(
            m.data, m.indices, m.indptr, resid, beta,
            groups.flat, groups.offsets, active, gnorm_sq,
            kind, lam, en_alpha, lo, hi,
        )
    else:
        _kernels.cd_pass_dense(
            X._dense, resid, beta,
            groups.flat, groups.offsets, active, gnorm_sq,
            kind, lam, en_alpha, lo, hi,
        )


class _Driver:
    """Owns the mutable solve state shared across phases of one solve call."""

    def __init__(self, X, loss, penalty, groups, opts, beta0=None):
        self.X = X
        self.loss = loss
        self.penalty = penalty
        self.groups = groups
        self.opts = opts
        p = X.n_cols
        start = feasible_start(penalty, p)
        self.beta = np.array(beta0, dtype=np.float64) if beta0 is not None else start.copy()
        self.start_values = start
        self.resid = loss.y - X.matvec(self.beta)
        self.state = ScreenState(groups, p)
        self.trace = SolveTrace()
        self.epochs_used = 0
        self.t0 = time.perf_counter()
        self.last_dp = None
        self.last_gap = np.inf
        self._prescreen_zero_norm()
        self.trace.primal_history.append(self._primal())

    # objective pieces, from the residual cache ---------------------------
    def _primal(self):
        return 0.5 * float(self.resid @ self.resid) + self.penalty.value(
            self.beta, self.groups
        )

    def _snapshot(self, restricted=False):
        """Dual point, objective values and gap, all from one adjoint product.

        With `restricted=True` the dual gauge and conjugate ignore columns of
        currently inactive groups: that is the dual of the subproblem a
        phase-1 (unsafely restricted) solve is actually minimizing, so its
        gap reaches zero at the restricted optimum.
        """
        corr = self.X.rmatvec(self.resid)
        if restricted and not self.state.active.all():
            col_active = np.zeros(self.X.n_cols, dtype=bool)
            col_active[self.groups.flat] = np.repeat(
                self.state.active, self.groups.sizes
            )
            corr = np.where(col_active, corr, 0.0)
        gauge = self.penalty.gauge_polar(corr, self.groups)
        alpha = max(1.0, gauge)
        if np.isinf(alpha):
            theta = np.zeros(self.X.n_rows)
            theta_corr = np.zeros(self.X.n_cols)
        else:
            theta = self.resid / alpha
            theta_corr = corr / alpha
        p_val = self._primal()
        if np.isnan(p_val):
            raise RuntimeError("NaN in the primal objective; aborting solve")
        d_val = self.loss.dual_value(theta) - self.penalty.conjugate(
            theta_corr, self.groups
        )
        gap = p_val - d_val
        if gap < 0:
            if gap >= -_GAP_CLAMP_REL * max(1.0, self.loss.y_norm_sq):
                gap = 0.0
            else:
                raise RuntimeError(f"negative duality gap {gap:.3e}: inconsistent state")
        return DualPoint(theta=theta, alpha=alpha), theta_corr, p_val, d_val, gap

    def _prescreen_zero_norm(self):
        # zero-norm groups contribute nothing to X beta; they are fixed to the
        # anchor at load (norm penalties certify this; for indicator penalties
        # the anchor is an optimal selection)
        zero = self.groups.norms == 0.0
        if zero.any():
            anchors = self.start_values.copy()
            self._commit_screens(zero, anchors, epoch=0, rule=RULE_SAFE)

    def _commit_screens(self, mask, anchors, epoch, rule):
        new = mask & self.state.active
        ids = np.flatnonzero(new)
        if ids.size == 0:
            return 0
        for g in ids:
            idx = self.state.groups.indices[g]
            delta = self.beta[idx] - anchors[idx]
            if np.any(delta != 0.0):
                self.resid += self.X.columns(idx) @ delta
            self.beta[idx] = anchors[idx]
        return self.state.commit(new, epoch, rule, anchors)

    def _screen_with_radius(self, theta_corr, radius, epoch, rule):
        if not np.isfinite(radius):
            return 0
        mask, anchors = self.penalty.screen(
            theta_corr, radius, self.groups, self.X.col_norms
        )
        return self._commit_screens(mask, anchors, epoch, rule)

    def run(self, rule, tol_abs, budget, aggressive=False, state=None,
            restricted=False):
        """Core epoch loop; `rule` is none/static/dynamic_gap. Returns converged."""
        opts = self.opts
        own_state = self.state
        if state is not None:
            self.state = state
        converged = False
        k = 0
        try:
            while True:
                epoch = self.epochs_used
                on_cadence = (k % opts.screen_every == 0)
                last = k >= budget
                if on_cadence or last:
                    if k > 0 and opts.rebuild_every and k % opts.rebuild_every == 0:
                        self.resid = self.loss.y - self.X.matvec(self.beta)
                    dp, theta_corr, p_val, d_val, gap = self._snapshot(restricted)
                    radius = (
                        float(np.sqrt(2.0 * gap / self.loss.mu_dual))
                        if np.isfinite(gap)
                        else np.inf
                    )
                    do_screen = rule == "dynamic_gap" or (rule == "static" and k == 0)
                    if do_screen:
                        self._screen_with_radius(theta_corr, radius, epoch, RULE_SAFE)
                    if aggressive:
                        r_agg = aggressive_radius(
                            self.trace.primal_history, epoch, opts.aggressive_s,
                            gap, opts.aggressive_eta, self.loss.mu_dual,
                        )
                        self._screen_with_radius(theta_corr, r_agg, epoch, RULE_AGGRESSIVE)
                    self.last_dp = dp
                    self.last_gap = gap
                    ms = (time.perf_counter() - self.t0) * 1e3
                    self.trace.append(
                        epoch, p_val, d_val, gap, radius,
                        self.state.n_screened_safe, self.state.n_screened_unsafe,
                        ms, self.state.active, dp.theta, self.beta,
                    )
                    if gap <= tol_abs:
                        converged = True
                        break
                    if last:
                        break
                cd_epoch(
                    self.X, self.loss, self.penalty, self.groups,
                    self.beta, self.resid, self.state.active,
                )
                self.epochs_used += 1
                k += 1
                self.trace.primal_history.append(self._primal())
        finally:
            self.state = own_state
        return converged

    def run_working_set(self, tol_abs):
        opts = self.opts
        budget = opts.max_epochs
        ws_size = opts.ws_seed_size
        converged = False
        while self.epochs_used <= budget:
            dp, theta_corr, p_val, d_val, gap = self._snapshot()
            radius = float(np.sqrt(2.0 * gap / self.loss.mu_dual)) if np.isfinite(gap) else np.inf
            self._screen_with_radius(theta_corr, radius, self.epochs_used, RULE_SAFE)
            self.last_dp = dp
            self.last_gap = gap
            ms = (time.perf_counter() - self.t0) * 1e3
            self.trace.append(
                self.epochs_used, p_val, d_val, gap, radius,
                self.state.n_screened_safe, self.state.n_screened_unsafe,
                ms, self.state.active, dp.theta, self.beta,
            )
            if gap <= tol_abs:
                converged = True
                break
            if self.epochs_used >= budget:
                break
            active_ids = np.flatnonzero(self.state.active)
            scores = working_set_scores(dp.theta, self.X, self.penalty, self.groups)
            # the current support always stays in the working set
            support = np.array([
                g for g in active_ids
                if np.any(self.beta[self.groups.indices[g]]
                          != self.start_values[self.groups.indices[g]])
            ], dtype=np.intp)
            size = min(ws_size, active_ids.size)
            order = active_ids[np.argsort(scores[active_ids], kind="stable")]
            chosen = np.union1d(order[:size], support)
            full_cover = chosen.size == active_ids.size
            scratch = self._clone_state()
            excluded = np.ones(self.groups.n_groups, dtype=bool)
            excluded[chosen] = False
            scratch_mask = excluded & scratch.active
            scratch.commit(scratch_mask, self.epochs_used, RULE_WORKING_SET,
                           self.start_values)
            inner_tol = tol_abs if full_cover else 10.0 * tol_abs
            self.run("dynamic_gap", inner_tol, budget - self.epochs_used,
                     state=scratch, restricted=True)
            ws_size = int(np.ceil(ws_size * opts.ws_growth_factor))
        return converged

    def _clone_state(self):
        clone = ScreenState(self.groups, self.beta.size)
        clone.active = self.state.active.copy()
        clone.safe = self.state.safe.copy()
        clone.rule_kind = self.state.rule_kind.copy()
        clone.screened_at = self.state.screened_at.copy()
        clone.fixed_beta = self.state.fixed_beta.copy()
        return clone

    def finish(self, converged, phase1_epochs=0):
        if self.last_dp is None:  # pragma: no cover - every path snapshots
            dp, _, _, _, gap = self._snapshot()
            self.last_dp, self.last_gap = dp, gap
        return Solution(
            beta=self.beta,
            theta=self.last_dp,
            final_gap=self.last_gap,
            epochs_used=self.epochs_used,
            state=self.state,
            converged=converged,
            phase1_epochs=phase1_epochs,
        )


def solve(X, loss, penalty, opts=None, groups=None, beta0=None, warm=None):
    """Solve min f(X beta) + Omega(beta) under the requested screening rule.

    Returns (Solution, SolveTrace). Unsafe rules run a restricted phase-1
    solve to 10x the tolerance, then hand the iterate to a full-problem
    dynamic-gap safe phase.
    """
    opts = opts if opts is not None else SolveOptions()
    if groups is None:
        groups = GroupStructure.singletons(X)
    driver = _Driver(X, loss, penalty, groups, opts, beta0)
    tol_abs = opts.tol_eps * loss.y_norm_sq
    rule = opts.rule

    if rule in ("none", "static", "dynamic_gap"):
        converged = driver.run(rule, tol_abs, opts.max_epochs)
        return driver.finish(converged), driver.trace

    if rule == "strong_then_safe":
        if warm is None:
            lam_prev = lambda_max(X, loss, penalty, groups)
            dp0 = dual_point(X, loss, penalty.with_lambda(lam_prev),
                             feasible_start(penalty, X.n_cols), groups)
            theta_prev = dp0.theta
        else:
            theta_prev, lam_prev = warm.theta_prev, warm.lam_prev
        discard = strong_rule_set(theta_prev, lam_prev, penalty.lam, X, penalty, groups)
        scratch = driver._clone_state()
        scratch.commit(discard & scratch.active, 0, RULE_STRONG, driver.start_values)
        driver.run("dynamic_gap", 10.0 * tol_abs, opts.max_epochs, state=scratch,
                   restricted=True)
        phase1 = driver.epochs_used
        converged = driver.run("dynamic_gap", tol_abs, opts.max_epochs - phase1)
        return driver.finish(converged, phase1_epochs=phase1), driver.trace

    if rule == "aggressive_then_safe":
        driver.run("dynamic_gap", 10.0 * tol_abs, opts.max_epochs, aggressive=True)
        phase1 = driver.epochs_used
        driver.state.reactivate_all_unsafe()
        converged = driver.run("dynamic_gap", tol_abs, opts.max_epochs - phase1)
        return driver.finish(converged, phase1_epochs=phase1), driver.trace

    if rule == "working_set":
        converged = driver.run_working_set(tol_abs)
        return driver.finish(converged), driver.trace

    raise ValueError(f"unknown rule {rule!r}")  # pragma: no cover - validated in opts


# ----------------------------------------------------------------------------
# SVM via its dual: sample-wise screening with a primal safe ball
# ----------------------------------------------------------------------------


class SampleScreenState:
    """Cumulative screening state over samples (dual coordinates)."""

    def __init__(self, n):
        self.active = np.ones(n, dtype=bool)
        self.fixed_gamma = np.full(n, np.nan)
        self.screened_at = np.full(n, -1, dtype=np.int64)
        self.as_bound = np.zeros(n, dtype=bool)

    @property
    def n_screened(self):
        return int((~self.active).sum())

    def fix(self, ids, value, epoch, as_bound):
        ids = np.asarray(ids, dtype=np.intp)
        fresh = ids[self.active[ids]]
        self.active[fresh] = False
        self.fixed_gamma[fresh] = value
        self.screened_at[fresh] = epoch
        self.as_bound[fresh] = as_bound
        return fresh


def solve_svm(X, labels, lam, opts=None):
    """Hinge-loss SVM with ridge weight lam, solved by dual coordinate ascent.

    The penalty is lam-strongly convex, so B(beta_k, sqrt(2 Gap / lam)) is a
    primal safe ball; sample i is screened as non-support when its worst-case
    margin over the ball stays above 1, and as bound-active when its best-case
    margin stays below 1.
    """
    opts = opts if opts is not None else SolveOptions()
    if opts.rule not in ("none", "dynamic_gap"):
        raise ValueError("solve_svm supports rules 'none' and 'dynamic_gap'")
    if lam <= 0:
        raise ValueError("lam must be positive")
    Xd = X.toarray() if isinstance(X, DesignMatrix) else np.asarray(X, dtype=np.float64)
    Xd = np.ascontiguousarray(Xd)
    y = np.asarray(labels, dtype=np.float64)
    n, p = Xd.shape
    if y.shape != (n,) or not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be +/-1 with one entry per row")

    row_norm_sq = np.einsum("ij,ij->i", Xd, Xd)
    gamma = np.zeros(n)
    w = np.zeros(p)
    state = SampleScreenState(n)
    # zero rows contribute a constant hinge term; their dual optimum is the
    # upper bound
    zero_rows = np.flatnonzero(row_norm_sq == 0.0)
    if zero_rows.size:
        state.fix(zero_rows, 1.0, 0, as_bound=True)
        gamma[zero_rows] = 1.0  # no w adjustment: the rows are zero

    trace = SolveTrace()
    tol_abs = opts.tol_eps * n  # ||y||^2 = n for +/-1 labels
    t0 = time.perf_counter()
    converged = False
    k = 0

    def objective():
        margins = y * (Xd @ w)
        primal = float(np.sum(np.maximum(0.0, 1.0 - margins))) + 0.5 * lam * float(w @ w)
        dual = float(np.sum(gamma)) - 0.5 * lam * float(w @ w)
        return margins, primal, dual

    while True:
        on_cadence = (k % opts.screen_every == 0)
        last = k >= opts.max_epochs
        if on_cadence or last:
            margins, p_val, d_val = objective()
            gap = max(p_val - d_val, 0.0)
            radius = float(np.sqrt(2.0 * gap / lam))
            if opts.rule == "dynamic_gap" and np.isfinite(radius):
                from .penalties import SCREEN_GUARD

                row_norms = np.sqrt(row_norm_sq)
                non_support = (margins - radius * row_norms > 1.0 + SCREEN_GUARD) & state.active
                bound = (margins + radius * row_norms < 1.0 - SCREEN_GUARD) & state.active
                for ids, value, as_bound in (
                    (np.flatnonzero(non_support), 0.0, False),
                    (np.flatnonzero(bound), 1.0, True),
                ):
                    fresh = state.fix(ids, value, k, as_bound)
                    for i in fresh:
                        d = value - gamma[i]
                        if d != 0.0:
                            gamma[i] = value
                            w += d * y[i] * Xd[i] / lam
            ms = (time.perf_counter() - t0) * 1e3
            trace.append(k, p_val, d_val, gap, radius, state.n_screened, 0, ms,
                         state.active, w, gamma)
            trace.primal_history.append(p_val)
            if gap <= tol_abs:
                converged = True
                break
            if last:
                break
        _kernels.svm_dual_pass(Xd, y, gamma, w, lam, state.active, row_norm_sq)
        k += 1

    theta = DualPoint(theta=y * gamma, alpha=1.0)
    sol = Solution(
        beta=w, theta=theta, final_gap=trace.gap[-1], epochs_used=k,
        state=state, converged=converged,
    )
    return sol, trace
