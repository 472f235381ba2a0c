"""Separable penalties: value, prox, conjugate, dual-domain gauge, and sphere tests.

Every penalty carries an anchor value per group (the point where its
subdifferential has nonempty interior: 0 for norms and the non-negativity
constraint, a bound for the box constraint). A sphere test certifies that the
optimal block equals the anchor for every dual point in a ball B(c, r); all
tests reduce to closed-form margin comparisons:

    norm penalties      lam - ||X_g^T c||        vs  r * ||X_g||
    non-negativity      -X_j^T c                 vs  r * ||X_j||
    box [a, b]          -X_j^T c  (lower arm)    vs  r * ||X_j||
                        +X_j^T c  (upper arm)    vs  r * ||X_j||

Screening inequalities are strict and ties never screen; in floats "strict"
means the margin must clear the radius term by more than the computation's
noise floor, so every test carries a small absolute guard (same magnitude as
the oracle active-set tolerance). The guard can only suppress an elimination,
never cause one, so safety is preserved. Infinite penalty values are returned
as np.inf, never raised.
"""

from __future__ import annotations

import numpy as np

# kernel dispatch codes, shared with solver._kernels
KIND_L1 = 0
KIND_ENET = 1
KIND_GROUP_L2 = 2
KIND_NONNEG = 3
KIND_BOX = 4

# relative slack used only when evaluating indicator conjugates inside the
# dual objective (rescaled points sit on the boundary up to float rounding)
_FEAS_SLACK = 1e-9

# float-noise guard on strict screening inequalities: boundary-active groups
# whose true margin is zero compute as +/- O(1e-12); requiring the margin to
# clear the radius by this much keeps ties unscreened
SCREEN_GUARD = 1e-9

# feasibility tolerance for the non-negative cone (dual domain boundary)
_CONE_TOL = 1e-12


def _group_reduce_min(values, groups):
    """Per-group minimum of a per-column array."""
    return np.minimum.reduceat(values[groups.flat], groups.offsets[:-1])


class L1:
    """Omega_j(b) = lam * |b_j| applied to every coordinate."""

    kind = "l1"
    kernel_kind = KIND_L1
    mu = 0.0
    is_norm = True
    has_lambda = True

    def __init__(self, lam):
        if lam <= 0:
            raise ValueError("lam must be positive")
        self.lam = float(lam)

    def with_lambda(self, lam):
        return L1(lam)

    # per-group contract -------------------------------------------------
    def value_group(self, b):
        return self.lam * float(np.sum(np.abs(b)))

    def prox_group(self, v, step):
        if step <= 0:
            raise ValueError("step must be positive")
        v = np.asarray(v, dtype=np.float64)
        t = self.lam * step
        return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)

    def conjugate_group(self, v):
        v = np.asarray(v, dtype=np.float64)
        return 0.0 if np.max(np.abs(v), initial=0.0) <= self.lam else np.inf

    def anchor_group(self, size):
        return np.zeros(size)

    def sphere_test_group(self, c_g, r, group_norm):
        if r < 0:
            raise ValueError("radius must be nonnegative")
        c_g = np.atleast_1d(np.asarray(c_g, dtype=np.float64))
        return bool(np.all(self.lam - np.abs(c_g) > r * group_norm + SCREEN_GUARD))

    # vectorized over the whole problem ----------------------------------
    def value(self, beta, groups=None):
        return self.lam * float(np.sum(np.abs(beta)))

    def conjugate(self, v, groups=None, slack=_FEAS_SLACK):
        m = np.max(np.abs(v), initial=0.0)
        return 0.0 if m <= self.lam * (1.0 + slack) else np.inf

    def gauge_polar(self, v, groups=None):
        return float(np.max(np.abs(v), initial=0.0) / self.lam)

    def col_margins(self, corr):
        return self.lam - np.abs(corr)

    def margins(self, corr, groups):
        return _group_reduce_min(self.col_margins(corr), groups)

    def screen(self, corr, r, groups, col_norms):
        """(per-group screen mask, anchor vector) for the ball correlation corr = X^T c."""
        col_pass = self.col_margins(corr) > r * col_norms + SCREEN_GUARD
        mask = np.bitwise_and.reduceat(col_pass[groups.flat], groups.offsets[:-1])
        return mask, np.zeros(corr.size)


class ElasticNet(L1):
    """Omega_j(b) = lam * (|b_j| + 0.5 * en_alpha * b_j^2)."""

    kind = "enet"
    kernel_kind = KIND_ENET
    is_norm = False

    def __init__(self, lam, en_alpha):
        super().__init__(lam)
        if en_alpha < 0:
            raise ValueError("en_alpha must be nonnegative")
        self.en_alpha = float(en_alpha)

    @property
    def mu(self):
        return self.lam * self.en_alpha

    def with_lambda(self, lam):
        return ElasticNet(lam, self.en_alpha)

    def value_group(self, b):
        b = np.asarray(b, dtype=np.float64)
        return self.lam * float(np.sum(np.abs(b)) + 0.5 * self.en_alpha * np.sum(b * b))

    def value(self, beta, groups=None):
        return self.value_group(beta)

    def prox_group(self, v, step):
        if step <= 0:
            raise ValueError("step must be positive")
        v = np.asarray(v, dtype=np.float64)
        t = self.lam * step
        return np.sign(v) * np.maximum(np.abs(v) - t, 0.0) / (1.0 + t * self.en_alpha)

    def conjugate_group(self, v):
        v = np.asarray(v, dtype=np.float64)
        if self.en_alpha == 0.0:
            return super().conjugate_group(v)
        excess = np.maximum(np.abs(v) - self.lam, 0.0)
        return float(np.sum(excess**2) / (2.0 * self.lam * self.en_alpha))

    def conjugate(self, v, groups=None, slack=_FEAS_SLACK):
        if self.en_alpha == 0.0:
            return super().conjugate(v, groups, slack)
        return self.conjugate_group(np.asarray(v))

    def gauge_polar(self, v, groups=None):
        # dom Omega* is the whole space once the quadratic term is present
        if self.en_alpha == 0.0:
            return super().gauge_polar(v)
        return 0.0

    def conjugate_subgradient(self, v):
        """An element of the subdifferential of Omega* at v (unique here)."""
        v = np.asarray(v, dtype=np.float64)
        if self.en_alpha == 0.0:
            raise ValueError("Omega* is an indicator when en_alpha=0")
        return np.sign(v) * np.maximum(np.abs(v) - self.lam, 0.0) / (self.lam * self.en_alpha)


class GroupL2:
    """Omega_g(b) = lam * ||b_g||_2 per group."""

    kind = "group_l2"
    kernel_kind = KIND_GROUP_L2
    mu = 0.0
    is_norm = True
    has_lambda = True

    def __init__(self, lam):
        if lam <= 0:
            raise ValueError("lam must be positive")
        self.lam = float(lam)

    def with_lambda(self, lam):
        return GroupL2(lam)

    def value_group(self, b):
        return self.lam * float(np.linalg.norm(b))

    def prox_group(self, v, step):
        if step <= 0:
            raise ValueError("step must be positive")
        v = np.asarray(v, dtype=np.float64)
        nv = float(np.linalg.norm(v))
        t = self.lam * step
        if nv <= t:
            return np.zeros_like(v)
        return (1.0 - t / nv) * v

    def conjugate_group(self, v):
        return 0.0 if float(np.linalg.norm(v)) <= self.lam else np.inf

    def anchor_group(self, size):
        return np.zeros(size)

    def sphere_test_group(self, c_g, r, group_norm):
        if r < 0:
            raise ValueError("radius must be nonnegative")
        return bool(self.lam - np.linalg.norm(c_g) > r * group_norm + SCREEN_GUARD)

    def value(self, beta, groups):
        norms = groups.group_correlation_norms(np.asarray(beta, dtype=np.float64))
        return self.lam * float(np.sum(norms))

    def conjugate(self, v, groups, slack=_FEAS_SLACK):
        m = float(np.max(groups.group_correlation_norms(v), initial=0.0))
        return 0.0 if m <= self.lam * (1.0 + slack) else np.inf

    def gauge_polar(self, v, groups):
        return float(np.max(groups.group_correlation_norms(v), initial=0.0) / self.lam)

    def margins(self, corr, groups):
        return self.lam - groups.group_correlation_norms(corr)

    def screen(self, corr, r, groups, col_norms):
        mask = self.margins(corr, groups) > r * groups.norms + SCREEN_GUARD
        return mask, np.zeros(corr.size)


class NonNegative:
    """Omega_j = indicator of b_j >= 0 (non-negativity constraint)."""

    kind = "nonneg"
    kernel_kind = KIND_NONNEG
    mu = 0.0
    is_norm = False
    has_lambda = False

    def value_group(self, b):
        return 0.0 if np.all(np.asarray(b) >= 0) else np.inf

    def value(self, beta, groups=None):
        return self.value_group(beta)

    def prox_group(self, v, step):
        if step <= 0:
            raise ValueError("step must be positive")
        return np.maximum(np.asarray(v, dtype=np.float64), 0.0)

    def conjugate_group(self, v):
        return 0.0 if np.all(np.asarray(v) <= 0) else np.inf

    def conjugate(self, v, groups=None, slack=_CONE_TOL):
        # boundary points of the cone carry float noise; the gauge accepts
        # them with the same tolerance, keeping the dual value finite
        return 0.0 if np.max(v, initial=0.0) <= slack else np.inf

    def anchor_group(self, size):
        return np.zeros(size)

    def sphere_test_group(self, c_g, r, group_norm):
        if r < 0:
            raise ValueError("radius must be nonnegative")
        c_g = np.atleast_1d(np.asarray(c_g, dtype=np.float64))
        return bool(np.all(-c_g > r * group_norm + SCREEN_GUARD))

    def gauge_polar(self, v, groups=None):
        # dom Omega* = nonpositive orthant is a cone: its gauge is 0 on the
        # cone and +inf off it, so the rescaled dual point degenerates to 0
        # whenever the raw gradient mapping is infeasible.
        return 0.0 if np.max(v, initial=0.0) <= _CONE_TOL else np.inf

    def col_margins(self, corr):
        return -corr

    def margins(self, corr, groups):
        return _group_reduce_min(self.col_margins(corr), groups)

    def screen(self, corr, r, groups, col_norms):
        col_pass = self.col_margins(corr) > r * col_norms + SCREEN_GUARD
        mask = np.bitwise_and.reduceat(col_pass[groups.flat], groups.offsets[:-1])
        return mask, np.zeros(corr.size)


class Box:
    """Omega_j = indicator of a <= b_j <= b (box constraint).

    The screenable anchors are the bounds; the test reports which bound is
    certified. Groups are treated column-separably.
    """

    kind = "box"
    kernel_kind = KIND_BOX
    mu = 0.0
    is_norm = False
    has_lambda = False

    def __init__(self, lo, hi):
        if not lo < hi:
            raise ValueError("box bounds must satisfy lo < hi")
        self.lo = float(lo)
        self.hi = float(hi)

    def value_group(self, b):
        b = np.asarray(b)
        return 0.0 if np.all((b >= self.lo) & (b <= self.hi)) else np.inf

    def value(self, beta, groups=None):
        return self.value_group(beta)

    def prox_group(self, v, step):
        if step <= 0:
            raise ValueError("step must be positive")
        return np.clip(np.asarray(v, dtype=np.float64), self.lo, self.hi)

    def conjugate_group(self, v):
        v = np.asarray(v, dtype=np.float64)
        return float(np.sum(np.maximum(self.lo * v, self.hi * v)))

    def conjugate(self, v, groups=None, slack=None):
        return self.conjugate_group(v)

    def anchor_group(self, size):
        return np.full(size, self.lo)

    def sphere_test_group(self, c_g, r, group_norm):
        """Returns 'lower', 'upper', or False (which bound is certified, if any)."""
        if r < 0:
            raise ValueError("radius must be nonnegative")
        c_g = np.atleast_1d(np.asarray(c_g, dtype=np.float64))
        if np.all(-c_g > r * group_norm + SCREEN_GUARD):
            return "lower"
        if np.all(c_g > r * group_norm + SCREEN_GUARD):
            return "upper"
        return False

    def gauge_polar(self, v, groups=None):
        return 0.0  # Omega* is finite everywhere

    def col_margins(self, corr):
        # distance-to-certification of the nearer arm
        return np.abs(corr)

    def margins(self, corr, groups):
        return _group_reduce_min(self.col_margins(corr), groups)

    def screen(self, corr, r, groups, col_norms):
        lower = -corr > r * col_norms + SCREEN_GUARD
        upper = corr > r * col_norms + SCREEN_GUARD
        col_pass = lower | upper
        mask = np.bitwise_and.reduceat(col_pass[groups.flat], groups.offsets[:-1])
        anchors = np.where(lower, self.lo, np.where(upper, self.hi, self.lo))
        return mask, anchors

    def feasible_start(self, p):
        return np.clip(np.zeros(p), self.lo, self.hi)


def penalty_value(penalty, beta_g):
    """Omega_g evaluated on one block (np.inf encodes constraint violation)."""
    return penalty.value_group(np.asarray(beta_g, dtype=np.float64))


def prox(penalty, v, step):
    return penalty.prox_group(v, step)


def penalty_conjugate(penalty, v_g):
    return penalty.conjugate_group(np.asarray(v_g, dtype=np.float64))


def dual_gauge(penalty, v, groups=None):
    """Polar gauge of dom Omega* evaluated at a p-vector (0 when unbounded)."""
    return penalty.gauge_polar(np.asarray(v, dtype=np.float64), groups)


def sphere_test(penalty, c_g, r, group_norm):
    return penalty.sphere_test_group(c_g, r, group_norm)


def feasible_start(penalty, p):
    if isinstance(penalty, Box):
        return penalty.feasible_start(p)
    return np.zeros(p)


def make_penalty(kind, lam=None, en_alpha=0.5, lo=0.0, hi=1.0):
    """CLI-facing factory; kind in {l1, enet, group_l2, nonneg, box}."""
    kind = kind.lower()
    if kind == "l1":
        return L1(lam)
    if kind in ("enet", "elastic_net"):
        return ElasticNet(lam, en_alpha)
    if kind in ("group_l2", "group"):
        return GroupL2(lam)
    if kind in ("nonneg", "nn"):
        return NonNegative()
    if kind == "box":
        return Box(lo, hi)
    raise ValueError(f"unknown penalty kind: {kind!r}")
