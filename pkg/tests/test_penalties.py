import numpy as np
import pytest

import screenkit as sk
from screenkit.penalties import (
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

ALL = [L1(0.7), ElasticNet(0.7, 0.5), GroupL2(0.7), NonNegative(), Box(-0.4, 0.9)]


# ---------------------------------------------------------------- values


def test_value_examples():
    assert penalty_value(L1(0.5), np.array([-2.0])) == pytest.approx(1.0)
    assert penalty_value(NonNegative(), np.array([-1.0])) == np.inf
    assert penalty_value(GroupL2(1.0), np.array([3.0, 4.0])) == pytest.approx(5.0)


def test_value_infinite_is_value_not_exception():
    assert np.isinf(penalty_value(Box(0.0, 1.0), np.array([2.0])))


# ---------------------------------------------------------------- prox


def test_prox_examples():
    assert prox(L1(0.5), np.array([2.0]), 1.0) == pytest.approx([1.5])
    assert prox(NonNegative(), np.array([-3.0]), 1.0) == pytest.approx([0.0])
    assert np.allclose(prox(GroupL2(1.0), np.array([3.0, 4.0]), 1.0), [2.4, 3.2])


def _prox_residual(pen, v, step, u):
    """Max violation of 0 in u - v + step * dOmega(u), by case analysis."""
    lam = getattr(pen, "lam", None)
    if isinstance(pen, ElasticNet):
        res = np.where(
            u != 0,
            np.abs(u - v + step * lam * (np.sign(u) + pen.en_alpha * u)),
            np.maximum(np.abs(v) - step * lam, 0.0),
        )
        return res.max()
    if isinstance(pen, L1):
        res = np.where(
            u != 0,
            np.abs(u - v + step * lam * np.sign(u)),
            np.maximum(np.abs(v) - step * lam, 0.0),
        )
        return res.max()
    if isinstance(pen, GroupL2):
        nu = np.linalg.norm(u)
        if nu > 0:
            return np.max(np.abs(u - v + step * lam * u / nu))
        return max(np.linalg.norm(v) - step * lam, 0.0)
    if isinstance(pen, NonNegative):
        res = np.where(u > 0, np.abs(u - v), np.maximum(v, 0.0))
        return res.max()
    if isinstance(pen, Box):
        # interior: u = v; at the lower bound: v <= u; at the upper: v >= u
        res = np.where(u <= pen.lo, np.maximum(v - u, 0.0),
                       np.where(u >= pen.hi, np.maximum(u - v, 0.0),
                                np.abs(u - v)))
        return res.max()
    raise AssertionError


@pytest.mark.parametrize("pen", ALL, ids=lambda p: p.kind)
def test_prox_subgradient_optimality(pen):
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(1000):
        v = rng.standard_normal(3) * 2
        step = float(rng.uniform(0.05, 3.0))
        u = pen.prox_group(v, step)
        worst = max(worst, float(_prox_residual(pen, v, step, u)))
    assert worst <= 1e-10


def test_prox_rejects_nonpositive_step():
    for pen in ALL:
        with pytest.raises(ValueError):
            pen.prox_group(np.array([1.0]), 0.0)


# ---------------------------------------------------------------- conjugates


def test_conjugate_examples():
    assert penalty_conjugate(L1(1.0), np.array([0.5])) == 0.0
    assert penalty_conjugate(L1(1.0), np.array([2.0])) == np.inf
    assert penalty_conjugate(Box(0.0, 1.0), np.array([-2.0, 3.0])) == pytest.approx(3.0)


def test_enet_conjugate_against_numeric_sup():
    pen = ElasticNet(0.8, 0.6)
    grid = np.linspace(-60, 60, 2_000_001)
    for v in (-2.3, -0.8, 0.0, 0.5, 1.7):
        vals = v * grid - 0.8 * (np.abs(grid) + 0.3 * grid**2)
        brute = vals.max()
        assert pen.conjugate_group(np.array([v])) == pytest.approx(brute, abs=1e-7)


def test_group_conjugate_indicator():
    pen = GroupL2(2.0)
    assert pen.conjugate_group(np.array([1.0, 1.0])) == 0.0
    assert pen.conjugate_group(np.array([2.0, 1.0])) == np.inf


def test_nonneg_conjugate():
    pen = NonNegative()
    assert pen.conjugate_group(np.array([-1.0, 0.0])) == 0.0
    assert pen.conjugate_group(np.array([0.5])) == np.inf


def _subdiff_element(pen, u, rng):
    """A v in dOmega(u), built by case analysis (for Fenchel-Young equality)."""
    if isinstance(pen, ElasticNet):
        s = np.where(u != 0, np.sign(u), rng.uniform(-1, 1, size=u.shape))
        return pen.lam * (s + pen.en_alpha * u)
    if isinstance(pen, L1):
        s = np.where(u != 0, np.sign(u), rng.uniform(-1, 1, size=u.shape))
        return pen.lam * s
    if isinstance(pen, GroupL2):
        nu = np.linalg.norm(u)
        if nu > 0:
            # float-shrink keeps the boundary element inside the dual ball
            return pen.lam * (1.0 - 1e-12) * u / nu
        d = rng.standard_normal(u.shape)
        return pen.lam * 0.5 * d / np.linalg.norm(d)
    if isinstance(pen, NonNegative):
        return np.where(u > 0, 0.0, -rng.uniform(0, 2, size=u.shape))
    if isinstance(pen, Box):
        v = np.zeros_like(u)
        v[u <= pen.lo] = -rng.uniform(0, 2)
        v[u >= pen.hi] = rng.uniform(0, 2)
        return v
    raise AssertionError


def _domain_point(pen, rng, size=3):
    u = rng.standard_normal(size)
    if isinstance(pen, NonNegative):
        return np.maximum(u, 0.0)
    if isinstance(pen, Box):
        return np.clip(u, pen.lo, pen.hi)
    return u


@pytest.mark.parametrize("pen", ALL, ids=lambda p: p.kind)
def test_fenchel_young_inequality_and_equality(pen):
    rng = np.random.default_rng(23)
    for _ in range(300):
        u = _domain_point(pen, rng)
        v = _subdiff_element(pen, u, rng)
        val = pen.value_group(u)
        conj = pen.conjugate_group(v)
        assert val + conj >= float(u @ v) - 1e-10
        assert val + conj == pytest.approx(float(u @ v), abs=1e-10)
        # inequality for an unrelated in-domain pair
        v2 = _subdiff_element(pen, _domain_point(pen, rng), rng)
        if np.isfinite(pen.conjugate_group(v2)):
            assert pen.value_group(u) + pen.conjugate_group(v2) >= float(u @ v2) - 1e-10


# ---------------------------------------------------------------- dual gauge


def test_dual_gauge_examples():
    assert dual_gauge(L1(0.5), np.array([1.0, 0.0])) == pytest.approx(2.0)
    assert dual_gauge(ElasticNet(0.5, 0.3), np.array([99.0, -5.0])) == 0.0
    X = sk.DesignMatrix(np.eye(2))
    groups = sk.GroupStructure(X, [[0, 1]])
    assert dual_gauge(GroupL2(2.0), np.array([3.0, 4.0]), groups) == pytest.approx(2.5)


def test_dual_gauge_unbounded_domains():
    assert dual_gauge(Box(-1.0, 1.0), np.array([7.0])) == 0.0
    # the non-negative cone: zero inside, infinite outside
    assert dual_gauge(NonNegative(), np.array([-1.0, -2.0])) == 0.0
    assert np.isinf(dual_gauge(NonNegative(), np.array([-1.0, 0.5])))


# ---------------------------------------------------------------- sphere tests


def test_sphere_test_l1_examples():
    assert sphere_test(L1(0.5), np.array([0.0]), 0.4, 1.0) is True
    # boundary tie never screens
    assert sphere_test(L1(0.5), np.array([0.0]), 0.5, 1.0) is False


def test_sphere_test_nonneg():
    # certifiable: X_j' theta <= -1 + 0.5 < 0 on the whole ball
    assert sphere_test(NonNegative(), np.array([-1.0]), 0.5, 1.0) is True
    # positive correlation side can never certify the zero anchor
    assert sphere_test(NonNegative(), np.array([1.0]), 0.5, 1.0) is False
    assert sphere_test(NonNegative(), np.array([-0.2]), 0.5, 1.0) is False


def test_sphere_test_box_reports_bound():
    assert sphere_test(Box(0.0, 1.0), np.array([-2.0]), 0.5, 1.0) == "lower"
    assert sphere_test(Box(0.0, 1.0), np.array([2.0]), 0.5, 1.0) == "upper"
    assert sphere_test(Box(0.0, 1.0), np.array([0.1]), 0.5, 1.0) is False


def test_sphere_test_rejects_negative_radius():
    with pytest.raises(ValueError):
        sphere_test(L1(1.0), np.array([0.0]), -0.1, 1.0)


def test_sphere_test_group_l2():
    assert sphere_test(GroupL2(2.0), np.array([0.3, 0.4]), 0.5, 1.0) is True
    assert sphere_test(GroupL2(2.0), np.array([1.2, 1.6]), 0.5, 1.0) is False


def test_r0_oracle_complement_lasso():
    """At r=0 with the high-precision dual, the test marks exactly Z."""
    from helpers import lasso_problem, reference_solve

    X, loss = lasso_problem(5, n=40, p=80, k=6)
    lam = 0.3 * sk.lambda_max(X, loss, sk.L1(1.0))
    pen = sk.L1(lam)
    ref = reference_solve(X, loss, pen)
    theta = ref.theta.theta
    corr = X.rmatvec(theta)
    groups = sk.GroupStructure.singletons(X)
    oracle_inactive = ~sk.oracle_active_set(theta, X, pen, groups)
    marked = np.array([
        sphere_test(pen, corr[j:j + 1], 0.0, X.col_norms[j]) for j in range(X.n_cols)
    ])
    assert np.array_equal(marked, oracle_inactive)


def test_subdifferential_separation_l1():
    lam = 0.9
    rng = np.random.default_rng(3)
    for b in rng.standard_normal(200):
        if b == 0:
            continue
        # the subdifferential at b lies outside int dOmega(0) = (-lam, lam)
        assert abs(lam * np.sign(b)) >= lam


# ---------------------------------------------------------------- misc


def test_mu_strong_convexity():
    assert L1(1.0).mu == 0.0
    assert ElasticNet(2.0, 0.5).mu == pytest.approx(1.0)
    assert GroupL2(1.0).mu == 0.0
    assert NonNegative().mu == 0.0
    assert Box(0, 1).mu == 0.0


def test_parameter_validation():
    with pytest.raises(ValueError):
        L1(0.0)
    with pytest.raises(ValueError):
        ElasticNet(1.0, -0.1)
    with pytest.raises(ValueError):
        Box(1.0, 1.0)


def test_make_penalty_factory():
    assert isinstance(make_penalty("l1", lam=1.0), L1)
    assert isinstance(make_penalty("enet", lam=1.0, en_alpha=0.2), ElasticNet)
    assert isinstance(make_penalty("group_l2", lam=1.0), GroupL2)
    assert isinstance(make_penalty("nonneg"), NonNegative)
    assert isinstance(make_penalty("box", lo=-1, hi=1), Box)
    with pytest.raises(ValueError):
        make_penalty("huber")
