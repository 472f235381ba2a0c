"""End-to-end acceptance suite: one test per criterion, one printed line each.

Everything runs on seeded synthetic data at desk scale (n=50, p=200 for the
regression families, n=100, p=10 for the SVM path). References are
screening-free solves at eps_ref = 1e-12 (1e-13 for the SVM dual).
Run with `pytest -s tests/test_acceptance.py` to see the per-criterion lines.
"""

import csv
import json

import numpy as np
import pytest

import screenkit as sk
from helpers import (
    lasso_problem,
    reference_solve,
    sandwich_constant,
    subopt_lower_bound_rhs,
    svm_reference,
)
from screenkit.data import make_two_class
from screenkit.identification import delta_z, fit_linear_rate, k0_bound_linear, measure_k0, oracle_active_set

N, P = 50, 200
RATIOS = (0.5, 0.1, 0.02)  # lambda_max / {2, 10, 50}
EPS = 1e-8


def _report(criterion, ok, detail=""):
    tag = "PASS" if ok else "FAIL"
    print(f"[{tag}] criterion {criterion}: {detail}")
    assert ok, f"criterion {criterion} failed: {detail}"


def _run_and_reference(X, loss, penalty, groups=None, tol_eps=EPS):
    sol, trace = sk.solve(
        X, loss, penalty, sk.SolveOptions(tol_eps=tol_eps, rule="dynamic_gap"),
        groups=groups,
    )
    ref = reference_solve(X, loss, penalty, groups=groups)
    return sol, trace, ref


@pytest.fixture(scope="module")
def safety_batch():
    """Criterion 1/2 shared batch: Lasso + GroupLasso + NNLS dynamic-gap runs."""
    runs = []
    # 50 Lasso instances: seeds x ratio grid
    for i in range(50):
        X, loss = lasso_problem(i, n=N, p=P)
        lam = RATIOS[i % 3] * sk.lambda_max(X, loss, sk.L1(1.0))
        pen = sk.L1(lam)
        groups = sk.GroupStructure.singletons(X)
        runs.append(("lasso", X, loss, pen, groups, *_run_and_reference(X, loss, pen)))
    # 20 GroupLasso instances
    for i in range(20):
        X, loss = lasso_problem(1000 + i, n=N, p=P)
        groups = sk.GroupStructure.contiguous(X, 5)
        lam = RATIOS[i % 3] * sk.lambda_max(X, loss, sk.GroupL2(1.0), groups)
        pen = sk.GroupL2(lam)
        runs.append(("group", X, loss, pen, groups,
                     *_run_and_reference(X, loss, pen, groups=groups)))
    # 20 NNLS instances (no lambda)
    for i in range(20):
        X, loss = lasso_problem(2000 + i, n=N, p=P)
        pen = sk.NonNegative()
        groups = sk.GroupStructure.singletons(X)
        runs.append(("nnls", X, loss, pen, groups, *_run_and_reference(X, loss, pen)))
    return runs


def test_criterion_1_safety_zero_false_eliminations(safety_batch):
    violations = 0
    checked = 0
    for kind, X, loss, pen, groups, sol, trace, ref in safety_batch:
        for g in np.flatnonzero(~sol.state.active):
            idx = groups.indices[g]
            anchor = sol.state.fixed_beta[idx]
            checked += 1
            if np.max(np.abs(ref.beta[idx] - anchor)) > 1e-7:
                violations += 1
    _report(1, violations == 0,
            f"{len(safety_batch)} runs, {checked} screened groups, "
            f"{violations} false eliminations")


def test_criterion_2_gap_safe_radius(safety_batch):
    violations = 0
    checked = 0
    for kind, X, loss, pen, groups, sol, trace, ref in safety_batch:
        theta_ref = ref.theta.theta
        for theta_k, r_k in zip(trace.dual_points, trace.radius):
            checked += 1
            if np.linalg.norm(theta_ref - theta_k) > r_k + 1e-8:
                violations += 1
    _report(2, violations == 0, f"{checked} logged balls, {violations} violations")


def test_criterion_3_solution_invariance():
    rules = ("none", "static", "dynamic_gap", "strong_then_safe",
             "aggressive_then_safe", "working_set")
    worst = 0.0
    for i in range(10):
        X, loss = lasso_problem(3000 + i, n=N, p=P)
        lam = 0.1 * sk.lambda_max(X, loss, sk.L1(1.0))
        pen = sk.L1(lam)
        base, _ = sk.solve(X, loss, pen, sk.SolveOptions(tol_eps=EPS, rule="none"))
        for rule in rules[1:]:
            sol, _ = sk.solve(X, loss, pen, sk.SolveOptions(tol_eps=EPS, rule=rule))
            worst = max(worst, float(np.max(np.abs(sol.beta - base.beta))))
    _report(3, worst <= 1e-6, f"max deviation from rule=none across rules: {worst:.2e}")


def _nondegenerate_instances(base_seed, penalty_of, n_wanted, min_dz=1e-4):
    """Seeded instances with a comfortably positive identification slack."""
    found = []
    seed = base_seed
    while len(found) < n_wanted:
        X, loss = lasso_problem(seed, n=N, p=P)
        seed += 1
        pen, groups = penalty_of(X, loss)
        ref = reference_solve(X, loss, pen, groups=groups)
        oracle = oracle_active_set(ref.theta.theta, X, pen, groups)
        dz = delta_z(ref.theta.theta, X, pen, groups, oracle_mask=oracle)
        if not (min_dz < dz < np.inf):
            continue
        found.append((X, loss, pen, groups, ref, oracle, dz))
    return found


def test_criterion_4_finite_identification():
    def penalty_of(X, loss):
        lam = 0.1 * sk.lambda_max(X, loss, sk.L1(1.0))
        return sk.L1(lam), sk.GroupStructure.singletons(X)

    instances = _nondegenerate_instances(4000, penalty_of, 20)
    bad = 0
    for X, loss, pen, groups, ref, oracle, dz in instances:
        assert dz > 1e-6
        tol_eps = min(EPS, 0.4 * dz**2 / loss.y_norm_sq)
        _, trace = sk.solve(X, loss, pen, sk.SolveOptions(tol_eps=tol_eps))
        k0_meas, k0_rad = measure_k0(trace, oracle, dz)
        if k0_meas is None or k0_rad is None:
            bad += 1
            continue
        for i, epoch in enumerate(trace.epoch):
            if epoch >= k0_rad and not np.array_equal(trace.masks[i], oracle):
                bad += 1
                break
    _report(4, bad == 0, f"20 nondegenerate instances, {bad} identification failures")


@pytest.fixture(scope="module")
def enet_batch():
    """Criterion 5/6 shared batch: 20 elastic-net runs solved to identification."""

    def penalty_of(X, loss):
        lam = 0.1 * sk.lambda_max(X, loss, sk.ElasticNet(1.0, 0.5))
        return sk.ElasticNet(lam, 0.5), sk.GroupStructure.singletons(X)

    batch = []
    for X, loss, pen, groups, ref, oracle, dz in _nondegenerate_instances(
        5000, penalty_of, 20
    ):
        tol_eps = min(EPS, 0.4 * dz**2 / loss.y_norm_sq)
        _, trace = sk.solve(X, loss, pen, sk.SolveOptions(tol_eps=tol_eps))
        p_ref = sk.primal_value(X, loss, pen, ref.beta, groups)
        batch.append((X, loss, pen, groups, ref, oracle, dz, trace, p_ref))
    return batch


def test_criterion_5_sandwich_and_linear_bound(enet_batch):
    sandwich_bad = 0
    for X, loss, pen, groups, ref, oracle, dz, trace, p_ref in enet_batch[:10]:
        s_star = sandwich_constant(X, loss, pen)
        for p_k, gap_k in zip(trace.primal, trace.gap):
            e_k = p_k - p_ref
            if not (s_star * gap_k <= e_k + 1e-9 and e_k <= gap_k + 1e-9):
                sandwich_bad += 1

    bound_ok = 0
    bound_fail_consistent = True
    for X, loss, pen, groups, ref, oracle, dz, trace, p_ref in enet_batch:
        k0_meas, k0_rad = measure_k0(trace, oracle, dz)
        subopt = np.asarray(trace.primal) - p_ref
        kappa = fit_linear_rate(trace.epoch, subopt)
        sigma = sk.spectral_norm(X) ** 2
        e0 = max(float(subopt[0]), 1e-300)
        if kappa is None or kappa <= 0 or k0_meas is None:
            bound_fail_consistent = bound_fail_consistent and k0_rad is not None
            continue
        bound = k0_bound_linear(kappa, pen.mu, loss.nu, sigma, loss.mu_dual, dz, e0)
        if k0_meas <= bound:
            bound_ok += 1
        else:
            # fitting noise is tolerated when the radius criterion still holds
            consistent = all(
                np.array_equal(trace.masks[i], oracle)
                for i, epoch in enumerate(trace.epoch)
                if k0_rad is not None and epoch >= k0_rad
            )
            bound_fail_consistent = bound_fail_consistent and consistent
    ok = sandwich_bad == 0 and bound_ok >= 18 and bound_fail_consistent
    _report(5, ok,
            f"sandwich violations {sandwich_bad}; bound held {bound_ok}/20 "
            f"(failures radius-consistent: {bound_fail_consistent})")


def test_criterion_6_subopt_lower_bound(enet_batch):
    violations = 0
    checked = 0
    for X, loss, pen, groups, ref, oracle, dz, trace, p_ref in enet_batch[:10]:
        s_values = (0.1, 0.5, sandwich_constant(X, loss, pen))
        for beta_k, theta_k, p_k, gap_k in zip(
            trace.betas, trace.dual_points, trace.primal, trace.gap
        ):
            e_k = p_k - p_ref
            for s in s_values:
                checked += 1
                rhs = subopt_lower_bound_rhs(X, loss, pen, beta_k, theta_k, gap_k, s)
                if rhs > e_k + 1e-9:
                    violations += 1
    _report(6, violations == 0, f"{checked} (epoch, s) pairs, {violations} violations")


def test_criterion_7_svm_sample_screening():
    violations = 0
    screened_total = 0
    for i in range(20):
        X, labels = make_two_class(100, 10, seed=7000 + i, separation=1.5)
        for lam in (0.1, 1.0):
            sol, _ = sk.solve_svm(X, labels, lam, sk.SolveOptions(tol_eps=EPS))
            ref = svm_reference(X, labels, lam)
            theta_ref = ref.theta.theta
            zero_screened = ~sol.state.active & ~sol.state.as_bound
            bound_screened = ~sol.state.active & sol.state.as_bound
            screened_total += int(zero_screened.sum() + bound_screened.sum())
            if np.any(np.abs(theta_ref[zero_screened]) > 1e-7):
                violations += 1
            if np.any(np.abs(theta_ref[bound_screened] - labels[bound_screened]) > 1e-7):
                violations += 1
    _report(7, violations == 0,
            f"40 runs, {screened_total} screened samples, {violations} violations")


def _correlated_instance(seed=0, corr=0.999):
    rng = np.random.default_rng(seed)
    n, p = N, 60
    x1 = rng.standard_normal(n)
    x1 /= np.linalg.norm(x1)
    perp = rng.standard_normal(n)
    perp -= x1 * (x1 @ perp)
    perp /= np.linalg.norm(perp)
    x2 = corr * x1 + np.sqrt(1 - corr**2) * perp
    rest = rng.standard_normal((n, p - 2))
    rest /= np.linalg.norm(rest, axis=0)
    A = np.column_stack([x1, x2, rest])
    y = 2.0 * x2 - 1.2 * x1 + 0.1 * rng.standard_normal(n)
    return sk.DesignMatrix(A), sk.QuadraticLoss(y)


def test_criterion_8_unsafe_rule_repair():
    X, loss = _correlated_instance()
    lam = 0.1 * sk.lambda_max(X, loss, sk.L1(1.0))
    pen = sk.L1(lam)
    groups = sk.GroupStructure.singletons(X)
    base, _ = sk.solve(X, loss, pen, sk.SolveOptions(tol_eps=EPS, rule="none"))
    ref = reference_solve(X, loss, pen)
    oracle = oracle_active_set(ref.theta.theta, X, pen, groups)
    worst = 0.0
    repaired_ok = True
    for rule in ("strong_then_safe", "aggressive_then_safe"):
        sol, trace = sk.solve(X, loss, pen, sk.SolveOptions(tol_eps=EPS, rule=rule))
        worst = max(worst, float(np.max(np.abs(sol.beta - base.beta))))
        # any group unsafely parked during phase 1 must end up repaired:
        # either re-activated by the safe phase or confirmed inactive
        still_unsafe = sol.state.unsafe_groups()
        if np.any(oracle[still_unsafe]):
            repaired_ok = False
        if sk.kkt_repair(sol.beta, X, loss, pen, groups, sol.state):
            repaired_ok = False
    _report(8, worst <= 1e-6 and repaired_ok,
            f"max deviation {worst:.2e}, repair consistent: {repaired_ok}")


def test_criterion_9_screening_monotone_and_effective():
    bad_monotone = 0
    bad_final = 0
    bad_match = 0
    for i in range(10):
        X, loss = lasso_problem(9000 + i, n=N, p=P)
        groups = sk.GroupStructure.singletons(X)
        lam = 0.1 * sk.lambda_max(X, loss, sk.L1(1.0))
        pen = sk.L1(lam)
        sol, trace = sk.solve(X, loss, pen, sk.SolveOptions(tol_eps=EPS))
        ref = reference_solve(X, loss, pen)
        oracle = oracle_active_set(ref.theta.theta, X, pen, groups)
        n_inactive = int((~oracle).sum())
        counts = np.asarray(trace.n_screened)
        if np.any(np.diff(counts) < 0):
            bad_monotone += 1
        if counts[-1] < 0.99 * n_inactive:
            bad_final += 1
        dz = delta_z(ref.theta.theta, X, pen, groups, oracle_mask=oracle)
        k0_meas, _ = measure_k0(trace, oracle, dz)
        if k0_meas is not None:
            for i_row, epoch in enumerate(trace.epoch):
                if epoch >= k0_meas and trace.n_screened[i_row] != n_inactive:
                    bad_match += 1
                    break
    ok = bad_monotone == 0 and bad_final == 0 and bad_match == 0
    _report(9, ok,
            f"10 runs; monotonicity fails {bad_monotone}, <99% screened {bad_final}, "
            f"count!=|Z| after identification {bad_match}")


def test_criterion_10_cli_contract(tmp_path):
    from screenkit.cli import main
    from screenkit.data import load_libsvm, write_libsvm
    import scipy.sparse as sp

    # libsvm round-trip is structure-exact
    rng = np.random.default_rng(0)
    A = sp.random(15, 12, density=0.4, random_state=2, format="csc")
    ds = sk.Dataset(X=sk.DesignMatrix(A), y=rng.standard_normal(15))
    f1, f2 = tmp_path / "a.svm", tmp_path / "b.svm"
    write_libsvm(ds, f1)
    r1 = load_libsvm(f1, n_features=12)
    write_libsvm(r1, f2)
    r2 = load_libsvm(f2, n_features=12)
    roundtrip = (
        np.array_equal(r1.X._sparse.indptr, r2.X._sparse.indptr)
        and np.array_equal(r1.X._sparse.indices, r2.X._sparse.indices)
        and np.array_equal(r1.X._sparse.data, r2.X._sparse.data)
    )

    # bench JSON schema + hash equality between rules
    out = tmp_path / "bench"
    code = main(["bench", "--synthetic", "--n", "40", "--p", "80", "--k-true", "5",
                 "--seed", "3", "--rules", "none,dynamic_gap", "--eps-grid",
                 "1e-4,1e-6,1e-8", "--out-dir", str(out)])
    cells = json.loads((out / "bench_summary.json").read_text())
    keys_ok = all(
        set(c) == {"rule", "eps", "lambda_ratio", "epochs", "seconds",
                   "normalized_time", "n_screened_final", "beta_hash"}
        for c in cells
    )
    hash_ok = all(
        len({c["beta_hash"] for c in cells if c["eps"] == eps}) == 1
        for eps in (1e-4, 1e-6, 1e-8)
    )

    # exit codes
    usage = main(["solve", "--no-such-flag"]) == 1
    data_err = main(["solve", "--data", str(tmp_path / "missing.svm")]) == 2
    out2 = tmp_path / "noconv"
    noconv = main(["solve", "--synthetic", "--n", "40", "--p", "80",
                   "--eps", "1e-12", "--max-epochs", "2",
                   "--out-dir", str(out2)]) == 3

    # determinism modulo the ms column
    outs = []
    for name in ("d1", "d2"):
        d = tmp_path / name
        main(["solve", "--synthetic", "--n", "40", "--p", "80", "--seed", "5",
              "--eps", "1e-6", "--out-dir", str(d)])
        rows = [r[:-1] for r in csv.reader(open(d / "trace.csv"))]
        outs.append(rows)
    deterministic = outs[0] == outs[1]

    ok = roundtrip and code == 0 and keys_ok and hash_ok and usage and data_err \
        and noconv and deterministic
    _report(10, ok,
            f"roundtrip={roundtrip}, schema={keys_ok}, hash={hash_ok}, "
            f"exit codes={(usage, data_err, noconv)}, deterministic={deterministic}")
