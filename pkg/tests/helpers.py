import numpy as np

import screenkit as sk


def lasso_problem(seed, n=50, p=200, k=10, snr=5.0):
    ds = sk.make_synthetic(n, p, k, snr, seed)
    return ds.X, sk.QuadraticLoss(ds.y)


def reference_solve(X, loss, penalty, groups=None, eps=1e-12, max_epochs=400_000):
    """Screening-free high-precision reference; independent of any rule under test."""
    sol, _ = sk.solve(
        X, loss, penalty,
        sk.SolveOptions(tol_eps=eps, rule="none", max_epochs=max_epochs),
        groups=groups,
    )
    assert sol.converged, "reference solve must converge"
    return sol


def svm_reference(X, labels, lam, eps=1e-13, max_epochs=400_000):
    sol, _ = sk.solve_svm(
        X, labels, lam,
        sk.SolveOptions(tol_eps=eps, rule="none", max_epochs=max_epochs),
    )
    assert sol.converged
    return sol


def sandwich_constant(X, loss, penalty):
    """mu_Omega / (sigma * nu_f + mu_Omega) with sigma = ||X||_op^2 (Gram norm)."""
    sigma = sk.spectral_norm(X) ** 2
    return penalty.mu / (sigma * loss.nu + penalty.mu)


def subopt_lower_bound_rhs(X, loss, penalty, beta, theta, gap, s):
    """Lower bound on P(beta) - P(beta_hat) built from a conjugate subgradient.

    Valid for any s in [0, 1] when the dual point is unscaled (alpha = 1):
    s*gap + s(1-s)(mu/2)||beta-u||^2 - (s^2 nu/2)||X(u-beta)||^2.
    """
    u = penalty.conjugate_subgradient(X.rmatvec(theta))
    diff = u - beta
    quad = np.linalg.norm(diff) ** 2
    xdiff = np.linalg.norm(X.matvec(diff)) ** 2
    return (s * gap
            + s * (1.0 - s) * 0.5 * penalty.mu * quad
            - 0.5 * s**2 * loss.nu * xdiff)
