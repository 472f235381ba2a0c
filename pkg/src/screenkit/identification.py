"""Active-set identification diagnostics: oracle sets, slack margins, epoch bounds.

Measured quantities come straight from solve traces; the epoch bounds are
consistency checks built on an empirically fitted linear rate, not proofs.
The curvature constant entering the sandwich and the linear bound must
satisfy ||X v||^2 <= sigma ||v||^2, i.e. it is the squared operator norm of
the design matrix.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

import numpy as np

from .duality import dual_point
from .penalties import Box


@dataclass
class IdentificationReport:
    oracle_active: list
    delta_z: float
    k0_measured: object        # epoch index or None
    k0_radius: object          # epoch index or None
    k0_bound_linear: object
    k0_bound_sublinear: object
    kappa_hat: object

    def to_json(self, **kwargs):
        d = asdict(self)
        d["delta_z"] = None if not math.isfinite(self.delta_z) else self.delta_z
        return json.dumps(d, **kwargs)


def _scaled_margins(corr, X, penalty, groups):
    """Per-group margin / ||X_g|| with column-separable penalties handled columnwise."""
    if penalty.kind == "group_l2":
        margins = penalty.margins(corr, groups)
        norms = groups.norms
        return np.where(norms > 0, margins / np.where(norms > 0, norms, 1.0), np.inf)
    col = penalty.col_margins(corr)
    col_scaled = np.where(X.col_norms > 0,
                          col / np.where(X.col_norms > 0, X.col_norms, 1.0),
                          np.inf)
    return np.minimum.reduceat(col_scaled[groups.flat], groups.offsets[:-1])


def oracle_active_set(theta_ref, X, penalty, groups, tol=1e-9):
    """Groups whose boundary margin at the reference dual is within tol (mask)."""
    corr = X.rmatvec(np.asarray(theta_ref, dtype=np.float64))
    margins = penalty.margins(corr, groups)
    return margins <= tol


def delta_z(theta_ref, X, penalty, groups, oracle_mask=None, tol=1e-9):
    """Minimal scaled slack of the inactive groups: min (margin_g / (2 ||X_g||)).

    Returns +inf when every group is active.
    """
    corr = X.rmatvec(np.asarray(theta_ref, dtype=np.float64))
    if oracle_mask is None:
        oracle_mask = penalty.margins(corr, groups) <= tol
    inactive = ~oracle_mask
    if not inactive.any():
        return np.inf
    scaled = _scaled_margins(corr, X, penalty, groups)
    return float(np.min(scaled[inactive]) / 2.0)


def measure_k0(trace, oracle_mask, delta_z_value):
    """(k0_measured, k0_radius) over the logged epochs of a finished run.

    k0_measured: first logged epoch from which the safe active set equals the
    oracle for every later logged epoch; k0_radius: first logged epoch with
    r_k < delta_Z. Either is None when never reached.
    """
    oracle_mask = np.asarray(oracle_mask, dtype=bool)
    k0_measured = None
    for i in range(trace.n_rows - 1, -1, -1):
        if np.array_equal(trace.masks[i], oracle_mask):
            k0_measured = trace.epoch[i]
        else:
            break
    k0_radius = None
    for i in range(trace.n_rows):
        if trace.radius[i] < delta_z_value:
            k0_radius = trace.epoch[i]
            break
    return k0_measured, k0_radius


def k0_bound_linear(kappa, mu_omega, nu_f, sigma, mu_dual, delta_z_value, e0):
    """Epoch bound (1/kappa) * log(C * (2/mu_dual) * E0 / delta_Z^2), clamped at 0.

    C = (sigma * nu_f + mu_omega) / mu_omega; `sigma` must dominate the
    squared operator norm of X.
    """
    if mu_omega <= 0:
        raise ValueError("the linear bound needs mu_omega > 0")
    if not 0 < kappa:
        raise ValueError("kappa must be positive")
    if delta_z_value <= 0:
        raise ValueError("delta_Z must be positive")
    if not math.isfinite(delta_z_value):
        return 0.0
    c_const = (sigma * nu_f + mu_omega) / mu_omega
    arg = c_const * (2.0 / mu_dual) * e0 / delta_z_value**2
    if arg <= 0:
        return 0.0
    return max(0.0, math.log(arg) / kappa)


def k0_bound_sublinear(c_rate, gamma, nu_f, sigma_x, support_radius, mu_dual,
                       delta_z_value):
    """Epoch bound (8 nu_f sigma_X^2 L^2 C / (mu_dual delta_Z^2)^2)^(1/gamma).

    Only defined for penalties with bounded support of radius L
    (`support_radius`); sigma_x is the plain operator norm here.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if delta_z_value <= 0:
        raise ValueError("delta_Z must be positive")
    num = 8.0 * nu_f * sigma_x**2 * support_radius**2 * c_rate
    den = (mu_dual * delta_z_value**2) ** 2
    return (num / den) ** (1.0 / gamma)


def bounded_support_radius(penalty, p):
    """Radius L of a ball containing dom Omega (Box only)."""
    if isinstance(penalty, Box):
        return max(abs(penalty.lo), abs(penalty.hi)) * math.sqrt(p)
    raise ValueError(f"penalty kind {penalty.kind!r} has unbounded support")


def fit_linear_rate(epochs, subopt, tail_fraction=0.5):
    """Least-squares fit of log E_k = log E_0 - kappa * k over the trace tail."""
    epochs = np.asarray(epochs, dtype=np.float64)
    subopt = np.asarray(subopt, dtype=np.float64)
    keep = subopt > 0
    epochs, subopt = epochs[keep], subopt[keep]
    if epochs.size < 2:
        return None
    start = int(np.floor(epochs.size * (1.0 - tail_fraction)))
    start = min(start, epochs.size - 2)
    e, s = epochs[start:], np.log(subopt[start:])
    a = np.vstack([e, np.ones_like(e)]).T
    slope, _ = np.linalg.lstsq(a, s, rcond=None)[0]
    return float(-slope)


def identification_report(X, loss, penalty, groups, trace, beta_ref,
                          sigma_gram=None, sigma_x=None, tol=1e-9):
    """Assemble the full report for a finished run against a reference solution."""
    theta_ref = dual_point(X, loss, penalty, beta_ref, groups).theta
    oracle = oracle_active_set(theta_ref, X, penalty, groups, tol=tol)
    dz = delta_z(theta_ref, X, penalty, groups, oracle_mask=oracle)
    k0_meas, k0_rad = measure_k0(trace, oracle, dz)

    from .duality import primal_value

    p_ref = primal_value(X, loss, penalty, beta_ref, groups)
    subopt = np.asarray(trace.primal) - p_ref
    kappa_hat = fit_linear_rate(trace.epoch, subopt)

    bound_lin = None
    if penalty.mu > 0 and kappa_hat is not None and kappa_hat > 0 and 0 < dz < np.inf:
        e0 = max(subopt[0], 0.0)
        if sigma_gram is None:
            from .linalg import spectral_norm

            sigma_gram = spectral_norm(X) ** 2
        bound_lin = k0_bound_linear(
            kappa_hat, penalty.mu, loss.nu, sigma_gram, loss.mu_dual, dz, e0
        )
    bound_sub = None
    if isinstance(penalty, Box) and 0 < dz < np.inf and kappa_hat is not None:
        if sigma_x is None:
            from .linalg import spectral_norm

            sigma_x = spectral_norm(X)
        support_l = bounded_support_radius(penalty, X.n_cols)
        # consistency check at gamma = 1 against a generic C/k rate
        c_rate = max(float(subopt[0]), 0.0)
        bound_sub = k0_bound_sublinear(
            c_rate, 1.0, loss.nu, sigma_x, support_l, loss.mu_dual, dz
        )
    return IdentificationReport(
        oracle_active=[int(g) for g in np.flatnonzero(oracle)],
        delta_z=float(dz),
        k0_measured=k0_meas,
        k0_radius=k0_rad,
        k0_bound_linear=bound_lin,
        k0_bound_sublinear=bound_sub,
        kappa_hat=kappa_hat,
    )
