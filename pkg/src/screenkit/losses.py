"""Smooth data-fitting terms: value, gradient, Fenchel conjugate, regularity constants.

Only the quadratic loss is implemented; the class contract (value / gradient /
conjugate / nu) is the extension point for other smooth losses.
"""

from __future__ import annotations

import numpy as np


class QuadraticLoss:
    """f(z) = 0.5 * ||y - z||^2.

    Smoothness constant nu = 1, hence the dual objective is mu_dual = 1/nu = 1
    strongly concave.
    """

    nu = 1.0
    mu_dual = 1.0

    def __init__(self, y):
        self.y = np.asarray(y, dtype=np.float64)
        if self.y.ndim != 1:
            raise ValueError("y must be a vector")
        self.y_norm_sq = float(self.y @ self.y)

    @property
    def n(self):
        return self.y.size

    def value(self, z):
        z = np.asarray(z, dtype=np.float64)
        d = self.y - z
        return 0.5 * float(d @ d)

    def gradient(self, z):
        z = np.asarray(z, dtype=np.float64)
        return z - self.y

    def conjugate(self, w):
        """f*(w) = 0.5 * ||w||^2 + <w, y>."""
        w = np.asarray(w, dtype=np.float64)
        return 0.5 * float(w @ w) + float(w @ self.y)

    def dual_value(self, theta):
        """-f*(-theta), the smooth part of the dual objective."""
        theta = np.asarray(theta, dtype=np.float64)
        return float(theta @ self.y) - 0.5 * float(theta @ theta)
