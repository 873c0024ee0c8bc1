"""Quadrature on the reference triangle (0,0)-(1,0)-(0,1).

Rules are built by collapsing a Gauss-Legendre x Gauss-Jacobi tensor rule
through the Duffy transform, so exactness of any requested degree is
available without tabulated point sets.
"""

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


class QuadratureRule:
    """Points (as (x, y) reference coordinates) and weights on the
    reference triangle; integrates all polynomials up to ``degree``."""

    def __init__(self, degree):
        n = degree // 2 + 1
        # x-direction: Legendre on [0,1]; y-direction: Jacobi(1,0) absorbs
        # the (1-b) Jacobian of the collapsed map
        xa, wa = roots_legendre(n)
        xa = 0.5 * (xa + 1.0)
        wa = 0.5 * wa
        xb, wb = roots_jacobi(n, 1.0, 0.0)
        xb = 0.5 * (xb + 1.0)
        wb = 0.25 * wb  # interval scaling plus the weight normalization

        A, B = np.meshgrid(xa, xb, indexing="ij")
        WA, WB = np.meshgrid(wa, wb, indexing="ij")
        x = (A * (1.0 - B)).ravel()
        y = B.ravel()
        w = (WA * WB).ravel()

        self.degree = degree
        self.points = np.column_stack([x, y])
        self.weights = w

    def __len__(self):
        return self.weights.size
