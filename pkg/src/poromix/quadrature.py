"""Quadrature rules on the reference triangle and on edges.

Triangle rules are conical products of Gauss-Legendre and Gauss-Jacobi rules
under the Duffy map, so a rule exact for any requested polynomial degree can
be generated.  The reference triangle is {(x, y): x, y >= 0, x + y <= 1}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

MAX_DEGREE = 30


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray   # (nq, 2) reference coordinates
    weights: np.ndarray  # (nq,), sum to 1/2
    degree: int


def quadrature_for(degree):
    """Triangle rule exact for polynomials of total degree <= ``degree``."""
    if degree < 0 or degree > MAX_DEGREE:
        raise ValueError(f"unsupported quadrature degree {degree}")
    n = max(1, (degree + 2) // 2)
    # x-direction carries the Jacobian factor (1 - x) of the Duffy map
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    xg, wg = np.polynomial.legendre.leggauss(n)
    xj = 0.5 * (xj + 1.0)
    wj = wj / 8.0           # (1/2)^3: interval map twice + weight function scale
    xg = 0.5 * (xg + 1.0)
    wg = 0.5 * wg
    X = xj[:, None] * np.ones_like(xg)[None, :]
    Y = (1.0 - xj)[:, None] * xg[None, :]
    W = wj[:, None] * wg[None, :] * 2.0
    points = np.stack([X.ravel(), Y.ravel()], axis=1)
    weights = W.ravel()
    return QuadratureRule(points, weights, degree)


def edge_quadrature(degree):
    """Gauss-Legendre points/weights on [0, 1], exact to ``degree``."""
    n = max(1, (degree + 2) // 2)
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w
