"""Quadrature rules on the reference triangle and the reference edge.

Triangle rules come from collapsing a tensor Gauss-Legendre rule on the
unit square onto the triangle {x, y >= 0, x + y <= 1} via
(s, t) -> (s (1 - t), t), whose Jacobian (1 - t) stays positive at the
interior Gauss nodes, so all weights are positive. With n points per
direction the collapsed integrand of a degree-d monomial has s-degree
<= d and t-degree <= d + 1, hence n = (d + 3) // 2 gives exactness.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

MAX_ORDER = 10


@dataclass(frozen=True)
class QuadratureRule:
    """points: (nq, 3) barycentric for triangles, (nq,) in [0,1] for edges;
    weights sum to the reference measure (1/2 resp. 1)."""

    points: np.ndarray
    weights: np.ndarray
    order: int


def _check_order(order):
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"quadrature order {order} outside [0, {MAX_ORDER}]")


def _gauss01(n):
    x, w = leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def triangle_rule(order):
    """Rule exact for total degree <= order on the reference triangle."""
    _check_order(order)
    n = (order + 3) // 2
    s, ws = _gauss01(n)
    t, wt = _gauss01(n)
    S, T = np.meshgrid(s, t)
    x = (S * (1.0 - T)).ravel()
    y = T.ravel()
    w = (np.outer(wt * (1.0 - t), ws)).ravel()
    bary = np.column_stack([1.0 - x - y, x, y])
    return QuadratureRule(points=bary, weights=w, order=order)


def edge_rule(order):
    """Gauss-Legendre rule on [0,1], exact to degree 2n-1 with n points."""
    _check_order(order)
    n = order // 2 + 1
    x, w = _gauss01(n)
    return QuadratureRule(points=x, weights=w, order=order)
