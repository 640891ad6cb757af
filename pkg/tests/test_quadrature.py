import math

import numpy as np
import pytest

from qrfem import edge_rule, triangle_rule
from qrfem.quadrature import MAX_ORDER


def monomial_integral(a, b):
    """Exact integral of x^a y^b over the reference triangle.

    Repeated beta-function reduction gives a! b! / (a + b + 2)!.
    """
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


def quad_triangle(rule, a, b):
    x = rule.points[:, 1]
    y = rule.points[:, 2]
    return float(rule.weights @ (x**a * y**b))


@pytest.mark.parametrize("order", range(MAX_ORDER + 1))
def test_triangle_exactness_to_declared_order(order):
    rule = triangle_rule(order)
    for a in range(order + 1):
        for b in range(order + 1 - a):
            exact = monomial_integral(a, b)
            got = quad_triangle(rule, a, b)
            assert got == pytest.approx(exact, rel=1e-13), (a, b, order)


def test_triangle_spot_value_x2y2():
    # 2! 2! / 6! = 1/180
    assert monomial_integral(2, 2) == pytest.approx(1.0 / 180.0, rel=1e-15)
    rule = triangle_rule(4)
    assert quad_triangle(rule, 2, 2) == pytest.approx(1.0 / 180.0, rel=1e-13)


def test_low_order_rule_misses_high_degree():
    """An order-2 rule is not exact for some cubic; quadrature error must
    actually exist, otherwise the declared orders mean nothing."""
    rule = triangle_rule(2)
    worst = max(
        abs(quad_triangle(rule, a, b) - monomial_integral(a, b))
        for a in range(4)
        for b in range(4 - a)
    )
    assert worst > 1e-6


@pytest.mark.parametrize("order", range(MAX_ORDER + 1))
def test_triangle_weights(order):
    rule = triangle_rule(order)
    assert np.all(rule.weights > 0)
    assert rule.weights.sum() == pytest.approx(0.5, rel=1e-14)
    bary = rule.points
    assert bary.shape[1] == 3
    assert np.allclose(bary.sum(axis=1), 1.0, atol=1e-14)
    assert bary.min() >= 0.0 and bary.max() <= 1.0


@pytest.mark.parametrize("order", range(MAX_ORDER + 1))
def test_edge_exactness_and_weights(order):
    rule = edge_rule(order)
    assert np.all(rule.weights > 0)
    assert rule.weights.sum() == pytest.approx(1.0, rel=1e-14)
    assert rule.points.min() >= 0.0 and rule.points.max() <= 1.0
    for a in range(order + 1):
        exact = 1.0 / (a + 1)
        assert rule.weights @ rule.points**a == pytest.approx(exact, rel=1e-13)


def test_edge_two_point_gauss_nodes():
    """The 2-point rule must sit at the Gauss-Legendre nodes mapped to
    [0,1], i.e. (1 -+ 1/sqrt(3))/2."""
    rule = edge_rule(2)
    expected = np.sort([(1 - 1 / math.sqrt(3)) / 2, (1 + 1 / math.sqrt(3)) / 2])
    assert np.allclose(np.sort(rule.points), expected, atol=1e-15)


@pytest.mark.parametrize("order", [-1, MAX_ORDER + 1, 99])
def test_order_out_of_range_rejected(order):
    with pytest.raises(ValueError):
        triangle_rule(order)
    with pytest.raises(ValueError):
        edge_rule(order)
