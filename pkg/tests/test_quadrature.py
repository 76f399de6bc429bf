import math

import numpy as np
import pytest

from poromix.quadrature import edge_quadrature, quadrature_for


def reference_monomial_integral(a, b):
    """Closed form: int_T x^a y^b = a! b! / (a + b + 2)! over the unit triangle."""
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


def test_constant_and_linear():
    rule = quadrature_for(2)
    assert rule.weights.sum() == pytest.approx(0.5, abs=1e-14)
    x = rule.points[:, 0]
    assert (rule.weights * x).sum() == pytest.approx(1.0 / 6.0, abs=1e-14)


def test_x2y2():
    rule = quadrature_for(4)
    val = (rule.weights * rule.points[:, 0] ** 2 * rule.points[:, 1] ** 2).sum()
    assert val == pytest.approx(reference_monomial_integral(2, 2), abs=1e-15)
    assert reference_monomial_integral(2, 2) == pytest.approx(1.0 / 180.0)


@pytest.mark.parametrize("degree", [1, 2, 3, 4, 6, 8, 10])
def test_exactness_up_to_declared_degree(degree):
    rule = quadrature_for(degree)
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            val = (rule.weights * rule.points[:, 0] ** a * rule.points[:, 1] ** b).sum()
            assert val == pytest.approx(reference_monomial_integral(a, b), abs=1e-14)


def test_unsupported_degree():
    with pytest.raises(ValueError):
        quadrature_for(-1)
    with pytest.raises(ValueError):
        quadrature_for(99)


def test_edge_rule():
    s, w = edge_quadrature(5)
    for m in range(6):
        assert (w * s**m).sum() == pytest.approx(1.0 / (m + 1), abs=1e-14)
