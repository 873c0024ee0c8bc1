"""Quadrature on the reference triangle.

Oracle: the closed-form monomial integrals
int_T x^a y^b dx dy = a! b! / (a + b + 2)! over the reference triangle.
"""

from math import factorial

import numpy as np
import pytest

from teig.quadrature import QuadratureRule


def monomial_integral(a, b):
    return factorial(a) * factorial(b) / factorial(a + b + 2)


@pytest.mark.parametrize("degree", range(1, 9))
def test_exactness(degree):
    rule = QuadratureRule(degree)
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            approx = np.sum(rule.weights
                            * rule.points[:, 0] ** a * rule.points[:, 1] ** b)
            assert approx == pytest.approx(monomial_integral(a, b), abs=1e-14)


def test_weights_sum_to_area():
    for degree in (1, 3, 6, 8):
        rule = QuadratureRule(degree)
        assert np.sum(rule.weights) == pytest.approx(0.5, abs=1e-15)


def test_points_inside_triangle():
    rule = QuadratureRule(6)
    x, y = rule.points[:, 0], rule.points[:, 1]
    assert np.all(x >= 0) and np.all(y >= 0)
    assert np.all(x + y <= 1 + 1e-14)


def test_positive_weights():
    for degree in range(1, 9):
        assert np.all(QuadratureRule(degree).weights > 0)
