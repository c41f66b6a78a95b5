from math import factorial

import numpy as np
import pytest

from fetransform.quadrature import MAX_TRIANGLE_DEGREE, UnsupportedDegree, gauss_interval, triangle_rule


def monomial_integral(a, b):
    return factorial(a) * factorial(b) / factorial(a + b + 2)


def test_gauss_small_rules():
    g1 = gauss_interval(1)
    np.testing.assert_allclose(g1.points, [0.0])
    np.testing.assert_allclose(g1.weights, [2.0])
    g2 = gauss_interval(2)
    np.testing.assert_allclose(np.sort(g2.points), [-1 / np.sqrt(3), 1 / np.sqrt(3)])
    np.testing.assert_allclose(g2.weights, [1.0, 1.0])


def test_gauss_exactness():
    g = gauss_interval(6)
    assert g.integrate(g.points**10) == pytest.approx(2 / 11, abs=1e-14)
    assert g.weights.sum() == pytest.approx(2.0, abs=1e-12)


def test_triangle_examples():
    assert triangle_rule(0).integrate(np.ones(len(triangle_rule(0)))) == pytest.approx(0.5)
    r = triangle_rule(2)
    assert r.integrate(r.points[:, 0] * r.points[:, 1]) == pytest.approx(1 / 24, abs=1e-15)
    r = triangle_rule(10)
    x, y = r.points.T
    assert r.integrate(x**5 * y**5) == pytest.approx(monomial_integral(5, 5), abs=1e-13)


@pytest.mark.parametrize("d", range(0, MAX_TRIANGLE_DEGREE + 1))
def test_triangle_exactness_sweep(d):
    r = triangle_rule(d)
    x, y = r.points.T
    assert r.weights.sum() == pytest.approx(0.5, abs=1e-12)
    assert np.all(x >= 0) and np.all(y >= 0) and np.all(x + y <= 1 + 1e-15)
    for a in range(d + 1):
        for b in range(d + 1 - a):
            assert r.integrate(x**a * y**b) == pytest.approx(monomial_integral(a, b), abs=1e-12)


def test_unsupported_degree():
    with pytest.raises(UnsupportedDegree):
        triangle_rule(MAX_TRIANGLE_DEGREE + 1)
