"""Gauss rules on [-1, 1] and collapsed (Duffy) rules on the unit right triangle."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_TRIANGLE_DEGREE = 20


class UnsupportedDegree(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __len__(self):
        return len(self.weights)

    def integrate(self, values):
        return np.tensordot(values, self.weights, axes=([-1], [0]))


@lru_cache(maxsize=None)
def gauss_interval(n):
    """n-point Gauss-Legendre rule, exact through degree 2n - 1."""
    if n < 1:
        raise ValueError("need at least one point")
    x, w = np.polynomial.legendre.leggauss(n)
    return QuadratureRule(x, w, 2 * n - 1)


@lru_cache(maxsize=None)
def triangle_rule(degree):
    """Collapsed tensor Gauss rule on (0,0), (1,0), (0,1), exact through ``degree``.

    The collapse ``(u, v) -> (u, v (1 - u))`` adds one power of ``1 - u``
    from the Jacobian, so the u-direction needs one more degree of exactness.
    """
    degree = int(degree)
    if degree < 0 or degree > MAX_TRIANGLE_DEGREE:
        raise UnsupportedDegree(f"triangle rules go up to degree {MAX_TRIANGLE_DEGREE}")
    n = max(1, (degree + 2 + 1) // 2)
    g = gauss_interval(n)
    s = 0.5 * (g.points + 1.0)
    ws = 0.5 * g.weights
    u, v = np.meshgrid(s, s, indexing="ij")
    wu, wv = np.meshgrid(ws, ws, indexing="ij")
    x = u
    y = v * (1.0 - u)
    w = wu * wv * (1.0 - u)
    pts = np.column_stack([x.ravel(), y.ravel()])
    return QuadratureRule(pts, w.ravel(), degree)
