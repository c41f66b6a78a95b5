"""Triangles, the affine map onto a reference cell, and edge frames.

The affine map points from the physical cell to the reference cell,
``xhat = F(x) = J x + b``, so ``J`` holds the derivatives of the reference
coordinates with respect to the physical ones.

Edge ``i`` is the edge opposite vertex ``i``.  Its tangent runs from the
endpoint with the smaller global vertex number to the larger one and the
normal is the tangent rotated by ``R = [[0, 1], [-1, 0]]``, so two cells
sharing an edge always agree on both.
"""

from dataclasses import dataclass, field

import numpy as np

from .linalg import SingularMatrix, lu_solve

ROTATION = np.array([[0.0, 1.0], [-1.0, 0.0]])
DEGENERACY_TOL = 1e-14
# (start, end) local vertices of edge i when the global order matches the local one
EDGE_VERTICES = ((1, 2), (0, 2), (0, 1))


class DegenerateTriangle(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Triangle:
    """Three vertices in local order plus their global numbers."""

    vertices: np.ndarray
    ids: tuple = (0, 1, 2)

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(3, 2)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "ids", tuple(int(i) for i in self.ids))
        if len(set(self.ids)) != 3:
            raise ValueError("vertex ids must be distinct")
        if abs(self.twice_signed_area) <= DEGENERACY_TOL * self.diameter**2:
            raise DegenerateTriangle(f"degenerate triangle {v.tolist()}")

    @property
    def twice_signed_area(self):
        e1 = self.vertices[1] - self.vertices[0]
        e2 = self.vertices[2] - self.vertices[0]
        return float(e1[0] * e2[1] - e1[1] * e2[0])

    @property
    def area(self):
        return 0.5 * abs(self.twice_signed_area)

    @property
    def diameter(self):
        v = self.vertices
        return float(max(np.linalg.norm(v[i] - v[j]) for i, j in EDGE_VERTICES))

    @property
    def barycenter(self):
        return self.vertices.mean(axis=0)


def reference_triangle():
    """The unit right triangle (0,0), (1,0), (0,1)."""
    return Triangle(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))


@dataclass(frozen=True, eq=False)
class AffineMap:
    """``F(x) = A x + b``; ``J = A`` is the Jacobian of F."""

    A: np.ndarray
    b: np.ndarray
    Jinv: np.ndarray = field(repr=False)

    @property
    def J(self):
        return self.A

    @property
    def detJ(self):
        return float(np.linalg.det(self.A))

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.A.T + self.b

    def inverse(self, xhat):
        """Push reference points back to the physical cell."""
        return (np.asarray(xhat, dtype=float) - self.b) @ self.Jinv.T


def affine_map(K, Khat):
    """The affine map sending vertex i of ``K`` to vertex i of ``Khat``."""
    # unknowns (A00, A01, A10, A11, b0, b1)
    sys = np.zeros((6, 6))
    rhs = np.zeros(6)
    for i, (x, xh) in enumerate(zip(K.vertices, Khat.vertices)):
        sys[2 * i] = [x[0], x[1], 0.0, 0.0, 1.0, 0.0]
        sys[2 * i + 1] = [0.0, 0.0, x[0], x[1], 0.0, 1.0]
        rhs[2 * i:2 * i + 2] = xh
    try:
        sol = lu_solve(sys, rhs)
    except SingularMatrix as exc:
        raise DegenerateTriangle("affine map is singular") from exc
    A = sol[:4].reshape(2, 2)
    # exact inverse of a 2x2
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    if det == 0.0:
        raise DegenerateTriangle("affine map is singular")
    Jinv = np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]]) / det
    return AffineMap(A, sol[4:].copy(), Jinv)


@dataclass(frozen=True, eq=False)
class EdgeFrame:
    tangent: np.ndarray
    normal: np.ndarray
    length: float
    midpoint: np.ndarray
    start: int  # local vertex the tangent leaves from
    end: int

    @property
    def G(self):
        """Rows (normal, tangent); orthogonal."""
        return np.vstack([self.normal, self.tangent])

    @property
    def tau(self):
        """Coefficients of the tangential second derivative on (xx, xy, yy)."""
        tx, ty = self.tangent
        return np.array([tx * tx, 2.0 * tx * ty, ty * ty])


def edge_frames(K, vertex_order=None):
    """Tangent/normal/length/midpoint of the three edges of ``K``.

    ``vertex_order`` overrides ``K.ids`` as the global vertex numbers that
    fix each tangent's direction.
    """
    ids = K.ids if vertex_order is None else tuple(vertex_order)
    frames = []
    for a, b in EDGE_VERTICES:
        if ids[a] > ids[b]:
            a, b = b, a
        d = K.vertices[b] - K.vertices[a]
        length = float(np.hypot(d[0], d[1]))
        if length == 0.0:
            raise DegenerateTriangle("zero-length edge")
        t = d / length
        frames.append(EdgeFrame(t, ROTATION @ t, length,
                                0.5 * (K.vertices[a] + K.vertices[b]), a, b))
    return frames
