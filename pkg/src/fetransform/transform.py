"""Basis transformation matrices ``M = V^T`` for mapped elements.

``Psi = M F^*(Psihat)``: each physical nodal basis function is a combination
of pulled-back reference basis functions.  ``V`` expresses the reference
nodes through the pushed-forward physical nodes and factors as ``E Vc D``
for elements that need a nodal completion (Morley, Argyris, Bell):

* ``D`` writes the completion nodes (edge tangential derivatives or
  tangential L^4 moments) through the element's own nodes, exactly on the
  polynomial space;
* ``Vc`` maps the pushed-forward completion onto the reference completion
  (block diagonal: chain rule at vertices, ``B^i`` on edges);
* ``E`` picks the reference nodes out of the reference completion.

:func:`oracle_transform` computes ``M = B^{-T}`` with
``B[i, j] = n_i(F^*(psihat_j))`` directly and is the ground truth every closed
form is checked against.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from types import SimpleNamespace

import numpy as np

from . import kernels
from .geometry import affine_map, edge_frames, reference_triangle
from .linalg import SingularMatrix, invert, lu_solve
from .quadrature import gauss_interval
from .reference_element import build_nodal_basis, legendre_eval, node_matrix, reference_basis
from .reference_element import element as make_element


class SingularJacobian(ValueError):
    pass


class SingularB(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TransformMatrix:
    M: np.ndarray
    E: np.ndarray = None
    Vc: np.ndarray = None
    D: np.ndarray = None
    # structural sparsity of V (independent of the particular geometry)
    pattern: np.ndarray = field(default=None, repr=False)

    @property
    def V(self):
        return self.M.T

    @property
    def structural_nonzeros(self):
        if self.pattern is None:
            return int(np.count_nonzero(self.M))
        return int(np.count_nonzero(self.pattern))

    @property
    def factored(self):
        return self.E is not None


# ---------------------------------------------------------------------------
# univariate rules
# ---------------------------------------------------------------------------

def _apply_univariate(func, k, interval):
    """Apply a univariate functional to the monomial x^k."""
    kind, arg = func
    if kind == "value":
        return arg**k
    if kind == "deriv":
        return k * arg ** (k - 1) if k >= 1 else 0.0
    if kind == "deriv2":
        return k * (k - 1) * arg ** (k - 2) if k >= 2 else 0.0
    if kind == "legendre_moment":
        # integral of p'(x) L^n(x mapped to [-1, 1]) over the interval
        lo, hi = interval
        g = gauss_interval(8)
        x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * g.points
        dp = k * x ** (k - 1) if k >= 1 else np.zeros_like(x)
        return float(0.5 * (hi - lo) * np.sum(g.weights * dp * legendre_eval(arg, g.points)))
    raise ValueError(f"unknown univariate functional {kind!r}")


def derive_univariate_rule(poly_degree, data, target, interval=(-1.0, 1.0)):
    """Coefficients ``c`` with ``target(p) = sum_k c_k data_k(p)`` for all p of the degree.

    Functionals are ``(kind, arg)`` pairs: ``("value", x)``, ``("deriv", x)``,
    ``("deriv2", x)`` or ``("legendre_moment", n)``.  Exactness is imposed on
    the monomials ``1, x, ..., x**poly_degree``.
    """
    if len(data) != poly_degree + 1:
        raise ValueError("need exactly poly_degree + 1 data functionals")
    a = np.array([[_apply_univariate(d, k, interval) for k in range(poly_degree + 1)]
                  for d in data])
    rhs = np.array([_apply_univariate(target, k, interval) for k in range(poly_degree + 1)])
    return lu_solve(a.T, rhs)


_ENDPOINT_DATA_QUINTIC = [("value", -1.0), ("value", 1.0), ("deriv", -1.0), ("deriv", 1.0),
                          ("deriv2", -1.0), ("deriv2", 1.0)]

# Tangential derivative at an edge midpoint from endpoint jets of a quintic,
# on [-l/2, l/2]: (15/(8 l)) [p] - (7/16) {p'} + (l/32) [p''].
MIDPOINT_RULE = (Fraction(15, 8), Fraction(-7, 16), Fraction(1, 32))
# Integral of p' L^4 on [-l/2, l/2]: (1/21) [p] - (l/42) {p'} + (l^2/252) [p''].
L4_MOMENT_RULE = (Fraction(1, 21), Fraction(-1, 42), Fraction(1, 252))
MIDPOINT_RULE_QUADRATIC = Fraction(1, 2)


def _check_rules():
    quad = derive_univariate_rule(2, [("value", -1.0), ("value", 1.0), ("value", 0.0)], ("deriv", 0.0))
    quin = derive_univariate_rule(5, _ENDPOINT_DATA_QUINTIC, ("deriv", 0.0))
    mom = derive_univariate_rule(5, _ENDPOINT_DATA_QUINTIC, ("legendre_moment", 4))
    ok = (
        np.allclose(quad[:2], [-0.5, 0.5], atol=1e-12)
        and np.allclose(quin, [-15 / 16, 15 / 16, -7 / 16, -7 / 16, -1 / 16, 1 / 16], atol=1e-12)
        and np.allclose(mom, [-1 / 21, 1 / 21, -1 / 21, -1 / 21, -1 / 63, 1 / 63], atol=1e-12)
    )
    if not ok:
        raise RuntimeError("regenerated univariate rules disagree with the hard-coded constants")


_check_rules()


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------

def _jinv(J):
    J = np.asarray(J, dtype=float)
    try:
        return invert(J)
    except SingularMatrix as exc:
        raise SingularJacobian("singular Jacobian") from exc


def b_matrix(i, J, frames, ref_frames):
    """``B^i = Ghat_i J^{-T} G_i^T``, mapping pushed (n, t) derivatives on edge i
    to the reference (nhat, that) derivatives."""
    return ref_frames[i].G @ _jinv(J).T @ frames[i].G.T


def theta_matrix(J):
    """Chain rule for second derivatives: physical (xx, xy, yy) = Theta @ reference."""
    J = np.asarray(J, dtype=float)
    xx, xy = J[0, 0], J[0, 1]  # d xhat / dx, d xhat / dy
    yx, yy = J[1, 0], J[1, 1]  # d yhat / dx, d yhat / dy
    return np.array([
        [xx * xx, 2.0 * xx * yx, yx * yx],
        [xy * xx, xy * yx + xx * yy, yx * yy],
        [xy * xy, 2.0 * xy * yy, yy * yy],
    ])


def _blockdiag(blocks):
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n))
    k = 0
    for b in blocks:
        m = b.shape[0]
        out[k:k + m, k:k + m] = b
        k += m
    return out


def _scalar(x):
    return np.array([[float(x)]])


def _pattern_blocks(symbolic):
    """Replace every block by ones: products of such patterns never cancel."""
    return [np.ones_like(b) for b in symbolic]


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def transform_lagrange(el, map_=None):
    """Lagrange elements are affine equivalent: ``M = I``."""
    n = el.nu
    return TransformMatrix(np.eye(n), pattern=np.eye(n, dtype=bool))


def transform_hermite(map_):
    Jit = _jinv(map_.J).T
    blocks = [_scalar(1), Jit, _scalar(1), Jit, _scalar(1), Jit, _scalar(1)]
    V = _blockdiag(blocks)
    return TransformMatrix(V.T, pattern=_blockdiag(_pattern_blocks(blocks)) != 0)


def _morley_factors(Bs, lengths, ends):
    E = np.zeros((6, 9))
    E[[0, 1, 2, 3, 4, 5], [0, 1, 2, 3, 5, 7]] = 1.0
    Vc = _blockdiag([_scalar(1), _scalar(1), _scalar(1)] + list(Bs))
    D = np.zeros((9, 6))
    D[[0, 1, 2], [0, 1, 2]] = 1.0
    for i in range(3):
        a, b = ends[i]
        D[3 + 2 * i, 3 + i] = 1.0
        D[4 + 2 * i, a] = -1.0 / lengths[i]
        D[4 + 2 * i, b] = 1.0 / lengths[i]
    return E, Vc, D


def transform_morley(map_, frames, ref_frames):
    Bs = [b_matrix(i, map_.J, frames, ref_frames) for i in range(3)]
    lengths = [f.length for f in frames]
    ends = [(f.start, f.end) for f in frames]
    E, Vc, D = _morley_factors(Bs, lengths, ends)
    V = E @ Vc @ D
    Ep, Vp, Dp = _morley_factors([np.ones((2, 2))] * 3, [1.0] * 3, ends)
    pattern = (Ep @ Vp @ np.abs(Dp)) != 0
    return TransformMatrix(V.T, E, Vc, D, pattern)


def morley_explicit_V(map_, frames, ref_frames):
    """The multiplied-out Morley ``V``: 12 entries."""
    V = np.eye(6)
    for i, f in enumerate(frames):
        B = b_matrix(i, map_.J, frames, ref_frames)
        V[3 + i, 3 + i] = B[0, 0]
        V[3 + i, f.start] = -B[0, 1] / f.length
        V[3 + i, f.end] = B[0, 1] / f.length
    return V


def _c1_factors(Jit, Thinv, edge_blocks, frames, rule):
    """E (21x24), Vc (24x24), D (24x21) shared by Argyris and extended Bell.

    ``rule(frame)`` returns the coefficients (value, gradient, hessian) with
    which the tangential completion node of that edge is built from the
    endpoint jets: ``cv [p] + cg t.{grad p} + ch tau.[hess p]``.
    """
    E = np.zeros((21, 24))
    E[np.arange(18), np.arange(18)] = 1.0
    E[[18, 19, 20], [18, 20, 22]] = 1.0
    blocks = []
    for _ in range(3):
        blocks += [_scalar(1), Jit, Thinv]
    Vc = _blockdiag(blocks + list(edge_blocks))
    D = np.zeros((24, 21))
    D[np.arange(18), np.arange(18)] = 1.0
    for i, f in enumerate(frames):
        D[18 + 2 * i, 18 + i] = 1.0
        cv, cg, ch = rule(f)
        row = 19 + 2 * i
        for v, sign in ((f.start, -1.0), (f.end, 1.0)):
            o = 6 * v
            D[row, o] = sign * cv
            D[row, o + 1:o + 3] = cg * f.tangent
            D[row, o + 3:o + 6] = sign * ch * f.tau
    return E, Vc, D


def _c1_pattern(frames):
    return _c1_pattern_cached(tuple((f.start, f.end) for f in frames))


@lru_cache(maxsize=None)
def _c1_pattern_cached(ends):
    frames = [SimpleNamespace(start=a, end=b, tangent=np.ones(2), tau=np.ones(3)) for a, b in ends]
    ones = lambda n: np.ones((n, n))
    E, Vc, D = _c1_factors(ones(2), ones(3), [ones(2)] * 3, frames, lambda f: (1.0, 1.0, 1.0))
    # the pattern of D is the union over generic tangents
    D = np.abs(D)
    for i in range(3):
        row = 19 + 2 * i
        for v in (frames[i].start, frames[i].end):
            D[row, 6 * v:6 * v + 6] = 1.0
    return (E @ Vc @ D) != 0


def _argyris_rule(f):
    cv, cg, ch = MIDPOINT_RULE
    return float(cv) / f.length, float(cg), float(ch) * f.length


def _bell_rule(f):
    cv, cg, ch = L4_MOMENT_RULE
    return float(cv), float(cg) * f.length, float(ch) * f.length**2


def transform_argyris(map_, frames, ref_frames):
    Jit = _jinv(map_.J).T
    Thinv = invert(theta_matrix(map_.J))
    Bs = [b_matrix(i, map_.J, frames, ref_frames) for i in range(3)]
    E, Vc, D = _c1_factors(Jit, Thinv, Bs, frames, _argyris_rule)
    V = E @ Vc @ D
    return TransformMatrix(V.T, E, Vc, D, _c1_pattern(frames))


def bell_edge_scale(frame, ref_frame):
    """Factor multiplying ``B^i`` in the Bell completion.

    The moments are arc-length integrals, and ds = (l / lhat) dshat along an
    affinely mapped edge, so the pushed-forward moment pair equals
    ``(l / lhat) G J^T Ghat^T`` times the reference pair.
    """
    return ref_frame.length / frame.length


def transform_bell(map_, frames, ref_frames):
    """Transformation for the 21-node extended Bell element.

    The physical Bell basis is the first 18 rows of ``M @ F^*(Psihat_ext)``.
    """
    Jit = _jinv(map_.J).T
    Thinv = invert(theta_matrix(map_.J))
    Bs = [bell_edge_scale(frames[i], ref_frames[i]) * b_matrix(i, map_.J, frames, ref_frames)
          for i in range(3)]
    E, Vc, D = _c1_factors(Jit, Thinv, Bs, frames, _bell_rule)
    V = E @ Vc @ D
    return TransformMatrix(V.T, E, Vc, D, _c1_pattern(frames))


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------

def pulled_back(ref_tabulate, map_):
    """Function set ``F^*(psihat)`` on the physical cell, by the chain rule."""
    J = map_.J

    def ev(points, order=0):
        tabs = ref_tabulate(map_(points), order)
        out = [tabs[0]]
        if order >= 1:
            out.append(tabs[1] @ J)  # J^T grad
        if order >= 2:
            h = tabs[2]
            H = np.stack([np.stack([h[..., 0], h[..., 1]], -1),
                          np.stack([h[..., 1], h[..., 2]], -1)], -2)
            P = np.einsum("ai,...ab,bj->...ij", J, H, J)
            out.append(np.stack([P[..., 0, 0], P[..., 0, 1], P[..., 1, 1]], -1))
        return out

    return ev


def oracle_transform(el, ref_basis, map_):
    """``M = B^{-T}`` with ``B[i, j] = n_i(F^*(psihat_j))`` for physical nodes ``el``."""
    B = node_matrix(el.nodes, pulled_back(ref_basis.tabulate, map_))
    try:
        return TransformMatrix(invert(B).T)
    except SingularMatrix as exc:
        raise SingularB(f"B is singular for {el.name}") from exc


# ---------------------------------------------------------------------------
# convenience
# ---------------------------------------------------------------------------

# element whose reference basis is mapped, for each family
REFERENCE_ELEMENT = {
    "lagrange1": "lagrange1",
    "lagrange2": "lagrange2",
    "lagrange3": "lagrange3",
    "hermite": "hermite",
    "morley": "morley",
    "argyris": "argyris",
    "bell": "bell_extended",
    "bell_extended": "bell_extended",
}


def compute_transform(family, K, Khat=None, method="closed"):
    """Transformation for ``family`` between physical ``K`` and ``Khat``."""
    is_reference = Khat is None
    Khat = reference_triangle() if Khat is None else Khat
    F = affine_map(K, Khat)
    if method == "oracle":
        ref_name = REFERENCE_ELEMENT[family]
        basis = (reference_basis(ref_name) if is_reference
                 else build_nodal_basis(make_element(ref_name, Khat)))
        return oracle_transform(make_element(ref_name, K), basis, F)
    frames, ref_frames = edge_frames(K), edge_frames(Khat)
    if family.startswith("lagrange"):
        return transform_lagrange(make_element(family), F)
    if family == "hermite":
        return transform_hermite(F)
    if family == "morley":
        return transform_morley(F, frames, ref_frames)
    if family == "argyris":
        return transform_argyris(F, frames, ref_frames)
    if family in ("bell", "bell_extended"):
        return transform_bell(F, frames, ref_frames)
    raise ValueError(f"unknown family {family!r}")


def batched_congruence(M, A):
    """``M[c] @ A[c] @ M[c].T`` for a stack of cells."""
    M = np.ascontiguousarray(M, dtype=float)
    A = np.ascontiguousarray(A, dtype=float)
    return kernels.backend().batched_congruence(M, A)
