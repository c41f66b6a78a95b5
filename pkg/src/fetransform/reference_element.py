"""Prime polynomial bases, node functionals, element definitions and nodal bases.

A *function set* is anything that can be tabulated: a callable
``ev(points, order)`` returning ``[values, gradients, hessians][:order + 1]``
with shapes ``(nf, npts)``, ``(nf, npts, 2)`` and ``(nf, npts, 3)``.  Second
derivatives are always stored in the order (xx, xy, yy).  Functionals act on
function sets and return one number per function, so applying a vector of
nodes to a function set gives the matrix ``N(Phi)``.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .geometry import Triangle, edge_frames, reference_triangle
from .linalg import SingularMatrix, invert
from .quadrature import gauss_interval, triangle_rule

EDGE_GAUSS_POINTS = 6
_CENTER = 1.0 / 3.0


class SingularVandermonde(ValueError):
    pass


def legendre_eval(n, x):
    """Legendre polynomial of degree ``n`` at ``x`` by the three-term recurrence."""
    if n < 0 or n > 8:
        raise ValueError("Legendre degree must lie in [0, 8]")
    x = np.asarray(x, dtype=float)
    p0, p1 = np.ones_like(x), x
    if n == 0:
        return p0
    for k in range(1, n):
        p0, p1 = p1, ((2 * k + 1) * x * p1 - k * p0) / (k + 1)
    return p1


def monomial_exponents(r):
    return [(k - b, b) for k in range(r + 1) for b in range(k + 1)]


def _tabulate_monomials(exps, points, order):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x = pts[:, 0] - _CENTER
    y = pts[:, 1] - _CENTER

    def pw(base, k):
        return base**k if k >= 0 else np.zeros_like(base)

    vals = np.array([pw(x, a) * pw(y, b) for a, b in exps])
    out = [vals]
    if order >= 1:
        gx = np.array([a * pw(x, a - 1) * pw(y, b) for a, b in exps])
        gy = np.array([b * pw(x, a) * pw(y, b - 1) for a, b in exps])
        out.append(np.stack([gx, gy], axis=-1))
    if order >= 2:
        hxx = np.array([a * (a - 1) * pw(x, a - 2) * pw(y, b) for a, b in exps])
        hxy = np.array([a * b * pw(x, a - 1) * pw(y, b - 1) for a, b in exps])
        hyy = np.array([b * (b - 1) * pw(x, a) * pw(y, b - 2) for a, b in exps])
        out.append(np.stack([hxx, hxy, hyy], axis=-1))
    return out


class PrimeBasis:
    """Orthonormal basis of P_r on the reference triangle.

    Monomials centred at the barycentre, Gram-Schmidt orthonormalized
    (via QR) in the L2 inner product of an exact degree-2r rule.
    """

    def __init__(self, degree):
        self.degree = int(degree)
        self.exponents = monomial_exponents(self.degree)
        rule = triangle_rule(2 * self.degree)
        vals = _tabulate_monomials(self.exponents, rule.points, 0)[0]
        a = (vals * np.sqrt(rule.weights)).T
        _, r = np.linalg.qr(a)
        # phi_k = sum_j coeffs[k, j] m_j
        self.coeffs = invert(r).T

    @property
    def dim(self):
        return len(self.exponents)

    def tabulate(self, points, order=0):
        mono = _tabulate_monomials(self.exponents, points, order)
        return [np.tensordot(self.coeffs, t, axes=(1, 0)) for t in mono]

    def evaluator(self, coeffs=None):
        """Function set for the combinations ``coeffs @ phi`` (all of phi if None)."""
        if coeffs is None:
            return self.tabulate
        coeffs = np.atleast_2d(coeffs)

        def ev(points, order=0):
            return [np.tensordot(coeffs, t, axes=(1, 0)) for t in self.tabulate(points, order)]

        return ev

    def gram(self, degree=None):
        rule = triangle_rule(2 * self.degree if degree is None else degree)
        v = self.tabulate(rule.points)[0]
        return (v * rule.weights) @ v.T


@lru_cache(maxsize=None)
def prime_basis(degree):
    return PrimeBasis(degree)


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PointEval:
    x: np.ndarray

    def __call__(self, ev):
        return ev(np.reshape(self.x, (1, 2)), 0)[0][:, 0]


@dataclass(frozen=True, eq=False)
class PointDeriv:
    x: np.ndarray
    direction: np.ndarray

    def __call__(self, ev):
        return ev(np.reshape(self.x, (1, 2)), 1)[1][:, 0, :] @ self.direction


@dataclass(frozen=True, eq=False)
class PointSecondDeriv:
    x: np.ndarray
    d1: np.ndarray
    d2: np.ndarray

    def __call__(self, ev):
        h = ev(np.reshape(self.x, (1, 2)), 2)[2][:, 0, :]
        a, b = self.d1, self.d2
        w = np.array([a[0] * b[0], a[0] * b[1] + a[1] * b[0], a[1] * b[1]])
        return h @ w


@dataclass(frozen=True, eq=False)
class EdgeDerivMoment:
    """Integral over an edge of ``L^n(s) * (direction . grad p)`` in arc length.

    ``s`` runs over [-1, 1] from ``start`` to ``end``.
    """

    start: np.ndarray
    end: np.ndarray
    degree: int
    direction: np.ndarray
    kind: str = "normal"
    edge: int = 0

    def __call__(self, ev):
        g = gauss_interval(EDGE_GAUSS_POINTS)
        a, b = np.asarray(self.start), np.asarray(self.end)
        pts = 0.5 * (a + b) + np.outer(g.points, 0.5 * (b - a))
        half_len = 0.5 * np.linalg.norm(b - a)
        w = g.weights * legendre_eval(self.degree, g.points) * half_len
        grads = ev(pts, 1)[1]
        return (grads @ self.direction) @ w


def node_matrix(nodes, ev):
    """The outer product ``N(Phi)[i, j] = n_i(phi_j)``."""
    return np.array([n(ev) for n in nodes])


def apply_functional(f, p, basis):
    """Action of a functional on the polynomial with prime coefficients ``p``."""
    return float(f(basis.evaluator(np.asarray(p, dtype=float)[None, :]))[0])


# ---------------------------------------------------------------------------
# element definitions
# ---------------------------------------------------------------------------

E_X = np.array([1.0, 0.0])
E_Y = np.array([0.0, 1.0])


@dataclass(frozen=True, eq=False)
class FiniteElementDef:
    """Cell, polynomial space and ordered nodes of a finite element.

    ``degree`` is the degree of the full polynomial space.  For a constrained
    space (Bell) ``constraints`` holds the functionals whose common null space
    is the element's space; ``extended`` marks the element whose nodes are the
    constrained element's nodes followed by the constraints, over full P_r.
    ``entities[k]`` is ``(dim, index)`` of the mesh entity node k lives on.
    """

    name: str
    cell: Triangle
    degree: int
    nodes: tuple
    entities: tuple
    constraints: tuple = ()
    extended: bool = False

    @property
    def nu(self):
        return len(self.nodes)

    @property
    def kappa(self):
        return len(self.constraints)

    @property
    def constrained(self):
        return bool(self.constraints) and not self.extended

    @property
    def full_dim(self):
        return (self.degree + 1) * (self.degree + 2) // 2


def _cell(cell):
    return reference_triangle() if cell is None else cell


def _vertex_jet(v, order):
    nodes = [PointEval(v)]
    if order >= 1:
        nodes += [PointDeriv(v, E_X), PointDeriv(v, E_Y)]
    if order >= 2:
        nodes += [PointSecondDeriv(v, E_X, E_X), PointSecondDeriv(v, E_X, E_Y),
                  PointSecondDeriv(v, E_Y, E_Y)]
    return nodes


def lagrange(r, cell=None):
    """Equispaced Lagrange element: vertices, edge points, then interior points.

    Edge points run from the lower to the higher *local* vertex so that the
    element is affine equivalent to its reference copy on any cell.
    """
    K = _cell(cell)
    v = K.vertices
    nodes, ents = [], []
    for i in range(3):
        nodes.append(PointEval(v[i]))
        ents.append((0, i))
    for i, (a, b) in enumerate(((1, 2), (0, 2), (0, 1))):
        for k in range(1, r):
            nodes.append(PointEval(v[a] + (k / r) * (v[b] - v[a])))
            ents.append((1, i))
    for j in range(1, r):
        for i in range(1, r - j):
            lam1, lam2 = i / r, j / r
            nodes.append(PointEval(v[0] + lam1 * (v[1] - v[0]) + lam2 * (v[2] - v[0])))
            ents.append((2, 0))
    return FiniteElementDef(f"lagrange{r}", K, r, tuple(nodes), tuple(ents))


def cubic_hermite(cell=None):
    K = _cell(cell)
    nodes, ents = [], []
    for i in range(3):
        jet = _vertex_jet(K.vertices[i], 1)
        nodes += jet
        ents += [(0, i)] * len(jet)
    nodes.append(PointEval(K.barycenter))
    ents.append((2, 0))
    return FiniteElementDef("hermite", K, 3, tuple(nodes), tuple(ents))


def morley(cell=None):
    K = _cell(cell)
    frames = edge_frames(K)
    nodes = [PointEval(K.vertices[i]) for i in range(3)]
    nodes += [PointDeriv(f.midpoint, f.normal) for f in frames]
    ents = [(0, i) for i in range(3)] + [(1, i) for i in range(3)]
    return FiniteElementDef("morley", K, 2, tuple(nodes), tuple(ents))


def _c1_vertex_nodes(K):
    nodes, ents = [], []
    for i in range(3):
        jet = _vertex_jet(K.vertices[i], 2)
        nodes += jet
        ents += [(0, i)] * len(jet)
    return nodes, ents


def argyris(cell=None):
    K = _cell(cell)
    nodes, ents = _c1_vertex_nodes(K)
    for i, f in enumerate(edge_frames(K)):
        nodes.append(PointDeriv(f.midpoint, f.normal))
        ents.append((1, i))
    return FiniteElementDef("argyris", K, 5, tuple(nodes), tuple(ents))


def bell_constraints(K, kind="normal"):
    """Edge moments of the normal (or tangential) derivative against L^4."""
    out = []
    for i, f in enumerate(edge_frames(K)):
        d = f.normal if kind == "normal" else f.tangent
        out.append(EdgeDerivMoment(K.vertices[f.start], K.vertices[f.end], 4, d, kind, i))
    return tuple(out)


def bell(cell=None):
    K = _cell(cell)
    nodes, ents = _c1_vertex_nodes(K)
    return FiniteElementDef("bell", K, 5, tuple(nodes), tuple(ents), bell_constraints(K))


def bell_extended(cell=None):
    K = _cell(cell)
    nodes, ents = _c1_vertex_nodes(K)
    lam = bell_constraints(K)
    return FiniteElementDef("bell_extended", K, 5, tuple(nodes) + lam,
                            tuple(ents) + tuple((1, i) for i in range(3)), lam, True)


ELEMENTS = {
    "lagrange1": lambda cell=None: lagrange(1, cell),
    "lagrange2": lambda cell=None: lagrange(2, cell),
    "lagrange3": lambda cell=None: lagrange(3, cell),
    "hermite": cubic_hermite,
    "morley": morley,
    "argyris": argyris,
    "bell": bell,
    "bell_extended": bell_extended,
}


def element(name, cell=None):
    try:
        return ELEMENTS[name](cell)
    except KeyError:
        raise ValueError(f"unknown element {name!r}") from None


# ---------------------------------------------------------------------------
# nodal bases
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NodalBasis:
    """``psi_k = sum_j coeffs[k, j] phi_j`` over a prime basis."""

    element: FiniteElementDef
    prime: PrimeBasis
    coeffs: np.ndarray = field(repr=False)

    def __len__(self):
        return self.coeffs.shape[0]

    def tabulate(self, points, order=0):
        return self.prime.evaluator(self.coeffs)(points, order)

    def kronecker(self):
        return node_matrix(self.element.nodes, self.tabulate)


def build_nodal_basis(el, basis=None):
    """Invert the generalized Vandermonde matrix ``A[i, j] = n_i(phi_j)``.

    For a constrained element the nodes are extended by the constraints, the
    square system is inverted, and only the first ``nu`` functions are kept.
    """
    basis = prime_basis(el.degree) if basis is None else basis
    nodes = el.nodes + el.constraints if el.constrained else el.nodes
    if len(nodes) != basis.dim:
        raise SingularVandermonde(f"{len(nodes)} nodes for a {basis.dim}-dimensional space")
    a = node_matrix(nodes, basis.evaluator())
    try:
        c = invert(a).T
    except SingularMatrix as exc:
        raise SingularVandermonde(f"nodes of {el.name} are not unisolvent") from exc
    return NodalBasis(el, basis, c[:el.nu])


@lru_cache(maxsize=None)
def reference_basis(name):
    """Nodal basis of the named element on the reference triangle (cached)."""
    return build_nodal_basis(element(name))
