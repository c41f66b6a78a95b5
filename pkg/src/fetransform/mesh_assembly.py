"""Structured meshes of the unit square, DOF maps, boundary conditions and assembly.

Every physical basis function on a cell is ``M F^*(psihat)``; element
matrices are reference matrices transformed by congruence with the per-cell
``M`` and scattered with the DOF map.
"""

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .geometry import EDGE_VERTICES, Triangle, affine_map, reference_triangle
from .linalg import SparseMatrix
from .quadrature import MAX_TRIANGLE_DEGREE, triangle_rule
from .reference_element import reference_basis
from .tabulate import POISSON_RATIO, reference_tensors
from .transform import REFERENCE_ELEMENT, batched_congruence, compute_transform

FAMILIES = ("lagrange3", "hermite", "morley", "argyris", "bell")

# DOFs per (vertex, edge, cell)
ENTITY_DOFS = {
    "lagrange1": (1, 0, 0),
    "lagrange2": (1, 1, 0),
    "lagrange3": (1, 2, 1),
    "hermite": (3, 0, 1),
    "morley": (1, 1, 0),
    "argyris": (6, 1, 0),
    "bell": (6, 0, 0),
}

# meaning of the k-th DOF at a vertex
VERTEX_KINDS = {1: ("v",), 3: ("v", "x", "y"), 6: ("v", "x", "y", "xx", "xy", "yy")}
# derivative order of each vertex kind, for scaling
KIND_ORDER = {"v": 0, "x": 1, "y": 1, "xx": 2, "xy": 2, "yy": 2}

# vertex kinds fixed by each boundary condition on a horizontal / vertical edge
_LAPLACE = {"h": {"v", "x", "xx"}, "v": {"v", "y", "yy"}}
_CLAMPED = {"h": {"v", "x", "y", "xx", "xy"}, "v": {"v", "x", "y", "yy", "xy"}}


class DegenerateCell(ValueError):
    pass


class SolverFailure(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class StructuredMesh:
    """``N x N`` squares of the unit square, each cut along its (0,0)-(1,1) diagonal."""

    N: int
    vertices: np.ndarray  # ((N+1)^2, 2)
    cells: np.ndarray  # (2 N^2, 3), counterclockwise
    edges: np.ndarray  # (n_edges, 2), sorted global endpoints
    cell_edges: np.ndarray  # (2 N^2, 3), global edge opposite local vertex i
    edge_cells: list = field(repr=False)

    @property
    def h(self):
        return 1.0 / self.N

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_cells(self):
        return len(self.cells)

    def triangle(self, c):
        return Triangle(self.vertices[self.cells[c]], tuple(self.cells[c]))

    def boundary_edges(self):
        return np.array([e for e, cs in enumerate(self.edge_cells) if len(cs) == 1], dtype=int)

    def interior_edges(self):
        return np.array([e for e, cs in enumerate(self.edge_cells) if len(cs) == 2], dtype=int)


def build_mesh(N):
    N = int(N)
    if N < 1:
        raise ValueError("N must be positive")
    t = np.linspace(0.0, 1.0, N + 1)
    X, Y = np.meshgrid(t, t)
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    j, i = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    a = (j * (N + 1) + i).ravel()
    b, c, d = a + 1, a + N + 2, a + N + 1
    cells = np.empty((2 * N * N, 3), dtype=int)
    cells[0::2] = np.column_stack([a, b, c])
    cells[1::2] = np.column_stack([a, c, d])

    index, edges, edge_cells = {}, [], []
    cell_edges = np.empty_like(cells)
    for k, cell in enumerate(cells):
        for le, (p, q) in enumerate(EDGE_VERTICES):
            key = tuple(sorted((int(cell[p]), int(cell[q]))))
            e = index.get(key)
            if e is None:
                e = index[key] = len(edges)
                edges.append(key)
                edge_cells.append([])
            edge_cells[e].append(k)
            cell_edges[k, le] = e
    return StructuredMesh(N, vertices, cells, np.array(edges, dtype=int), cell_edges, edge_cells)


@dataclass(frozen=True, eq=False)
class DofMap:
    family: str
    counts: tuple
    n_dofs: int
    cell_dofs: np.ndarray  # (n_cells, nu)
    # per global DOF: entity dim, entity index, position within the entity, kind
    dof_entity: np.ndarray
    dof_index: np.ndarray
    dof_kind: np.ndarray

    def vertex_dof(self, v, k=0):
        return int(v * self.counts[0] + k)


def _local_layout(family):
    """(dim, local entity, position) of each local node, in element order."""
    nv, ne, nc = ENTITY_DOFS[family]
    out = []
    for i in range(3):
        out += [(0, i, k) for k in range(nv)]
    for i in range(3):
        out += [(1, i, k) for k in range(ne)]
    out += [(2, 0, k) for k in range(nc)]
    return out


def build_dofmap(family, mesh):
    if family not in ENTITY_DOFS:
        raise ValueError(f"unknown family {family!r}")
    nv, ne, nc = ENTITY_DOFS[family]
    off_e = mesh.n_vertices * nv
    off_c = off_e + mesh.n_edges * ne
    n = off_c + mesh.n_cells * nc
    layout = _local_layout(family)
    cell_dofs = np.empty((mesh.n_cells, len(layout)), dtype=int)
    for c, cell in enumerate(mesh.cells):
        for k, (dim, i, pos) in enumerate(layout):
            if dim == 0:
                g = cell[i] * nv + pos
            elif dim == 1:
                p, q = EDGE_VERTICES[i]
                # edge-interior points run along the global tangent
                if ne > 1 and cell[p] > cell[q]:
                    pos = ne - 1 - pos
                g = off_e + mesh.cell_edges[c, i] * ne + pos
            else:
                g = off_c + c * nc + pos
            cell_dofs[c, k] = g

    dim = np.empty(n, dtype=int)
    idx = np.empty(n, dtype=int)
    kind = np.empty(n, dtype=object)
    vk = VERTEX_KINDS.get(nv, ())
    for v in range(mesh.n_vertices):
        for k in range(nv):
            dim[v * nv + k], idx[v * nv + k], kind[v * nv + k] = 0, v, vk[k]
    edge_kind = "n" if family in ("morley", "argyris") else "v"
    for e in range(mesh.n_edges):
        for k in range(ne):
            g = off_e + e * ne + k
            dim[g], idx[g], kind[g] = 1, e, edge_kind
    for c in range(mesh.n_cells):
        for k in range(nc):
            g = off_c + c * nc + k
            dim[g], idx[g], kind[g] = 2, c, "v"
    return DofMap(family, (nv, ne, nc), n, cell_dofs, dim, idx, kind)


def vertex_sizes(mesh):
    """Average diameter of the cells sharing each vertex."""
    diam = np.array([mesh.triangle(c).diameter for c in range(mesh.n_cells)])
    total = np.zeros(mesh.n_vertices)
    count = np.zeros(mesh.n_vertices)
    for k in range(3):
        np.add.at(total, mesh.cells[:, k], diam)
        np.add.at(count, mesh.cells[:, k], 1.0)
    return total / count


def scaling_vector(dofmap, mesh):
    """Node scales: 1 for values, ``h_v**k`` for k-th derivatives, ``h_e`` for edge normals.

    Scaling the nodes by ``s`` scales the nodal basis by ``1 / s``.
    """
    s = np.ones(dofmap.n_dofs)
    hv = vertex_sizes(mesh)
    lengths = np.linalg.norm(mesh.vertices[mesh.edges[:, 1]] - mesh.vertices[mesh.edges[:, 0]], axis=1)
    for g in range(dofmap.n_dofs):
        kind = dofmap.dof_kind[g]
        if dofmap.dof_entity[g] == 0:
            s[g] = hv[dofmap.dof_index[g]] ** KIND_ORDER[kind]
        elif kind == "n":
            s[g] = lengths[dofmap.dof_index[g]]
    return s


@dataclass(frozen=True, eq=False)
class FunctionSpace:
    """Everything needed to assemble and evaluate on a mesh: DOF map plus per-cell maps."""

    family: str
    mesh: StructuredMesh
    dofmap: DofMap
    basis: object  # reference nodal basis that gets mapped
    M: np.ndarray  # (n_cells, nu, nu_ref)
    J: np.ndarray  # (n_cells, 2, 2)
    detJ: np.ndarray
    shift: np.ndarray  # (n_cells, 2): xhat = J x + shift
    Jinv: np.ndarray

    @property
    def n_dofs(self):
        return self.dofmap.n_dofs

    def physical_points(self, xhat):
        """Reference points pushed to every cell, shape (n_cells, npts, 2)."""
        xhat = np.atleast_2d(xhat)
        return np.einsum("cij,cqj->cqi", self.Jinv, xhat[None] - self.shift[:, None])


def function_space(family, mesh):
    dofmap = build_dofmap(family, mesh)
    ref = reference_triangle()
    basis = reference_basis(REFERENCE_ELEMENT[family])
    nu = dofmap.cell_dofs.shape[1]
    C = mesh.n_cells
    Ms = np.empty((C, nu, len(basis)))
    J = np.empty((C, 2, 2))
    Jinv = np.empty((C, 2, 2))
    shift = np.empty((C, 2))
    for c in range(C):
        try:
            K = mesh.triangle(c)
        except ValueError as exc:
            raise DegenerateCell(f"cell {c} is degenerate") from exc
        F = affine_map(K, ref)
        Ms[c] = compute_transform(family, K, ref).M[:nu]
        J[c], Jinv[c], shift[c] = F.J, F.Jinv, F.b
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    return FunctionSpace(family, mesh, dofmap, basis, Ms, J, det, shift, Jinv)


def _scatter(space, local):
    d = space.dofmap.cell_dofs
    rows = np.repeat(d, d.shape[1], axis=1)
    cols = np.tile(d, (1, d.shape[1]))
    return SparseMatrix.from_triplets(rows, cols, local.reshape(len(d), -1), (space.n_dofs,) * 2)


def local_matrices(space, form, nu=POISSON_RATIO):
    tens = _reference_tensors(space.basis)
    atilde = tens.cell_matrices(form, space.J, space.detJ, nu)
    return batched_congruence(space.M, atilde)


_TENSOR_CACHE = {}


def _reference_tensors(basis):
    key = basis.element.name
    if key not in _TENSOR_CACHE:
        _TENSOR_CACHE[key] = reference_tensors(basis)
    return _TENSOR_CACHE[key]


def _cell_rule(space, extra=2):
    return triangle_rule(min(2 * space.basis.element.degree + extra, MAX_TRIANGLE_DEGREE))


def load_vector(space, f, rule=None):
    """``b_g = int f psi_g``."""
    rule = _cell_rule(space) if rule is None else rule
    pts = space.physical_points(rule.points)
    fq = f(pts[..., 0], pts[..., 1])
    psihat = space.basis.tabulate(rule.points, 0)[0]
    wf = fq * rule.weights / np.abs(space.detJ)[:, None]
    local = np.einsum("cik,kq,cq->ci", space.M, psihat, wf)
    b = np.zeros(space.n_dofs)
    np.add.at(b, space.dofmap.cell_dofs, local)
    return b


def assemble(space, form, f=None, scaling=None, nu=POISSON_RATIO):
    """Global matrix (and load vector when ``f`` is given).

    With node scales ``s`` the system is written in the scaled basis
    ``psi_g / s_g``: matrix ``S^{-1} A S^{-1}`` and load ``S^{-1} b``;
    :func:`unscale` maps its solution back to nodal coefficients.
    """
    A = _scatter(space, local_matrices(space, form, nu))
    b = load_vector(space, f) if f is not None else None
    if scaling is not None:
        inv = 1.0 / np.asarray(scaling, dtype=float)
        A = A.scaled(inv)
        if b is not None:
            b = b * inv
    A.symmetric = True
    return (A, b) if f is not None else A


def unscale(y, scaling):
    return y if scaling is None else y / np.asarray(scaling, dtype=float)


def _boundary_side(x):
    """'h' for a point on y = 0 or 1, 'v' for x = 0 or 1, 'c' for a corner, None inside."""
    on_h = np.isclose(x[1], 0.0) or np.isclose(x[1], 1.0)
    on_v = np.isclose(x[0], 0.0) or np.isclose(x[0], 1.0)
    if on_h and on_v:
        return "c"
    return "h" if on_h else ("v" if on_v else None)


def boundary_dofs(space, bc):
    """Boolean mask of DOFs fixed by ``bc`` ('laplace' or 'clamped')."""
    if bc not in ("laplace", "clamped"):
        raise ValueError(f"unknown boundary condition {bc!r}")
    table = _LAPLACE if bc == "laplace" else _CLAMPED
    dm, mesh = space.dofmap, space.mesh
    fixed = np.zeros(dm.n_dofs, dtype=bool)
    boundary = set(mesh.boundary_edges().tolist())
    for g in range(dm.n_dofs):
        dim, i, kind = dm.dof_entity[g], dm.dof_index[g], dm.dof_kind[g]
        if dim == 0:
            side = _boundary_side(mesh.vertices[i])
            if side == "c":
                fixed[g] = bc == "clamped" or kind != "xy"
            elif side is not None:
                fixed[g] = kind in table[side]
        elif dim == 1 and i in boundary:
            # edge point values always, edge normal derivatives only when clamped
            fixed[g] = kind == "v" or bc == "clamped"
    return fixed


def apply_dirichlet(A, b, fixed):
    """Symmetric elimination of homogeneous conditions: zero rows/columns, unit diagonal."""
    fixed = np.asarray(fixed, dtype=bool)
    rows = A.row_ids()
    keep = ~fixed[rows] & ~fixed[A.indices]
    idx = np.flatnonzero(fixed)
    r = np.concatenate([rows[keep], idx])
    c = np.concatenate([A.indices[keep], idx])
    v = np.concatenate([A.data[keep], np.ones(idx.size)])
    out = SparseMatrix.from_triplets(r, c, v, A.shape)
    out.symmetric = A.symmetric
    b = None if b is None else np.where(fixed, 0.0, b)
    return out, b


SOLVERS = ("direct", "cg", "dense")


def solve(A, b, solver="direct", tol=1e-12):
    """Solve a symmetric positive definite system; failures raise :class:`SolverFailure`."""
    try:
        if solver == "cg":
            x = linalg.cg_solve(A, b, tol=tol)
        elif solver == "dense":
            x = linalg.lu_solve(A.to_dense(), b)
        elif solver == "direct":
            import scipy.sparse.linalg

            x = scipy.sparse.linalg.spsolve(A.to_scipy().tocsc(), b)
        else:
            raise ValueError(f"unknown solver {solver!r}")
    except linalg.LinAlgError as exc:
        raise SolverFailure(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SolverFailure("solution has non-finite entries")
    return x


def interpolate(space, u, du=None, d2u=None):
    """Nodal interpolant coefficients from a function and its derivatives.

    ``du(x, y) -> (ux, uy)`` and ``d2u(x, y) -> (uxx, uxy, uyy)`` are needed
    for derivative DOFs.  Edge normal DOFs use the normal of the global edge
    orientation at the midpoint.
    """
    dm, mesh = space.dofmap, space.mesh
    coeffs = np.zeros(dm.n_dofs)
    nv, ne, nc = dm.counts
    for g in range(dm.n_dofs):
        dim, i, kind = dm.dof_entity[g], dm.dof_index[g], dm.dof_kind[g]
        if dim == 0:
            x, y = mesh.vertices[i]
            if kind == "v":
                coeffs[g] = u(x, y)
            elif kind in ("x", "y"):
                coeffs[g] = du(x, y)["xy".index(kind)]
            else:
                coeffs[g] = d2u(x, y)[("xx", "xy", "yy").index(kind)]
        elif dim == 1:
            a, b = mesh.vertices[mesh.edges[i]]
            if kind == "n":
                t = (b - a) / np.linalg.norm(b - a)
                n = np.array([t[1], -t[0]])
                gx, gy = du(*(0.5 * (a + b)))
                coeffs[g] = n[0] * gx + n[1] * gy
            else:
                pos = g - (mesh.n_vertices * nv + i * ne)
                x = a + (pos + 1) / (ne + 1) * (b - a)
                coeffs[g] = u(*x)
        else:
            x = mesh.vertices[mesh.cells[i]].mean(axis=0)
            coeffs[g] = u(*x)
    return coeffs


def evaluate(space, coeffs, xhat, order=0):
    """Values (and gradients) of a global function at reference points of every cell.

    Returns arrays of shape (n_cells, npts) and (n_cells, npts, 2).
    """
    tabs = space.basis.tabulate(np.atleast_2d(xhat), order)
    local = np.asarray(coeffs)[space.dofmap.cell_dofs]
    w = np.einsum("ci,cik->ck", local, space.M)
    vals = w @ tabs[0]
    if order == 0:
        return vals
    ghat = np.einsum("ck,kqa->cqa", w, tabs[1])
    return vals, np.einsum("cqa,cab->cqb", ghat, space.J)


def evaluate_on_cell(space, c, coeffs, points, order=1):
    """Values and gradients on cell ``c`` at physical ``points``."""
    pts = np.atleast_2d(points)
    xhat = pts @ space.J[c].T + space.shift[c]
    local = np.asarray(coeffs)[space.dofmap.cell_dofs[c]]
    w = local @ space.M[c]
    tabs = space.basis.tabulate(xhat, order)
    vals = w @ tabs[0]
    if order == 0:
        return vals
    return vals, np.einsum("k,kqa->qa", w, tabs[1]) @ space.J[c]


def l2_error(space, coeffs, u, rule=None):
    rule = _cell_rule(space) if rule is None else rule
    uh = evaluate(space, coeffs, rule.points)
    pts = space.physical_points(rule.points)
    diff = uh - u(pts[..., 0], pts[..., 1])
    return float(np.sqrt(np.sum(diff**2 * rule.weights / np.abs(space.detJ)[:, None])))
