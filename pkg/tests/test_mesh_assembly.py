import numpy as np
import pytest

from fetransform.geometry import EDGE_VERTICES
from fetransform.mesh_assembly import (
    FAMILIES,
    apply_dirichlet,
    assemble,
    boundary_dofs,
    build_dofmap,
    build_mesh,
    evaluate_on_cell,
    function_space,
    interpolate,
    l2_error,
    scaling_vector,
    solve,
    unscale,
)


def test_mesh_counts():
    m1, m2 = build_mesh(1), build_mesh(2)
    assert (m1.n_cells, m1.n_vertices, m1.n_edges) == (2, 4, 5)
    assert (m2.n_cells, m2.n_vertices, m2.n_edges) == (8, 9, 16)
    # Euler characteristic of a disk
    assert m2.n_vertices - m2.n_edges + m2.n_cells == 1


@pytest.mark.parametrize("N", [1, 3, 4])
def test_mesh_invariants(N):
    mesh = build_mesh(N)
    V = function_space("lagrange3", mesh)
    assert np.sum(1.0 / np.abs(V.detJ)) * 0.5 == pytest.approx(1.0)
    assert all(mesh.triangle(c).twice_signed_area > 0 for c in range(mesh.n_cells))
    sizes = [len(cs) for cs in mesh.edge_cells]
    assert set(sizes) <= {1, 2}
    assert len(mesh.boundary_edges()) == 4 * N
    assert mesh.n_edges == 3 * N * N + 2 * N


def test_dof_counts():
    assert build_dofmap("hermite", build_mesh(1)).n_dofs == 14
    assert build_dofmap("morley", build_mesh(1)).n_dofs == 9
    assert build_dofmap("argyris", build_mesh(2)).n_dofs == 70
    assert build_dofmap("bell", build_mesh(2)).n_dofs == 54
    assert build_dofmap("lagrange3", build_mesh(2)).n_dofs == 9 + 2 * 16 + 8


@pytest.mark.parametrize("family", FAMILIES)
def test_every_dof_referenced(family):
    dm = build_dofmap(family, build_mesh(3))
    assert np.array_equal(np.unique(dm.cell_dofs), np.arange(dm.n_dofs))


def test_scaling_vector():
    mesh = build_mesh(4)
    dm = build_dofmap("argyris", mesh)
    s = scaling_vector(dm, mesh)
    assert np.all(s > 0)
    diam = np.sqrt(2) / 4
    corner = dm.vertex_dof(0)  # (0,0) touches one cell
    np.testing.assert_allclose(s[corner:corner + 6], [1, diam, diam, diam**2, diam**2, diam**2])
    edge_dofs = s[dm.dof_kind == "n"]
    assert set(np.round(edge_dofs, 12)) == {0.25, round(diam, 12)}


def test_mass_of_constant_is_area():
    V = function_space("lagrange3", build_mesh(3))
    A = assemble(V, "mass")
    one = np.ones(V.n_dofs)
    assert one @ (A @ one) == pytest.approx(1.0, abs=1e-13)
    assert A.check_symmetric(1e-12)


def test_hermite_stiffness_annihilates_constant():
    V = function_space("hermite", build_mesh(3))
    A = assemble(V, "stiffness")
    c = interpolate(V, lambda x, y: 1.0, lambda x, y: (0.0, 0.0))
    assert np.max(np.abs(A @ c)) < 1e-10


def test_dirichlet_sets():
    V = function_space("lagrange3", build_mesh(2))
    fixed = boundary_dofs(V, "laplace")
    assert fixed.sum() == 4 * 2 * 3  # boundary vertices plus two points per boundary edge

    V = function_space("hermite", build_mesh(2))
    fixed = boundary_dofs(V, "laplace")
    bottom_mid = V.dofmap.vertex_dof(1)  # (0.5, 0)
    assert list(fixed[bottom_mid:bottom_mid + 3]) == [True, True, False]
    corner = V.dofmap.vertex_dof(0)
    assert fixed[corner:corner + 3].all()

    V = function_space("argyris", build_mesh(2))
    corner = V.dofmap.vertex_dof(0)
    clamped = boundary_dofs(V, "clamped")
    laplace = boundary_dofs(V, "laplace")
    assert clamped[corner:corner + 6].all()
    assert list(laplace[corner:corner + 6]) == [True, True, True, True, False, True]
    left_mid = V.dofmap.vertex_dof(3)  # (0, 0.5)
    assert list(clamped[left_mid:left_mid + 6]) == [True, True, True, False, True, True]
    assert list(laplace[left_mid:left_mid + 6]) == [True, False, True, False, False, True]
    normals = V.dofmap.dof_kind == "n"
    on_boundary = np.isin(V.dofmap.dof_index, V.mesh.boundary_edges()) & normals
    assert clamped[on_boundary].all() and not laplace[normals].any()


def test_apply_dirichlet_symmetric_elimination(rng):
    V = function_space("hermite", build_mesh(2))
    A, b = assemble(V, "stiffness", f=lambda x, y: 1.0 + 0 * x)
    fixed = boundary_dofs(V, "laplace")
    Ab, bb = apply_dirichlet(A, b, fixed)
    D = Ab.to_dense()
    np.testing.assert_allclose(D[fixed][:, fixed], np.eye(fixed.sum()))
    assert np.all(D[fixed][:, ~fixed] == 0) and np.all(D[~fixed][:, fixed] == 0)
    assert np.all(bb[fixed] == 0)
    np.testing.assert_allclose(D[~fixed][:, ~fixed], A.to_dense()[~fixed][:, ~fixed])


def _shared_edge_probe(family, order, rng, N=3):
    """Max jump across interior edges of value and gradient at 5 points per edge."""
    V = function_space(family, build_mesh(N))
    coeffs = rng.standard_normal(V.n_dofs)
    mesh = V.mesh
    jumps = []
    for e in mesh.interior_edges():
        c1, c2 = mesh.edge_cells[e]
        a, b = mesh.vertices[mesh.edges[e]]
        s = np.linspace(0.1, 0.9, 5)[:, None]
        pts = a + s * (b - a)
        v1, g1 = evaluate_on_cell(V, c1, coeffs, pts, 1)
        v2, g2 = evaluate_on_cell(V, c2, coeffs, pts, 1)
        t = (b - a) / np.linalg.norm(b - a)
        n = np.array([t[1], -t[0]])
        jumps.append((np.max(np.abs(v1 - v2)), np.max(np.abs(g1 - g2)),
                      abs((g1[2] - g2[2]) @ n)))
    return np.array(jumps)


@pytest.mark.parametrize("family", ["argyris", "bell"])
def test_c1_continuity(family, rng):
    j = _shared_edge_probe(family, 1, rng)
    assert j[:, 0].max() < 1e-9 and j[:, 1].max() < 1e-9


@pytest.mark.parametrize("family", ["hermite", "lagrange3"])
def test_c0_continuity(family, rng):
    j = _shared_edge_probe(family, 1, rng)
    assert j[:, 0].max() < 1e-9
    assert j[:, 1].max() > 1e-3  # not C1


def test_morley_weak_continuity(rng):
    j = _shared_edge_probe("morley", 1, rng)
    assert j[:, 2].max() < 1e-9  # normal derivative at the midpoint
    V = function_space("morley", build_mesh(3))
    coeffs = rng.standard_normal(V.n_dofs)
    for v in range(V.mesh.n_vertices):
        cells = np.flatnonzero((V.mesh.cells == v).any(axis=1))
        vals = [evaluate_on_cell(V, c, coeffs, V.mesh.vertices[v], 0)[0] for c in cells]
        np.testing.assert_allclose(vals, coeffs[v], atol=1e-9)


POLYS = {
    "lagrange3": (lambda x, y: x**3 - x * y**2 + 2 * y, None, None),
    "hermite": (lambda x, y: x**3 - x * y**2 + 2 * y, lambda x, y: (3 * x**2 - y**2, -2 * x * y + 2), None),
    "morley": (lambda x, y: x**2 - 3 * x * y + y, lambda x, y: (2 * x - 3 * y, -3 * x + 1), None),
    "argyris": (lambda x, y: x**5 - 2 * x**2 * y**3 + y,
                lambda x, y: (5 * x**4 - 4 * x * y**3, -6 * x**2 * y**2 + 1),
                lambda x, y: (20 * x**3 - 4 * y**3, -12 * x * y**2, -12 * x**2 * y)),
    "bell": (lambda x, y: x**3 + y**3, lambda x, y: (3 * x**2, 3 * y**2), lambda x, y: (6 * x, 0 * x, 6 * y)),
}


@pytest.mark.parametrize("family", FAMILIES)
def test_patch_exactness(family):
    u = POLYS[family][0]
    V = function_space(family, build_mesh(3))
    s = scaling_vector(V.dofmap, V.mesh)
    A, b = assemble(V, "mass", f=u, scaling=s)
    x = unscale(solve(A, b, "cg", tol=1e-14), s)
    assert l2_error(V, x, u) < 1e-9


@pytest.mark.parametrize("family", FAMILIES)
def test_interpolation_exact_on_space(family):
    u, du, d2u = POLYS[family]
    V = function_space(family, build_mesh(2))
    assert l2_error(V, interpolate(V, u, du, d2u), u) < 1e-11


@pytest.mark.parametrize("family", ["hermite", "argyris"])
def test_scaling_is_congruence(family):
    V = function_space(family, build_mesh(4))
    f = lambda x, y: np.sin(3 * x) * np.cos(2 * y)
    fixed = boundary_dofs(V, "laplace")
    A, b = assemble(V, "stiffness", f=f)
    x0 = solve(*apply_dirichlet(A, b, fixed))
    s = scaling_vector(V.dofmap, V.mesh)
    As, bs = assemble(V, "stiffness", f=f, scaling=s)
    x1 = unscale(solve(*apply_dirichlet(As, bs, fixed)), s)
    np.testing.assert_allclose(x1, x0, rtol=1e-9, atol=1e-12)


def test_zero_forcing_gives_zero():
    V = function_space("argyris", build_mesh(3))
    A, b = assemble(V, "plate", f=lambda x, y: 0 * x)
    x = solve(*apply_dirichlet(A, b, boundary_dofs(V, "clamped")), solver="cg")
    assert np.max(np.abs(x)) == 0.0


def test_assembly_deterministic():
    V = function_space("bell", build_mesh(3))
    A1 = assemble(V, "plate")
    A2 = assemble(V, "plate")
    assert np.array_equal(A1.data, A2.data) and np.array_equal(A1.indices, A2.indices)


def test_solvers_agree():
    V = function_space("hermite", build_mesh(3))
    A, b = assemble(V, "mass", f=lambda x, y: x * y)
    ref = solve(A, b, "dense")
    np.testing.assert_allclose(solve(A, b, "cg", tol=1e-14), ref, rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(solve(A, b, "direct"), ref, rtol=1e-8, atol=1e-10)
    with pytest.raises(ValueError):
        solve(A, b, "gmres")
