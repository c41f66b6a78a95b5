"""Acceptance criteria; each test records one PASS/FAIL line shown in the terminal summary."""

import time

import numpy as np
import pytest

from fetransform import experiments as ex
from fetransform.geometry import Triangle, affine_map, edge_frames, reference_triangle
from fetransform.reference_element import element, node_matrix, reference_basis
from fetransform.tabulate import congruence_transform, local_matrix
from fetransform.transform import REFERENCE_ELEMENT, compute_transform, derive_univariate_rule, pulled_back

from conftest import ACCEPTANCE_LINES, random_triangle

NS = [2, 4, 8, 16, 32]


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def rel_inf(a, b):
    return np.max(np.abs(a - b)) / np.max(np.abs(b))


def test_criterion_01_oracle_equivalence():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = {}
    for _ in range(100):
        K = random_triangle(rng, scale=rng.choice([0.01, 1.0, 10.0]))
        for fam in ("hermite", "morley", "argyris", "bell"):
            e = rel_inf(compute_transform(fam, K).M, compute_transform(fam, K, method="oracle").M)
            worst[fam] = max(worst.get(fam, 0.0), e)
    dt = time.perf_counter() - t0
    ok = max(worst.values()) < 1e-8 and dt < 5.0
    report(1, ok, "max rel err " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items()) + f"; {dt:.2f}s")


def test_criterion_02_affine_equivalence():
    rng = np.random.default_rng(2)
    ok = all(np.array_equal(compute_transform(f"lagrange{r}", random_triangle(rng)).M, np.eye(element(f"lagrange{r}").nu))
             for r in (1, 2, 3) for _ in range(20))
    report(2, ok, "M == I exactly for Lagrange 1-3 on 20 triangles each")


def test_criterion_03_sparsity_counts():
    K = Triangle([[4.0, 1.5], [5.5, 2.0], [4.8, 2.7]])
    counts = {fam: compute_transform(fam, K).structural_nonzeros for fam in ("hermite", "morley", "argyris")}
    expected = {"hermite": 12, "morley": 12, "argyris": 81}
    report(3, counts == expected, f"counts {counts}, expected {expected}")


def test_criterion_04_univariate_rules():
    ends = [("value", -1.0), ("value", 1.0), ("deriv", -1.0), ("deriv", 1.0), ("deriv2", -1.0), ("deriv2", 1.0)]
    quad = derive_univariate_rule(2, [("value", -1.0), ("value", 1.0), ("value", 0.0)], ("deriv", 0.0))
    quin = derive_univariate_rule(5, ends, ("deriv", 0.0))
    mom = derive_univariate_rule(5, ends, ("legendre_moment", 4))
    errs = [
        np.max(np.abs(quad - [-0.5, 0.5, 0.0])),
        np.max(np.abs(quin - np.array([-15, 15, -7, -7, -1, 1]) / 16)),
        np.max(np.abs(mom - np.array([-3, 3, -3, -3, -1, 1]) / 63)),
    ]
    report(4, max(errs) < 1e-12, f"max coefficient error {max(errs):.1e}")


def test_criterion_05_bell_constraints():
    rng = np.random.default_rng(5)
    basis = reference_basis("bell_extended")
    worst = 0.0
    for _ in range(50):
        K = random_triangle(rng)
        F = affine_map(K, reference_triangle())
        M = compute_transform("bell", K).M[:18]
        ev = pulled_back(basis.tabulate, F)

        def mapped(points, order=0, M=M, ev=ev):
            return [np.tensordot(M, t, axes=(1, 0)) for t in ev(points, order)]

        worst = max(worst, np.max(np.abs(node_matrix(element("bell", K).constraints, mapped))))
    report(5, worst < 1e-8, f"max |lambda_i(psi_j)| = {worst:.1e}")


def test_criterion_06_dual_path():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(10):
        K = random_triangle(rng)
        F = affine_map(K, reference_triangle())
        for fam in ("lagrange3", "hermite", "morley", "argyris", "bell"):
            basis = reference_basis(REFERENCE_ELEMENT[fam])
            M = compute_transform(fam, K).M[:element(fam).nu]
            for form in ("mass", "stiffness", "plate"):
                direct = local_matrix(basis, F, form, M=M)
                worst = max(worst, rel_inf(congruence_transform(M, local_matrix(basis, F, form)), direct))
    report(6, worst < 1e-10, f"max rel difference {worst:.1e}")


def test_criterion_07_conditioning():
    t0 = time.perf_counter()
    raw = ex.run_conditioning(NS, scaled=False, family="hermite")
    scaled = ex.run_conditioning(NS, scaled=True, family="hermite")
    lag = ex.run_conditioning(NS, scaled=True, family="lagrange3")
    dt = time.perf_counter() - t0
    s_raw, s_scaled = raw.growth_slope(), scaled.growth_slope()
    above = all(h > l for h, l in zip(scaled.values, lag.values))
    ok = abs(s_raw - 2.0) <= 0.3 and s_scaled <= 0.3 and above and dt < 180
    report(7, ok, f"unscaled slope {s_raw:.3f}, scaled slope {s_scaled:.3f}, "
                  f"scaled Hermite > Lagrange at every N: {above}; {dt:.0f}s")


def _finest(res):
    return res.pair_rates()[-1]


def test_criterion_08_projection():
    t0 = time.perf_counter()
    res = {fam: ex.run_projection(fam, NS) for fam in ("morley", "hermite", "lagrange3", "bell", "argyris")}
    dt = time.perf_counter() - t0
    rates = {fam: _finest(r) for fam, r in res.items()}
    target = {"morley": (3, 0.25), "hermite": (4, 0.25), "lagrange3": (4, 0.25), "bell": (5, 0.3), "argyris": (6, 0.4)}
    ordered = all(a < b for a, b in zip(res["lagrange3"].values, res["hermite"].values))
    ok = all(abs(rates[f] - c) <= tol for f, (c, tol) in target.items()) and ordered and dt < 120
    report(8, ok, "rates " + ", ".join(f"{f}={r:.2f}" for f, r in rates.items())
           + f"; Lagrange below Hermite: {ordered}; {dt:.0f}s")


def test_criterion_09_laplace():
    t0 = time.perf_counter()
    rates = {fam: _finest(ex.run_laplace(fam, NS)) for fam in ("hermite", "lagrange3", "bell", "argyris")}
    dt = time.perf_counter() - t0
    target = {"hermite": (4, 0.25), "lagrange3": (4, 0.25), "bell": (5, 0.4), "argyris": (6, 0.5)}
    ok = all(abs(rates[f] - c) <= tol for f, (c, tol) in target.items()) and dt < 180
    report(9, ok, "rates " + ", ".join(f"{f}={r:.2f}" for f, r in rates.items()) + f"; {dt:.0f}s")


def test_criterion_10_plate():
    t0 = time.perf_counter()
    rates = {fam: _finest(ex.run_plate(fam, NS)) for fam in ("morley", "bell", "argyris")}
    dt = time.perf_counter() - t0
    target = {"morley": (2, 0.25), "bell": (5, 0.5), "argyris": (6, 0.6)}
    ok = all(abs(rates[f] - c) <= tol for f, (c, tol) in target.items()) and dt < 300
    report(10, ok, "rates " + ", ".join(f"{f}={r:.2f}" for f, r in rates.items()) + f"; {dt:.0f}s")


def test_criterion_11_continuity():
    from fetransform.mesh_assembly import build_mesh, evaluate_on_cell, function_space

    rng = np.random.default_rng(11)
    out = {}
    for fam in ("argyris", "bell", "hermite", "lagrange3", "morley"):
        V = function_space(fam, build_mesh(4))
        c = rng.standard_normal(V.n_dofs)
        worst = 0.0
        for e in V.mesh.interior_edges():
            c1, c2 = V.mesh.edge_cells[e]
            a, b = V.mesh.vertices[V.mesh.edges[e]]
            if fam == "morley":
                t = (b - a) / np.linalg.norm(b - a)
                n = np.array([t[1], -t[0]])
                mid = 0.5 * (a + b)
                g1 = evaluate_on_cell(V, c1, c, mid)[1][0]
                g2 = evaluate_on_cell(V, c2, c, mid)[1][0]
                v1 = evaluate_on_cell(V, c1, c, np.array([a, b]), 0)
                v2 = evaluate_on_cell(V, c2, c, np.array([a, b]), 0)
                worst = max(worst, abs((g1 - g2) @ n), np.max(np.abs(v1 - v2)))
                continue
            pts = a + np.linspace(0.1, 0.9, 5)[:, None] * (b - a)
            v1, g1 = evaluate_on_cell(V, c1, c, pts)
            v2, g2 = evaluate_on_cell(V, c2, c, pts)
            worst = max(worst, np.max(np.abs(v1 - v2)))
            if fam in ("argyris", "bell"):
                worst = max(worst, np.max(np.abs(g1 - g2)))
        out[fam] = worst
    report(11, max(out.values()) < 1e-9, "max jumps " + ", ".join(f"{k}={v:.1e}" for k, v in out.items()))
