"""Convergence and conditioning studies on the unit square."""

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .linalg import condition_number_spd, fit_loglog_slope
from .mesh_assembly import (
    apply_dirichlet,
    assemble,
    boundary_dofs,
    build_mesh,
    function_space,
    l2_error,
    scaling_vector,
    solve,
    unscale,
)
from .tabulate import POISSON_RATIO

STUDIES = ("conditioning", "projection", "laplace", "plate")
STUDY_FAMILIES = {
    "conditioning": ("lagrange3", "hermite", "morley", "argyris", "bell"),
    "projection": ("lagrange3", "hermite", "morley", "argyris", "bell"),
    "laplace": ("lagrange3", "hermite", "argyris", "bell"),
    "plate": ("morley", "argyris", "bell"),
}
DEFAULT_NS = (2, 4, 8, 16, 32)


# manufactured problems
def projection_u(x, y):
    return np.sin(np.pi * x) * np.sin(2 * np.pi * y)


def laplace_u(x, y):
    return np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)


def laplace_f(x, y):
    return 8 * np.pi**2 * laplace_u(x, y)


def _g(t):
    return t**2 * (1 - t) ** 2


def _g2(t):
    return 2 - 12 * t + 12 * t**2


def plate_u(x, y):
    return _g(x) * _g(y)


def plate_f(x, y):
    """Biharmonic of ``plate_u``: g''''(x) g(y) + 2 g''(x) g''(y) + g(x) g''''(y), g'''' = 24."""
    return 24 * _g(y) + 2 * _g2(x) * _g2(y) + 24 * _g(x)


@dataclass
class StudyResult:
    study: str
    family: str
    metric: str
    Ns: list = field(default_factory=list)
    dofs: list = field(default_factory=list)
    values: list = field(default_factory=list)
    scaled: bool = True

    @property
    def hs(self):
        return [1.0 / n for n in self.Ns]

    def pair_rates(self):
        """Observed orders ``log(e_k / e_{k+1}) / log(h_k / h_{k+1})`` between successive meshes."""
        e = np.asarray(self.values, dtype=float)
        h = np.asarray(self.hs)
        return list(np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:]))

    def fit_rate(self):
        return fit_loglog_slope(self.hs, self.values)

    def growth_slope(self):
        """Slope of log(value) against log(N)."""
        return fit_loglog_slope(self.Ns, self.values)

    def add(self, N, dofs, value):
        if self.Ns and N <= self.Ns[-1]:
            raise ValueError("mesh sizes must increase")
        if not value > 0:
            raise ValueError(f"non-positive {self.metric}: {value}")
        self.Ns.append(int(N))
        self.dofs.append(int(dofs))
        self.values.append(float(value))


def mesh_sizes(nmax, nmin=2):
    out, n = [], nmin
    while n <= nmax:
        out.append(n)
        n *= 2
    if not out:
        raise ValueError(f"nmax must be at least {nmin}")
    return out


def _check_family(study, family):
    if family not in STUDY_FAMILIES[study]:
        raise ValueError(f"{family} is not part of the {study} study")


def run_conditioning(Ns=DEFAULT_NS, scaled=True, family="hermite"):
    """Spectral condition numbers of densified global mass matrices."""
    _check_family("conditioning", family)
    res = StudyResult("conditioning", family, "condition_number", scaled=scaled)
    for N in Ns:
        mesh = build_mesh(N)
        V = function_space(family, mesh)
        s = scaling_vector(V.dofmap, mesh) if scaled else None
        A = assemble(V, "mass", scaling=s)
        res.add(N, V.n_dofs, condition_number_spd(A.to_dense()))
    return res


def _solve_study(study, family, Ns, form, f, u, bc, scaled, solver, tol):
    res = StudyResult(study, family, "l2_error", scaled=scaled)
    for N in Ns:
        mesh = build_mesh(N)
        V = function_space(family, mesh)
        s = scaling_vector(V.dofmap, mesh) if scaled else None
        A, b = assemble(V, form, f=f, scaling=s, nu=POISSON_RATIO)
        if bc is not None:
            A, b = apply_dirichlet(A, b, boundary_dofs(V, bc))
        x = unscale(solve(A, b, solver=solver, tol=tol), s)
        res.add(N, V.n_dofs, l2_error(V, x, u))
    return res


def run_projection(family, Ns=DEFAULT_NS, scaled=True, solver="cg", tol=1e-13):
    """L2 projection of sin(pi x) sin(2 pi y)."""
    _check_family("projection", family)
    return _solve_study("projection", family, Ns, "mass", projection_u, projection_u,
                        None, scaled, solver, tol)


def run_laplace(family, Ns=DEFAULT_NS, scaled=True, solver="cg", tol=1e-13):
    """-Laplace u = f with homogeneous Dirichlet data."""
    _check_family("laplace", family)
    return _solve_study("laplace", family, Ns, "stiffness", laplace_f, laplace_u,
                        "laplace", scaled, solver, tol)


def run_plate(family, Ns=DEFAULT_NS, scaled=True, solver="cg", tol=1e-13):
    """Clamped plate with Poisson ratio 0.5."""
    _check_family("plate", family)
    return _solve_study("plate", family, Ns, "plate", plate_f, plate_u,
                        "clamped", scaled, solver, tol)


def run_study(study, family, Ns, scaled=True, solver="cg", tol=1e-13):
    if study == "conditioning":
        return run_conditioning(Ns, scaled=scaled, family=family)
    runner = {"projection": run_projection, "laplace": run_laplace, "plate": run_plate}.get(study)
    if runner is None:
        raise ValueError(f"unknown study {study!r}")
    return runner(family, Ns, scaled=scaled, solver=solver, tol=tol)


def result_rows(res):
    """CSV rows (family, N, dofs, metric, value), including rates."""
    rows = [(res.family, n, d, res.metric, v) for n, d, v in zip(res.Ns, res.dofs, res.values)]
    if len(res.Ns) >= 2:
        if res.metric == "condition_number":
            rows.append((res.family, res.Ns[-1], res.dofs[-1], "growth_slope", res.growth_slope()))
        else:
            for k, r in enumerate(res.pair_rates()):
                rows.append((res.family, res.Ns[k + 1], res.dofs[k + 1], "rate", r))
            rows.append((res.family, res.Ns[-1], res.dofs[-1], "fit_rate", res.fit_rate()))
    return rows


_PLOT_SCRIPT = '''"""Plot {csv_name}; run with python after installing matplotlib."""
import csv
import matplotlib.pyplot as plt

series = {{}}
with open("{csv_name}") as fh:
    for row in csv.DictReader(fh):
        if row["metric"] == "{metric}":
            series.setdefault(row["family"], []).append((int(row["N"]), float(row["value"])))
for family, pts in sorted(series.items()):
    pts.sort()
    plt.loglog([p[0] for p in pts], [p[1] for p in pts], "o-", label=family)
plt.xlabel("N")
plt.ylabel("{metric}")
plt.legend()
plt.savefig("{png_name}")
'''


def emit_report(results, path, name=None):
    """Write a CSV of all results and a matplotlib script that plots it."""
    if isinstance(results, StudyResult):
        results = [results]
    os.makedirs(path, exist_ok=True)
    name = name or results[0].study
    csv_path = os.path.join(path, f"{name}.csv")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["family", "N", "dofs", "metric", "value"])
        for res in results:
            for row in result_rows(res):
                w.writerow([row[0], row[1], row[2], row[3], repr(float(row[4]))])
    plot_path = os.path.join(path, f"plot_{name}.py")
    with open(plot_path, "w") as fh:
        fh.write(_PLOT_SCRIPT.format(csv_name=f"{name}.csv", metric=results[0].metric,
                                     png_name=f"{name}.png"))
    return csv_path, plot_path
