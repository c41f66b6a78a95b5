"""Time the numba kernels against their numpy fallbacks on assembly-sized inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from fetransform import kernels
from fetransform.mesh_assembly import assemble, build_mesh, function_space, scaling_vector


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    space = function_space("argyris", build_mesh(16))
    A = assemble(space, "plate", scaling=scaling_vector(space.dofmap, space.mesh))
    b = rng.standard_normal(A.shape[0])
    d = space.dofmap.cell_dofs
    rows = np.repeat(d, d.shape[1], axis=1).ravel()
    cols = np.tile(d, (1, d.shape[1])).ravel()
    vals = rng.standard_normal(rows.size)
    dense = rng.standard_normal((200, 200)) + 200 * np.eye(200)
    sym = dense + dense.T
    Ms = rng.standard_normal((2048, 21, 21))
    As = rng.standard_normal((2048, 21, 21))
    x0 = np.zeros_like(b)
    return {
        "coo_to_csr": lambda k: k.coo_to_csr(rows, cols, vals, A.shape[0]),
        "csr_matvec": lambda k: k.csr_matvec(A.indptr, A.indices, A.data, b),
        "pcg": lambda k: k.pcg(A.indptr, A.indices, A.data, b, x0, 1e-10, 20000),
        "lu_factor": lambda k: k.lu_factor(dense, 1e-12),
        "jacobi_eigenvalues": lambda k: k.jacobi_eigenvalues(sym[:80, :80].copy(), 1e-14, 60),
        "batched_congruence": lambda k: k.batched_congruence(Ms, As),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if kernels.NUMBA is None:
        raise SystemExit("numba is not installed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<20}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, run in cases(rng).items():
        run(kernels.NUMBA)  # compile
        t_np = best_of(lambda: run(kernels.NUMPY), args.repeat)
        t_nb = best_of(lambda: run(kernels.NUMBA), args.repeat)
        print(f"{name:<20}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>10.1f}")


if __name__ == "__main__":
    main()
