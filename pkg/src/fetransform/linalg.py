"""Small dense and sparse linear algebra.

Dense matrices are plain 2-D float64 numpy arrays.  Sparse matrices use the
compressed-row :class:`SparseMatrix` below, built from coordinate triplets.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels

PIVOT_TOL = 1e-13
SYMMETRY_TOL = 1e-10
# above this size the cyclic Jacobi sweep is replaced by LAPACK's symmetric solver
JACOBI_MAX_DIM = 400


class LinAlgError(ArithmeticError):
    pass


class SingularMatrix(LinAlgError):
    pass


class NotSymmetric(LinAlgError):
    pass


class NotPositiveDefinite(LinAlgError):
    pass


class MaxIterations(LinAlgError):
    pass


def _as_square(a):
    a = np.ascontiguousarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def lu_factor(a):
    """Partial-pivoting LU factorization ``P A = L U`` packed in one array.

    Raises :class:`SingularMatrix` when a pivot is at most ``PIVOT_TOL``
    times the largest entry of ``a``.
    """
    a = _as_square(a)
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale == 0.0:
        raise SingularMatrix("zero matrix")
    lu, perm, bad = kernels.backend().lu_factor(a, PIVOT_TOL * scale)
    if bad >= 0:
        raise SingularMatrix(f"pivot {bad} below tolerance")
    return lu, perm


def lu_solve(a, b):
    """Solve ``a x = b`` for a vector or a stack of right-hand sides."""
    lu, perm = lu_factor(a)
    b = np.asarray(b, dtype=float)
    x = kernels.backend().lu_substitute(lu, perm, np.ascontiguousarray(b.reshape(b.shape[0], -1)))
    return x.reshape(b.shape)


def invert(a):
    a = _as_square(a)
    return lu_solve(a, np.eye(a.shape[0]))


def is_symmetric(a, rtol=SYMMETRY_TOL):
    a = np.asarray(a)
    scale = np.max(np.abs(a)) if a.size else 0.0
    return bool(np.max(np.abs(a - a.T), initial=0.0) <= rtol * max(scale, np.finfo(float).tiny))


def symmetric_eigenvalues(a, tol=1e-14, max_sweeps=60):
    """Eigenvalues of a symmetric matrix in ascending order.

    Cyclic Jacobi rotations up to ``JACOBI_MAX_DIM``; LAPACK beyond that.
    """
    a = _as_square(a)
    if a.shape[0] > JACOBI_MAX_DIM:
        return np.linalg.eigvalsh(a)
    return np.sort(kernels.backend().jacobi_eigenvalues(a, tol, max_sweeps))


def condition_number_spd(a):
    """Spectral condition number ``lambda_max / lambda_min`` of an SPD matrix."""
    a = _as_square(a)
    if not is_symmetric(a):
        raise NotSymmetric("matrix is not symmetric to 1e-10 relative")
    lam = symmetric_eigenvalues(a)
    if lam[0] <= 0.0:
        raise NotPositiveDefinite(f"smallest eigenvalue {lam[0]:.3e}")
    return float(lam[-1] / lam[0])


@dataclass
class SparseMatrix:
    """Compressed-row matrix with sorted, unique column indices per row."""

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    shape: tuple
    symmetric: bool = False

    @classmethod
    def from_triplets(cls, rows, cols, vals, shape):
        rows = np.ascontiguousarray(rows, dtype=np.int64).ravel()
        cols = np.ascontiguousarray(cols, dtype=np.int64).ravel()
        vals = np.ascontiguousarray(vals, dtype=float).ravel()
        indptr, indices, data = kernels.backend().coo_to_csr(rows, cols, vals, int(shape[0]))
        return cls(np.asarray(indptr), np.asarray(indices), np.asarray(data), tuple(shape))

    @classmethod
    def from_dense(cls, a, drop=0.0):
        a = np.asarray(a, dtype=float)
        r, c = np.nonzero(np.abs(a) > drop)
        return cls.from_triplets(r, c, a[r, c], a.shape)

    @property
    def nnz(self):
        return int(self.data.size)

    def row_ids(self):
        return np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))

    def __matmul__(self, x):
        x = np.ascontiguousarray(x, dtype=float)
        return kernels.backend().csr_matvec(self.indptr, self.indices, self.data, x)

    def diagonal(self):
        rows = self.row_ids()
        d = np.zeros(self.shape[0])
        mask = rows == self.indices
        d[rows[mask]] = self.data[mask]
        return d

    def to_dense(self):
        out = np.zeros(self.shape)
        out[self.row_ids(), self.indices] = self.data
        return out

    def to_scipy(self):
        import scipy.sparse

        return scipy.sparse.csr_matrix((self.data, self.indices, self.indptr), shape=self.shape)

    def check_symmetric(self, rtol=1e-12):
        """Set and return the symmetric flag after an explicit comparison."""
        rows = self.row_ids()
        t = SparseMatrix.from_triplets(self.indices, rows, self.data, self.shape[::-1])
        same = (
            t.shape == self.shape
            and np.array_equal(t.indptr, self.indptr)
            and np.array_equal(t.indices, self.indices)
        )
        if same:
            scale = np.max(np.abs(self.data), initial=0.0)
            same = bool(np.max(np.abs(t.data - self.data), initial=0.0) <= rtol * scale)
        self.symmetric = same
        return same

    def scaled(self, s):
        """Diagonal congruence ``diag(s) A diag(s)``."""
        s = np.asarray(s, dtype=float)
        return SparseMatrix(self.indptr.copy(), self.indices.copy(),
                            self.data * s[self.row_ids()] * s[self.indices],
                            self.shape, self.symmetric)


def cg_solve(a, b, tol=1e-12, x0=None, maxiter=None):
    """Jacobi-preconditioned conjugate gradients on an SPD ``SparseMatrix``.

    Stops when ``||b - A x|| <= tol ||b||``.  The iteration cap defaults to
    ``50 * dim``; exceeding it raises :class:`MaxIterations`.
    """
    b = np.ascontiguousarray(b, dtype=float)
    n = b.shape[0]
    x0 = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    maxiter = 50 * n if maxiter is None else int(maxiter)
    x, iters, ok = kernels.backend().pcg(a.indptr, a.indices, a.data, b, x0, float(tol), maxiter)
    if not ok:
        raise MaxIterations(f"CG did not reach tol={tol:g} in {maxiter} iterations")
    return np.asarray(x)


def fit_loglog_slope(hs, errs):
    """Least-squares slope of ``log(err)`` against ``log(h)``."""
    hs = np.asarray(hs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    if np.any(hs <= 0) or np.any(errs <= 0):
        raise ValueError("log-log fit needs positive data")
    slope, _ = np.polyfit(np.log(hs), np.log(errs), 1)
    return float(slope)
