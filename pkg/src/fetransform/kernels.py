"""Hot loops used by the linear algebra and assembly code.

Every kernel exists twice: a loop version compiled with ``numba.njit`` and a
vectorized pure-numpy version.  The numba flavour is active when numba can be
imported and ``FETRANSFORM_NO_NUMBA`` is unset or ``"0"``.  Both flavours
take and return the same arrays, so callers never branch on the backend.
"""

import contextlib
import os
from types import SimpleNamespace

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAS_NUMBA = numba is not None
_DISABLED = os.environ.get("FETRANSFORM_NO_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")


# ---------------------------------------------------------------------------
# loop versions (compiled by numba, still valid plain python)
# ---------------------------------------------------------------------------

def _lu_factor_loop(a, pivot_tol):
    n = a.shape[0]
    lu = a.copy()
    perm = np.arange(n)
    for k in range(n):
        p = k
        big = abs(lu[k, k])
        for i in range(k + 1, n):
            if abs(lu[i, k]) > big:
                big = abs(lu[i, k])
                p = i
        if big <= pivot_tol:
            return lu, perm, k
        if p != k:
            for j in range(n):
                tmp = lu[k, j]
                lu[k, j] = lu[p, j]
                lu[p, j] = tmp
            tmp_i = perm[k]
            perm[k] = perm[p]
            perm[p] = tmp_i
        inv = 1.0 / lu[k, k]
        for i in range(k + 1, n):
            f = lu[i, k] * inv
            lu[i, k] = f
            if f != 0.0:
                for j in range(k + 1, n):
                    lu[i, j] -= f * lu[k, j]
    return lu, perm, -1


def _lu_substitute_loop(lu, perm, b):
    # b is 2-D (n, nrhs)
    n = lu.shape[0]
    nrhs = b.shape[1]
    x = np.empty((n, nrhs))
    for i in range(n):
        for r in range(nrhs):
            x[i, r] = b[perm[i], r]
    for i in range(n):
        for j in range(i):
            f = lu[i, j]
            if f != 0.0:
                for r in range(nrhs):
                    x[i, r] -= f * x[j, r]
    for i in range(n - 1, -1, -1):
        for j in range(i + 1, n):
            f = lu[i, j]
            if f != 0.0:
                for r in range(nrhs):
                    x[i, r] -= f * x[j, r]
        for r in range(nrhs):
            x[i, r] /= lu[i, i]
    return x


def _jacobi_eigenvalues_loop(a, tol, max_sweeps):
    n = a.shape[0]
    s = a.copy()
    for sweep in range(max_sweeps):
        off = 0.0
        diag = 0.0
        for i in range(n):
            diag += s[i, i] * s[i, i]
            for j in range(i + 1, n):
                off += s[i, j] * s[i, j]
        if off <= tol * tol * diag or off == 0.0:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = s[p, q]
                if apq == 0.0:
                    continue
                app = s[p, p]
                aqq = s[q, q]
                theta = (aqq - app) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + np.sqrt(1.0 + theta * theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                sn = t * c
                for k in range(n):
                    skp = s[k, p]
                    skq = s[k, q]
                    s[k, p] = c * skp - sn * skq
                    s[k, q] = sn * skp + c * skq
                for k in range(n):
                    spk = s[p, k]
                    sqk = s[q, k]
                    s[p, k] = c * spk - sn * sqk
                    s[q, k] = sn * spk + c * sqk
                s[p, q] = 0.0
                s[q, p] = 0.0
    out = np.empty(n)
    for i in range(n):
        out[i] = s[i, i]
    return out


def _csr_matvec_loop(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    y = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * x[indices[k]]
        y[i] = acc
    return y


def _pcg_loop(indptr, indices, data, b, x0, tol, maxiter):
    n = b.shape[0]
    diag = np.ones(n)
    for i in range(n):
        for k in range(indptr[i], indptr[i + 1]):
            if indices[k] == i and data[k] != 0.0:
                diag[i] = data[k]
    x = x0.copy()
    r = b - _csr_matvec_loop(indptr, indices, data, x)
    bnorm = np.sqrt(np.dot(b, b))
    if bnorm == 0.0:
        return np.zeros(n), 0, True
    z = r / diag
    p = z.copy()
    rz = np.dot(r, z)
    for it in range(maxiter):
        if np.sqrt(np.dot(r, r)) <= tol * bnorm:
            return x, it, True
        ap = _csr_matvec_loop(indptr, indices, data, p)
        alpha = rz / np.dot(p, ap)
        for i in range(n):
            x[i] += alpha * p[i]
            r[i] -= alpha * ap[i]
            z[i] = r[i] / diag[i]
        rz_new = np.dot(r, z)
        beta = rz_new / rz
        rz = rz_new
        for i in range(n):
            p[i] = z[i] + beta * p[i]
    return x, maxiter, np.sqrt(np.dot(r, r)) <= tol * bnorm


def _coo_to_csr_loop(rows, cols, vals, nrows):
    nnz_in = rows.shape[0]
    # counting sort by row, then insertion sort of columns within rows
    count = np.zeros(nrows + 1, dtype=np.int64)
    for k in range(nnz_in):
        count[rows[k] + 1] += 1
    for i in range(nrows):
        count[i + 1] += count[i]
    order_cols = np.empty(nnz_in, dtype=np.int64)
    order_vals = np.empty(nnz_in)
    fill = count[:-1].copy()
    for k in range(nnz_in):
        r = rows[k]
        order_cols[fill[r]] = cols[k]
        order_vals[fill[r]] = vals[k]
        fill[r] += 1
    indptr = np.zeros(nrows + 1, dtype=np.int64)
    indices = np.empty(nnz_in, dtype=np.int64)
    data = np.empty(nnz_in)
    pos = 0
    for i in range(nrows):
        lo = count[i]
        hi = count[i + 1]
        seg_c = order_cols[lo:hi]
        seg_v = order_vals[lo:hi]
        idx = np.argsort(seg_c, kind="mergesort")
        last = -1
        for k in range(hi - lo):
            c = seg_c[idx[k]]
            if c == last:
                data[pos - 1] += seg_v[idx[k]]
            else:
                indices[pos] = c
                data[pos] = seg_v[idx[k]]
                pos += 1
                last = c
        indptr[i + 1] = pos
    return indptr, indices[:pos].copy(), data[:pos].copy()


def _batched_congruence_loop(m, a):
    ncell, nr, nc = m.shape
    out = np.zeros((ncell, nr, nr))
    tmp = np.empty((nr, nc))
    for c in range(ncell):
        for i in range(nr):
            for l in range(nc):
                acc = 0.0
                for k in range(nc):
                    acc += m[c, i, k] * a[c, k, l]
                tmp[i, l] = acc
        for i in range(nr):
            for j in range(nr):
                acc = 0.0
                for l in range(nc):
                    acc += tmp[i, l] * m[c, j, l]
                out[c, i, j] = acc
    return out


# ---------------------------------------------------------------------------
# numpy versions
# ---------------------------------------------------------------------------

def _lu_factor_np(a, pivot_tol):
    n = a.shape[0]
    lu = np.array(a, dtype=float, copy=True)
    perm = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[p, k]) <= pivot_tol:
            return lu, perm, k
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return lu, perm, -1


def _lu_substitute_np(lu, perm, b):
    n = lu.shape[0]
    x = np.array(b[perm], dtype=float)
    for i in range(n):
        x[i] -= lu[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - lu[i, i + 1:] @ x[i + 1:]) / lu[i, i]
    return x


def _jacobi_eigenvalues_np(a, tol, max_sweeps):
    n = a.shape[0]
    s = np.array(a, dtype=float, copy=True)
    for _ in range(max_sweeps):
        off = np.sum(np.triu(s, 1) ** 2)
        if off <= tol * tol * np.sum(np.diag(s) ** 2) or off == 0.0:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = s[p, q]
                if apq == 0.0:
                    continue
                theta = (s[q, q] - s[p, p]) / (2.0 * apq)
                t = np.sign(theta or 1.0) / (abs(theta) + np.sqrt(1.0 + theta * theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                sn = t * c
                cp, cq = s[:, p].copy(), s[:, q].copy()
                s[:, p] = c * cp - sn * cq
                s[:, q] = sn * cp + c * cq
                rp, rq = s[p, :].copy(), s[q, :].copy()
                s[p, :] = c * rp - sn * rq
                s[q, :] = sn * rp + c * rq
                s[p, q] = s[q, p] = 0.0
    return np.diag(s).copy()


def _row_ids(indptr):
    return np.repeat(np.arange(indptr.shape[0] - 1), np.diff(indptr))


def _csr_matvec_np(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    return np.bincount(_row_ids(indptr), weights=data * x[indices], minlength=n)


def _pcg_np(indptr, indices, data, b, x0, tol, maxiter):
    n = b.shape[0]
    rows = _row_ids(indptr)
    on_diag = (rows == indices) & (data != 0.0)
    diag = np.ones(n)
    diag[rows[on_diag]] = data[on_diag]

    def matvec(v):
        return np.bincount(rows, weights=data * v[indices], minlength=n)

    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), 0, True
    x = x0.copy()
    r = b - matvec(x)
    z = r / diag
    p = z.copy()
    rz = r @ z
    for it in range(maxiter):
        if np.linalg.norm(r) <= tol * bnorm:
            return x, it, True
        ap = matvec(p)
        alpha = rz / (p @ ap)
        x += alpha * p
        r -= alpha * ap
        z = r / diag
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, maxiter, np.linalg.norm(r) <= tol * bnorm


def _coo_to_csr_np(rows, cols, vals, nrows):
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    ncols = int(cols.max()) + 1 if cols.size else 1
    key = rows * ncols + cols
    uniq, inverse = np.unique(key, return_inverse=True)
    data = np.bincount(inverse, weights=vals, minlength=uniq.size)
    urows = uniq // ncols
    indices = uniq % ncols
    indptr = np.zeros(nrows + 1, dtype=np.int64)
    np.cumsum(np.bincount(urows, minlength=nrows), out=indptr[1:])
    return indptr, indices, data


def _batched_congruence_np(m, a):
    return np.einsum("cik,ckl,cjl->cij", m, a, m, optimize=True)


NUMPY = SimpleNamespace(
    name="numpy",
    lu_factor=_lu_factor_np,
    lu_substitute=_lu_substitute_np,
    jacobi_eigenvalues=_jacobi_eigenvalues_np,
    csr_matvec=_csr_matvec_np,
    pcg=_pcg_np,
    coo_to_csr=_coo_to_csr_np,
    batched_congruence=_batched_congruence_np,
)

if HAS_NUMBA:
    _njit = numba.njit(cache=True)
    _csr_matvec_loop = _njit(_csr_matvec_loop)
    NUMBA = SimpleNamespace(
        name="numba",
        lu_factor=_njit(_lu_factor_loop),
        lu_substitute=_njit(_lu_substitute_loop),
        jacobi_eigenvalues=_njit(_jacobi_eigenvalues_loop),
        csr_matvec=_csr_matvec_loop,
        pcg=_njit(_pcg_loop),
        coo_to_csr=_njit(_coo_to_csr_loop),
        batched_congruence=_njit(_batched_congruence_loop),
    )
else:  # pragma: no cover
    NUMBA = None

_active = NUMBA if (HAS_NUMBA and not _DISABLED) else NUMPY


def backend():
    """The namespace of kernels currently in use."""
    return _active


@contextlib.contextmanager
def use_backend(name):
    """Temporarily switch kernels to ``"numba"`` or ``"numpy"``."""
    global _active
    if name == "numba" and NUMBA is None:
        raise RuntimeError("numba is not available")
    previous = _active
    _active = NUMBA if name == "numba" else NUMPY
    try:
        yield _active
    finally:
        _active = previous
