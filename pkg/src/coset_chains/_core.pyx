# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: cyclic Jacobi eigenvalues and a batched table walker."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()


cdef double _offdiag_norm(double[:, ::1] a, Py_ssize_t n) nogil:
    cdef Py_ssize_t i, j
    cdef double s = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            s += a[i, j] * a[i, j]
    return sqrt(2.0 * s)


cdef inline void _rotate(double* x, double* y, double s, double tau) noexcept nogil:
    cdef double g = x[0]
    cdef double h = y[0]
    x[0] = g - s * (h + g * tau)
    y[0] = h + s * (g - h * tau)


def jacobi_eigenvalues(double[:, ::1] a, double tol=1e-12, int max_sweeps=100):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Only the upper triangle is read and updated (in place).  Sweeps run until
    the off-diagonal Frobenius norm drops below ``tol``; after the fourth
    sweep a pivot that is negligible next to both diagonal entries is set to
    zero instead of rotated.  Returns ``(eigenvalues, sweeps, off_norm)``.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t p, q, r
    cdef int sweep = 0
    cdef double off, thresh, apq, g, theta, t, c, s, tau, h
    if a.shape[1] != n:
        raise ValueError("matrix must be square")
    d = np.empty(n)
    cdef double[::1] dv = d
    cdef double* A = &a[0, 0]
    with nogil:
        for p in range(n):
            dv[p] = a[p, p]
        off = _offdiag_norm(a, n)
        while off >= tol and sweep < max_sweeps:
            sweep += 1
            thresh = 0.2 * off / (n * n) if sweep < 4 else 0.0
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    g = 100.0 * fabs(apq)
                    if sweep > 4 and fabs(dv[p]) + g == fabs(dv[p]) and fabs(dv[q]) + g == fabs(dv[q]):
                        a[p, q] = 0.0
                        continue
                    if fabs(apq) <= thresh or apq == 0.0:
                        continue
                    h = dv[q] - dv[p]
                    if fabs(h) + g == fabs(h):
                        t = apq / h
                    else:
                        theta = 0.5 * h / apq
                        t = 1.0 / (fabs(theta) + sqrt(1.0 + theta * theta))
                        if theta < 0:
                            t = -t
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    tau = s / (1.0 + c)
                    h = t * apq
                    dv[p] -= h
                    dv[q] += h
                    a[p, q] = 0.0
                    for r in range(p):
                        _rotate(&A[r * n + p], &A[r * n + q], s, tau)
                    for r in range(p + 1, q):
                        _rotate(&A[p * n + r], &A[r * n + q], s, tau)
                    for r in range(q + 1, n):
                        _rotate(&A[p * n + r], &A[q * n + r], s, tau)
            off = _offdiag_norm(a, n)
        for p in range(n):
            a[p, p] = dv[p]
    return d, sweep, off


def rt_walk(cnp.int64_t[:, ::1] tables, Py_ssize_t ncols, cnp.int64_t[:, :, ::1] picks):
    """Advance many tables by random transposition steps, in place.

    ``tables`` holds flattened I x J tables, one per row.  ``picks[t, p]`` are
    the two data-point indices (0..n-1) drawn for path ``p`` at step ``t``;
    a point is located by scanning the cumulative cell counts.
    """
    cdef Py_ssize_t steps = picks.shape[0], paths = picks.shape[1], cells = tables.shape[1]
    cdef Py_ssize_t st, p, c, ca, cb, i1, j1, i2, j2
    cdef cnp.int64_t x, acc
    with nogil:
        for st in range(steps):
            for p in range(paths):
                x = picks[st, p, 0]
                acc = 0
                ca = 0
                for c in range(cells):
                    acc = acc + tables[p, c]
                    if x < acc:
                        ca = c
                        break
                x = picks[st, p, 1]
                acc = 0
                cb = 0
                for c in range(cells):
                    acc = acc + tables[p, c]
                    if x < acc:
                        cb = c
                        break
                i1 = ca // ncols
                j1 = ca % ncols
                i2 = cb // ncols
                j2 = cb % ncols
                if i1 != i2 and j1 != j2:
                    tables[p, ca] -= 1
                    tables[p, cb] -= 1
                    tables[p, i1 * ncols + j2] += 1
                    tables[p, i2 * ncols + j1] += 1
    return np.asarray(tables)
