"""Pure numpy versions of the compiled kernels in ``_core``."""

from __future__ import annotations

import numpy as np


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Tournament schedule: n-1 rounds (n even) of n/2 disjoint index pairs covering every pair once."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        p = np.array(players[:half])
        q = np.array(players[half:][::-1])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_eigenvalues(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigenvalues of a symmetric matrix by Jacobi rotations in parallel ordering (in place).

    Each round rotates n/2 disjoint pivot pairs at once; a sweep of n-1 rounds
    touches every off-diagonal pair.
    """
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ValueError("matrix must be square")
    pad = n % 2
    if pad:
        b = np.zeros((n + 1, n + 1))
        b[:n, :n] = a
        a = b
    m = a.shape[0]
    rounds = _round_robin(m) if m > 1 else []

    def off_norm():
        d = np.diag(a)
        return np.sqrt(np.sum(a * a - np.diag(d * d)))

    off = off_norm()
    sweep = 0
    while off >= tol and sweep < max_sweeps:
        sweep += 1
        for p, q in rounds:
            apq = a[p, q]
            mask = apq != 0.0
            if not mask.any():
                continue
            p, q, apq = p[mask], q[mask], apq[mask]
            app, aqq = a[p, p], a[q, q]
            theta = (aqq - app) / (2.0 * apq)
            big = np.abs(theta) > 1e150  # t ~ 1/(2 theta) without squaring theta
            th = np.where(big, 1.0, theta)
            t = np.where(th >= 0, 1.0, -1.0) / (np.abs(th) + np.sqrt(th * th + 1.0))
            t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            rp, rq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * rp - s[:, None] * rq
            a[q, :] = s[:, None] * rp + c[:, None] * rq
            cp, cq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = cp * c[None, :] - cq * s[None, :]
            a[:, q] = cp * s[None, :] + cq * c[None, :]
            a[p, p] = app - t * apq
            a[q, q] = aqq + t * apq
            a[p, q] = 0.0
            a[q, p] = 0.0
        off = off_norm()
    vals = np.diag(a)[:n].copy()
    return vals, sweep, off


def rt_walk(tables: np.ndarray, ncols: int, picks: np.ndarray) -> np.ndarray:
    """Vectorized twin of the compiled walker; same inputs, same result."""
    paths = tables.shape[0]
    idx = np.arange(paths)
    for step in picks:
        cum = np.cumsum(tables, axis=1)
        ca = (cum <= step[:, 0:1]).sum(axis=1)
        cb = (cum <= step[:, 1:2]).sum(axis=1)
        i1, j1 = np.divmod(ca, ncols)
        i2, j2 = np.divmod(cb, ncols)
        move = (i1 != i2) & (j1 != j2)
        k = idx[move]
        tables[k, ca[move]] -= 1
        tables[k, cb[move]] -= 1
        tables[k, i1[move] * ncols + j2[move]] += 1
        tables[k, i2[move] * ncols + j1[move]] += 1
    return tables
