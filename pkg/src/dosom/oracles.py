"""Slow, independent reference computations used to cross-check fast paths."""

from __future__ import annotations

import itertools

import numpy as np


def bl_vertex_oracle(x, delta) -> float:
    """Bounded-Lipschitz LP optimum by enumerating all vertices of the feasible polytope.

    Variables ``(f_1..f_m, s, l)``; constraints ``-s <= f_i <= s``,
    ``|f_{i+1} - f_i| <= l (x_{i+1} - x_i)``, ``s + l <= 1``, ``s, l >= 0``.
    Every choice of ``m + 2`` tight constraints with a unique solution is solved
    and kept if feasible; the best objective among them is the optimum.  Only
    sensible for a handful of support points.
    """
    x = np.asarray(x, dtype=float)
    delta = np.asarray(delta, dtype=float)
    m = x.size
    n = m + 2
    rows, rhs = [], []
    for i in range(m):
        for sgn in (1.0, -1.0):  # sgn f_i - s <= 0
            r = np.zeros(n); r[i] = sgn; r[m] = -1.0
            rows.append(r); rhs.append(0.0)
    for i in range(m - 1):
        for sgn in (1.0, -1.0):
            r = np.zeros(n); r[i + 1] = sgn; r[i] = -sgn; r[m + 1] = -(x[i + 1] - x[i])
            rows.append(r); rhs.append(0.0)
    r = np.zeros(n); r[m] = r[m + 1] = 1.0
    rows.append(r); rhs.append(1.0)
    for j in (m, m + 1):
        r = np.zeros(n); r[j] = -1.0
        rows.append(r); rhs.append(0.0)
    A = np.array(rows)
    b = np.array(rhs)
    c = np.concatenate([delta, [0.0, 0.0]])
    best = -np.inf
    for active in itertools.combinations(range(len(b)), n):
        sub = A[list(active)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        z = np.linalg.solve(sub, b[list(active)])
        if np.all(A @ z <= b + 1e-9):
            best = max(best, float(c @ z))
    return best


def closed_walks_count(adjacency, y: int, j: int) -> int:
    """Number of closed walks of length ``j`` at ``y`` by dynamic programming on walk endpoints."""
    counts = {y: 1}
    for _ in range(j):
        nxt: dict = {}
        for v, c in counts.items():
            for w in adjacency[v]:
                nxt[w] = nxt.get(w, 0) + c
        counts = nxt
    return counts.get(y, 0)
