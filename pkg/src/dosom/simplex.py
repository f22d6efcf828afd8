"""Dense tableau simplex for ``max c.x  s.t.  A x <= b, x >= 0`` with ``b >= 0``.

Bland's rule (smallest eligible index for both entering and leaving variables)
rules out cycling on degenerate problems, which the bounded-Lipschitz LPs are.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SimplexError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimplexResult:
    x: np.ndarray
    objective: float
    duals: np.ndarray
    iterations: int


def simplex_max(c, A, b, max_iter: int = 1_000_000, tol: float = 1e-12) -> SimplexResult:
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError("shape mismatch between c, A and b")
    if np.any(b < 0):
        raise ValueError("this solver starts from the slack basis and needs b >= 0")

    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -c
    basis = list(range(n, n + m))

    it = 0
    while True:
        row = T[m, :-1]
        eligible = np.flatnonzero(row < -tol)
        if eligible.size == 0:
            break
        if it >= max_iter:
            raise SimplexError(f"iteration cap {max_iter} reached")
        j = int(eligible[0])
        col = T[:m, j]
        pos = col > tol
        if not np.any(pos):
            raise SimplexError("problem is unbounded")
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / col[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + tol * max(1.0, abs(best)))
        i = int(min(ties, key=lambda r: basis[r]))
        T[i] /= T[i, j]
        others = np.arange(m + 1) != i
        T[others] -= np.outer(T[others, j], T[i])
        basis[i] = j
        it += 1

    x = np.zeros(n + m)
    x[basis] = T[:m, -1]
    return SimplexResult(x[:n], float(T[m, -1]), T[m, n:n + m].copy(), it)
