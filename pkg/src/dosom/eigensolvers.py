"""Self-contained dense symmetric eigensolvers.

``householder_ql`` is Householder tridiagonalization followed by implicit-shift
QL; ``jacobi_eigh`` is the cyclic Jacobi rotation method, kept as a slow but
independent reference.
"""

from __future__ import annotations

import math

import numpy as np


class ConvergenceError(RuntimeError):
    pass


def householder_tridiagonalize(A: np.ndarray, want_q: bool = True):
    """Return ``(d, e, Q)`` with ``Q.T @ A @ Q`` tridiagonal (diagonal ``d``, off-diagonal ``e``)."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    Q = np.eye(n) if want_q else None
    for k in range(n - 2):
        x = A[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        v = x.copy()
        v[0] += math.copysign(alpha, x[0])
        vn = np.linalg.norm(v)
        if vn == 0.0:
            continue
        v /= vn
        # two-sided reflection of the trailing block and the coupling column
        sub = A[k + 1:, k + 1:]
        w = sub @ v
        q = 2.0 * (w - (v @ w) * v)
        sub -= np.outer(v, q) + np.outer(q, v)
        col = A[k + 1:, k]
        col -= 2.0 * (v @ col) * v
        A[k, k + 1:] = col
        if want_q:
            Qs = Q[:, k + 1:]
            Qs -= 2.0 * np.outer(Qs @ v, v)
    d = np.diag(A).copy()
    e = np.diag(A, 1).copy()
    return d, e, Q


def tridiagonal_ql(d, e, Z: np.ndarray | None = None, max_sweeps: int = 30):
    """Implicit-shift QL on a symmetric tridiagonal matrix.

    ``Z`` (if given) is updated in place so its columns become eigenvectors of
    the matrix it tridiagonalized.  Raises ``ConvergenceError`` when one
    eigenvalue needs more than ``max_sweeps`` sweeps.
    """
    d = np.array(d, dtype=float)
    n = len(d)
    e = np.concatenate([np.asarray(e, dtype=float), [0.0]])[:n] if n else np.zeros(0)
    eps = np.finfo(float).eps
    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            if sweeps == max_sweeps:
                raise ConvergenceError(f"eigenvalue {l} not converged after {max_sweeps} sweeps")
            sweeps += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if Z is not None:
                    f_col = Z[:, i + 1].copy()
                    Z[:, i + 1] = s * Z[:, i] + c * f_col
                    Z[:, i] = c * Z[:, i] - s * f_col
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    order = np.argsort(d, kind="stable")
    if Z is not None:
        Z[:] = Z[:, order]
    return d[order]


def householder_ql(A: np.ndarray, want_vectors: bool = True, max_sweeps: int = 30):
    d, e, Q = householder_tridiagonalize(A, want_q=want_vectors)
    w = tridiagonal_ql(d, e, Q, max_sweeps=max_sweeps)
    return w, Q


def jacobi_eigh(A: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi rotations until the off-diagonal Frobenius norm is below ``tol * ||A||_F``."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    scale = max(np.linalg.norm(A), 1e-300)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * scale:
            order = np.argsort(np.diag(A), kind="stable")
            return np.diag(A)[order], V[:, order]
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :], A[q, :] = c * rp - s * rq, s * rp + c * rq
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p], A[:, q] = c * cp - s * cq, s * cp + c * cq
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p], V[:, q] = c * vp - s * vq, s * vp + c * vq
    raise ConvergenceError("Jacobi method did not converge")
