"""Schrödinger operators ``adjacency + diag(V)`` on balls, eigensolves and per-site moments."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .eigensolvers import ConvergenceError, householder_ql
from .graphs import RootedBallGraph, bfs_distances

DEFAULT_DENSE_CAP = 6000
DEFAULT_TRIDIAGONAL_CAP = 2_000_000
MAX_POWER_MOMENT = 30

__all__ = [
    "ConvergenceError", "Hamiltonian", "SpectralDecomposition", "MomentTable",
    "assemble", "matvec", "eig", "restrict", "chebyshev_moments", "power_moments",
    "finite_range_check", "default_interval", "spectral_bound",
]


class CapExceededError(RuntimeError):
    pass


class IntervalError(ValueError):
    """Scaling interval does not enclose a proven spectral bound."""


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    graph: RootedBallGraph
    diagonal: np.ndarray
    matrix: sp.csr_matrix

    @property
    def n(self) -> int:
        return self.graph.vertex_count

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    @property
    def potential_sup(self) -> float:
        return float(np.max(np.abs(self.diagonal))) if self.n else 0.0

    def gershgorin(self) -> tuple[float, float]:
        deg = self.graph.degrees
        return float(np.min(self.diagonal - deg)), float(np.max(self.diagonal + deg))

    def numerical_range_bound(self) -> tuple[float, float]:
        """``[min V - rho, max V + rho]``: the ball operator compresses the infinite one."""
        rho = self.graph.family.spectral_radius
        return float(np.min(self.diagonal) - rho), float(np.max(self.diagonal) + rho)


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None
    backend: str = "lapack"


@dataclass(frozen=True)
class MomentTable:
    sites: np.ndarray
    n_max: int
    interval: tuple[float, float]
    chebyshev: np.ndarray          # shape (len(sites), n_max + 1)
    power: np.ndarray | None = None  # shape (len(sites), j_max + 1)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["site", "j", "mu_j"])
            for s, row in zip(self.sites, self.chebyshev):
                for j, mu in enumerate(row):
                    w.writerow([int(s), j, format(float(mu), ".17g")])


def assemble(g: RootedBallGraph, V) -> Hamiltonian:
    V = np.asarray(V, dtype=float)
    if V.shape != (g.vertex_count,):
        raise ValueError(f"potential length {V.shape} does not match {g.vertex_count} vertices")
    n = g.vertex_count
    data = np.ones(len(g.indices))
    A = sp.csr_matrix((data, g.indices, g.indptr), shape=(n, n))
    H = (A + sp.diags(V)).tocsr()
    H.sort_indices()
    V = V.copy()
    V.setflags(write=False)
    return Hamiltonian(g, V, H)


def matvec(H: Hamiltonian, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape[0] != H.n:
        raise ValueError(f"vector length {v.shape[0]} does not match {H.n}")
    return H.matrix @ v


def restrict(H: Hamiltonian, L: int) -> Hamiltonian:
    """Principal submatrix on the vertices within distance ``L`` of the root."""
    if not 0 <= L <= H.graph.radius:
        raise ValueError(f"L={L} outside [0, {H.graph.radius}]")
    if L == H.graph.radius:
        return H
    sub = H.graph.sub_ball(L)
    return assemble(sub, H.diagonal[: sub.vertex_count])


def _path_order(g: RootedBallGraph) -> np.ndarray | None:
    if g.family.kind != "lattice" or g.family.d != 1:
        return None
    pos = np.array([c[0] for c in g.coordinates])
    return np.argsort(pos, kind="stable")


def eig(H: Hamiltonian, want_vectors: bool = False, backend: str = "lapack",
        cap: int = DEFAULT_DENSE_CAP, max_sweeps: int = 30) -> SpectralDecomposition:
    """Dense symmetric eigensolve.

    ``backend``: ``"lapack"`` (numpy/LAPACK), ``"householder_ql"`` (own
    Householder + implicit QL) or ``"tridiagonal"`` (Z^1 balls only; the path is
    already tridiagonal in coordinate order, so much larger sizes are allowed).
    """
    n = H.n
    if backend == "tridiagonal":
        order = _path_order(H.graph)
        if order is None:
            raise ValueError("tridiagonal backend needs a Z^1 ball")
        if n > DEFAULT_TRIDIAGONAL_CAP:
            raise CapExceededError(f"{n} vertices exceed tridiagonal cap")
        d = H.diagonal[order]
        e = np.ones(max(n - 1, 0))
        if n == 1:
            w = d.copy()
            vecs = np.ones((1, 1)) if want_vectors else None
        elif want_vectors:
            w, Z = scipy.linalg.eigh_tridiagonal(d, e)
            vecs = np.empty_like(Z)
            vecs[order] = Z
        else:
            w = scipy.linalg.eigh_tridiagonal(d, e, eigvals_only=True)
            vecs = None
        return SpectralDecomposition(np.asarray(w), vecs, backend)
    if n > cap:
        raise CapExceededError(f"{n} vertices exceed dense cap {cap}")
    A = H.dense()
    if backend == "lapack":
        if want_vectors:
            w, Z = np.linalg.eigh(A)
            return SpectralDecomposition(w, Z, backend)
        return SpectralDecomposition(np.linalg.eigvalsh(A), None, backend)
    if backend == "householder_ql":
        w, Z = householder_ql(A, want_vectors=want_vectors, max_sweeps=max_sweeps)
        return SpectralDecomposition(w, Z, backend)
    raise ValueError(f"unknown eig backend {backend!r}")


def spectral_bound(H: Hamiltonian) -> tuple[float, float]:
    """Tightest of the numerical-range and Gershgorin enclosures."""
    a1, b1 = H.numerical_range_bound()
    a2, b2 = H.gershgorin()
    return max(a1, a2), min(b1, b2)


def default_interval(rho: float, C: float, margin: float = 0.1) -> tuple[float, float]:
    return (-rho - C - margin, rho + C + margin)


def _check_interval(H: Hamiltonian, a: float, b: float) -> None:
    if not b > a:
        raise IntervalError(f"empty interval [{a}, {b}]")
    tol = 1e-12 * max(1.0, abs(a), abs(b))
    ok = False
    for lo, hi in (H.numerical_range_bound(), H.gershgorin()):
        if a <= lo + tol and hi <= b + tol:
            ok = True
    if not ok:
        raise IntervalError(f"[{a}, {b}] does not enclose a spectral bound of H")


def _sites_array(H: Hamiltonian, sites) -> np.ndarray:
    s = np.asarray(sites, dtype=np.int64).reshape(-1)
    if s.size and (s.min() < 0 or s.max() >= H.n):
        raise IndexError("site index out of range")
    return s


def chebyshev_moments(H: Hamiltonian, sites, n_max: int, interval, power_max: int = 0,
                      block: int = 512) -> MomentTable:
    """``mu_j(y) = <delta_y, T_j(Hhat) delta_y>`` for ``j <= n_max`` by the three-term recurrence."""
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    if power_max > MAX_POWER_MOMENT:
        raise ValueError(f"power moments limited to j <= {MAX_POWER_MOMENT}")
    a, b = map(float, interval)
    _check_interval(H, a, b)
    s = _sites_array(H, sites)
    mid, half = (a + b) / 2.0, (b - a) / 2.0
    Hhat = ((H.matrix - mid * sp.identity(H.n, format="csr")) / half).tocsr()
    mu = np.empty((len(s), n_max + 1))
    for start in range(0, len(s), block):
        chunk = s[start:start + block]
        cols = np.arange(len(chunk))
        w_prev = np.zeros((H.n, len(chunk)))
        w_prev[chunk, cols] = 1.0
        mu[start:start + len(chunk), 0] = 1.0
        if n_max == 0:
            continue
        w = Hhat @ w_prev
        mu[start:start + len(chunk), 1] = w[chunk, cols]
        for j in range(2, n_max + 1):
            w_next = 2.0 * (Hhat @ w) - w_prev
            w_prev, w = w, w_next
            mu[start:start + len(chunk), j] = w[chunk, cols]
    power = power_moments(H, s, power_max) if power_max > 0 else None
    return MomentTable(s, n_max, (a, b), mu, power)


def power_moments(H: Hamiltonian, sites, j_max: int, block: int = 512) -> np.ndarray:
    """``<delta_y, H^j delta_y>`` for ``j <= j_max``."""
    if j_max > MAX_POWER_MOMENT:
        raise ValueError(f"power moments limited to j <= {MAX_POWER_MOMENT}")
    s = _sites_array(H, sites)
    out = np.empty((len(s), j_max + 1))
    for start in range(0, len(s), block):
        chunk = s[start:start + block]
        cols = np.arange(len(chunk))
        w = np.zeros((H.n, len(chunk)))
        w[chunk, cols] = 1.0
        out[start:start + len(chunk), 0] = 1.0
        for j in range(1, j_max + 1):
            w = H.matrix @ w
            out[start:start + len(chunk), j] = w[chunk, cols]
    return out


def finite_range_check(g: RootedBallGraph, V, W, x_site: int, L: int, j: int,
                       rtol: float = 1e-10) -> bool:
    """Compare ``sum_{y in Lambda_L(x)} <delta_y, H^j delta_y>`` for ``V`` and for ``V`` modified outside radius ``L + j//2``."""
    M = L + j // 2
    if M > g.radius:
        raise ValueError(f"locality radius {M} exceeds ball radius {g.radius}")
    dist = bfs_distances(g, x_site) if x_site != g.root else g.dist_to_root
    V = np.asarray(V, dtype=float)
    W = np.asarray(W, dtype=float)
    Vmod = np.where((dist >= 0) & (dist <= M), V, W)
    sites = np.flatnonzero((dist >= 0) & (dist <= L))
    t1 = _trace_power(assemble(g, V), sites, j)
    t2 = _trace_power(assemble(g, Vmod), sites, j)
    scale = max(1.0, abs(t1), abs(t2))
    return abs(t1 - t2) <= rtol * scale


def _trace_power(H: Hamiltonian, sites, j: int) -> float:
    w = np.zeros((H.n, len(sites)))
    w[sites, np.arange(len(sites))] = 1.0
    for _ in range(j):
        w = H.matrix @ w
    return float(np.sum(w[sites, np.arange(len(sites))]))


def write_eigenvalues_csv(values, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "eigenvalue"])
        for i, v in enumerate(values):
            w.writerow([i, format(float(v), ".17g")])
