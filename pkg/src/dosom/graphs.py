"""Finite balls of lattices and Bethe lattices.

Balls are built breadth-first from the root with a fixed neighbour order per
family, so the vertices with ``dist_to_root <= L`` of any ball of radius
``M >= L`` are exactly its first ``|Lambda_L|`` vertices, in the same order.
Restrictions, potentials keyed by vertex index and moment tables all rely on
that prefix property.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterator

import numpy as np

DEFAULT_VERTEX_CAP = 2_000_000
INT64_MAX = 2**63 - 1


class BallTooLargeError(RuntimeError):
    """Raised when a ball would exceed the configured vertex cap."""


@dataclass(frozen=True)
class GraphFamily:
    """One of the supported infinite graphs.

    ``kind`` is ``"lattice"`` (with dimension ``d``), ``"hexagonal"``,
    ``"triangular"`` or ``"bethe"`` (with coordination number ``k``).
    """

    kind: str
    d: int = 1
    k: int = 0

    def __post_init__(self):
        if self.kind == "lattice":
            if self.d < 1:
                raise ValueError(f"lattice dimension must be >= 1, got {self.d}")
        elif self.kind == "bethe":
            if self.k < 3:
                raise ValueError(f"Bethe coordination number must be >= 3, got {self.k}")
        elif self.kind not in ("hexagonal", "triangular"):
            raise ValueError(f"unknown graph family {self.kind!r}")

    @classmethod
    def lattice(cls, d: int) -> GraphFamily:
        return cls("lattice", d=d)

    @classmethod
    def bethe(cls, k: int) -> GraphFamily:
        return cls("bethe", k=k)

    @classmethod
    def hexagonal(cls) -> GraphFamily:
        return cls("hexagonal", d=2)

    @classmethod
    def triangular(cls) -> GraphFamily:
        return cls("triangular", d=2)

    @classmethod
    def parse(cls, text: str) -> GraphFamily:
        """Parse ``"Z1"``, ``"Z2"``, ``"bethe3"``, ``"hexagonal"``, ``"triangular"``."""
        t = text.strip().lower()
        if t.startswith("z") and t[1:].isdigit():
            return cls.lattice(int(t[1:]))
        if t.startswith("bethe") and t[5:].isdigit():
            return cls.bethe(int(t[5:]))
        if t in ("hexagonal", "triangular"):
            return cls(t, d=2)
        raise ValueError(f"cannot parse graph family {text!r}")

    @property
    def label(self) -> str:
        if self.kind == "lattice":
            return f"Z{self.d}"
        if self.kind == "bethe":
            return f"bethe{self.k}"
        return self.kind

    @property
    def degree(self) -> int:
        return {"lattice": 2 * self.d, "bethe": self.k, "hexagonal": 3, "triangular": 6}[self.kind]

    @property
    def spectral_radius(self) -> float:
        """Spectral radius of the adjacency Laplacian on the infinite graph."""
        if self.kind == "bethe":
            return 2.0 * math.sqrt(self.k - 1)
        return float(self.degree)

    @property
    def is_translation_invariant(self) -> bool:
        return self.kind == "lattice"

    def neighbors(self, coord) -> list:
        """Neighbours of a coordinate in canonical order."""
        if self.kind == "lattice":
            out = []
            for j in range(self.d):
                for step in (1, -1):
                    c = list(coord)
                    c[j] += step
                    out.append(tuple(c))
            return out
        if self.kind == "bethe":
            return _bethe_neighbors(coord, self.k)
        x, y = coord
        if self.kind == "hexagonal":
            # brick-wall embedding: vertical bond up on even sublattice, down on odd
            vertical = (x, y + 1) if (x + y) % 2 == 0 else (x, y - 1)
            return [(x + 1, y), (x - 1, y), vertical]
        return [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1), (x + 1, y - 1), (x - 1, y + 1)]

    def origin(self):
        return () if self.kind == "bethe" else (0,) * self.d


def _bethe_neighbors(addr: tuple, k: int) -> list:
    if len(addr) == 0:
        return [(j,) for j in range(1, k + 1)]
    return [addr[:-1]] + [addr + (j,) for j in range(1, k)]


@dataclass(frozen=True, eq=False)
class RootedBallGraph:
    """The closed ball of radius ``radius`` around the root (vertex 0)."""

    family: GraphFamily
    radius: int
    indptr: np.ndarray
    indices: np.ndarray
    dist_to_root: np.ndarray
    coordinates: tuple
    _index: dict = field(repr=False, compare=False)

    root: int = 0

    @property
    def vertex_count(self) -> int:
        return len(self.dist_to_root)

    def __len__(self) -> int:
        return self.vertex_count

    def adj(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @property
    def adjacency(self) -> list[list[int]]:
        return [self.adj(v).tolist() for v in range(self.vertex_count)]

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def index_of(self, coord: Hashable) -> int:
        return self._index[tuple(coord)]

    def count_within(self, L: int) -> int:
        """``|Lambda_L|`` inside this ball; also the prefix length of that sub-ball."""
        if L < 0:
            return 0
        return int(np.searchsorted(self.dist_to_root, L, side="right"))

    def edges(self) -> Iterator[tuple[int, int]]:
        for u in range(self.vertex_count):
            for v in self.adj(u):
                if u < v:
                    yield u, int(v)

    def sub_ball(self, L: int) -> RootedBallGraph:
        """The induced ball of radius ``L`` (a vertex prefix of this one)."""
        if not 0 <= L <= self.radius:
            raise ValueError(f"sub-ball radius {L} outside [0, {self.radius}]")
        if L == self.radius:
            return self
        n = self.count_within(L)
        rows = []
        indptr = [0]
        for v in range(n):
            nb = self.adj(v)
            nb = nb[nb < n]
            rows.append(nb)
            indptr.append(indptr[-1] + len(nb))
        indices = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
        coords = self.coordinates[:n]
        return _freeze(self.family, L, np.asarray(indptr, dtype=np.int64), indices.astype(np.int64),
                       self.dist_to_root[:n].copy(), coords)


def _freeze(family, radius, indptr, indices, dist, coords) -> RootedBallGraph:
    for a in (indptr, indices, dist):
        a.setflags(write=False)
    index = {c: i for i, c in enumerate(coords)}
    return RootedBallGraph(family, radius, indptr, indices, dist, tuple(coords), index)


def build_ball(family: GraphFamily, M: int, cap: int = DEFAULT_VERTEX_CAP) -> RootedBallGraph:
    """Breadth-first construction of ``Lambda_M(root)``."""
    if M < 0:
        raise ValueError(f"radius must be nonnegative, got {M}")
    if family.kind in ("lattice", "bethe"):
        expected = ball_cardinality(family, M)
        if expected > cap:
            raise BallTooLargeError(f"{family.label} ball of radius {M} has {expected} vertices > cap {cap}")
    if family.kind == "lattice" and family.d == 1:
        return _build_path(family, M)

    origin = family.origin()
    index = {origin: 0}
    coords = [origin]
    dist = [0]
    queue = deque([origin])
    while queue:
        c = queue.popleft()
        dc = dist[index[c]]
        if dc == M:
            continue
        for nb in family.neighbors(c):
            if nb not in index:
                if len(coords) >= cap:
                    raise BallTooLargeError(f"{family.label} ball of radius {M} exceeds cap {cap}")
                index[nb] = len(coords)
                coords.append(nb)
                dist.append(dc + 1)
                queue.append(nb)

    indptr = [0]
    indices = []
    for c in coords:
        for nb in family.neighbors(c):
            j = index.get(nb)
            if j is not None:
                indices.append(j)
        indptr.append(len(indices))
    return _freeze(family, M, np.asarray(indptr, dtype=np.int64), np.asarray(indices, dtype=np.int64),
                   np.asarray(dist, dtype=np.int64), coords)


def _build_path(family: GraphFamily, M: int) -> RootedBallGraph:
    # Z^1 fast path with the same BFS order: 0, +1, -1, +2, -2, ...
    n = 2 * M + 1
    pos = np.zeros(n, dtype=np.int64)
    pos[1::2] = np.arange(1, M + 1)
    pos[2::2] = -np.arange(1, M + 1)
    idx_of_pos = np.empty(n, dtype=np.int64)
    idx_of_pos[pos + M] = np.arange(n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    indices = []
    for p in pos:
        row = []
        if p + 1 <= M:
            row.append(idx_of_pos[p + 1 + M])
        if p - 1 >= -M:
            row.append(idx_of_pos[p - 1 + M])
        indices.append(row)
    counts = np.array([len(r) for r in indices], dtype=np.int64)
    indptr[1:] = np.cumsum(counts)
    flat = np.fromiter((j for r in indices for j in r), dtype=np.int64, count=int(indptr[-1]))
    coords = [(int(p),) for p in pos]
    return _freeze(family, M, indptr, flat, np.abs(pos), coords)


def bfs_distances(g: RootedBallGraph, source: int) -> np.ndarray:
    """Graph distances inside the ball from ``source``; -1 for unreachable vertices."""
    if not 0 <= source < g.vertex_count:
        raise IndexError(f"vertex {source} out of range")
    dist = np.full(g.vertex_count, -1, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in g.adj(u):
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(int(v))
    return dist


def graph_distance(g: RootedBallGraph, x: int, y: int) -> int:
    if not 0 <= y < g.vertex_count:
        raise IndexError(f"vertex {y} out of range")
    return int(bfs_distances(g, x)[y])


def ball_cardinality(family: GraphFamily, L: int) -> int:
    """``|Lambda_L|``: closed form for lattices and Bethe lattices, BFS count otherwise."""
    if L < 0:
        raise ValueError(f"radius must be nonnegative, got {L}")
    if family.kind == "bethe":
        k = family.k
        value = 1 + k * ((k - 1) ** L - 1) // (k - 2)
        if value > INT64_MAX:
            raise OverflowError(f"|Lambda_{L}| of {family.label} exceeds int64")
        return value
    if family.kind == "lattice":
        # points of Z^d with 1-norm <= L
        d = family.d
        return sum(2**i * math.comb(d, i) * math.comb(L, i) for i in range(min(d, L) + 1))
    return _bfs_count(family, L)


def _bfs_count(family: GraphFamily, L: int) -> int:
    origin = family.origin()
    seen = {origin}
    frontier = [origin]
    for _ in range(L):
        nxt = []
        for c in frontier:
            for nb in family.neighbors(c):
                if nb not in seen:
                    seen.add(nb)
                    nxt.append(nb)
        frontier = nxt
    return len(seen)


def growth_ratio(family: GraphFamily, L: int, n: int) -> Fraction:
    """``|Lambda_{L+n}| / |Lambda_L|`` as an exact fraction."""
    if L < 1 or n < 1:
        raise ValueError("growth_ratio needs L >= 1 and n >= 1")
    return Fraction(ball_cardinality(family, L + n), ball_cardinality(family, L))


@dataclass(frozen=True)
class GrowthFunction:
    """Uniform growth function: ``(k-1)**n`` on Bethe lattices, ``n**(zeta/alpha)`` otherwise."""

    family: GraphFamily
    zeta: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.zeta <= 0 or self.alpha <= 0:
            raise ValueError("zeta and alpha must be positive")

    def __call__(self, n: float) -> float:
        if self.family.kind == "bethe":
            return float(self.family.k - 1) ** n
        return float(n) ** (self.zeta / self.alpha)

    def inverse(self, y: float) -> float:
        if self.family.kind == "bethe":
            return math.log(y) / math.log(self.family.k - 1)
        return float(y) ** (self.alpha / self.zeta)


def write_edgelist(g: RootedBallGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# family={g.family.label} M={g.radius} n={g.vertex_count}\n")
        for u, v in g.edges():
            fh.write(f"{u} {v}\n")


def read_edgelist(path) -> tuple[dict, list[tuple[int, int]]]:
    header = {}
    edges = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for part in line[1:].split():
                    key, _, val = part.partition("=")
                    header[key] = val
                continue
            u, v = line.split()
            edges.append((int(u), int(v)))
    return header, edges
