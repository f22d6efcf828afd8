"""Discrete probability measures on the line and the distances between them."""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize
import scipy.sparse as sp

from .simplex import simplex_max

MASS_TOL = 1e-12
SIMPLEX_MAX_ATOMS = 40
MERGE_GAP = 1e-10  # relative to the support span


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Atoms at strictly increasing ``positions`` with positive ``weights`` of total mass 1."""

    positions: np.ndarray
    weights: np.ndarray
    carrier: tuple | None = None

    def __post_init__(self):
        x = np.asarray(self.positions, dtype=float).reshape(-1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if x.shape != w.shape or x.size == 0:
            raise ValueError("need matching, nonempty positions and weights")
        if np.any(w <= 0) or not np.all(np.isfinite(x)):
            raise ValueError("weights must be positive and positions finite")
        if np.any(np.diff(x) <= 0):
            raise ValueError("positions must be strictly increasing; use DiscreteMeasure.from_atoms")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"total mass {w.sum()!r} differs from 1")
        x.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "weights", w)
        if self.carrier is None:
            object.__setattr__(self, "carrier", (float(x[0]), float(x[-1])))

    @classmethod
    def from_atoms(cls, positions, weights=None, carrier=None, normalize: bool = False,
                   drop_below: float = 0.0) -> DiscreteMeasure:
        """Sort, merge coincident positions and (optionally) renormalize."""
        x = np.asarray(positions, dtype=float).reshape(-1)
        w = np.full(x.size, 1.0 / x.size) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
        keep = w > drop_below
        x, w = x[keep], w[keep]
        ux, inv = np.unique(x, return_inverse=True)
        uw = np.bincount(inv, weights=w)
        if normalize:
            total = uw.sum()
            if abs(total - 1.0) > 1e-8:
                raise ValueError(f"mass {total} too far from 1 to renormalize")
            uw = uw / total
        return cls(ux, uw, carrier)

    @classmethod
    def dirac(cls, x: float, carrier=None) -> DiscreteMeasure:
        return cls(np.array([float(x)]), np.array([1.0]), carrier)

    def __len__(self) -> int:
        return self.positions.size

    def cdf(self, t):
        cum = np.concatenate([[0.0], np.cumsum(self.weights)])
        cum[-1] = 1.0
        return cum[np.searchsorted(self.positions, np.asarray(t, dtype=float), side="right")]

    def cumulative(self) -> np.ndarray:
        cum = np.cumsum(self.weights)
        cum[-1] = 1.0
        return cum

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        if np.any((u < 0) | (u > 1)):
            raise ValueError("quantile argument outside [0, 1]")
        idx = np.searchsorted(self.cumulative(), u, side="left")
        return self.positions[np.minimum(idx, len(self) - 1)]

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, np.asarray(f(self.positions), dtype=float)))

    def mean(self) -> float:
        return float(np.dot(self.weights, self.positions))

    def shifted(self, c: float) -> DiscreteMeasure:
        car = None if self.carrier is None else (self.carrier[0] + c, self.carrier[1] + c)
        return DiscreteMeasure(self.positions + c, self.weights, car)

    def coarsen(self, width: float) -> DiscreteMeasure:
        """Merge runs of atoms spanning at most ``width`` into their barycentre.

        Each atom moves by at most ``width``, so d_w and d_KRW change by at most ``width``.
        """
        if width <= 0 or len(self) == 1:
            return self
        x, w = self.positions, self.weights
        groups = np.empty(x.size, dtype=np.int64)
        g, start = 0, x[0]
        for i, xi in enumerate(x):
            if xi - start > width:
                g += 1
                start = xi
            groups[i] = g
        W = np.bincount(groups, weights=w)
        X = np.bincount(groups, weights=w * x) / W
        return DiscreteMeasure.from_atoms(X, W / W.sum(), self.carrier)

    def to_dict(self) -> dict:
        return {"positions": self.positions.tolist(), "weights": self.weights.tolist(),
                "carrier": list(self.carrier)}

    @classmethod
    def from_dict(cls, d: dict) -> DiscreteMeasure:
        return cls.from_atoms(d["positions"], d["weights"], tuple(d["carrier"]) if d.get("carrier") else None)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["position", "weight"])
            for x, p in zip(self.positions, self.weights):
                w.writerow([format(float(x), ".17g"), format(float(p), ".17g")])

    @classmethod
    def from_csv(cls, path, carrier=None) -> DiscreteMeasure:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        return cls.from_atoms([float(r["position"]) for r in rows], [float(r["weight"]) for r in rows], carrier)

    def equals(self, other: DiscreteMeasure, tol: float = 1e-12) -> bool:
        return (len(self) == len(other) and np.allclose(self.positions, other.positions, atol=tol, rtol=0)
                and np.allclose(self.weights, other.weights, atol=tol, rtol=0))


@dataclass(frozen=True)
class MetricResult:
    value: float
    method: str
    certificate: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        cert = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.certificate.items()}
        return {"value": self.value, "method": self.method, "certificate": cert}


# --- quantile partitions -------------------------------------------------------

def _quantile_partition(m1: DiscreteMeasure, m2: DiscreteMeasure):
    """Common refinement of the two weight partitions of [0, 1]: (lengths, q1, q2)."""
    c1, c2 = m1.cumulative(), m2.cumulative()
    u = np.union1d(c1, c2)
    lo = np.concatenate([[0.0], u[:-1]])
    du = u - lo
    keep = du > 0
    du, u, lo = du[keep], u[keep], lo[keep]
    mid = (lo + u) / 2.0
    q1 = m1.positions[np.minimum(np.searchsorted(c1, mid, side="left"), len(m1) - 1)]
    q2 = m2.positions[np.minimum(np.searchsorted(c2, mid, side="left"), len(m2) - 1)]
    return du, q1, q2


def d_krw_quantile(m1: DiscreteMeasure, m2: DiscreteMeasure) -> float:
    du, q1, q2 = _quantile_partition(m1, m2)
    return float(np.sum(du * np.abs(q1 - q2)))


def d_krw_cdf(m1: DiscreteMeasure, m2: DiscreteMeasure) -> float:
    x = np.union1d(m1.positions, m2.positions)
    if x.size < 2:
        return 0.0
    F = np.abs(m1.cdf(x[:-1]) - m2.cdf(x[:-1]))
    return float(np.sum(F * np.diff(x)))


def d_krw(m1: DiscreteMeasure, m2: DiscreteMeasure) -> MetricResult:
    """L1 distance of quantile functions; the CDF form is returned alongside."""
    a = d_krw_quantile(m1, m2)
    b = d_krw_cdf(m1, m2)
    return MetricResult(a, "quantile-L1", {"cdf_formula": b, "formula_gap": abs(a - b)})


def d_inf(m1: DiscreteMeasure, m2: DiscreteMeasure, min_length: float = 1e-12) -> MetricResult:
    """Sup distance of quantile functions over partition cells longer than ``min_length``."""
    du, q1, q2 = _quantile_partition(m1, m2)
    diff = np.abs(q1 - q2)[du > min_length]
    return MetricResult(float(diff.max()) if diff.size else 0.0, "quantile-sup")


def d_inf_thickening(m1: DiscreteMeasure, m2: DiscreteMeasure, max_atoms: int = 12) -> float:
    """Brute-force ``inf{eps : mu(A) <= nu(A^eps), nu(A) <= mu(A^eps) for all A}`` on small instances."""
    if len(m1) > max_atoms or len(m2) > max_atoms:
        raise ValueError("brute-force thickening is limited to small measures")
    cand = np.unique(np.concatenate([[0.0], np.abs(m1.positions[:, None] - m2.positions[None, :]).ravel()]))

    def holds(a: DiscreteMeasure, b: DiscreteMeasure, r: float) -> bool:
        # A^eps for eps slightly above r contains exactly the points within distance r
        near = np.abs(a.positions[:, None] - b.positions[None, :]) <= r + 1e-12
        for size in range(1, len(a) + 1):
            for A in itertools.combinations(range(len(a)), size):
                mass_a = a.weights[list(A)].sum()
                mass_b = b.weights[near[list(A)].any(axis=0)].sum()
                if mass_a > mass_b + 1e-12:
                    return False
        return True

    for r in cand:
        if holds(m1, m2, r) and holds(m2, m1, r):
            return float(r)
    return float(cand[-1])


def hausdorff(A, B) -> float:
    """Hausdorff distance of two finite subsets of the line."""
    A = np.sort(np.asarray(A, dtype=float).reshape(-1))
    B = np.sort(np.asarray(B, dtype=float).reshape(-1))
    if A.size == 0 or B.size == 0:
        raise ValueError("Hausdorff distance needs nonempty sets")
    return max(_one_sided(A, B), _one_sided(B, A))


def _one_sided(A: np.ndarray, B: np.ndarray) -> float:
    """sup_{a in A} dist(a, B) with B sorted."""
    i = np.searchsorted(B, A)
    left = np.abs(A - B[np.maximum(i - 1, 0)])
    right = np.abs(B[np.minimum(i, B.size - 1)] - A)
    return float(np.max(np.minimum(left, right)))


# --- bounded-Lipschitz metric ---------------------------------------------------

def _bl_lp(x: np.ndarray, delta: np.ndarray):
    """LP data for ``max sum f_i delta_i`` with ``|f| <= s``, chain slopes ``<= l``, ``s + l <= 1``.

    Variables are ``u_i = f_i + s`` (so all are nonnegative), then ``s`` and ``l``.
    The objective is unchanged by the shift because ``sum delta = 0``.
    """
    m = x.size
    gaps = np.diff(x)
    nv = m + 2
    S, Lv = m, m + 1
    rows, cols, vals = [], [], []
    r = 0
    for i in range(m):  # u_i - 2 s <= 0
        rows += [r, r]; cols += [i, S]; vals += [1.0, -2.0]; r += 1
    for i in range(m - 1):  # +-(u_{i+1} - u_i) - gap_i l <= 0
        for sgn in (1.0, -1.0):
            rows += [r, r, r]; cols += [i + 1, i, Lv]; vals += [sgn, -sgn, -gaps[i]]; r += 1
    rows += [r, r]; cols += [S, Lv]; vals += [1.0, 1.0]; r += 1
    A = sp.csr_matrix((vals, (rows, cols)), shape=(r, nv))
    b = np.zeros(r)
    b[-1] = 1.0
    c = np.concatenate([delta, [0.0, 0.0]])
    return c, A, b


def bl_certificate_check(x, f, s, l) -> float:
    """Most negative constraint slack of a candidate test function ``f`` at points ``x``."""
    f = np.asarray(f, dtype=float)
    slacks = [s - np.abs(f), l * np.diff(x) - np.abs(np.diff(f)), np.array([1.0 - s - l, s, l])]
    return float(min(np.min(a) for a in slacks if a.size))


def d_w(m1: DiscreteMeasure, m2: DiscreteMeasure, solver: str = "auto") -> MetricResult:
    """Bounded-Lipschitz distance ``sup{ int f d(m1 - m2) : ||f||_inf + L_f <= 1 }``, solved exactly as an LP.

    ``solver``: ``"simplex"`` (dense Bland simplex), ``"highs"`` (scipy) or
    ``"auto"`` (simplex up to ``SIMPLEX_MAX_ATOMS`` support points).
    The certificate holds the optimal ``f`` on the union support and ``(s, l)``.
    """
    x = np.union1d(m1.positions, m2.positions)
    delta = np.zeros(x.size)
    delta[np.searchsorted(x, m1.positions)] += m1.weights
    delta[np.searchsorted(x, m2.positions)] -= m2.weights
    if x.size == 1 or np.all(np.abs(delta) <= 0):
        f = np.zeros(x.size)
        return MetricResult(0.0, "trivial", {"x": x, "f": f, "s": 0.0, "l": 0.0, "min_slack": 0.0})
    # near-coincident points make the slope rows badly scaled; an admissible f has
    # slope <= 1, so merging them moves the value by at most the merged gap
    x_full = x
    group = np.concatenate([[0], np.cumsum(np.diff(x) > MERGE_GAP * max(1.0, x[-1] - x[0]))])
    x = x_full[np.concatenate([[True], np.diff(group) > 0])]
    delta = np.bincount(group, weights=delta)
    if x.size == 1:
        f = np.zeros(x_full.size)
        return MetricResult(0.0, "trivial", {"x": x_full, "f": f, "s": 0.0, "l": 0.0, "min_slack": 0.0})
    c, A, b = _bl_lp(x, delta)
    if solver == "auto":
        solver = "simplex" if x.size <= SIMPLEX_MAX_ATOMS else "highs"
    if solver == "simplex":
        res = simplex_max(c, A.toarray(), b)
        z = res.x
    elif solver == "highs":
        out = scipy.optimize.linprog(-c, A_ub=A, b_ub=b, bounds=(0, None), method="highs")
        if out.status != 0:
            raise RuntimeError(f"LP solver failed: {out.message}")
        z = out.x
    else:
        raise ValueError(f"unknown solver {solver!r}")
    m = x.size
    s, l = float(z[m]), float(z[m + 1])
    f = z[:m] - s
    value = float(np.dot(f, delta))
    f = f[group]
    cert = {"x": x_full, "f": f, "s": s, "l": l, "min_slack": bl_certificate_check(x_full, f, s, l)}
    return MetricResult(max(value, 0.0), f"lp-{solver}", cert)


def bl_test_family(points, family_size: int) -> list[tuple[str, float, float, float]]:
    """Soft steps and hats normalized to ``||f||_inf + L_f <= 1``.

    Returns ``(kind, center, width, amplitude)`` tuples.  A step ramps from
    ``+a`` to ``-a`` over ``[c - w/2, c + w/2]`` with ``a = w / (w + 2)``; a hat of
    half-width ``w`` has height ``w / (w + 1)``.
    """
    pts = np.unique(np.asarray(points, dtype=float))
    if pts.size < 2:
        return []
    span = pts[-1] - pts[0]
    mids = (pts[:-1] + pts[1:]) / 2.0
    n_c = max(1, family_size // 2)
    centers = np.unique(np.concatenate([mids[np.linspace(0, mids.size - 1, min(n_c, mids.size)).astype(int)], pts[
        np.linspace(0, pts.size - 1, min(n_c, pts.size)).astype(int)]]))
    gap = max(float(np.min(np.diff(pts))), span * 1e-6)
    widths = np.unique(np.concatenate([np.geomspace(gap, 2 * span, max(4, family_size // 4)), [span, 2.0]]))
    fam = []
    for c in centers:
        for w in widths:
            fam.append(("step", float(c), float(w), float(w / (w + 2.0))))
            fam.append(("hat", float(c), float(w), float(w / (w + 1.0))))
    return fam


def eval_bl_family_member(member, x) -> np.ndarray:
    kind, c, w, a = member
    x = np.asarray(x, dtype=float)
    if kind == "step":
        return np.interp(x, [c - w / 2, c + w / 2], [a, -a])
    return np.interp(x, [c - w, c, c + w], [0.0, a, 0.0])


def d_w_lower(m1: DiscreteMeasure, m2: DiscreteMeasure, family_size: int = 64) -> float:
    """Lower bound on ``d_w`` from a finite family of admissible test functions."""
    x = np.union1d(m1.positions, m2.positions)
    fam = bl_test_family(x, family_size)
    best = 0.0
    for member in fam:
        v = abs(m1.integrate(lambda t: eval_bl_family_member(member, t))
                - m2.integrate(lambda t: eval_bl_family_member(member, t)))
        best = max(best, v)
    return float(best)


# --- lattice operations ----------------------------------------------------------

def meet_join(m1: DiscreteMeasure, m2: DiscreteMeasure) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """``(meet, join)`` with quantiles ``min(q1, q2)`` and ``max(q1, q2)``.

    Equivalently the meet has CDF ``max(F1, F2)`` and the join has CDF ``min(F1, F2)``.
    """
    du, q1, q2 = _quantile_partition(m1, m2)
    car = _union_carrier(m1, m2)
    meet = DiscreteMeasure.from_atoms(np.minimum(q1, q2), du, car, normalize=True)
    join = DiscreteMeasure.from_atoms(np.maximum(q1, q2), du, car, normalize=True)
    return meet, join


def _union_carrier(m1, m2):
    return (min(m1.carrier[0], m2.carrier[0]), max(m1.carrier[1], m2.carrier[1]))


@dataclass(frozen=True)
class SandwichReport:
    d_w: float
    d_krw: float
    upper: float
    C: float
    passed: bool


def sandwich_check(m1: DiscreteMeasure, m2: DiscreteMeasure, C: float, slack: float = 1e-8) -> SandwichReport:
    """``d_w <= d_KRW <= (1 + C) d_w`` for measures on ``[-C, C]``."""
    a = d_w(m1, m2).value
    b = d_krw(m1, m2).value
    ok = a <= b + slack and b <= (1 + C) * a + slack
    return SandwichReport(a, b, (1 + C) * a, C, bool(ok))
