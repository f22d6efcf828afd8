"""Potential sequences on ball graphs.

Random values come from numpy's counter-based Philox generator keyed by the
seed: vertex ``i`` (in breadth-first order) receives the ``i``-th double of the
stream, so outputs do not depend on evaluation order or worker count.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import bethe
from .graphs import GraphFamily, RootedBallGraph


class PotentialDomainError(ValueError):
    """A sampling function left its declared range ``[-C, C]``."""


def philox_uniforms(seed: int, n: int) -> np.ndarray:
    """First ``n`` doubles in [0, 1) of the Philox stream keyed by ``seed``."""
    gen = np.random.Generator(np.random.Philox(key=int(seed) % 2**64))
    return gen.random(n)


@dataclass(frozen=True)
class SingleSiteMeasure:
    """Single-site law given either by atoms or by a piecewise-linear CDF.

    Atoms: ``positions`` strictly increasing with positive ``weights``.
    CDF: ``positions`` are breakpoints and ``cdf_values`` the CDF there,
    nondecreasing from 0 to 1, linear in between.
    """

    positions: tuple
    weights: tuple | None = None
    cdf_values: tuple | None = None

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 1 or len(pos) == 0:
            raise ValueError("need at least one position")
        if (self.weights is None) == (self.cdf_values is None):
            raise ValueError("give exactly one of weights or cdf_values")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if len(w) != len(pos) or np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
                raise ValueError("atom weights must be positive and sum to 1")
            if np.any(np.diff(pos) <= 0):
                raise ValueError("atom positions must be strictly increasing")
        else:
            F = np.asarray(self.cdf_values, dtype=float)
            if len(F) != len(pos) or len(pos) < 2:
                raise ValueError("CDF needs matching breakpoints, at least two")
            if np.any(np.diff(pos) <= 0) or np.any(np.diff(F) < 0):
                raise ValueError("CDF breakpoints increasing and values nondecreasing")
            if abs(F[0]) > 1e-12 or abs(F[-1] - 1) > 1e-12:
                raise ValueError("CDF must run from 0 to 1")

    @classmethod
    def atoms(cls, positions: Sequence[float], weights: Sequence[float]) -> SingleSiteMeasure:
        order = np.argsort(positions, kind="stable")
        p = np.asarray(positions, dtype=float)[order]
        w = np.asarray(weights, dtype=float)[order]
        up, inv = np.unique(p, return_inverse=True)
        merged = np.bincount(inv, weights=w)
        return cls(tuple(up.tolist()), weights=tuple(merged.tolist()))

    @classmethod
    def point_mass(cls, c: float) -> SingleSiteMeasure:
        return cls((float(c),), weights=(1.0,))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> SingleSiteMeasure:
        return cls((float(lo), float(hi)), cdf_values=(0.0, 1.0))

    @classmethod
    def bernoulli(cls, p: float, a: float, b: float) -> SingleSiteMeasure:
        """``p`` at ``a``, ``1-p`` at ``b``."""
        return cls.atoms([a, b], [p, 1 - p])

    @classmethod
    def from_dict(cls, d: dict) -> SingleSiteMeasure:
        if "atoms" in d:
            pos, w = zip(*d["atoms"])
            return cls.atoms(pos, w)
        if "cdf" in d:
            pos, F = zip(*d["cdf"])
            return cls(tuple(map(float, pos)), cdf_values=tuple(map(float, F)))
        if "uniform" in d:
            return cls.uniform(*d["uniform"])
        raise ValueError(f"cannot read single-site measure from {d!r}")

    def to_dict(self) -> dict:
        if self.weights is not None:
            return {"atoms": [[p, w] for p, w in zip(self.positions, self.weights)]}
        return {"cdf": [[p, F] for p, F in zip(self.positions, self.cdf_values)]}

    @property
    def is_discrete(self) -> bool:
        return self.weights is not None

    @property
    def bound(self) -> float:
        return float(max(abs(self.positions[0]), abs(self.positions[-1])))

    @property
    def support(self) -> tuple[float, float]:
        return float(self.positions[0]), float(self.positions[-1])

    def cdf(self, s):
        s = np.asarray(s, dtype=float)
        pos = np.asarray(self.positions)
        if self.is_discrete:
            cum = np.concatenate([[0.0], np.cumsum(self.weights)])
            out = cum[np.searchsorted(pos, s, side="right")]
        else:
            out = np.interp(s, pos, self.cdf_values, left=0.0, right=1.0)
        return np.minimum(out, 1.0)

    def quantile(self, t):
        """``q(t) = inf{s : F(s) >= t}``; ``q(0)`` is the left end of the support."""
        t = np.asarray(t, dtype=float)
        if np.any((t < 0) | (t > 1)):
            raise ValueError("quantile argument outside [0, 1]")
        pos = np.asarray(self.positions)
        if self.is_discrete:
            cum = np.cumsum(self.weights)
            cum[-1] = 1.0
            idx = np.searchsorted(cum, t, side="left")
            return pos[np.minimum(idx, len(pos) - 1)]
        F = np.asarray(self.cdf_values)
        # first breakpoint where F >= t, then invert the linear piece before it
        j = np.searchsorted(F, t, side="left")
        j = np.clip(j, 0, len(F) - 1)
        jm = np.maximum(j - 1, 0)
        dF = F[j] - F[jm]
        frac = np.where(dF > 0, (t - F[jm]) / np.where(dF > 0, dF, 1.0), 1.0)
        out = pos[jm] + frac * (pos[j] - pos[jm])
        return np.where(j == 0, pos[0], out)


# --- sampling functions -----------------------------------------------------

@dataclass(frozen=True)
class CosineSampler:
    """``v(t) = amplitude * mean_j cos(2 pi t_j)`` on the torus."""

    amplitude: float = 1.0

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.atleast_2d(t)
        return self.amplitude * np.cos(2 * np.pi * t).mean(axis=1)

    def describe(self) -> str:
        return f"cosine(amplitude={self.amplitude})"


@dataclass(frozen=True)
class TableSampler:
    """Piecewise-linear ``v`` of the first torus coordinate, periodic on [0, 1)."""

    breakpoints: tuple
    values: tuple

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.atleast_2d(t)
        return np.interp(t[:, 0], self.breakpoints, self.values, period=1.0)

    def describe(self) -> str:
        return f"table({list(self.breakpoints)}, {list(self.values)})"


@dataclass(frozen=True)
class WindowSampler:
    """Sampling function on the Bethe product space.

    Sees ``omega`` at the image of the root and of its ``k`` neighbours under the
    automorphism attached to a vertex; returns ``sum_j weights[j] * (2*omega_j - 1)``
    scaled by ``amplitude``.  The default weight only looks at the vertex itself.
    """

    amplitude: float = 1.0
    weights: tuple = (1.0,)

    def __call__(self, window: np.ndarray) -> np.ndarray:
        window = np.atleast_2d(window)
        w = np.zeros(window.shape[1])
        w[: len(self.weights)] = self.weights
        return self.amplitude * (2 * window - 1) @ w

    def describe(self) -> str:
        return f"window(amplitude={self.amplitude}, weights={list(self.weights)})"


# --- potential specs --------------------------------------------------------

@dataclass(frozen=True)
class Explicit:
    values: tuple
    C: float | None = None

    @property
    def bound(self) -> float:
        if self.C is not None:
            return float(self.C)
        return float(np.max(np.abs(self.values))) if len(self.values) else 0.0

    def describe(self) -> str:
        return f"explicit(n={len(self.values)})"


@dataclass(frozen=True)
class QuasiPeriodic:
    """``V(n) = v(frac(theta + n * alpha))`` on ``Z^d``."""

    alpha: tuple
    theta: tuple
    sampler: Callable = field(default_factory=CosineSampler)
    C: float = 1.0

    @property
    def bound(self) -> float:
        return float(self.C)

    def describe(self) -> str:
        return f"quasiperiodic(alpha={list(self.alpha)}, theta={list(self.theta)}, v={_desc(self.sampler)})"


@dataclass(frozen=True)
class BetheErgodic:
    """``V(x) = v(T_x omega)`` with ``omega`` i.i.d. uniform per address (Philox by address index)."""

    seed: int
    sampler: Callable = field(default_factory=WindowSampler)
    C: float = 1.0

    @property
    def bound(self) -> float:
        return float(self.C)

    def describe(self) -> str:
        return f"bethe_ergodic(seed={self.seed}, v={_desc(self.sampler)})"


@dataclass(frozen=True)
class RandomIID:
    single_site: SingleSiteMeasure
    seed: int

    @property
    def bound(self) -> float:
        return self.single_site.bound

    def describe(self) -> str:
        return f"iid({self.single_site.to_dict()}, seed={self.seed})"


@dataclass(frozen=True)
class Scaled:
    inner: object
    lam: float

    @property
    def bound(self) -> float:
        return abs(self.lam) * self.inner.bound

    def describe(self) -> str:
        return f"scaled({self.lam}, {self.inner.describe()})"


def _desc(fn) -> str:
    return fn.describe() if hasattr(fn, "describe") else getattr(fn, "__name__", repr(fn))


def _check_range(values: np.ndarray, C: float) -> np.ndarray:
    if values.size and np.max(np.abs(values)) > C * (1 + 1e-12) + 1e-12:
        raise PotentialDomainError(f"potential value {np.max(np.abs(values))} exceeds bound C={C}")
    return values


def eval_potential(g: RootedBallGraph, spec) -> np.ndarray:
    """Per-vertex potential on ``g`` in the ball's vertex order."""
    if isinstance(spec, Scaled):
        return spec.lam * eval_potential(g, spec.inner)
    if isinstance(spec, Explicit):
        v = np.asarray(spec.values, dtype=float)
        if len(v) != g.vertex_count:
            raise ValueError(f"explicit potential has {len(v)} values for {g.vertex_count} vertices")
        return _check_range(v.copy(), spec.bound)
    if isinstance(spec, RandomIID):
        return sample_random_potential(g, spec.single_site, spec.seed)
    if isinstance(spec, QuasiPeriodic):
        if g.family.kind != "lattice":
            raise ValueError("quasi-periodic potentials are defined on Z^d only")
        alpha = np.asarray(spec.alpha, dtype=float)
        theta = np.asarray(spec.theta, dtype=float)
        if alpha.shape != (g.family.d,) or theta.shape != (g.family.d,):
            raise ValueError("alpha and theta must have the lattice dimension")
        n = np.asarray(g.coordinates, dtype=float).reshape(g.vertex_count, g.family.d)
        t = np.mod(theta + n * alpha, 1.0)
        return _check_range(np.asarray(spec.sampler(t), dtype=float), spec.C)
    if isinstance(spec, BetheErgodic):
        if g.family.kind != "bethe":
            raise ValueError("BetheErgodic potentials need a Bethe ball")
        return _check_range(_bethe_ergodic(g, spec), spec.C)
    raise TypeError(f"unknown potential spec {spec!r}")


def _bethe_ergodic(g: RootedBallGraph, spec: BetheErgodic) -> np.ndarray:
    k = g.family.k
    words = bethe.transitive_words(k, g.radius)
    window_addrs = []
    for addr in g.coordinates:
        word = words[addr]
        # images of the root and its neighbours under the automorphism of ``addr``
        pts = [addr] + [bethe.apply_word(word, (j,), k) for j in range(1, k + 1)]
        window_addrs.append([bethe.address_index(p, k) for p in pts])
    idx = np.asarray(window_addrs, dtype=np.int64)
    omega = philox_uniforms(spec.seed, int(idx.max()) + 1)
    return np.asarray(spec.sampler(omega[idx]), dtype=float)


def sample_random_potential(g: RootedBallGraph, measure: SingleSiteMeasure, seed: int) -> np.ndarray:
    """``q_mu(u_i)`` with ``u_i`` the ``i``-th Philox double for ``seed``."""
    u = philox_uniforms(seed, g.vertex_count)
    # u in [0,1); map 0 to the smallest positive double so q never sees exactly 0
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    return measure.quantile(u).astype(float)


def modify_potential(V, W, g: RootedBallGraph, R: int) -> np.ndarray:
    """``V`` on the ball of radius ``R`` around the root, ``W`` outside."""
    V = np.asarray(V, dtype=float)
    W = np.asarray(W, dtype=float)
    if len(V) != g.vertex_count or len(W) != g.vertex_count:
        raise ValueError("potential length does not match the ball")
    if not 0 <= R <= g.radius:
        raise ValueError(f"R={R} outside [0, {g.radius}]")
    return np.where(g.dist_to_root <= R, V, W)


def uniform_perturbation(n: int, eps: float, seed: int) -> np.ndarray:
    """I.i.d. uniform values on ``[-eps, eps]`` rescaled so the sup norm equals ``eps``."""
    if eps == 0:
        return np.zeros(n)
    u = 2 * philox_uniforms(seed, n) - 1
    m = np.max(np.abs(u))
    return eps * u / m if m > 0 else np.full(n, eps)


def shifted_root_spec(spec, family: GraphFamily, shift: Sequence[int], index: int):
    """Spec whose potential around the root equals ``spec``'s around ``shift``."""
    if isinstance(spec, Scaled):
        return Scaled(shifted_root_spec(spec.inner, family, shift, index), spec.lam)
    if isinstance(spec, QuasiPeriodic):
        theta = np.mod(np.asarray(spec.theta) + np.asarray(shift) * np.asarray(spec.alpha), 1.0)
        return QuasiPeriodic(spec.alpha, tuple(theta.tolist()), spec.sampler, spec.C)
    if isinstance(spec, RandomIID):
        # an i.i.d. field is equal in law around every root; use an independent stream
        return RandomIID(spec.single_site, derived_seed(spec.seed, index))
    if isinstance(spec, BetheErgodic):
        return BetheErgodic(derived_seed(spec.seed, index), spec.sampler, spec.C)
    return spec


def derived_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(seed) % 2**64, int(index)]).generate_state(1, np.uint64)[0])


def write_potential_csv(V, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["vertex_index", "value"])
        for i, v in enumerate(np.asarray(V, dtype=float)):
            w.writerow([i, repr(float(v))])


def read_potential_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    idx = [int(r["vertex_index"]) for r in rows]
    if idx != list(range(len(idx))):
        raise ValueError("vertex indices must be 0..n-1 in order")
    return np.array([float(r["value"]) for r in rows])


GOLDEN = (math.sqrt(5) - 1) / 2
