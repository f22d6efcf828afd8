"""Scalar approximation tools: Lipschitz test functions, Bernstein polynomials,
Chebyshev series and the constants that appear in the continuity bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft
import scipy.stats
from numpy.polynomial import chebyshev as npcheb

C_B = (4306 + 837 * math.sqrt(6)) / 5832
GRID_POINTS = 10_000


@dataclass(frozen=True)
class LipschitzTestFunction:
    """Piecewise-linear ``f`` through ``(breakpoints[i], values[i])``, constant outside.

    ``domain`` is the interval the function is meant to live on; it only affects
    grids and descriptions.
    """

    breakpoints: tuple
    values: tuple
    domain: tuple | None = None
    label: str = ""

    def __post_init__(self):
        x = np.asarray(self.breakpoints, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or len(x) == 0:
            raise ValueError("breakpoints and values must be equal-length 1-d sequences")
        if np.any(np.diff(x) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not np.all(np.isfinite(y)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "breakpoints", tuple(x.tolist()))
        object.__setattr__(self, "values", tuple(y.tolist()))
        if self.domain is None:
            object.__setattr__(self, "domain", (float(x[0]), float(x[-1])))

    @classmethod
    def constant(cls, c: float, domain=(-1.0, 1.0)) -> LipschitzTestFunction:
        return cls((float(domain[0]),), (float(c),), tuple(domain), f"const({c})")

    @classmethod
    def from_callable(cls, fn, domain, pieces: int, label: str = "") -> LipschitzTestFunction:
        x = np.linspace(domain[0], domain[1], pieces + 1)
        return cls(tuple(x), tuple(np.asarray(fn(x), dtype=float)), tuple(domain), label)

    @classmethod
    def hat(cls, center: float, half_width: float, height: float = 1.0, domain=None) -> LipschitzTestFunction:
        x = (center - half_width, center, center + half_width)
        return cls(x, (0.0, height, 0.0), domain, f"hat({center},{half_width},{height})")

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.breakpoints, self.values)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def lipschitz(self) -> float:
        if len(self.breakpoints) < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(self.values) / np.diff(self.breakpoints))))

    @property
    def lip_norm(self) -> float:
        return self.sup_norm + self.lipschitz

    def scaled(self, c: float) -> LipschitzTestFunction:
        return LipschitzTestFunction(self.breakpoints, tuple(c * v for v in self.values), self.domain,
                                     f"{c}*{self.label}" if self.label else "")

    def grid(self, n: int = GRID_POINTS, domain=None) -> np.ndarray:
        a, b = domain if domain is not None else self.domain
        inner = [p for p in self.breakpoints if a <= p <= b]
        return np.union1d(np.linspace(a, b, n), inner)

    def describe(self) -> str:
        if self.label:
            return self.label
        return f"pl(n={len(self.breakpoints)},Lf={self.lipschitz:.6g},sup={self.sup_norm:.6g})"


def bernstein_eval(g, n: int, x: float) -> float:
    """de Casteljau evaluation of ``B_n[g](x)``."""
    if n < 1:
        raise ValueError("Bernstein degree must be >= 1")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x={x} outside [0, 1]")
    beta = np.asarray(g(np.arange(n + 1) / n), dtype=float).copy()
    for r in range(1, n + 1):
        beta[: n + 1 - r] = (1 - x) * beta[: n + 1 - r] + x * beta[1: n + 2 - r]
    return float(beta[0])


def bernstein_eval_grid(g, n: int, xs) -> np.ndarray:
    """``B_n[g]`` on many points via the binomial weights ``C(n,k) x^k (1-x)^(n-k)``."""
    if n < 1:
        raise ValueError("Bernstein degree must be >= 1")
    xs = np.asarray(xs, dtype=float)
    if np.any((xs < 0) | (xs > 1)):
        raise ValueError("points outside [0, 1]")
    coef = np.asarray(g(np.arange(n + 1) / n), dtype=float)
    out = np.empty_like(xs)
    k = np.arange(n + 1)
    for start in range(0, len(xs), 2048):
        chunk = xs[start:start + 2048]
        w = scipy.stats.binom.pmf(k[:, None], n, chunk[None, :])
        out[start:start + 2048] = coef @ w
    return out


def degree_for_accuracy(L_f: float, rho: float, C: float, eta: float) -> int:
    """``ceil((4 (rho + C) c_b L_f / eta)**2)``."""
    for name, v in (("L_f", L_f), ("rho", rho), ("C", C), ("eta", eta)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    val = (4.0 * (rho + C) * C_B * L_f / eta) ** 2
    if not math.isfinite(val) or val >= 2**63:
        raise OverflowError(f"degree {val} not representable")
    r = round(val)
    # an argument that is an integer up to rounding should not be bumped up
    if abs(val - r) <= 1e-9 * max(1.0, val):
        return max(int(r), 1)
    return max(math.ceil(val), 1)


def iods_cutoffs(E: float, eps: float, zeta: float, domain) -> tuple[LipschitzTestFunction, LipschitzTestFunction]:
    """Cut-offs ``f_minus <= chi_(-inf, E] <= f_plus`` with ramps of width ``eps**zeta / 2``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if not zeta > 0:
        raise ValueError("zeta must be positive")
    w = eps**zeta / 2.0
    domain = tuple(map(float, domain))
    f_minus = LipschitzTestFunction((E - w, E), (1.0, 0.0), domain, f"f-(E={E:.6g},w={w:.6g})")
    f_plus = LipschitzTestFunction((E, E + w), (1.0, 0.0), domain, f"f+(E={E:.6g},w={w:.6g})")
    return f_minus, f_plus


@dataclass(frozen=True)
class ChebyshevSeries:
    coeffs: np.ndarray
    interval: tuple
    grid_error: float

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        a, b = self.interval
        t = (2.0 * np.asarray(x, dtype=float) - (a + b)) / (b - a)
        return npcheb.chebval(t, self.coeffs)


def jackson_kernel(n_max: int) -> np.ndarray:
    """Jackson damping factors ``g_0..g_n``; they make the truncated series positivity preserving."""
    N = n_max + 1
    j = np.arange(N)
    q = np.pi / (N + 1)
    return ((N - j + 1) * np.cos(q * j) + np.sin(q * j) / np.tan(q)) / (N + 1)


def chebyshev_coeffs(f, n_max: int, interval, kernel: str = "none", grid_points: int = GRID_POINTS) -> ChebyshevSeries:
    """Coefficients of ``sum_j c_j T_j`` on ``interval`` from Chebyshev-Gauss quadrature at ``max(4 n_max, 4)`` nodes."""
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    a, b = map(float, interval)
    N = max(4 * n_max, 4)
    theta = np.pi * (np.arange(N) + 0.5) / N
    x = (a + b) / 2.0 + (b - a) / 2.0 * np.cos(theta)
    c = scipy.fft.dct(np.asarray(f(x), dtype=float), type=2) / N
    c[0] /= 2.0
    c = c[: n_max + 1]
    if kernel == "jackson":
        c = c * jackson_kernel(n_max)
    elif kernel != "none":
        raise ValueError(f"unknown kernel {kernel!r}")
    grid = np.linspace(a, b, grid_points)
    if hasattr(f, "breakpoints"):
        grid = np.union1d(grid, [p for p in f.breakpoints if a <= p <= b])
    series = ChebyshevSeries(c, (a, b), 0.0)
    err = float(np.max(np.abs(series(grid) - np.asarray(f(grid), dtype=float))))
    return ChebyshevSeries(c, (a, b), err)


# --- constants ---------------------------------------------------------------

def zeta_iods() -> float:
    return 1.0 / (2.0 + math.e)


def zeta_bethe() -> float:
    return 2.0 * math.e / (1.0 + 2.0 * math.e)


def gamma_k(k: int, C: float) -> float:
    """``2 sqrt(log(k-1)) 2^(3/2) (2 sqrt(k-1) + C) c_b``."""
    if k < 3 or not C > 0:
        raise ValueError("need k >= 3 and C > 0")
    return 2.0 * math.sqrt(math.log(k - 1)) * 2**1.5 * (2.0 * math.sqrt(k - 1) + C) * C_B


def k0(K_dC: float) -> float:
    return 2.0 * (2.0 + math.e) * max(2.0, K_dC)


def theorem_constants(kind: str, **params) -> float:
    """Named constants: ``c_b``, ``zeta_iods``, ``zeta_bethe``, ``gamma_k`` (k, C), ``K0`` (K_dC)."""
    if kind == "c_b":
        return C_B
    if kind == "zeta_iods":
        return zeta_iods()
    if kind == "zeta_bethe":
        return zeta_bethe()
    if kind == "gamma_k":
        return gamma_k(int(params["k"]), float(params["C"]))
    if kind == "K0":
        return k0(float(params.get("K_dC", 10.0)))
    raise ValueError(f"unknown constant {kind!r}")


def bethe_bound(eps: float, k: int, C: float) -> float:
    """``gamma_k / sqrt(log(1/eps))``."""
    return gamma_k(k, C) / math.sqrt(math.log(1.0 / eps))


def iods_bound(eps: float, K_dC: float) -> float:
    return k0(K_dC) / math.log(1.0 / eps)


def general_bound(eps: float, zeta: float, rho: float, C: float, growth_inverse) -> float:
    """General modulus ``2^(3/2)(rho+C) c_b / sqrt(gamma^-1(eps^-zeta)) + eps^(1-zeta)``."""
    return 2**1.5 * (rho + C) * C_B / math.sqrt(growth_inverse(eps ** (-zeta))) + eps ** (1 - zeta)


def eta_schedule(eps: float, zeta: float, rho: float, C: float, L_f: float, growth_inverse) -> float:
    """Accuracy schedule used in the proof of the general modulus (reported only)."""
    return 2**1.5 * (rho + C) * C_B * L_f / math.sqrt(growth_inverse(eps ** (-zeta)))
