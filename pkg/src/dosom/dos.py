"""Finite-volume density-of-states functionals.

Three backends:

* ``MomentExact``: per-site Chebyshev moments on an ambient ball of radius at
  least ``L + ceil(n/2) + 1``.  By locality, polynomial functionals of degree
  ``<= n`` equal their infinite-volume values exactly.
* ``FiniteVolumeEig``: eigenvalues of the restriction to ``Lambda_L``.
* ``AmbientEig``: eigenpairs of the ambient ball weighted by ``||P_L psi||^2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import approx
from .graphs import GraphFamily, RootedBallGraph, build_ball
from .measures import DiscreteMeasure
from .operators import assemble, chebyshev_moments, default_interval, eig, restrict
from .potentials import Explicit, QuasiPeriodic, Scaled, eval_potential, shifted_root_spec

MOMENT_EXACT = "MomentExact"
FINITE_VOLUME = "FiniteVolumeEig"
AMBIENT = "AmbientEig"
BACKENDS = (MOMENT_EXACT, FINITE_VOLUME, AMBIENT)


class InsufficientRadiusError(ValueError):
    """Ambient ball too small for the locality guarantee."""


@dataclass
class DosEstimate:
    family: str
    L: int
    M: int
    root: int
    backend: str
    f: str
    value: float | None = None
    measure: DiscreteMeasure | None = None
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "measure"}
        d["measure"] = None if self.measure is None else self.measure.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class IodsBracket:
    E: float
    lower: float
    upper: float
    eps: float
    zeta: float
    backend: str = FINITE_VOLUME

    def __post_init__(self):
        if self.lower > self.upper + 1e-10:
            raise ValueError(f"bracket lower {self.lower} exceeds upper {self.upper}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, tol: float = 1e-10) -> bool:
        return self.lower - tol <= value <= self.upper + tol

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def moment_radius(L: int, n_max: int) -> int:
    """Ambient radius needed by the moment backend: ``L + ceil(n/2) + 1``."""
    return L + (n_max + 1) // 2 + 1


def _interval_for(g: RootedBallGraph, V, interval) -> tuple[float, float]:
    if interval is not None:
        return tuple(map(float, interval))
    C = float(np.max(np.abs(V))) if len(V) else 0.0
    return default_interval(g.family.spectral_radius, C)


def site_average_moments(g: RootedBallGraph, V, L: int, n_max: int, interval=None) -> tuple[np.ndarray, tuple]:
    """Chebyshev moments averaged over ``Lambda_L``, after checking the locality radius."""
    need = moment_radius(L, n_max)
    if g.radius < need:
        raise InsufficientRadiusError(f"ambient radius {g.radius} < L + ceil(n/2) + 1 = {need}")
    V = np.asarray(V, dtype=float)
    interval = _interval_for(g, V, interval)
    H = assemble(g, V)
    table = chebyshev_moments(H, np.arange(g.count_within(L)), n_max, interval)
    return table.chebyshev.mean(axis=0), interval


def functional_from_moments(avg_mu: np.ndarray, f, interval, kernel: str = "none") -> tuple[float, float]:
    """``sum_j c_j mu_j`` for the Chebyshev coefficients of ``f``; also returns the series grid error."""
    series = approx.chebyshev_coeffs(f, len(avg_mu) - 1, interval, kernel=kernel)
    return float(series.coeffs @ avg_mu), series.grid_error


def _describe(f) -> str:
    if hasattr(f, "describe"):
        return f.describe()
    return getattr(f, "__name__", "callable")


def local_dos_moment(g: RootedBallGraph, V, L: int, f, n_max: int, interval=None,
                     kernel: str = "none") -> DosEstimate:
    avg, interval = site_average_moments(g, V, L, n_max, interval)
    value, err = functional_from_moments(avg, f, interval, kernel)
    return DosEstimate(g.family.label, L, g.radius, g.root, MOMENT_EXACT, _describe(f), value,
                       extra={"n_max": n_max, "interval": list(interval), "series_grid_error": err,
                              "kernel": kernel})


def local_dos_eig(g: RootedBallGraph, V, L: int, mode: str = FINITE_VOLUME,
                  eig_backend: str = "auto") -> DiscreteMeasure:
    """Finite-volume DOS measure on ``Lambda_L``.

    ``FiniteVolumeEig``: eigenvalues of the restriction, weight ``1/|Lambda_L|`` each.
    ``AmbientEig``: eigenvalues of the whole ball, weight ``||P_L psi||^2 / |Lambda_L|``.
    """
    H = assemble(g, np.asarray(V, dtype=float))
    nL = g.count_within(L)
    if mode == FINITE_VOLUME:
        HL = restrict(H, L)
        sd = eig(HL, want_vectors=False, backend=_pick(HL, eig_backend))
        return DiscreteMeasure.from_atoms(sd.eigenvalues, np.full(nL, 1.0 / nL), normalize=True)
    if mode == AMBIENT:
        sd = eig(H, want_vectors=True, backend=_pick(H, eig_backend))
        w = np.sum(sd.eigenvectors[:nL, :] ** 2, axis=0) / nL
        return DiscreteMeasure.from_atoms(sd.eigenvalues, w, normalize=True)
    raise ValueError(f"unknown mode {mode!r}")


def _pick(H, backend: str) -> str:
    if backend != "auto":
        return backend
    fam = H.graph.family
    if fam.kind == "lattice" and fam.d == 1 and H.n > 400:
        return "tridiagonal"
    return "lapack"


def dos_value(g: RootedBallGraph, V, L: int, f, backend: str, n_max: int | None = None,
              interval=None, kernel: str = "none") -> DosEstimate:
    if backend == MOMENT_EXACT:
        if n_max is None:
            raise ValueError("moment backend needs n_max")
        return local_dos_moment(g, V, L, f, n_max, interval, kernel)
    m = local_dos_eig(g, V, L, backend)
    return DosEstimate(g.family.label, L, g.radius, g.root, backend, _describe(f), m.integrate(f), m)


def projected_trace(H_dense: np.ndarray, f, sites) -> float:
    """``Tr(P f(H) P)`` with ``P`` the projection onto ``sites``."""
    w, Z = np.linalg.eigh(H_dense)
    weights = np.sum(Z[np.asarray(sites), :] ** 2, axis=0)
    return float(np.dot(weights, f(w)))


# --- DOSoM over radii and roots ------------------------------------------------------

@dataclass
class DosomReport:
    family: str
    backend: str
    f: str
    L_list: list
    values: list            # max over roots, per L
    per_root: list          # per L, list over roots
    tail_max: float
    label: str

    def to_dict(self) -> dict:
        return asdict(self)


def _is_lower_estimate(spec) -> bool:
    if isinstance(spec, Scaled):
        return _is_lower_estimate(spec.inner)
    return isinstance(spec, (Explicit, QuasiPeriodic))


def dosom_estimate(family: GraphFamily, spec, f, L_list, roots=None, backend: str = FINITE_VOLUME,
                   n_max: int | None = None, ambient_factor: int = 2, interval=None,
                   kernel: str = "none") -> DosomReport:
    """Tail maximum over ``L_list`` of the max over roots of the local functional.

    ``roots`` is a list of lattice shifts (tuples) or root indices; shifts are
    realised by re-centring the potential spec (phase shift for quasi-periodic
    potentials, an independent stream for random ones).  Explicit potentials only
    support the root.
    """
    L_list = [int(L) for L in L_list]
    if any(b <= a for a, b in zip(L_list, L_list[1:])):
        raise ValueError("L_list must be increasing")
    roots = roots if roots is not None else [None]
    if backend == MOMENT_EXACT:
        if n_max is None:
            raise ValueError("moment backend needs n_max")
        M_of = lambda L: moment_radius(L, n_max)
    elif backend == AMBIENT:
        M_of = lambda L: ambient_factor * L
    else:
        M_of = lambda L: L
    values, per_root = [], []
    for L in L_list:
        g = build_ball(family, M_of(L))
        vals = []
        for r_index, shift in enumerate(roots):
            s = spec
            if shift is not None:
                if isinstance(spec, Explicit):
                    raise ValueError("explicit potentials cannot be re-centred")
                s = shifted_root_spec(spec, family, shift if isinstance(shift, tuple) else (shift,), r_index)
            V = eval_potential(g, s) if not isinstance(s, Explicit) else np.asarray(s.values)[: g.vertex_count]
            vals.append(dos_value(g, V, L, f, backend, n_max, interval, kernel).value)
        per_root.append(vals)
        values.append(max(vals))
    tail = values[len(values) // 2:]
    label = "lower estimate of DOSoM" if _is_lower_estimate(spec) else "estimate of DOSoM"
    return DosomReport(family.label, backend, _describe(f), L_list, values, per_root, max(tail), label)


def iods_bracket(g: RootedBallGraph, V, L: int, E: float, eps: float, zeta: float,
                 backend: str = FINITE_VOLUME, n_max: int | None = None, interval=None,
                 measure: DiscreteMeasure | None = None) -> IodsBracket:
    """``[n(f_minus), n(f_plus)]`` clipped to [0, 1]; contains the eigencount CDF for eig backends."""
    V = np.asarray(V, dtype=float)
    dom = _interval_for(g, V, interval)
    f_minus, f_plus = approx.iods_cutoffs(E, eps, zeta, dom)
    if backend in (FINITE_VOLUME, AMBIENT):
        m = measure if measure is not None else local_dos_eig(g, V, L, backend)
        lo, hi = m.integrate(f_minus), m.integrate(f_plus)
    elif backend == MOMENT_EXACT:
        if n_max is None:
            raise ValueError("moment backend needs n_max")
        avg, dom = site_average_moments(g, V, L, n_max, dom)
        lo, _ = functional_from_moments(avg, f_minus, dom, "jackson")
        hi, _ = functional_from_moments(avg, f_plus, dom, "jackson")
    else:
        raise ValueError(f"unknown backend {backend!r}")
    lo, hi = min(max(lo, 0.0), 1.0), min(max(hi, 0.0), 1.0)
    return IodsBracket(float(E), lo, max(hi, lo), float(eps), float(zeta), backend)


def free_ids_z1(E: float) -> float:
    """Integrated density of states of the free Laplacian on Z."""
    if E <= -2:
        return 0.0
    if E >= 2:
        return 1.0
    return 1.0 - math.acos(E / 2.0) / math.pi
