import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dosom import dos
from dosom.approx import LipschitzTestFunction, zeta_iods
from dosom.graphs import GraphFamily, build_ball
from dosom.potentials import (GOLDEN, Explicit, QuasiPeriodic, RandomIID, SingleSiteMeasure,
                              sample_random_potential)

Z1, B3 = GraphFamily.lattice(1), GraphFamily.bethe(3)
ONE = LipschitzTestFunction.constant(1.0)


def test_moment_backend_examples():
    g = build_ball(Z1, dos.moment_radius(10, 8))
    V = np.zeros(g.vertex_count)
    assert dos.local_dos_moment(g, V, 10, ONE, 8).value == pytest.approx(1.0, abs=1e-12)
    assert dos.local_dos_moment(g, V, 10, lambda x: x, 8).value == pytest.approx(0.0, abs=1e-12)
    assert dos.local_dos_moment(g, V, 10, lambda x: x**2, 8).value == pytest.approx(2.0, abs=1e-10)
    b = build_ball(B3, dos.moment_radius(3, 4))
    assert dos.local_dos_moment(b, np.zeros(b.vertex_count), 3, lambda x: x**2, 4).value == pytest.approx(3.0, abs=1e-10)


def test_moment_backend_radius_check():
    g = build_ball(Z1, 12)
    with pytest.raises(dos.InsufficientRadiusError):
        dos.local_dos_moment(g, np.zeros(g.vertex_count), 10, ONE, 8)


def test_eig_backend_examples():
    g0 = build_ball(Z1, 0)
    m = dos.local_dos_eig(g0, np.array([0.4]), 0)
    assert m.positions.tolist() == [0.4] and m.weights.tolist() == [1.0]
    g = build_ball(Z1, 5)
    m = dos.local_dos_eig(g, np.zeros(g.vertex_count), 1)
    assert np.allclose(m.positions, [-math.sqrt(2), 0, math.sqrt(2)])
    assert np.allclose(m.weights, 1 / 3)


def test_ambient_vs_finite_volume_resolvent_gap():
    f = LipschitzTestFunction.from_callable(lambda t: t / (t * t + 1), (-4, 4), 800)
    gaps = []
    for L in (50, 100):
        g = build_ball(Z1, 2 * L)
        V = np.full(g.vertex_count, 0.5)
        fv = dos.local_dos_eig(g, V, L, dos.FINITE_VOLUME).integrate(f)
        amb = dos.local_dos_eig(g, V, L, dos.AMBIENT).integrate(f)
        gaps.append(abs(fv - amb))
    assert gaps[0] < 0.01
    assert gaps[1] == pytest.approx(gaps[0] / 2, rel=0.25)


def test_moment_and_ambient_backends_agree_for_polynomials():
    rng = np.random.default_rng(0)
    g = build_ball(B3, 8)
    V = rng.uniform(-1, 1, g.vertex_count)
    p = lambda x: x**4 - 2 * x**2 + 0.5 * x
    mom = dos.local_dos_moment(g, V, 3, p, 6).value
    H = dos.assemble(g, V).dense()
    tr = dos.projected_trace(H, p, np.arange(g.count_within(3))) / g.count_within(3)
    assert mom == pytest.approx(tr, rel=1e-10)


def test_dos_measure_invariants():
    rng = np.random.default_rng(1)
    g = build_ball(GraphFamily.lattice(2), 6)
    V = rng.uniform(-1, 1, g.vertex_count)
    for mode in (dos.FINITE_VOLUME, dos.AMBIENT):
        m = dos.local_dos_eig(g, V, 4, mode)
        assert m.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(m.weights >= 0)
        lo = np.min(V) - 4
        hi = np.max(V) + 4
        assert lo <= m.positions.min() and m.positions.max() <= hi


def test_rank_one_lipschitz():
    rng = np.random.default_rng(2)
    for fam, M, L in ((Z1, 30, 10), (B3, 4, 2), (GraphFamily.lattice(2), 6, 3)):
        g = build_ball(fam, M)
        A = dos.assemble(g, np.zeros(g.vertex_count)).dense()
        sites = np.arange(g.count_within(L))
        for _ in range(20):
            V = rng.uniform(-1, 1, g.vertex_count)
            z = int(rng.integers(g.vertex_count))
            l1, l2 = rng.uniform(-1, 1, 2)
            xs = np.sort(rng.uniform(-5, 5, 6))
            f = LipschitzTestFunction(tuple(xs), tuple(rng.uniform(-1, 1, 6)))
            H1 = A + np.diag(V)
            H2 = H1.copy()
            H1[z, z] += l1
            H2[z, z] += l2
            d = abs(dos.projected_trace(H1, f, sites) - dos.projected_trace(H2, f, sites))
            assert d <= f.lipschitz * abs(l1 - l2) + 1e-9


def test_finite_volume_potential_lipschitz():
    rng = np.random.default_rng(3)
    g = build_ball(Z1, 40)
    f = LipschitzTestFunction.hat(0.2, 0.7)
    for _ in range(10):
        V = rng.uniform(-1, 1, g.vertex_count)
        W = V + rng.uniform(-0.1, 0.1, g.vertex_count)
        a = dos.local_dos_eig(g, V, 40).integrate(f)
        b = dos.local_dos_eig(g, W, 40).integrate(f)
        assert abs(a - b) <= f.lipschitz * np.max(np.abs(V - W)) + 1e-12


def test_moment_backend_ignores_far_potential():
    rng = np.random.default_rng(4)
    L, n = 3, 10
    g = build_ball(B3, dos.moment_radius(L, n) + 2)
    V = rng.uniform(-1, 1, g.vertex_count)
    W = np.where(g.dist_to_root <= L + (n + 1) // 2, V, rng.uniform(-1, 1, g.vertex_count))
    f = LipschitzTestFunction.hat(0.0, 1.0)
    interval = (-4.0, 4.0)
    a = dos.local_dos_moment(g, V, L, f, n, interval).value
    b = dos.local_dos_moment(g, W, L, f, n, interval).value
    assert a == pytest.approx(b, rel=1e-10, abs=1e-14)


def test_iods_bracket_examples():
    g = build_ball(Z1, 300)
    V = np.zeros(g.vertex_count)
    m = dos.local_dos_eig(g, V, 300)
    low = dos.iods_bracket(g, V, 300, -3.0, 0.01, zeta_iods(), measure=m)
    assert low.upper <= 1e-10
    high = dos.iods_bracket(g, V, 300, 3.0, 0.01, zeta_iods(), measure=m)
    assert high.contains(1.0)
    mid = dos.iods_bracket(g, V, 300, 0.0, 0.01, zeta_iods(), measure=m)
    assert mid.contains(0.5)
    assert mid.contains(dos.free_ids_z1(0.0))
    assert mid.width < 0.5


def test_iods_bracket_contains_eigencount():
    rng = np.random.default_rng(5)
    g = build_ball(Z1, 100)
    V = rng.uniform(-1, 1, g.vertex_count)
    m = dos.local_dos_eig(g, V, 100)
    for E in np.linspace(-3, 3, 25):
        b = dos.iods_bracket(g, V, 100, E, 0.05, zeta_iods(), measure=m)
        assert b.contains(float(m.cdf(E)))


def test_iods_bracket_moment_backend():
    g = build_ball(B3, dos.moment_radius(3, 16))
    V = np.zeros(g.vertex_count)
    b = dos.iods_bracket(g, V, 3, 0.0, 0.1, zeta_iods(), backend=dos.MOMENT_EXACT, n_max=16)
    assert 0 <= b.lower <= b.upper <= 1
    # the free Bethe spectrum is symmetric, so the IDS at 0 is 1/2
    assert b.contains(0.5)


def test_dosom_estimate_free_tail_vanishes():
    f = LipschitzTestFunction((2.2, 2.5), (0.0, 1.0))   # zero on the free spectrum [-2, 2]
    zero = RandomIID(SingleSiteMeasure.point_mass(0.0), 0)
    rep = dos.dosom_estimate(Z1, zero, f, [25, 50, 100, 200])
    assert rep.tail_max == 0.0
    assert rep.label == "estimate of DOSoM"


def test_dosom_estimate_spectral_gap():
    f = LipschitzTestFunction.hat(50.0, 5.0)
    spec = RandomIID(SingleSiteMeasure.bernoulli(0.5, 0.0, 100.0), 3)
    rep = dos.dosom_estimate(Z1, spec, f, [25, 50, 100], roots=[(0,), (7,)])
    assert rep.tail_max == 0.0
    assert len(rep.per_root[0]) == 2


def test_dosom_estimate_same_spec_same_report_and_label():
    spec = QuasiPeriodic((GOLDEN,), (0.0,))
    f = LipschitzTestFunction.hat(0.0, 1.0)
    r1 = dos.dosom_estimate(Z1, spec, f, [10, 20], roots=[(0,), (3,)])
    r2 = dos.dosom_estimate(Z1, spec, f, [10, 20], roots=[(0,), (3,)])
    assert r1.to_dict() == r2.to_dict()
    assert r1.label == "lower estimate of DOSoM"


def test_dos_estimate_json():
    g = build_ball(Z1, 10)
    est = dos.dos_value(g, np.zeros(g.vertex_count), 5, ONE, dos.FINITE_VOLUME)
    assert '"backend": "FiniteVolumeEig"' in est.to_json()
    assert est.value == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.floats(-0.9, 0.9), st.floats(0.1, 2.0))
def test_dos_functional_monotone_and_normalized(seed, c, w):
    g = build_ball(Z1, 30)
    V = sample_random_potential(g, SingleSiteMeasure.uniform(-1, 1), seed)
    small = LipschitzTestFunction.hat(c, w)
    big = LipschitzTestFunction.hat(c, w, height=2.0)
    m = dos.local_dos_eig(g, V, 30)
    assert 0 <= m.integrate(small) <= m.integrate(big) <= 2
    assert m.integrate(ONE) == pytest.approx(1.0)
