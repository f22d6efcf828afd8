import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dosom.eigensolvers import ConvergenceError, householder_ql, householder_tridiagonalize, jacobi_eigh, tridiagonal_ql
from dosom.graphs import GraphFamily, build_ball
from dosom.operators import (CapExceededError, IntervalError, assemble, chebyshev_moments, default_interval, eig,
                             finite_range_check, matvec, power_moments, restrict, spectral_bound)
from dosom.oracles import closed_walks_count

Z1, Z2, B3 = GraphFamily.lattice(1), GraphFamily.lattice(2), GraphFamily.bethe(3)


def test_assemble_examples():
    g = build_ball(Z1, 1)
    H = assemble(g, np.zeros(3)).dense()
    assert np.array_equal(np.diag(H), np.zeros(3))
    assert H.sum() == 4 and np.array_equal(H, H.T)
    star = assemble(build_ball(B3, 1), np.zeros(4)).dense()
    assert star[0].tolist() == [0, 1, 1, 1]
    assert star[1:, 1:].sum() == 0


def test_constant_shift_spectrum():
    g = build_ball(Z1, 20)
    w0 = eig(assemble(g, np.zeros(g.vertex_count))).eigenvalues
    w1 = eig(assemble(g, np.full(g.vertex_count, 0.7))).eigenvalues
    assert np.allclose(w1, w0 + 0.7, atol=1e-13)


def test_matvec_examples():
    g = build_ball(Z1, 10)
    H = assemble(g, np.zeros(g.vertex_count))
    assert np.array_equal(matvec(H, np.zeros(g.vertex_count)), np.zeros(g.vertex_count))
    e = np.zeros(g.vertex_count)
    e[0] = 1
    out = matvec(H, e)
    assert set(np.flatnonzero(out)) == {g.index_of((1,)), g.index_of((-1,))}
    g2 = build_ball(Z2, 4)
    rng = np.random.default_rng(0)
    H2 = assemble(g2, rng.uniform(-1, 1, g2.vertex_count))
    v = rng.normal(size=g2.vertex_count)
    assert np.max(np.abs(matvec(H2, v) - H2.dense() @ v)) <= 1e-14


def test_eig_examples():
    g = build_ball(Z1, 1)
    w = eig(assemble(g, np.zeros(3))).eigenvalues
    assert np.allclose(w, [-np.sqrt(2), 0, np.sqrt(2)])
    single = build_ball(Z1, 0)
    assert eig(assemble(single, np.array([0.37]))).eigenvalues.tolist() == [0.37]


@pytest.mark.parametrize("backend", ["lapack", "householder_ql"])
def test_eig_residuals(backend):
    g = build_ball(Z2, 9)   # 181 vertices
    rng = np.random.default_rng(1)
    H = assemble(g, rng.uniform(-1, 1, g.vertex_count))
    sd = eig(H, want_vectors=True, backend=backend)
    A = H.dense()
    res = np.linalg.norm(A @ sd.eigenvectors - sd.eigenvectors * sd.eigenvalues, axis=0)
    assert res.max() <= 1e-8
    assert np.all(np.diff(sd.eigenvalues) >= 0)


def test_tridiagonal_backend_matches_lapack():
    g = build_ball(Z1, 60)
    rng = np.random.default_rng(2)
    H = assemble(g, rng.uniform(-1, 1, g.vertex_count))
    a = eig(H, want_vectors=True, backend="lapack")
    b = eig(H, want_vectors=True, backend="tridiagonal")
    assert np.allclose(a.eigenvalues, b.eigenvalues, atol=1e-12)
    A = H.dense()
    assert np.linalg.norm(A @ b.eigenvectors - b.eigenvectors * b.eigenvalues) < 1e-10
    with pytest.raises(ValueError):
        eig(assemble(build_ball(B3, 2), np.zeros(10)), backend="tridiagonal")


def test_eig_cap():
    g = build_ball(Z2, 10)
    with pytest.raises(CapExceededError):
        eig(assemble(g, np.zeros(g.vertex_count)), cap=100)


def test_dense_oracle_agreement():
    rng = np.random.default_rng(3)
    for fam, M in ((Z1, 20), (Z2, 4), (B3, 3)):
        g = build_ball(fam, M)
        A = assemble(g, rng.uniform(-1, 1, g.vertex_count)).dense()
        ref, _ = jacobi_eigh(A, tol=1e-12)
        w, _ = householder_ql(A, want_vectors=False)
        assert np.max(np.abs(np.sort(ref) - w)) <= 1e-8
        assert np.max(np.abs(np.linalg.eigvalsh(A) - w)) <= 1e-8


def test_householder_tridiagonalization():
    rng = np.random.default_rng(4)
    A = rng.normal(size=(30, 30))
    A = A + A.T
    d, e, Q = householder_tridiagonalize(A, want_q=True)
    T = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    assert np.allclose(Q @ T @ Q.T, A, atol=1e-12)
    assert np.allclose(Q.T @ Q, np.eye(30), atol=1e-12)


def test_ql_sweep_budget():
    d = np.array([1.0, 2.0, 3.0, 4.0])
    e = np.array([1.0, 1.0, 1.0])
    with pytest.raises(ConvergenceError):
        tridiagonal_ql(d, e, max_sweeps=0)


def test_restrict_examples():
    g = build_ball(Z1, 5)
    H = assemble(g, np.zeros(g.vertex_count))
    assert restrict(H, 5) is H
    H2 = restrict(H, 2)
    assert H2.n == 5
    assert np.allclose(np.linalg.eigvalsh(H2.dense()), 2 * np.cos(np.arange(1, 6) * np.pi / 6)[::-1])
    b = build_ball(B3, 4)
    assert restrict(assemble(b, np.zeros(b.vertex_count)), 2).n == 10


def test_restriction_within_gershgorin():
    rng = np.random.default_rng(5)
    g = build_ball(Z2, 8)
    H = assemble(g, rng.uniform(-1, 1, g.vertex_count))
    lo, hi = H.gershgorin()
    w = eig(restrict(H, 5)).eigenvalues
    assert lo <= w.min() and w.max() <= hi


def test_weyl_perturbation():
    rng = np.random.default_rng(6)
    g = build_ball(Z2, 7)
    for _ in range(10):
        V = rng.uniform(-1, 1, g.vertex_count)
        W = V + rng.uniform(-0.3, 0.3, g.vertex_count)
        a = eig(assemble(g, V)).eigenvalues
        b = eig(assemble(g, W)).eigenvalues
        assert np.max(np.abs(a - b)) <= np.max(np.abs(V - W)) + 1e-12


def test_chebyshev_moment_examples():
    g = build_ball(Z1, 50)
    H = assemble(g, np.zeros(g.vertex_count))
    t = chebyshev_moments(H, [0], 4, (-2.0, 2.0), power_max=2)
    assert t.chebyshev[0, 1] == pytest.approx(0.0, abs=1e-15)
    assert t.power[0, 2] == 2
    b = build_ball(B3, 4)
    tb = chebyshev_moments(assemble(b, np.zeros(b.vertex_count)), [0, 1], 2, default_interval(2 * np.sqrt(2), 0),
                           power_max=2)
    assert tb.power[:, 2].tolist() == [3, 3]


def test_chebyshev_moments_match_eigendecomposition():
    rng = np.random.default_rng(7)
    g = build_ball(B3, 4)
    H = assemble(g, rng.uniform(-1, 1, g.vertex_count))
    a, b = default_interval(g.family.spectral_radius, 1.0)
    t = chebyshev_moments(H, np.arange(g.vertex_count), 12, (a, b))
    w, Z = np.linalg.eigh(H.dense())
    x = (2 * w - (a + b)) / (b - a)
    T = np.cos(np.arange(13)[:, None] * np.arccos(np.clip(x, -1, 1))[None, :])
    ref = (Z**2) @ T.T
    assert np.allclose(t.chebyshev, ref, atol=1e-11)


def test_power_moments_count_closed_walks():
    for fam, M in ((Z2, 6), (B3, 5), (GraphFamily.hexagonal(), 6)):
        g = build_ball(fam, M)
        H = assemble(g, np.zeros(g.vertex_count))
        pm = power_moments(H, [0, 1], 8)
        adj = g.adjacency
        for j in range(9):
            assert pm[0, j] == closed_walks_count(adj, 0, j)
            assert pm[1, j] == closed_walks_count(adj, 1, j)
    with pytest.raises(ValueError):
        power_moments(H, [0], 31)


def test_interval_check():
    g = build_ball(Z1, 10)
    H = assemble(g, np.full(g.vertex_count, 0.5))
    with pytest.raises(IntervalError):
        chebyshev_moments(H, [0], 4, (-2.0, 2.0))
    with pytest.raises(IntervalError):
        chebyshev_moments(H, [0], 4, (1.0, 1.0))
    chebyshev_moments(H, [0], 4, (-1.5, 2.5))
    lo, hi = spectral_bound(H)
    w = eig(H).eigenvalues
    assert lo <= w.min() and w.max() <= hi


def test_finite_range_check_examples():
    rng = np.random.default_rng(8)
    g = build_ball(Z1, 12)
    V = rng.uniform(-1, 1, g.vertex_count)
    W = rng.uniform(-1, 1, g.vertex_count)
    assert finite_range_check(g, V, V, 0, 5, 6)
    assert finite_range_check(g, V, W, 0, 5, 6)
    b = build_ball(B3, 6)
    assert finite_range_check(b, rng.uniform(-1, 1, b.vertex_count), rng.uniform(-1, 1, b.vertex_count), 0, 3, 4)
    x = g.index_of((2,))
    assert finite_range_check(g, V, W, x, 3, 6)


def test_locality_is_sharp():
    # a change at distance 2 from the edge of Lambda_5 is seen by degree-6 traces
    g = build_ball(Z1, 12)
    V = np.zeros(g.vertex_count)
    W = V.copy()
    W[g.index_of((7,))] = 1.0
    from dosom.operators import _trace_power
    sites = np.flatnonzero(g.dist_to_root <= 5)
    assert _trace_power(assemble(g, V), sites, 6) != _trace_power(assemble(g, W), sites, 6)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 4), st.integers(0, 10))
def test_moments_prefix_invariant_under_enlargement(seed, L, j):
    fam = B3
    M = L + (j + 1) // 2 + 1
    rng = np.random.default_rng(seed)
    big = build_ball(fam, M + 2)
    V = rng.uniform(-1, 1, big.vertex_count)
    small = big.sub_ball(M)
    interval = default_interval(fam.spectral_radius, 1.0)
    sites = np.arange(big.count_within(L))
    a = chebyshev_moments(assemble(small, V[: small.vertex_count]), sites, j, interval).chebyshev
    b = chebyshev_moments(assemble(big, V), sites, j, interval).chebyshev
    assert np.allclose(a, b, rtol=1e-10, atol=1e-12)
