import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dosom.measures import (DiscreteMeasure, bl_certificate_check, d_inf, d_inf_thickening, d_krw, d_krw_cdf,
                            d_krw_quantile, d_w, d_w_lower, hausdorff, meet_join, sandwich_check)
from dosom.oracles import bl_vertex_oracle

D0, D1 = DiscreteMeasure.dirac(0.0), DiscreteMeasure.dirac(1.0)
MU4 = DiscreteMeasure.from_atoms([0.0, 100.0], [0.75, 0.25])


def measures(max_atoms=5, lo=-1.0, hi=1.0):
    return st.lists(st.tuples(st.floats(lo, hi), st.floats(0.05, 1.0)), min_size=1, max_size=max_atoms).map(
        lambda a: DiscreteMeasure.from_atoms([p for p, _ in a], np.array([w for _, w in a]) / sum(w for _, w in a),
                                             (lo, hi), normalize=True))


def test_cdf_quantile_examples():
    assert D0.cdf(-0.5) == 0.0 and D0.cdf(0.0) == 1.0
    assert MU4.quantile(0.8) == 100.0
    assert DiscreteMeasure.from_atoms([0.0, 1.0, 2.0], [1 / 3] * 3).cdf(1.0) == pytest.approx(2 / 3)


def test_construction_rules():
    m = DiscreteMeasure.from_atoms([1.0, 0.0, 1.0], [0.25, 0.5, 0.25])
    assert m.positions.tolist() == [0.0, 1.0] and m.weights.tolist() == [0.5, 0.5]
    with pytest.raises(ValueError):
        DiscreteMeasure.from_atoms([0.0, 1.0], [0.5, 0.6])
    with pytest.raises(ValueError):
        DiscreteMeasure(np.array([1.0, 0.0]), np.array([0.5, 0.5]))
    assert m.mean() == pytest.approx(0.5)
    assert m.shifted(1.0).positions.tolist() == [1.0, 2.0]


def test_d_krw_examples():
    assert d_krw(D0, D1).value == 1.0
    assert d_krw(MU4, D0).value == 25.0
    assert d_krw(MU4, MU4).value == 0.0


def test_d_w_examples():
    assert abs(d_w(D0, D1).value - 2 / 3) <= 1e-9
    assert d_w(MU4, MU4).value == 0.0
    for solver in ("simplex", "highs"):
        assert abs(d_w(D0, D1, solver=solver).value - 2 / 3) <= 1e-9


def test_d_w_matches_vertex_oracle():
    rng = np.random.default_rng(0)
    for _ in range(100):
        x = np.sort(rng.uniform(-1, 1, 3))
        a = DiscreteMeasure.from_atoms(x, rng.dirichlet(np.ones(3)))
        b = DiscreteMeasure.from_atoms(x, rng.dirichlet(np.ones(3)))
        assert abs(d_w(a, b).value - bl_vertex_oracle(x, a.weights - b.weights)) <= 1e-4


def test_vertex_oracle_against_grid_search():
    # coarse exhaustive search over (s, l) and admissible f values at two atoms
    x = np.array([0.0, 0.6])
    delta = np.array([0.3, -0.3])
    best = 0.0
    for s in np.linspace(0, 1, 201):
        l = 1 - s
        for f0 in np.linspace(-s, s, 41):
            for f1 in np.linspace(-s, s, 41):
                if abs(f1 - f0) <= l * 0.6 + 1e-12:
                    best = max(best, f0 * delta[0] + f1 * delta[1])
    assert abs(bl_vertex_oracle(x, delta) - best) <= 1e-2
    assert bl_vertex_oracle(x, delta) >= best - 1e-12


def test_simplex_and_highs_agree_on_larger_supports():
    rng = np.random.default_rng(1)
    for n in (10, 30):
        a = DiscreteMeasure.from_atoms(rng.uniform(-2, 2, n), rng.dirichlet(np.ones(n)))
        b = DiscreteMeasure.from_atoms(rng.uniform(-2, 2, n), rng.dirichlet(np.ones(n)))
        assert d_w(a, b, solver="simplex").value == pytest.approx(d_w(a, b, solver="highs").value, abs=1e-9)


def test_d_w_certificate():
    rng = np.random.default_rng(2)
    a = DiscreteMeasure.from_atoms(rng.uniform(-1, 1, 7), rng.dirichlet(np.ones(7)))
    b = DiscreteMeasure.from_atoms(rng.uniform(-1, 1, 5), rng.dirichlet(np.ones(5)))
    res = d_w(a, b)
    c = res.certificate
    assert c["min_slack"] >= -1e-9
    assert bl_certificate_check(c["x"], c["f"], c["s"], c["l"]) >= -1e-9
    f = lambda t: np.interp(t, c["x"], c["f"])
    assert a.integrate(f) - b.integrate(f) == pytest.approx(res.value, abs=1e-12)


def test_d_w_lower_examples():
    assert d_w_lower(MU4, MU4) == 0.0
    assert d_w_lower(D0, D1, family_size=64) >= 0.6
    rng = np.random.default_rng(3)
    for _ in range(10):
        a = DiscreteMeasure.from_atoms(rng.uniform(-1, 1, 4), rng.dirichlet(np.ones(4)))
        b = DiscreteMeasure.from_atoms(rng.uniform(-1, 1, 4), rng.dirichlet(np.ones(4)))
        assert d_w_lower(a, b) <= d_w(a, b).value + 1e-9


def test_d_inf_examples():
    assert d_inf(D0, D1).value == 1.0
    assert d_inf(MU4, D0).value == 100.0
    assert d_inf(MU4, MU4).value == 0.0


def test_d_inf_matches_thickening_definition():
    rng = np.random.default_rng(4)
    for _ in range(30):
        a = DiscreteMeasure.from_atoms(rng.uniform(-1, 1, 3), rng.dirichlet(np.ones(3)))
        b = DiscreteMeasure.from_atoms(rng.uniform(-1, 1, 3), rng.dirichlet(np.ones(3)))
        assert d_inf(a, b).value == pytest.approx(d_inf_thickening(a, b), abs=1e-9)


def test_hausdorff_examples():
    assert hausdorff([0.0], [1.0]) == 1.0
    A = np.linspace(-2, 2, 401)
    assert hausdorff(A, A) == 0.0
    B = np.concatenate([A, np.linspace(98, 102, 401)])
    # farthest point 102 is 100 away from [-2, 2]; the gap between the pieces is 96
    assert hausdorff(A, B) == pytest.approx(100.0)
    assert B[B > 50].min() - A.max() == pytest.approx(96.0)


def test_meet_join_examples():
    m, j = meet_join(D0, D1)
    assert m.equals(D0) and j.equals(D1)
    assert d_krw(m, j).value == 1.0
    a, b = meet_join(MU4, MU4)
    assert a.equals(MU4) and b.equals(MU4)


def test_sandwich_fuzz():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n1, n2 = rng.integers(1, 6, 2)
        a = DiscreteMeasure.from_atoms(rng.uniform(-1, 1, n1), rng.dirichlet(np.ones(n1)), (-1, 1))
        b = DiscreteMeasure.from_atoms(rng.uniform(-1, 1, n2), rng.dirichlet(np.ones(n2)), (-1, 1))
        assert sandwich_check(a, b, 1.0).passed


def test_serialization(tmp_path):
    m = DiscreteMeasure.from_atoms([0.1, 0.5, 2.0], [0.2, 0.3, 0.5])
    assert DiscreteMeasure.from_dict(m.to_dict()).equals(m)
    p = tmp_path / "m.csv"
    m.to_csv(p)
    assert DiscreteMeasure.from_csv(p).equals(m)


def test_coarsen_error_budget():
    rng = np.random.default_rng(6)
    m = DiscreteMeasure.from_atoms(rng.uniform(-1, 1, 200), np.full(200, 1 / 200))
    w = 1e-2
    c = m.coarsen(w)
    assert len(c) < len(m)
    assert d_krw(m, c).value <= w
    assert d_w(m, c).value <= w


@settings(max_examples=60, deadline=None)
@given(measures(), measures())
def test_metric_properties(a, b):
    for fn in (d_w, d_krw, d_inf):
        assert fn(a, b).value == pytest.approx(fn(b, a).value, abs=1e-9)
        assert fn(a, a).value <= 1e-12
    assert abs(d_krw_quantile(a, b) - d_krw_cdf(a, b)) <= 1e-12
    assert d_w(a, b).value <= d_krw(a, b).value + 1e-9
    assert d_krw(a, b).value <= d_inf(a, b).value + 1e-12
    assert d_krw(a, b).value <= 2 * d_w(a, b).value + 1e-8


@settings(max_examples=40, deadline=None)
@given(measures(), measures(), measures())
def test_triangle_inequality(a, b, c):
    for fn in (d_w, d_krw, d_inf):
        assert fn(a, c).value <= fn(a, b).value + fn(b, c).value + 1e-9


@settings(max_examples=60, deadline=None)
@given(measures(), measures())
def test_meet_join_properties(a, b):
    m, j = meet_join(a, b)
    assert abs(d_krw(a, b).value - d_krw(m, j).value) <= 1e-10
    t = np.union1d(a.positions, b.positions)
    assert np.allclose(np.abs(a.cdf(t) - b.cdf(t)), m.cdf(t) - j.cdf(t), atol=1e-12)
    assert np.allclose(m.cdf(t), np.maximum(a.cdf(t), b.cdf(t)), atol=1e-12)


def test_d_w_near_coincident_atoms():
    # found by hypothesis: a 1e-12 gap stalled the simplex short of the optimum
    a = DiscreteMeasure(np.array([0.0, 0.25, 0.9375]), np.ones(3) / 3, (-1.0, 1.0))
    b = DiscreteMeasure(np.array([1e-12, 1.0]), np.array([0.5, 0.5]), (-1.0, 1.0))
    vals = [d_w(p, q, solver).value for solver in ("simplex", "highs") for p, q in ((a, b), (b, a))]
    assert max(vals) - min(vals) <= 1e-12
    assert d_w(a, b).certificate["f"].size == 5
