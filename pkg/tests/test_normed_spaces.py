import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hoalm.normed_spaces import (
    NormedSpaceSpec, PowerPair, dual_norm, duality_map, holder_conjugate, inverse_duality_map, norm,
)
from reference_oracles import power_norm

EUC = NormedSpaceSpec.euclidean
POW = NormedSpaceSpec.coordinate_power


def test_norm_examples():
    assert norm(EUC(2), [3.0, 4.0]) == pytest.approx(5.0, abs=1e-15)
    assert norm(POW(2, 3.0), [1.0, 1.0]) == pytest.approx(2 ** (1 / 3), rel=1e-15)
    assert norm(POW(3, 1.5), np.zeros(3)) == 0.0
    assert norm(EUC(4), np.zeros(4)) == 0.0


def test_dual_norm_examples():
    assert dual_norm(EUC(2), [3.0, 4.0]) == pytest.approx(5.0)
    assert dual_norm(POW(2, 3.0), [1.0, 1.0]) == pytest.approx(2 ** (2 / 3), rel=1e-14)
    v = np.array([0.3, -1.2, 2.0])
    assert dual_norm(POW(3, 2.0), v) == pytest.approx(norm(POW(3, 2.0), v), rel=1e-15)


def test_dimension_mismatch():
    for f in (norm, dual_norm):
        with pytest.raises(ValueError):
            f(EUC(3), [1.0, 2.0])
    with pytest.raises(ValueError):
        duality_map(EUC(3), [1.0, 2.0], 2.0)
    with pytest.raises(ValueError):
        inverse_duality_map(POW(2, 3.0), [1.0], 2.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        NormedSpaceSpec(0)
    with pytest.raises(ValueError):
        POW(2, 1.0)
    with pytest.raises(ValueError):
        NormedSpaceSpec(2, "sup")
    assert POW(4, 3.0).dual().s == pytest.approx(1.5)
    assert EUC(3).dual() == EUC(3)


def test_power_pair():
    pp = PowerPair.from_p(3.0)
    assert pp.p_star == pytest.approx(1.5)
    with pytest.raises(ValueError):
        PowerPair(3.0, 2.0)
    with pytest.raises(ValueError):
        holder_conjugate(1.0)


def test_duality_map_examples():
    np.testing.assert_allclose(duality_map(EUC(2), [0.0, 2.0], 3.0), [0.0, 4.0], rtol=1e-15)
    v = np.array([0.7, -2.0, 1.1])
    np.testing.assert_allclose(duality_map(EUC(3), v, 2.0), v, rtol=1e-15)
    np.testing.assert_allclose(duality_map(POW(2, 3.0), [1.0, 1.0], 3.0), [1.0, 1.0], rtol=1e-14)
    np.testing.assert_array_equal(duality_map(POW(3, 1.5), np.zeros(3), 2.5), np.zeros(3))


def test_duality_map_closed_form_power_norm():
    # component i: ||v||_s^{p-s} sign(v_i) |v_i|^{s-1}
    rng = np.random.default_rng(3)
    for s, p in [(3.0, 2.0), (1.5, 4.0), (2.5, 1.5)]:
        v = rng.standard_normal(6)
        expect = power_norm(v, s) ** (p - s) * np.sign(v) * np.abs(v) ** (s - 1)
        np.testing.assert_allclose(duality_map(POW(6, s), v, p), expect, rtol=1e-13)


def test_inverse_duality_map_examples():
    np.testing.assert_allclose(inverse_duality_map(EUC(2), [0.0, 4.0], 3.0), [0.0, 2.0], rtol=1e-15)
    np.testing.assert_array_equal(inverse_duality_map(POW(2, 3.0), np.zeros(2), 2.5), np.zeros(2))
    rng = np.random.default_rng(11)
    w = rng.standard_normal(5)
    sp = POW(5, 3.0)
    back = duality_map(sp, inverse_duality_map(sp, w, 2.5), 2.5)
    np.testing.assert_allclose(back, w, rtol=1e-10)


def _spaces(dim):
    return [EUC(dim), POW(dim, 3.0), POW(dim, 1.5)]


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.0])
def test_pairing_and_dual_norm_identities(p):
    rng = np.random.default_rng(int(10 * p))
    for sp in _spaces(7):
        v = rng.standard_normal(7)
        J = duality_map(sp, v, p)
        assert J @ v == pytest.approx(norm(sp, v) ** p, rel=1e-12)
        assert dual_norm(sp, J) == pytest.approx(norm(sp, v) ** (p - 1), rel=1e-12)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.0])
def test_generalized_cauchy_schwarz(p):
    rng = np.random.default_rng(int(7 * p))
    for sp in _spaces(5):
        for _ in range(50):
            v, w = rng.standard_normal(5), rng.standard_normal(5)
            lhs = duality_map(sp, v, p) @ w
            assert lhs <= norm(sp, v) ** (p - 1) * norm(sp, w) + 1e-12


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.0])
def test_duality_map_matches_finite_differences(p):
    rng = np.random.default_rng(5)
    h = 1e-6
    for sp in _spaces(4):
        v = rng.uniform(0.2, 1.5, 4) * rng.choice([-1.0, 1.0], 4)
        f = lambda x: norm(sp, x) ** p / p
        fd = np.array([(f(v + h * e) - f(v - h * e)) / (2 * h) for e in np.eye(4)])
        J = duality_map(sp, v, p)
        assert np.max(np.abs(fd - J)) <= 1e-6 * (1 + np.max(np.abs(J)))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 16), st.sampled_from([1.5, 2.0, 3.0, 4.0]), st.sampled_from([None, 1.5, 3.0, 4.0]),
       st.integers(0, 2 ** 31), st.floats(0.01, 100.0))
def test_homogeneity(dim, p, s, seed, t):
    sp = EUC(dim) if s is None else POW(dim, s)
    v = np.random.default_rng(seed).standard_normal(dim)
    np.testing.assert_allclose(duality_map(sp, t * v, p), t ** (p - 1) * duality_map(sp, v, p),
                               rtol=1e-13, atol=0)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 16), st.sampled_from([1.5, 2.0, 3.0, 4.0]), st.sampled_from([None, 1.2, 1.5, 3.0, 6.0]),
       st.integers(0, 2 ** 31))
def test_round_trip_property(dim, p, s, seed):
    sp = EUC(dim) if s is None else POW(dim, s)
    v = np.random.default_rng(seed).standard_normal(dim)
    back = inverse_duality_map(sp, duality_map(sp, v, p), p)
    assert np.linalg.norm(back - v) <= 1e-10 * np.linalg.norm(v)
