import numpy as np
import pytest

from hoalm.newton import NewtonConfig, NewtonError
from hoalm.oracles import (
    CallableOracle, PowerSumOracle, QuadraticOracle, bregman, bregman_sym, conjugate_value, fd_check_gradient,
)
from hoalm.problems import ForchheimerOracle, make_finite_neuron, make_location, make_quadratic_fixture


def quad(seed=0, n=5):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return QuadraticOracle(Q @ np.diag(np.linspace(1, 10, n)) @ Q.T, rng.standard_normal(n))


def shipped_oracles():
    return {
        "quadratic": make_quadratic_fixture().oracle,
        "location_s3": make_location(s=3.0).oracle,
        "location_s1.5": make_location(s=1.5).oracle,
        "finite_neuron_s3": make_finite_neuron(s=3.0).oracle,
        "finite_neuron_s1.5": make_finite_neuron(s=1.5).oracle,
        "graph_df": ForchheimerOracle(40, 1.0, 1.0, 1.0, 10.0),
        "power_sum": PowerSumOracle(6, 3.0),
    }


def test_bregman_examples():
    o = QuadraticOracle(np.eye(3))
    v, w = np.array([1.0, 2.0, -1.0]), np.array([0.5, 0.0, 1.0])
    assert bregman(o, v, w) == pytest.approx(0.5 * np.sum((v - w) ** 2), rel=1e-14)
    assert bregman(o, v, v) == 0.0
    assert bregman_sym(o, v, w) == pytest.approx(np.sum((v - w) ** 2), rel=1e-14)
    assert bregman_sym(o, w, w) == 0.0


def test_bregman_recomputation_and_symmetrisation():
    rng = np.random.default_rng(1)
    o = make_location(s=3.0).oracle
    for _ in range(20):
        v, w = rng.uniform(-1, 1, o.dim), rng.uniform(-1, 1, o.dim)
        direct = o.value(v) - o.value(w) - o.gradient(w) @ (v - w)
        assert bregman(o, v, w) == pytest.approx(direct, rel=1e-12)
        total = bregman(o, v, w) + bregman(o, w, v)
        assert bregman_sym(o, v, w) == pytest.approx(total, rel=1e-10)
        assert bregman_sym(o, v, w) == pytest.approx(bregman_sym(o, w, v), rel=1e-14)


def test_dimension_mismatch():
    o = quad()
    with pytest.raises(ValueError):
        bregman(o, np.zeros(5), np.zeros(4))
    with pytest.raises(ValueError):
        bregman_sym(o, np.zeros(3), np.zeros(5))
    with pytest.raises(ValueError):
        fd_check_gradient(o, np.zeros(5), h=0.0)


@pytest.mark.parametrize("name", list(shipped_oracles()))
def test_bregman_nonnegative(name):
    o = shipped_oracles()[name]
    rng = np.random.default_rng(7)
    scale = 0.3 if name.startswith("finite") else 1.0
    worst = min(bregman(o, scale * rng.uniform(-1, 1, o.dim), scale * rng.uniform(-1, 1, o.dim))
                for _ in range(1000))
    assert worst >= -1e-12


def test_fd_check_examples():
    o = quad()
    assert fd_check_gradient(o, np.random.default_rng(2).standard_normal(5), 1e-5) <= 1e-8
    loc = make_location(s=3.0)
    assert fd_check_gradient(loc.oracle, np.full(loc.n_primal, 0.05), 1e-5) <= 1e-6
    fn = make_finite_neuron(s=3.0)
    c = np.random.default_rng(3).uniform(-0.5, 0.5, fn.n_primal)
    assert fd_check_gradient(fn.oracle, c, 1e-5) <= 1e-6


def test_fd_check_detects_wrong_gradient():
    o = CallableOracle(2, lambda x: x @ x, lambda x: x, lambda x: np.eye(2))
    assert fd_check_gradient(o, np.ones(2)) > 0.1


def test_conjugate_quadratic_closed_form():
    o = quad(4)
    rng = np.random.default_rng(4)
    for _ in range(5):
        xi = rng.standard_normal(5)
        val, v = conjugate_value(o, xi)
        assert val == pytest.approx(o.conjugate(xi), rel=1e-9, abs=1e-9)
        np.testing.assert_allclose(v, o.conjugate_argmax(xi), rtol=1e-9, atol=1e-12)


def test_conjugate_inverse_gradient_pair():
    o = make_location(s=3.0).oracle
    v0 = np.random.default_rng(5).uniform(-0.5, 0.5, o.dim)
    cfg = NewtonConfig.strict(1e-12)
    _, v = conjugate_value(o, o.gradient(v0), cfg)
    np.testing.assert_allclose(v, v0, atol=1e-9)


def test_conjugate_one_dimensional_cubic():
    val, v = conjugate_value(PowerSumOracle(1, 3.0), np.array([4.0]), NewtonConfig.strict(1e-13))
    assert v[0] == pytest.approx(2.0, rel=1e-12)
    assert val == pytest.approx(16.0 / 3.0, rel=1e-12)


def test_conjugate_failure_is_explicit():
    # unbounded below: F = exp(x) with xi < 0 has no maximiser
    o = CallableOracle(1, lambda x: np.exp(x[0]), lambda x: np.exp(x), lambda x: np.exp(x)[None])
    with pytest.raises(NewtonError) as err:
        conjugate_value(o, np.array([-1.0]), NewtonConfig(max_iters=30))
    assert np.isfinite(err.value.grad_norm)


def test_conjugate_smoothness_spot_check():
    # D_{F*}(xi + eta, eta) >= ||xi||^2 / (2L) for a quadratic with L = lambda_max(A)
    o = quad(6)
    L = np.linalg.eigvalsh(o.A)[-1]
    rng = np.random.default_rng(6)
    cfg = NewtonConfig.strict(1e-13)
    for _ in range(30):
        xi, eta = rng.standard_normal(5), rng.standard_normal(5)
        fa, _ = conjugate_value(o, xi + eta, cfg)
        fb, vb = conjugate_value(o, eta, cfg)
        # grad F*(eta) is the maximiser
        d = fa - fb - vb @ xi
        assert d >= xi @ xi / (2 * L) - 1e-10


def test_power_sum_hessian_clamped():
    o = PowerSumOracle(3, 1.5)
    H = o.hessian(np.zeros(3))
    assert np.all(np.isfinite(H))
    assert H[0, 0] == pytest.approx(0.5 * 1e-10 ** -0.5)
    np.testing.assert_array_equal(o.gradient(np.zeros(3)), np.zeros(3))


def test_quadratic_oracle_rejects_nonsymmetric():
    with pytest.raises(ValueError):
        QuadraticOracle(np.array([[1.0, 2.0], [0.0, 1.0]]))
