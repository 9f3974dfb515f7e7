import json
import math

import numpy as np
import pytest

from hoalm import certificates as cert
from hoalm.alm import AlmConfig, ConstrainedProblem, alm_run
from hoalm.certificates import ConvexityParams, SmoothnessParams
from hoalm.newton import NewtonConfig
from hoalm.normed_spaces import NormedSpaceSpec
from hoalm.oracles import QuadraticOracle
from hoalm.problems import make_graph_df, make_location, make_quadratic_fixture

STRICT = NewtonConfig.strict(1e-13)


# independent re-derivations of the closed-form constants
def gamma_ref(p, mu, eps):
    x = mu / eps
    return p * x ** (1 / (p - 1)) / (p - 1) + x ** (p / (p - 1)) / (p - 1)


def superlinear_ref(p, mu, eps, r):
    return (p - 1) * (p ** (r - p) * eps ** p / mu ** r) ** (1 / (p - 1))


def sublinear_ref(p, mu, eps, r):
    beta = p * (r - 1) / (p - r)
    c = (p / (p - 1)) ** (r * (p - 1) / (p * (r - 1))) * (mu ** (r / p) / eps) ** (1 / (r - 1))
    return beta, c


def test_params_validation():
    with pytest.raises(ValueError):
        ConvexityParams(1.5, 1.0)
    with pytest.raises(ValueError):
        ConvexityParams(2.0, 0.0)
    with pytest.raises(ValueError):
        SmoothnessParams(2.5, 1.0)
    with pytest.raises(ValueError):
        SmoothnessParams(2.0, -1.0)


def test_gamma_examples():
    assert cert.gamma_constant(2.0, 0.3, 0.3) == pytest.approx(3.0, rel=1e-14)
    assert 1 / (1 + cert.gamma_constant(2.0, 1.0, 1.0)) == pytest.approx(0.25)
    assert cert.gamma_constant(2.0, 4.0, 1.0) == pytest.approx(24.0, rel=1e-14)
    assert cert.gamma_constant(3.0, 1.0, 0.5) > cert.gamma_constant(3.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        cert.gamma_constant(2.0, 1.0, 0.0)


@pytest.mark.parametrize("p,mu,eps", [(2, 1, 1), (3, 0.5, 0.1), (4.5, 2.0, 3.0), (2, 0.7, 1e-3)])
def test_constants_match_rederivation(p, mu, eps):
    assert cert.gamma_constant(p, mu, eps) == pytest.approx(gamma_ref(p, mu, eps), rel=1e-13)
    r_hi, r_lo = p + 1.0, (1 + p) / 2
    assert cert.superlinear_constant(p, mu, eps, r_hi) == pytest.approx(superlinear_ref(p, mu, eps, r_hi), rel=1e-13)
    for a, b in zip(cert.sublinear_constants(p, mu, eps, r_lo), sublinear_ref(p, mu, eps, r_lo)):
        assert a == pytest.approx(b, rel=1e-13)


def test_gamma_monotone_in_epsilon():
    eps = np.logspace(-4, 2, 30)
    g = [cert.gamma_constant(3.0, 1.0, e) for e in eps]
    assert all(a > b for a, b in zip(g, g[1:]))


def test_superlinear_and_sublinear_examples():
    assert cert.superlinear_constant(2.0, 1.0, 1.0, 3.0) == pytest.approx(2.0)
    beta, c = cert.sublinear_constants(2.0, 1.0, 1.0, 1.5)
    assert beta == pytest.approx(2.0)
    assert c == pytest.approx(2 ** 1.5)
    with pytest.raises(ValueError):
        cert.sublinear_constants(2.0, 1.0, 1.0, 2.0)


def test_linear_boundary_sequence_passes_with_zero_margin():
    params = ConvexityParams(2.0, 1.0)
    z = 0.5 * 0.25 ** np.arange(8)
    rep = cert.check_linear(z, params, 1.0)
    assert rep.passed
    assert max(abs(m) for m in rep.margins) <= 1e-16
    assert rep.constants["gamma"] == pytest.approx(3.0)


def test_linear_slow_sequence_fails_at_first_violation():
    z = 0.5 * 0.25 ** np.arange(8)
    z[4:] = z[3] * 0.5 ** np.arange(1, 5)
    rep = cert.check_linear(z, ConvexityParams(2.0, 1.0), 1.0)
    assert not rep.passed
    assert rep.margins[3] < 0 and all(m >= -1e-16 for m in rep.margins[:3])


def test_superlinear_synthetic():
    params = ConvexityParams(2.0, 1.0)
    z = [1e-1]
    for _ in range(4):
        z.append(2 * z[-1] ** 2 * 0.9)
    rep = cert.check_superlinear(z, params, 1.0, 3.0)
    assert rep.passed
    assert rep.extra["empirical_order"][-1] == pytest.approx(2.0, abs=0.1)
    geo = 1e-3 * 0.5 ** np.arange(10)
    assert not cert.check_superlinear(geo, params, 1.0, 3.0).passed
    with pytest.raises(ValueError):
        cert.check_superlinear(z, params, 1.0, 2.0)


def test_sublinear_envelope_and_check():
    params = ConvexityParams(2.0, 1.0)
    env = cert.sublinear_envelope(1.0, np.arange(20), 2.0, 1.0, 1.0, 1.5)
    assert env[0] == pytest.approx(1.0)
    assert np.all(np.diff(env) < 0)
    assert cert.check_sublinear(env, params, 1.0, 1.5).passed
    bad = env.copy()
    bad[10] *= 1.5
    rep = cert.check_sublinear(bad, params, 1.0, 1.5)
    assert not rep.passed and rep.worst_iteration == 10


def test_primal_bregman_stationary_and_corrupted():
    params = ConvexityParams(2.0, 1.0)
    rep = cert.check_primal_bregman(np.zeros(5), np.zeros(5), params, 1.0, 2.0)
    assert rep.passed and all(m == 0.0 for m in rep.margins)
    q = make_quadratic_fixture()
    cfg = AlmConfig(2.0, 1.0, 8, inner=STRICT)
    tr = alm_run(q, None, cfg, reference=(q.u_exact, q.lam_exact))
    gaps = np.maximum(tr.column("dual_gap"), 0.0)
    dfs = tr.column("dfsym")
    p = cert.quadratic_dual_params(q)
    assert cert.check_primal_bregman(dfs, gaps, p, 1.0, 2.0).passed
    bad = dfs.copy()
    bad[1] *= 10
    rep = cert.check_primal_bregman(bad, gaps, p, 1.0, 2.0)
    assert not rep.passed and rep.worst_iteration == 0
    with pytest.raises(ValueError):
        cert.check_primal_bregman(dfs[:-1], gaps, p, 1.0, 2.0)


def test_negative_gap_rejected():
    with pytest.raises(ValueError, match="negative"):
        cert.check_linear([1.0, -0.1], ConvexityParams(2.0, 1.0), 1.0)
    with pytest.raises(ValueError):
        cert.check_linear([], ConvexityParams(2.0, 1.0), 1.0)


def test_default_slack():
    rep = cert.check_linear([2.0, 0.1], ConvexityParams(2.0, 1.0), 1.0)
    assert rep.slack == pytest.approx(3e-10)


@pytest.mark.parametrize("seed", range(5))
def test_loosening_slack_never_flips_pass_to_fail(seed):
    rng = np.random.default_rng(seed)
    z = np.sort(rng.uniform(0, 1, 8))[::-1]
    params = ConvexityParams(2.0, rng.uniform(0.1, 2))
    for check in (lambda s: cert.check_linear(z, params, 0.5, s),
                  lambda s: cert.check_sublinear(z, params, 0.5, 1.5, s),
                  lambda s: cert.check_superlinear(z, params, 0.5, 3.0, s)):
        verdicts = [check(s).passed for s in (0.0, 1e-6, 1e-3, 1e-1, 1.0)]
        assert verdicts == sorted(verdicts)


def test_dual_descent_check():
    lam = np.array([[0.0], [1.0], [1.5]])
    ok = cert.check_dual_descent([3.0, 2.0, 1.8], lam, 1.0, 2.0)
    assert ok.passed
    assert ok.margins == pytest.approx([0.5, 0.2 - 0.125])
    assert not cert.check_dual_descent([3.0, 2.9, 2.8], lam, 1.0, 2.0).passed


def test_beta_B_examples():
    assert cert.beta_B(make_location(n=4, J=3)) == pytest.approx(1.0)
    p = ConstrainedProblem(QuadraticOracle(np.eye(2)), np.array([[1.0, 1.0]]), np.zeros(1))
    assert cert.beta_B(p) == pytest.approx(math.sqrt(2))
    g = make_graph_df(m=2)
    assert cert.beta_B(g) == pytest.approx(math.sqrt(np.linalg.eigvalsh(g.B @ g.B.T)[0]), rel=1e-10)
    assert cert.beta_B(g) == pytest.approx(math.sqrt(2), rel=1e-10)
    with pytest.raises(ValueError, match="Euclidean"):
        cert.beta_B(ConstrainedProblem(QuadraticOracle(np.eye(2)), np.array([[1.0, 1.0]]), np.zeros(1),
                                       primal_space=NormedSpaceSpec.coordinate_power(2, 3.0)))


def test_dual_convexity_from_smoothness():
    a = cert.dual_convexity_from_smoothness(SmoothnessParams(2.0, 1.0), 1.0)
    assert (a.p, a.mu, a.exact) == (2.0, 1.0, True)
    b = cert.dual_convexity_from_smoothness(SmoothnessParams(2.0, 4.0), 2.0)
    assert (b.p, b.mu) == (2.0, pytest.approx(1.0))
    c = cert.dual_convexity_from_smoothness(SmoothnessParams(1.5, 3.0), 1.3)
    assert c.p == pytest.approx(3.0)
    assert c.mu == pytest.approx(1.3 ** 3 / 9.0)
    with pytest.raises(ValueError):
        cert.dual_convexity_from_smoothness(SmoothnessParams(2.0, 1.0), 0.0)


def test_p_for_data_fitting():
    assert cert.p_for_data_fitting(3.0) == pytest.approx(2.0)
    assert cert.p_for_data_fitting(1.5) == pytest.approx(3.0)
    assert cert.p_for_data_fitting(2.0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        cert.p_for_data_fitting(1.0)


def test_quadratic_dual_params_is_a_valid_lower_bound():
    q = make_quadratic_fixture()
    params = cert.quadratic_dual_params(q)
    hess = q.B @ np.linalg.solve(q.A, q.B.T)
    assert params.p == 2.0 and params.exact
    assert params.mu <= np.linalg.eigvalsh(hess)[0] * (1 + 1e-12)


def test_report_json_roundtrip():
    rep = cert.check_superlinear([1e-1, 1e-2, 0.0], ConvexityParams(2.0, 1.0), 1.0, 3.0)
    doc = json.loads(rep.to_json())
    assert doc["theorem"] == "superlinear"
    assert doc["passed"] is True
    assert len(doc["margins"]) == 2
    assert set(doc["constants"]) >= {"constant", "order"}


def test_empirical_mu_is_advisory():
    from hoalm.problems import make_location as loc
    p = loc(n=4, J=5, s=3.0)
    pts = np.random.default_rng(0).standard_normal((4, 4))
    params = cert.empirical_mu(p.oracle, pts, 2.0)
    assert not params.exact
    rep = cert.check_linear([1.0, 2.0], params, 1.0)
    assert rep.advisory and not rep.passed
    with pytest.raises(ValueError):
        cert.empirical_mu(p.oracle, [pts[0], pts[0]], 2.0)


def test_empirical_mu_exact_on_identity_quadratic():
    o = QuadraticOracle(np.eye(3))
    pts = np.random.default_rng(1).standard_normal((5, 3))
    assert cert.empirical_mu(o, pts, 2.0).mu == pytest.approx(1.0, rel=1e-12)
