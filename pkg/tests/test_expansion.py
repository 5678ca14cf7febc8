import numpy as np
import pytest

from basketae import BasketModel, ConstantJump, LocalVolFn, NormalJump, poisson_weights
from basketae.expansion import (
    NonPositiveStrike,
    _scaled_derivative,
    abc_coeffs,
    build_surface,
    conditional_moments,
    integrated_cov,
    local_vol,
    taylor_coeffs,
)
from conftest import basket, single
from oracles import abc_resum


@pytest.mark.parametrize(
    "alpha,beta,p,q",
    [(0.2, 1.0, 20.0, 0.2), (0.2, 0.8, 7.96214, 0.063697), (0.5, 0.5, 5.0, 0.025)],
)
def test_taylor_coeffs(alpha, beta, p, q):
    tc = taylor_coeffs(basket(alpha, beta), 1.0)
    np.testing.assert_allclose(tc.p, p, rtol=1e-6)
    np.testing.assert_allclose(tc.q, q, rtol=1e-5)
    np.testing.assert_allclose(tc.q, alpha * beta * 100.0 ** (beta - 1), rtol=1e-14)


def test_finite_difference_fallback_matches_analytic():
    class NoDerivative:
        def __init__(self, f):
            self.f = f

        def scaled(self, t, S):
            return self.f.scaled(t, S)

    f = LocalVolFn(0.3, 0.7)
    fd = _scaled_derivative(NoDerivative(f), 0.0, 100.0)
    assert fd == pytest.approx(f.scaled_derivative(0.0, 100.0), rel=1e-7)


@pytest.mark.parametrize("T,expected", [(1.0, 400.0), (3.0, 1200.0)])
def test_integrated_cov_constant(T, expected):
    assert integrated_cov(basket(0.2), T, 0, 1) == pytest.approx(expected)


def test_integrated_cov_mixed_levels():
    m = BasketModel([100, 100], [0.5, 0.5], 0.0, [LocalVolFn(0.1), LocalVolFn(0.5)])
    assert integrated_cov(m, 1.0, 0, 1) == pytest.approx(500.0)


def test_integrated_cov_simpson_path():
    class Ramp:
        time_homogeneous = False

        def scaled(self, t, S):
            return 0.2 * S * (1 + t)

    m = BasketModel([100, 100], [0.5, 0.5], 0.0, [LocalVolFn(0.2), LocalVolFn(0.2)])
    object.__setattr__(m, "vols", (Ramp(), Ramp()))
    # int_0^2 400 (1 + t)^2 dt = 400 * (27 - 1) / 3
    assert integrated_cov(m, 2.0, 0, 1) == pytest.approx(400 * 26 / 3, rel=1e-12)


def test_conditional_mean_no_jump_term():
    mom = conditional_moments(basket(), 1.0, 3)
    assert mom.mu_c[0] == pytest.approx(102.4)


def test_conditional_mean_without_jumps():
    mom = conditional_moments(basket(lam=0.0), 1.0, 0)
    assert mom.mu_c[0] == pytest.approx(100.0)


def test_conditional_variances_base_case():
    mom = conditional_moments(basket(), 1.0, 2)
    assert mom.sigma_c_sq[0] == pytest.approx(190.0)
    assert mom.sigma_c_sq[1] == pytest.approx(1415.0)


def test_conditional_moments_against_simulation():
    """Sample mean/variance of S_c(T, k) built directly from its defining sum."""
    rng = np.random.default_rng(7)
    n, s, w, rho, alpha, T = 4, 100.0, 0.25, 0.3, 0.2, 1.0
    lam, eta, gamma = 0.3, -0.08, 0.35
    corr = np.full((n, n), rho)
    np.fill_diagonal(corr, 1.0)
    L = np.linalg.cholesky(corr)
    mom = conditional_moments(basket(), T, 1)
    size = 400_000
    for k in (0, 1):
        W = rng.standard_normal((size, n)) @ L.T * np.sqrt(T)
        Y = rng.normal(eta, gamma, (size, k)).sum(axis=1)
        s_i1 = -lam * eta * s * T + alpha * s * W + s * Y[:, None]
        sc = n * w * s + s_i1 @ np.full(n, w)
        se = sc.std() / np.sqrt(size)
        assert abs(sc.mean() - mom.mu_c[k]) < 4 * se
        assert sc.var() == pytest.approx(mom.sigma_c_sq[k], rel=0.01)
        cov0 = np.cov(s_i1[:, 0], sc)[0, 1]
        assert cov0 == pytest.approx(mom.cov[k, 0], rel=0.02)


@pytest.mark.parametrize("jump", [NormalJump(-0.08, 0.35), NormalJump(-0.3, 0.35),
                                  ConstantJump(-0.125)])
@pytest.mark.parametrize("T", [0.25, 1.0, 3.0])
def test_conditional_moment_invariants(jump, T):
    m = BasketModel(
        [90.0, 105.0, 120.0], [0.2, 0.5, 0.3],
        [[1, 0.2, -0.1], [0.2, 1, 0.4], [-0.1, 0.4, 1]],
        [LocalVolFn(0.2), LocalVolFn(0.5, 0.8), LocalVolFn(1.0, 0.5)], jump, 0.7,
    )
    pw = poisson_weights(m.lam, T)
    mom = conditional_moments(m, T, len(pw) - 1)
    np.testing.assert_allclose(mom.cov @ m.weights, mom.sigma_c_sq, rtol=1e-12)
    assert np.all(mom.sigma_c_sq > 0)
    assert np.all(np.diff(mom.sigma_c_sq) >= 0)
    # tower property of the compensated drift
    assert pw @ mom.mu_c == pytest.approx(m.weights @ m.spots, rel=1e-10)


def test_abc_reduces_to_b_equals_c_without_jumps():
    a, b, c = abc_coeffs(basket(lam=0.0, beta=0.8), 1.0)
    assert b == c


@pytest.mark.parametrize("alpha", [0.1, 0.3])
@pytest.mark.parametrize("spot", [50.0, 100.0])
def test_abc_one_asset(alpha, spot):
    m = BasketModel([spot], [1.0], [[1.0]], [LocalVolFn(alpha)], NormalJump(-0.1, 0.2), 0.0)
    a, b, c = abc_coeffs(m, 1.0)
    assert a == pytest.approx(alpha**2 * spot**2, rel=1e-14)
    assert b == pytest.approx(2 * alpha**2 * spot, rel=1e-14)
    assert c == pytest.approx(2 * alpha**2 * spot, rel=1e-14)


@pytest.mark.parametrize("alpha,beta,lam,eta,T", [
    (0.2, 1.0, 0.3, -0.08, 1.0),
    (0.5, 0.8, 1.0, -0.3, 3.0),
    (0.1, 0.5, 1.0, -0.08, 3.0),
])
def test_abc_matches_resummation(alpha, beta, lam, eta, T):
    got = abc_coeffs(basket(alpha, beta, lam, NormalJump(eta, 0.35)), T)
    corr = np.full((4, 4), 0.3)
    np.fill_diagonal(corr, 1.0)
    ref = abc_resum([100.0] * 4, [0.25] * 4, corr.tolist(), [alpha] * 4, [beta] * 4,
                    lam, eta, 0.35, T, k_max=60)
    np.testing.assert_allclose(got, ref, rtol=1e-10)


def test_abc_permutation_invariant():
    vols = [LocalVolFn(0.2), LocalVolFn(0.5, 0.8), LocalVolFn(1.0, 0.5)]
    spots, weights = [90.0, 105.0, 120.0], [0.2, 0.5, 0.3]
    corr = np.array([[1, 0.2, -0.1], [0.2, 1, 0.4], [-0.1, 0.4, 1]])
    jump = NormalJump(-0.08, 0.35)
    m1 = BasketModel(spots, weights, corr, vols, jump, 0.5)
    perm = [2, 0, 1]
    m2 = BasketModel([spots[i] for i in perm], [weights[i] for i in perm],
                     corr[np.ix_(perm, perm)], [vols[i] for i in perm], jump, 0.5)
    np.testing.assert_allclose(abc_coeffs(m1, 2.0), abc_coeffs(m2, 2.0), rtol=1e-12)


@pytest.mark.parametrize("alpha", [0.1, 0.2, 0.5])
def test_local_vol_one_asset_at_the_money(alpha):
    m = single(alpha)
    surface = build_surface(m, [0.5, 1.0, 2.0])
    for T in (0.5, 0.75, 2.0):
        assert local_vol(surface, T, 100.0) == pytest.approx(alpha, rel=1e-12)


def test_local_vol_floor():
    surface = build_surface(single(0.2), [1.0])
    # a + bK - cS0 = 0.04 * 100 * (2K - 100) < 0 for K < 50
    K = 30.0
    assert surface.raw_variance(1.0, K) < 0
    assert local_vol(surface, 1.0, K) == pytest.approx(np.sqrt(surface.var_floor) / K)


def test_local_vol_base_case_matches_resummation(base_model):
    surface = build_surface(base_model, [1.0])
    corr = np.full((4, 4), 0.3)
    np.fill_diagonal(corr, 1.0)
    a, b, c = abc_resum([100.0] * 4, [0.25] * 4, corr.tolist(), [0.2] * 4, [1.0] * 4,
                        0.3, -0.08, 0.35, 1.0)
    expected = np.sqrt(a + 100 * b - 100 * c) / 100
    assert local_vol(surface, 1.0, 100.0) == pytest.approx(expected, rel=1e-10)


def test_local_variance_is_affine_in_strike(base_model):
    surface = build_surface(base_model, [1.0, 3.0])
    K = np.linspace(20, 300, 57)
    v = surface.raw_variance(2.0, K)
    d2 = v[2:] - 2 * v[1:-1] + v[:-2]
    assert np.max(np.abs(d2)) < 1e-10 * np.max(np.abs(v))


def test_local_vol_rejects_nonpositive_strike(base_model):
    surface = build_surface(base_model, [1.0])
    with pytest.raises(NonPositiveStrike):
        local_vol(surface, 1.0, 0.0)


def test_surface_interpolates_linearly_in_maturity(base_model):
    surface = build_surface(base_model, [1.0, 2.0])
    a, b, c = surface.coefficients(1.5)
    assert b == pytest.approx(0.5 * (surface.b[0] + surface.b[1]))
    assert a > 0


def test_surface_csv(tmp_path, base_model):
    surface = build_surface(base_model, [0.5, 1.0])
    path = tmp_path / "s.csv"
    surface.to_csv(path, [80.0, 100.0])
    lines = path.read_text().splitlines()
    assert lines[0] == "T,a,b,c,sigma_K80,sigma_K100"
    assert len(lines) == 3
    row = [float(v) for v in lines[2].split(",")]
    assert row[0] == 1.0
    assert row[-1] == pytest.approx(local_vol(surface, 1.0, 100.0))
