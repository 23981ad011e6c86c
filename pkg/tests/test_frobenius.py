import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_merton import (
    AmbiguityModel,
    FrobeniusBall,
    NoConvergence,
    ZeroPortfolio,
    solve,
    solve_infinite,
    solve_infinite_frobenius,
    worst_cov_frobenius,
)
from robust_merton.frobenius import robust_objective

from conftest import make_problem, random_spd


def projected_gradient_max(theta_mat, sigma_hat, delta, iters=2000):
    """Maximize <Theta, S> over the Frobenius ball around sigma_hat by projected ascent."""
    S = sigma_hat.copy()
    for _ in range(iters):
        D = S + 0.1 * theta_mat - sigma_hat
        nrm = np.linalg.norm(D, "fro")
        if nrm > delta:
            D *= delta / nrm
        S = sigma_hat + D
    return S


def test_scalar_ball_is_interval_endpoint():
    inner = worst_cov_frobenius([0.7], [[0.04]], 0.01, 2.0, 0.1)
    np.testing.assert_allclose(inner.Sigma_bar, [[0.05]], atol=1e-16)


def test_zero_radius():
    s = np.array([[0.04, 0.01], [0.01, 0.09]])
    inner = worst_cov_frobenius([1.0, -0.3], s, 0.0, 2.0, 0.1)
    np.testing.assert_array_equal(inner.Sigma_bar, s)
    assert inner.multiplier is None


def test_two_asset_example_against_projected_gradient():
    s = np.array([[0.04, 0.01], [0.01, 0.09]])
    inner = worst_cov_frobenius([1.0, 0.0], s, 0.005, 2.0, 0.1)
    np.testing.assert_allclose(inner.Sigma_bar, s + 0.005 * np.diag([1.0, 0.0]), atol=1e-16)
    S = projected_gradient_max(inner.Theta, s, 0.005)
    np.testing.assert_allclose(S, inner.Sigma_bar, atol=1e-12)


def test_zero_portfolio_rejected():
    with pytest.raises(ZeroPortfolio):
        worst_cov_frobenius([0.0, 0.0], np.eye(2) * 0.04, 0.01, 2.0, 0.1)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 4), seed=st.integers(0, 2**32 - 1), R=st.floats(0.3, 6.0), eps=st.floats(0.0, 0.5))
def test_multiplier_form_and_projected_gradient_agree(n, seed, R, eps):
    rng = np.random.default_rng(seed)
    s = random_spd(rng, n)
    delta = float(rng.uniform(0, 0.99)) * np.linalg.eigvalsh(s)[0]
    pi = rng.standard_normal(n)
    inner = worst_cov_frobenius(pi, s, delta, R, eps)
    T = inner.Theta
    np.testing.assert_allclose(inner.Sigma_bar - s, delta * T / np.linalg.norm(T, "fro"), atol=1e-14)
    if delta > 0:
        np.testing.assert_allclose(inner.Sigma_bar_multiplier_form, inner.Sigma_bar, atol=1e-13)
    assert np.linalg.eigvalsh(inner.Sigma_bar)[0] > 0
    S = projected_gradient_max(T / np.linalg.norm(T, "fro"), s, delta, iters=200)
    assert np.sum(T * S) <= np.sum(T * inner.Sigma_bar) * (1 + 1e-12)
    assert np.sum(T * S) == pytest.approx(np.sum(T * inner.Sigma_bar), rel=1e-10)


def test_scalar_solver_matches_kernel_at_shifted_cov():
    rep = solve(make_problem(vol=FrobeniusBall(0.01)))
    Hbar = 0.06 / np.sqrt(0.05)
    assert rep.pi_eps[0] == pytest.approx((Hbar - 0.1) / (2 * Hbar) * 0.06 / 0.05, abs=1e-10)
    assert rep.pi_eps[0] == pytest.approx(0.376393, abs=1e-6)
    np.testing.assert_allclose(rep.worst_cov, [[0.05]], atol=1e-15)
    assert rep.iterations <= 200


def test_zero_radius_matches_kernel():
    a = solve(make_problem(mu=[0.08, 0.06], cov=[[0.04, 0.01], [0.01, 0.09]], vol=FrobeniusBall(0.0)))
    b = solve_infinite(make_problem(mu=[0.08, 0.06], cov=[[0.04, 0.01], [0.01, 0.09]]))
    np.testing.assert_allclose(a.pi_eps, b.pi_eps, rtol=1e-12)
    assert a.gamma_eps == pytest.approx(b.gamma_eps, rel=1e-12)


def test_large_epsilon_gives_pure_savings():
    p = make_problem(eps=0.3, vol=FrobeniusBall(0.01))
    rep = solve(p)
    np.testing.assert_array_equal(rep.pi_eps, [0.0])
    np.testing.assert_array_equal(rep.worst_cov, p.market.sigma_cov)
    assert rep.H_eps_plus == 0.0
    # the cutoff sits at the Sharpe ratio of the shifted covariance
    H_shift = 0.06 / np.sqrt(0.05)
    assert np.any(solve(p.replace(ambiguity=AmbiguityModel(H_shift - 1e-6, FrobeniusBall(0.01)))).pi_eps)
    assert not np.any(solve(p.replace(ambiguity=AmbiguityModel(H_shift + 1e-9, FrobeniusBall(0.01)))).pi_eps)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), R=st.floats(1.5, 6.0))
def test_fixed_point_is_stationary_and_optimal(seed, R):
    rng = np.random.default_rng(seed)
    s = random_spd(rng, 2, 0.02, 0.1)
    mu = rng.normal(0.08, 0.03, 2)
    delta = float(rng.uniform(0, 0.9)) * np.linalg.eigvalsh(s)[0]
    p = make_problem(mu=mu, cov=s, eps=float(rng.uniform(0, 0.2)), R=R, vol=FrobeniusBall(delta))
    rep = solve(p)
    assert rep.iterations <= 200
    ref = solve_infinite(make_problem(mu=mu, cov=s + delta * np.eye(2), eps=p.ambiguity.epsilon, R=R))
    np.testing.assert_allclose(rep.pi_eps, ref.pi_eps, atol=1e-9)
    # no nearby portfolio does better on the max-min objective
    best = robust_objective(rep.pi_eps, p)
    for d in rng.standard_normal((20, 2)) * 1e-3:
        assert robust_objective(rep.pi_eps + d, p) <= best + 1e-15


def test_stalled_iteration_without_fallback_raises():
    p = make_problem(mu=[0.08, 0.06], cov=[[0.04, 0.01], [0.01, 0.09]], vol=FrobeniusBall(0.02))
    with pytest.raises(NoConvergence) as exc:
        solve_infinite_frobenius(p, max_iter=2, fallback=False)
    assert exc.value.iterations == 2


def test_fallback_recovers_stationary_pair():
    p = make_problem(mu=[0.08, 0.06], cov=[[0.04, 0.01], [0.01, 0.09]], vol=FrobeniusBall(0.02))
    a = solve_infinite_frobenius(p, max_iter=2, fallback=True)
    b = solve_infinite_frobenius(p)
    np.testing.assert_allclose(a.pi_eps, b.pi_eps, atol=1e-8)


def test_one_more_iteration_is_stationary():
    from robust_merton.frobenius import _kernel_at, _sigma_bar

    rng = np.random.default_rng(7)
    for _ in range(20):
        s = random_spd(rng, 3, 0.02, 0.1)
        p = make_problem(mu=rng.normal(0.08, 0.03, 3), cov=s, eps=0.05, R=3.0,
                         vol=FrobeniusBall(0.5 * np.linalg.eigvalsh(s)[0]))
        rep = solve(p)
        if not np.any(rep.pi_eps):
            continue
        step = _kernel_at(p, _sigma_bar(p, rep.pi_eps)).pi - rep.pi_eps
        assert np.max(np.abs(step)) < 1e-9


def test_inner_value_against_sampled_ball():
    from robust_merton.oracle import OracleConfig, volset_min_sampled

    rng = np.random.default_rng(8)
    for _ in range(10):
        s = random_spd(rng, 2, 0.02, 0.1)
        delta = 0.8 * np.linalg.eigvalsh(s)[0]
        pi = rng.standard_normal(2)
        R, eps = float(rng.uniform(0.5, 5)), float(rng.uniform(0, 0.4))
        inner = worst_cov_frobenius(pi, s, delta, R, eps)
        closed = inner.inner_value(eps, R)
        o = volset_min_sampled(pi, AmbiguityModel(eps, FrobeniusBall(delta)), s, eps, R,
                               OracleConfig(n_samples=100_000))
        # the oracle minimizes the negated inner objective
        assert -o.value <= closed * (1 + 1e-13)
        assert (closed + o.value) / closed < 1e-6
