"""Frobenius-ball volatility ambiguity.

Dividing the robust HJB by w V_w for the CRRA guess leaves the inner problem

    max over ||S - S_hat||_F <= delta of  eps sqrt(<T, S>) + (R/2) <T, S>,

with T = pi pi'. The objective increases in <T, S>, so the maximizer moves
S_hat by delta along T / ||T||_F. The outer portfolio is found by a damped
fixed point between this inner solution and the closed-form kernel rule.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import NoConvergence, UnsupportedVariant, ZeroPortfolio
from .kernel import InfiniteHorizonReport, _infinite_report, robust_portfolio
from .model import Array, FrobeniusBall, ValidatedProblem

log = logging.getLogger(__name__)

DAMPING = 0.5
TOL = 1e-10
MAX_ITER = 10_000


@dataclass(frozen=True)
class FrobeniusInner:
    """Worst-case covariance for a given relative portfolio.

    ``multiplier`` is the Lagrange multiplier of the ball constraint (None when
    delta = 0) and ``Sigma_bar_multiplier_form`` rebuilds the worst case from it,
    as a cross-check on the rank-one form ``Sigma_bar``.
    """

    Theta: Array
    A_scalar: float
    B_scalar: float
    xi: float
    multiplier: float | None
    Sigma_bar: Array
    Sigma_bar_multiplier_form: Array

    def inner_value(self, epsilon: float, R: float) -> float:
        y = float(np.sum(self.Theta * self.Sigma_bar))
        return epsilon * np.sqrt(y) + 0.5 * R * y


def worst_cov_frobenius(pi, Sigma_hat, delta: float, R: float, epsilon: float) -> FrobeniusInner:
    pi = np.atleast_1d(np.asarray(pi, dtype=np.float64))
    Sigma_hat = np.atleast_2d(np.asarray(Sigma_hat, dtype=np.float64))
    if not np.any(pi):
        raise ZeroPortfolio("the Frobenius inner problem is undefined at pi = 0")
    Theta = np.outer(pi, pi)
    A = float(np.sum(Theta * Sigma_hat))
    B = float(np.linalg.norm(Theta, "fro"))
    xi = np.sqrt(A + delta * B)
    Sigma_bar = Sigma_hat + (delta / B) * Theta
    alpha, beta = 0.5 * R, epsilon
    if delta > 0:
        lam = 0.25 * (2 * alpha * xi + beta) * B / (delta * xi)
        alt = Sigma_hat + (alpha + beta / (2 * xi)) / (2 * lam) * Theta
    else:
        lam = None
        alt = Sigma_hat.copy()
    return FrobeniusInner(Theta, A, B, float(xi), lam, Sigma_bar, alt)


def robust_objective(pi, problem: ValidatedProblem) -> float:
    """Max-min HJB objective per unit wealth and marginal utility, at the inner optimum.

    pi'(mu_hat - r1) - eps sqrt(q) - (R/2) q with q = pi' S_hat pi + delta |pi|^2.
    """
    pi = np.atleast_1d(np.asarray(pi, dtype=np.float64))
    m = problem.market
    delta = problem.ambiguity.vol_ambiguity.delta
    q = float(pi @ m.sigma_cov @ pi + delta * (pi @ pi))
    return float(pi @ m.excess) - problem.ambiguity.epsilon * np.sqrt(q) - 0.5 * problem.prefs.R * q


def _kernel_at(problem: ValidatedProblem, cov):
    m = problem.market
    return robust_portfolio(m.mu_hat, cov, m.r, problem.ambiguity.epsilon, problem.prefs.R)


def _sigma_bar(problem: ValidatedProblem, pi) -> Array:
    vol = problem.ambiguity.vol_ambiguity
    if not np.any(pi):
        return problem.market.sigma_cov.copy()
    return worst_cov_frobenius(
        pi, problem.market.sigma_cov, vol.delta, problem.prefs.R, problem.ambiguity.epsilon
    ).Sigma_bar


def _fallback(problem: ValidatedProblem, start: Array) -> Array:
    res = minimize(lambda p: -robust_objective(p, problem), start, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 20_000})
    return res.x


def solve_infinite_frobenius(
    problem: ValidatedProblem,
    damping: float = DAMPING,
    tol: float = TOL,
    max_iter: int = MAX_ITER,
    fallback: bool = True,
) -> InfiniteHorizonReport:
    """Damped fixed point pi <- (1-w) pi + w pi*(Sigma_bar(pi)).

    Raises NoConvergence if neither the iteration nor the Nelder-Mead
    fallback yields a stationary pair.
    """
    vol = problem.ambiguity.vol_ambiguity
    if not isinstance(vol, FrobeniusBall):
        raise UnsupportedVariant("solve_infinite_frobenius requires FrobeniusBall ambiguity")
    if problem.prefs.is_finite:
        raise UnsupportedVariant("finite-horizon Frobenius-ball ambiguity is not supported")
    m = problem.market

    pi = _kernel_at(problem, m.sigma_cov).pi
    step = np.inf
    it = 0
    while np.any(pi) and it < max_iter:
        target = _kernel_at(problem, _sigma_bar(problem, pi)).pi
        if not np.any(target):
            # q(pi) <= pi'(S_hat + delta I)pi for any direction, so no pi earns
            # a positive robust objective either and the fixed point is pi = 0
            pi = target
            it += 1
            break
        new = (1 - damping) * pi + damping * target
        step = float(np.max(np.abs(new - pi)))
        pi = new
        it += 1
        if step < tol:
            break

    if np.any(pi) and not step < tol:
        if not fallback:
            raise NoConvergence("Frobenius fixed point did not converge", it, step)
        log.warning("fixed point stalled after %d iterations (step %.3g); using Nelder-Mead", it, step)
        pi = _fallback(problem, pi)
        check = _kernel_at(problem, _sigma_bar(problem, pi)).pi
        if np.max(np.abs(check - pi)) > 1e-8:
            raise NoConvergence("Frobenius fallback did not reach a stationary pair", it, step)

    cov = _sigma_bar(problem, pi)
    d = _kernel_at(problem, cov)
    if not np.any(pi):
        d = type(d)(d.H, 0.0, d.merton_pi, np.zeros(m.n), 0.0, m.mu_hat.copy())
    return _infinite_report(problem, d, cov, iterations=it)
