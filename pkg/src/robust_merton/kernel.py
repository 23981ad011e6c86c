"""Closed-form robust Merton rules.

Drift ambiguity is an ellipsoid of radius ``epsilon`` (Sharpe units) around
the drift estimate; volatility ambiguity is reduced to a constant worst-case
covariance. The investor holds the ambiguity-neutral Merton fund scaled by
``(H - eps)^+ / H`` where H is the Sharpe ratio under the worst covariance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from .errors import IllPosed, UnsupportedVariant
from .model import (
    AmbiguityModel,
    Array,
    DiagonalBox,
    EigenvalueCap,
    Finite,
    FrobeniusBall,
    Preferences,
    ValidatedProblem,
    cho_solve,
    cholesky,
    sharpe_ratio,
)

DEGENERATE_ODE_GAP = 1e-12
SIMPSON_PANELS = 10_000


# ---------------------------------------------------------------------------
# Inner problems
# ---------------------------------------------------------------------------

def worst_case_drift(theta, cov, epsilon: float, mu_hat) -> Array:
    """Minimizer of theta' mu over the ellipsoid (mu - mu_hat)' cov^{-1} (mu - mu_hat) <= eps^2.

    For theta != 0 the minimizer is mu_hat - eps * cov theta / sqrt(theta' cov theta).
    At theta = 0 every point of the ellipsoid is optimal and mu_hat is returned.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    mu_hat = np.atleast_1d(np.asarray(mu_hat, dtype=np.float64))
    cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
    cholesky(cov)
    if epsilon == 0 or not np.any(theta):
        return mu_hat.copy()
    ct = cov @ theta
    q = float(theta @ ct)
    return mu_hat - epsilon * ct / np.sqrt(q)


def worst_case_cov(amb: AmbiguityModel, sigma_hat, theta_direction=None) -> Array:
    """Effective worst-case covariance for the closed-form volatility sets.

    None -> sigma_hat; DiagonalBox -> Diag(upper); EigenvalueCap -> cap * I.
    The result does not depend on ``theta_direction``; the argument is accepted
    so all volatility sets share one call shape.
    """
    v = amb.vol_ambiguity
    sigma_hat = np.atleast_2d(np.asarray(sigma_hat, dtype=np.float64))
    if v is None:
        return sigma_hat.copy()
    if isinstance(v, DiagonalBox):
        return np.diag(v.upper)
    if isinstance(v, EigenvalueCap):
        return v.lambda_bar_sq * np.eye(sigma_hat.shape[0])
    if isinstance(v, FrobeniusBall):
        raise UnsupportedVariant("Frobenius-ball ambiguity is handled by robust_merton.frobenius")
    raise UnsupportedVariant(f"unknown volatility ambiguity {v!r}")


def worst_quadratic_form(amb: AmbiguityModel, sigma_hat, theta) -> float:
    """max of theta' Sigma theta over the volatility set.

    The robust HJB depends on the covariance only through this number, since
    the inner objective is increasing in the quadratic form.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    v = amb.vol_ambiguity
    if isinstance(v, FrobeniusBall):
        # <tt', S_hat + X> with ||X||_F <= delta is maximal at X = delta tt'/|t|^2
        return float(theta @ sigma_hat @ theta + v.delta * (theta @ theta))
    cov = worst_case_cov(amb, sigma_hat)
    return float(theta @ cov @ theta)


def gamma_epsilon(prefs: Preferences, r: float, H_eps_plus: float) -> float:
    """Consumption-to-wealth ratio (rho + (R-1)(r + (H_eps^+)^2/(2R))) / R."""
    R = prefs.R
    return (prefs.rho + (R - 1.0) * (r + H_eps_plus**2 / (2.0 * R))) / R


def k_epsilon(prefs: Preferences, r: float, H_eps_plus: float) -> float:
    """Growth constant (1-R)(r + (H_eps^+)^2/(2R)) of the finite-horizon ODE."""
    R = prefs.R
    return (1.0 - R) * (r + H_eps_plus**2 / (2.0 * R))


def utility_growth_rate(prefs: Preferences, r: float, pi, c_rate: float, mu, cov) -> float:
    """Exponential rate of E[e^{-rho t} w_t^{1-R}] for constant proportional controls.

    With theta = pi w and c = c_rate w under constant (mu, cov),
    E[e^{-rho t} (w_t/w_0)^{1-R}] = exp(kappa t) with
    kappa = -rho + (1-R)(r + pi'(mu - r1) - c_rate - R/2 pi' cov pi).
    """
    pi = np.atleast_1d(np.asarray(pi, dtype=np.float64))
    mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
    cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
    R = prefs.R
    drift = r + float(pi @ (mu - r)) - c_rate - 0.5 * R * float(pi @ cov @ pi)
    return -prefs.rho + (1.0 - R) * drift


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DivergenceWitness:
    """Admissible controls whose expected utility is infinite.

    kind "proportional": theta = pi w, c = lam w, utility grows like exp(growth * t).
    kind "hyperbolic": theta = pi w, c = k/(1+t) w, integrand decays like (1+t)^(-decay)
    with decay = 1, so the utility integral diverges logarithmically.
    """

    kind: str
    pi: Array
    lam: float | None = None
    k: float | None = None
    growth: float | None = None
    decay: float | None = None

    def describe(self) -> str:
        pi = np.array2string(np.asarray(self.pi), precision=6)
        if self.kind == "proportional":
            return (
                f"controls theta = pi*w with pi = {pi}, c = {self.lam:.6g}*w: "
                f"discounted utility grows at rate {self.growth:.6g} > 0"
            )
        return (
            f"controls theta = pi*w with pi = {pi}, c = {self.k:.6g}/(1+t)*w: "
            f"integrand ~ (1+t)^-{self.decay:.6g}, integral diverges"
        )


@dataclass(frozen=True)
class InfiniteHorizonReport:
    pi_eps: Array | None
    gamma_eps: float
    H: float
    H_eps_plus: float
    worst_mu: Array | None
    worst_cov: Array
    well_posed: bool
    merton_pi: Array
    shrink: float
    epsilon: float
    witness: DivergenceWitness | None = None
    diagnostic: str = ""
    iterations: int = 0
    problem: ValidatedProblem | None = field(default=None, repr=False, compare=False)

    horizon = "infinite"

    def value_at(self, w0: float = 1.0, t: float = 0.0) -> float:
        """V(t, w) = gamma^-R e^{-rho t} w^{1-R} / (1-R); +inf when ill-posed."""
        R = self.problem.prefs.R
        if not self.well_posed:
            return np.inf
        return self.gamma_eps ** (-R) * np.exp(-self.problem.prefs.rho * t) * w0 ** (1 - R) / (1 - R)

    def consumption_rate(self, t=0.0):
        return np.full_like(np.asarray(t, dtype=np.float64), self.gamma_eps)

    def require_well_posed(self) -> None:
        if not self.well_posed:
            raise IllPosed(self.diagnostic, self.gamma_eps, self.witness)


@dataclass(frozen=True)
class FiniteHorizonReport:
    pi_eps: Array
    k_eps: float
    H: float
    H_eps_plus: float
    worst_mu: Array
    worst_cov: Array
    merton_pi: Array
    shrink: float
    epsilon: float
    T: float
    A: float
    problem: ValidatedProblem | None = field(default=None, repr=False, compare=False)

    horizon = "finite"
    well_posed = True

    @property
    def _R(self) -> float:
        return self.problem.prefs.R

    @property
    def _rho(self) -> float:
        return self.problem.prefs.rho

    def g(self, t):
        """Linearized value coefficient; f = g^R with g(T) = A^{1/R}."""
        t = np.asarray(t, dtype=np.float64)
        R, rho, k, T = self._R, self._rho, self.k_eps, self.T
        a = (k - rho) / R
        if abs(k - rho) > DEGENERATE_ODE_GAP:
            integral = (np.exp(a * T) - np.exp(a * t)) / a
        else:
            integral = (T - t) * np.exp(a * t)
        return self.A ** (1.0 / R) * np.exp(k * (T - t) / R) + np.exp(-k * t / R) * integral

    def g_prime(self, t):
        t = np.asarray(t, dtype=np.float64)
        return -(self.k_eps / self._R) * self.g(t) - np.exp(-self._rho * t / self._R)

    def f(self, t):
        return self.g(t) ** self._R

    def f_prime(self, t):
        return self._R * self.g(t) ** (self._R - 1.0) * self.g_prime(t)

    def consumption_rate(self, t):
        """Optimal consumption per unit wealth, e^{-rho t/R} / g(t)."""
        t = np.asarray(t, dtype=np.float64)
        return np.exp(-self._rho * t / self._R) / self.g(t)

    def consumption_integral(self, t: float, panels: int = SIMPSON_PANELS) -> float:
        """int_0^t e^{-rho s/R}/g(s) ds by composite Simpson."""
        if t <= 0:
            return 0.0
        s = np.linspace(0.0, t, panels + 1)
        return float(simpson(self.consumption_rate(s), x=s))

    def value_at(self, w0: float = 1.0, t: float = 0.0) -> float:
        R = self._R
        return float(self.f(t)) * w0 ** (1 - R) / (1 - R)

    @property
    def gamma_eps(self) -> float:
        """Initial consumption rate, the finite-horizon analogue of gamma."""
        return float(self.consumption_rate(0.0))

    def require_well_posed(self) -> None:
        return None


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _DriftOnly:
    H: float
    H_eps_plus: float
    merton_pi: Array
    pi: Array
    shrink: float
    worst_mu: Array


def robust_portfolio(mu_hat, cov, r: float, epsilon: float, R: float) -> _DriftOnly:
    """Optimal relative portfolio for drift-only ellipsoidal ambiguity at ``cov``."""
    mu_hat = np.atleast_1d(np.asarray(mu_hat, dtype=np.float64))
    chol = cholesky(cov)
    ex = mu_hat - r
    fund = cho_solve(chol, ex)
    H = sharpe_ratio(mu_hat, cov, r, chol=chol)
    H_plus = max(H - epsilon, 0.0)
    merton = fund / R
    shrink = H_plus / H if H > 0 else 0.0
    pi = shrink * merton
    worst_mu = worst_case_drift(pi, cov, epsilon, mu_hat) if np.any(pi) else mu_hat.copy()
    return _DriftOnly(H, H_plus, merton, pi, shrink, worst_mu)


def divergence_witness(prefs: Preferences, gamma_eps: float, pi) -> DivergenceWitness | None:
    """Controls with infinite expected utility when gamma_eps <= 0 and R < 1."""
    R = prefs.R
    if R >= 1 or gamma_eps > 0:
        return None
    pi = np.asarray(pi, dtype=np.float64)
    if gamma_eps < 0:
        lam = -R * gamma_eps / (2.0 * (1.0 - R))
        return DivergenceWitness("proportional", pi, lam=lam, growth=-R * gamma_eps - lam * (1.0 - R))
    k = 1.0 / (1.0 - R) - 1.0
    return DivergenceWitness("hyperbolic", pi, k=k, decay=(k + 1.0) * (1.0 - R))


def _infinite_report(problem: ValidatedProblem, d: _DriftOnly, worst_cov, iterations=0) -> InfiniteHorizonReport:
    prefs, r = problem.prefs, problem.market.r
    eps = problem.ambiguity.epsilon
    gamma = gamma_epsilon(prefs, r, d.H_eps_plus)
    ok = gamma > 0
    if ok:
        return InfiniteHorizonReport(
            d.pi, gamma, d.H, d.H_eps_plus, d.worst_mu, worst_cov, True,
            d.merton_pi, d.shrink, eps, iterations=iterations, problem=problem,
        )
    witness = divergence_witness(prefs, gamma, d.pi)
    msg = f"ill-posed: gamma_eps = {gamma:.12g} <= 0, value is infinite"
    if witness is not None:
        msg += "; witness: " + witness.describe()
    return InfiniteHorizonReport(
        None, gamma, d.H, d.H_eps_plus, None, worst_cov, False,
        d.merton_pi, d.shrink, eps, witness=witness, diagnostic=msg,
        iterations=iterations, problem=problem,
    )


def solve_infinite(problem: ValidatedProblem) -> InfiniteHorizonReport:
    """Infinite-horizon robust rule for the closed-form volatility sets.

    Ill-posedness (gamma_eps <= 0) is returned as ``well_posed=False`` with a
    divergence witness, not raised.
    """
    if problem.prefs.is_finite:
        raise UnsupportedVariant("solve_infinite requires an infinite horizon")
    m = problem.market
    cov = worst_case_cov(problem.ambiguity, m.sigma_cov)
    d = robust_portfolio(m.mu_hat, cov, m.r, problem.ambiguity.epsilon, problem.prefs.R)
    return _infinite_report(problem, d, cov)


def solve_finite(problem: ValidatedProblem) -> FiniteHorizonReport:
    """Finite-horizon robust rule; always well-posed."""
    h = problem.prefs.horizon
    if not isinstance(h, Finite):
        raise UnsupportedVariant("solve_finite requires a finite horizon")
    m = problem.market
    cov = worst_case_cov(problem.ambiguity, m.sigma_cov)
    d = robust_portfolio(m.mu_hat, cov, m.r, problem.ambiguity.epsilon, problem.prefs.R)
    k = k_epsilon(problem.prefs, m.r, d.H_eps_plus)
    return FiniteHorizonReport(
        d.pi, k, d.H, d.H_eps_plus, d.worst_mu, cov, d.merton_pi, d.shrink,
        problem.ambiguity.epsilon, float(h.T), float(h.A), problem=problem,
    )


def solve(problem: ValidatedProblem):
    """Dispatch on horizon and volatility-ambiguity variant."""
    if isinstance(problem.ambiguity.vol_ambiguity, FrobeniusBall):
        if problem.prefs.is_finite:
            raise UnsupportedVariant("finite-horizon Frobenius-ball ambiguity is not supported")
        from .frobenius import solve_infinite_frobenius

        return solve_infinite_frobenius(problem)
    if problem.prefs.is_finite:
        return solve_finite(problem)
    return solve_infinite(problem)


# ---------------------------------------------------------------------------
# Optimal wealth
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WealthLaw:
    """log w_t = log w0 + log_drift t - consumption(t) + log_vol' W_t.

    For the infinite horizon consumption is folded into ``log_drift`` and
    ``consumption`` is None.
    """

    w0: float
    log_drift: float
    log_vol: Array
    consumption: Callable[[float], float] | None = None

    def mean_log(self, t: float) -> float:
        c = self.consumption(t) if self.consumption is not None else 0.0
        return float(np.log(self.w0) + self.log_drift * t - c)

    def var_log(self, t: float) -> float:
        return float(self.log_vol @ self.log_vol) * t


def optimal_wealth_law(report, w0: float = 1.0) -> WealthLaw:
    """Log-normal law of optimal wealth under the worst-case measure.

    The exponent follows from Ito's formula on the worst-case wealth SDE with
    theta = pi w: drift r + pi'(mu_bar - r1) - pi' S pi / 2 - c_rate, which for
    the robust pi equals r + (H^+)^2 (2R - 1)/(2 R^2) - c_rate.
    """
    report.require_well_posed()
    R = report.problem.prefs.R
    r = report.problem.market.r
    Hp = report.H_eps_plus
    base = r + Hp**2 * (2 * R - 1) / (2 * R**2)
    vol = cholesky(report.worst_cov).T @ report.pi_eps
    if report.horizon == "infinite":
        return WealthLaw(w0, base - report.gamma_eps, vol)
    return WealthLaw(w0, base, vol, report.consumption_integral)
