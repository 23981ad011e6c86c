"""Domain types, validation and elementary market quantities.

Covariance is the primitive input. Whenever a volatility matrix is needed
(simulation, market price of ambiguity) it is the lower Cholesky factor of
the covariance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import solve_triangular

from .errors import (
    BadMarket,
    BadPreferences,
    CapBelowSpectrum,
    DeltaTooLarge,
    InconsistentBox,
    NonSPDCovariance,
)

SYM_RTOL = 1e-12
R_ONE_GAP = 1e-9

Array = NDArray[np.float64]


# ---------------------------------------------------------------------------
# Linear algebra helpers
# ---------------------------------------------------------------------------

def as_cov(cov) -> Array:
    """Return ``cov`` as a symmetrized 2-D float array.

    Raises NonSPDCovariance when the input is not square or is asymmetric
    beyond a relative tolerance of 1e-12.
    """
    a = np.atleast_2d(np.asarray(cov, dtype=np.float64))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonSPDCovariance(f"covariance must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonSPDCovariance("covariance has non-finite entries")
    scale = max(np.max(np.abs(a)), np.finfo(float).tiny)
    if np.max(np.abs(a - a.T)) > SYM_RTOL * scale:
        raise NonSPDCovariance("covariance is not symmetric to 1e-12 relative")
    return 0.5 * (a + a.T)


def cholesky(cov) -> Array:
    """Lower Cholesky factor of a symmetric positive definite matrix."""
    a = as_cov(cov)
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NonSPDCovariance("covariance is not positive definite (Cholesky failed)") from exc


def cho_solve(chol: Array, b) -> Array:
    """Solve (L L') x = b given the lower factor L."""
    y = solve_triangular(chol, b, lower=True)
    return solve_triangular(chol.T, y, lower=False)


def mahalanobis_sq(x, chol: Array) -> float:
    """x' (L L')^{-1} x, via one triangular solve."""
    z = solve_triangular(chol, np.asarray(x, dtype=np.float64), lower=True)
    return float(z @ z)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MarketModel:
    """Riskless rate, drift estimate and covariance estimate (annualized)."""

    r: float
    mu_hat: Array
    sigma_cov: Array

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu_hat, dtype=np.float64)).copy()
        cov = np.atleast_2d(np.asarray(self.sigma_cov, dtype=np.float64)).copy()
        mu.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mu_hat", mu)
        object.__setattr__(self, "sigma_cov", cov)
        object.__setattr__(self, "r", float(self.r))

    @property
    def n(self) -> int:
        return self.mu_hat.shape[0]

    @property
    def excess(self) -> Array:
        return self.mu_hat - self.r


@dataclass(frozen=True)
class DiagonalBox:
    """Diagonal covariances with variances in [lower_i, upper_i]."""

    lower: Array
    upper: Array

    def __post_init__(self):
        object.__setattr__(self, "lower", np.atleast_1d(np.asarray(self.lower, dtype=np.float64)))
        object.__setattr__(self, "upper", np.atleast_1d(np.asarray(self.upper, dtype=np.float64)))


@dataclass(frozen=True)
class EigenvalueCap:
    """Covariances whose largest eigenvalue is at most ``lambda_bar_sq``."""

    lambda_bar_sq: float


@dataclass(frozen=True)
class FrobeniusBall:
    """Covariances within Frobenius distance ``delta`` of the estimate."""

    delta: float


VolAmbiguity = Union[None, DiagonalBox, EigenvalueCap, FrobeniusBall]


@dataclass(frozen=True)
class AmbiguityModel:
    epsilon: float
    vol_ambiguity: VolAmbiguity = None

    @property
    def vol_kind(self) -> str:
        v = self.vol_ambiguity
        if v is None:
            return "none"
        if isinstance(v, DiagonalBox):
            return "box"
        if isinstance(v, EigenvalueCap):
            return "cap"
        return "frobenius"


@dataclass(frozen=True)
class Infinite:
    pass


@dataclass(frozen=True)
class Finite:
    T: float
    A: float = 1.0


Horizon = Union[Infinite, Finite]


@dataclass(frozen=True)
class Preferences:
    """CRRA preferences: impatience rho, relative risk aversion R, horizon."""

    rho: float
    R: float
    horizon: Horizon = field(default_factory=Infinite)

    @property
    def is_finite(self) -> bool:
        return isinstance(self.horizon, Finite)


@dataclass(frozen=True)
class ValidatedProblem:
    """A problem whose inputs passed every invariant, with the factor of Sigma_hat."""

    market: MarketModel
    ambiguity: AmbiguityModel
    prefs: Preferences
    chol: Array

    def replace(self, **changes) -> "ValidatedProblem":
        """Re-validate with some of market/ambiguity/prefs swapped out."""
        return validate(
            changes.get("market", self.market),
            changes.get("ambiguity", self.ambiguity),
            changes.get("prefs", self.prefs),
        )


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def _check_prefs(prefs: Preferences) -> None:
    if not (np.isfinite(prefs.rho) and prefs.rho > 0):
        raise BadPreferences(f"rho must be > 0, got {prefs.rho}")
    if not (np.isfinite(prefs.R) and prefs.R > 0):
        raise BadPreferences(f"R must be > 0, got {prefs.R}")
    if abs(prefs.R - 1.0) <= R_ONE_GAP:
        raise BadPreferences("R = 1 (log utility) is not supported")
    h = prefs.horizon
    if isinstance(h, Finite):
        if not (np.isfinite(h.T) and h.T > 0):
            raise BadPreferences(f"horizon T must be > 0, got {h.T}")
        if not (np.isfinite(h.A) and h.A > 0):
            raise BadPreferences(f"bequest weight A must be > 0, got {h.A}")
    elif not isinstance(h, Infinite):
        raise BadPreferences(f"unknown horizon {h!r}")


def _check_vol(amb: AmbiguityModel, cov: Array) -> None:
    v = amb.vol_ambiguity
    n = cov.shape[0]
    if v is None:
        return
    if isinstance(v, DiagonalBox):
        lo, up = v.lower, v.upper
        if lo.shape != (n,) or up.shape != (n,):
            raise InconsistentBox(f"box bounds must have length {n}")
        off = cov - np.diag(np.diag(cov))
        if np.max(np.abs(off)) > SYM_RTOL * np.max(np.abs(cov)):
            raise InconsistentBox("diagonal box requires a diagonal covariance estimate")
        d = np.diag(cov)
        if not np.all(lo > 0):
            raise InconsistentBox("box lower variances must be > 0")
        if not (np.all(lo <= d) and np.all(d <= up)):
            raise InconsistentBox("box does not contain the estimated variances")
        return
    if isinstance(v, EigenvalueCap):
        lam_max = float(np.linalg.eigvalsh(cov)[-1])
        if not (np.isfinite(v.lambda_bar_sq) and v.lambda_bar_sq >= lam_max):
            raise CapBelowSpectrum(
                f"cap {v.lambda_bar_sq} is below the largest eigenvalue {lam_max}"
            )
        return
    if isinstance(v, FrobeniusBall):
        lam_min = float(np.linalg.eigvalsh(cov)[0])
        if not (np.isfinite(v.delta) and v.delta >= 0):
            raise DeltaTooLarge(f"delta must be >= 0, got {v.delta}")
        if v.delta >= lam_min:
            raise DeltaTooLarge(
                f"delta {v.delta} must be below the smallest eigenvalue {lam_min}"
            )
        return
    raise TypeError(f"unknown volatility ambiguity {v!r}")


def validate(model: MarketModel, amb: AmbiguityModel, prefs: Preferences) -> ValidatedProblem:
    """Check every standing assumption and return a problem handle.

    Raises
    ------
    NonSPDCovariance, InconsistentBox, CapBelowSpectrum, DeltaTooLarge,
    BadPreferences, BadMarket
    """
    n = model.n
    if n < 1 or model.mu_hat.ndim != 1:
        raise BadMarket("need at least one risky asset")
    if not (np.isfinite(model.r) and np.all(np.isfinite(model.mu_hat))):
        raise BadMarket("market parameters must be finite")
    cov = as_cov(model.sigma_cov)
    if cov.shape != (n, n):
        raise BadMarket(f"covariance shape {cov.shape} does not match {n} assets")
    chol = cholesky(cov)
    if not (np.isfinite(amb.epsilon) and amb.epsilon >= 0):
        raise BadMarket(f"epsilon must be >= 0, got {amb.epsilon}")
    _check_vol(amb, cov)
    _check_prefs(prefs)
    market = MarketModel(model.r, model.mu_hat, cov)
    return ValidatedProblem(market, amb, prefs, chol)


def sharpe_ratio(mu, cov, r: float, chol: Array | None = None) -> float:
    """Market Sharpe ratio sqrt((mu - r1)' cov^{-1} (mu - r1)).

    Uses a Cholesky factor (computed unless supplied); never forms the inverse.
    """
    if chol is None:
        chol = cholesky(cov)
    ex = np.atleast_1d(np.asarray(mu, dtype=np.float64)) - r
    return float(np.sqrt(mahalanobis_sq(ex, chol)))


def market_price_of_ambiguity(mu, model: MarketModel, chol: Array | None = None) -> Array:
    """Girsanov kernel sigma' Sigma^{-1} (mu - mu_hat) with sigma = chol.

    Since Sigma = L L', this is simply L^{-1} (mu - mu_hat), so its squared
    norm is the Mahalanobis distance of mu from the drift estimate.
    """
    if chol is None:
        chol = cholesky(model.sigma_cov)
    d = np.atleast_1d(np.asarray(mu, dtype=np.float64)) - model.mu_hat
    return solve_triangular(chol, d, lower=True)
