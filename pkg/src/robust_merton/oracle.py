"""Brute-force cross-checks for the closed forms.

None of these routines call the closed-form solvers; they sample or grid
the ambiguity sets directly and evaluate the HJB expression term by term.
Sampling is split into chunks whose generators are derived from
(seed, chunk index), so results do not depend on evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IllPosed, UnsupportedVariant
from .model import (
    AmbiguityModel,
    Array,
    DiagonalBox,
    EigenvalueCap,
    FrobeniusBall,
    cho_solve,
    cholesky,
)

CHUNK = 10_000
REFINE_ROUNDS = 12
REFINE_START = 0.3
REFINE_SHRINK = 0.35


@dataclass(frozen=True)
class OracleConfig:
    n_samples: int = 100_000
    grid_points_per_dim: int = 101
    seed: int = 0
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.n_samples < 1_000:
            raise ValueError("n_samples must be >= 1000")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")


def chunk_rng(seed: int, chunk: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream, chunk])))


def _chunks(total: int):
    for i, start in enumerate(range(0, total, CHUNK)):
        yield i, min(CHUNK, total - start)


def unit_sphere(rng: np.random.Generator, k: int, n: int) -> Array:
    u = rng.standard_normal((k, n))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# Drift ellipsoid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EllipsoidMin:
    min_value: float
    argmin: Array
    uniform_min: float


def _refine_steps(cfg: OracleConfig):
    """Sample budget split: half uniform, half in REFINE_ROUNDS shrinking local rounds."""
    uniform = cfg.n_samples - cfg.n_samples // 2
    per_round = max(1, (cfg.n_samples // 2) // REFINE_ROUNDS)
    steps = REFINE_START * REFINE_SHRINK ** np.arange(REFINE_ROUNDS)
    return uniform, per_round, steps


def ellipsoid_min_sampled(theta, cov, epsilon: float, mu_hat, cfg: OracleConfig) -> EllipsoidMin:
    """Minimize theta' mu over boundary points mu_hat + eps L u, |u| = 1.

    A linear objective is minimal on the boundary, so only boundary points are
    drawn: half of the budget uniformly on the sphere, the rest as random
    perturbations of the incumbent direction with geometrically shrinking
    step. ``uniform_min`` is the best value of the uniform phase alone.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    mu_hat = np.atleast_1d(np.asarray(mu_hat, dtype=np.float64))
    L = cholesky(cov)
    n = theta.shape[0]
    lt = L.T @ theta
    base = float(theta @ mu_hat)
    n_uniform, per_round, steps = _refine_steps(cfg)

    best, best_u = np.inf, None
    for i, k in _chunks(n_uniform):
        u = unit_sphere(chunk_rng(cfg.seed, i, 1), k, n)
        vals = base + epsilon * (u @ lt)
        j = int(np.argmin(vals))
        if vals[j] < best:
            best, best_u = float(vals[j]), u[j]
    uniform = best
    for i, step in enumerate(steps):
        rng = chunk_rng(cfg.seed, i, 4)
        u = best_u[None] + step * rng.standard_normal((per_round, n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        vals = base + epsilon * (u @ lt)
        j = int(np.argmin(vals))
        if vals[j] < best:
            best, best_u = float(vals[j]), u[j]
    return EllipsoidMin(best, mu_hat + epsilon * (L @ best_u), uniform)


# ---------------------------------------------------------------------------
# Volatility sets
# ---------------------------------------------------------------------------

def haar_orthogonal(rng: np.random.Generator, k: int, n: int) -> Array:
    g = rng.standard_normal((k, n, n))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diagonal(r, axis1=1, axis2=2))[:, None, :]


def sample_vol_set(amb: AmbiguityModel, sigma_hat, k: int, rng: np.random.Generator) -> Array:
    """k covariance matrices from the declared volatility set, shape (k, n, n)."""
    sigma_hat = np.atleast_2d(np.asarray(sigma_hat, dtype=np.float64))
    n = sigma_hat.shape[0]
    v = amb.vol_ambiguity
    if k == 0:
        return np.empty((0, n, n))
    if v is None:
        return np.broadcast_to(sigma_hat, (k, n, n)).copy()
    if isinstance(v, DiagonalBox):
        d = rng.uniform(v.lower, v.upper, size=(k, n))
        return d[:, :, None] * np.eye(n)[None]
    if isinstance(v, EigenvalueCap):
        cap = v.lambda_bar_sq
        lam = rng.uniform(0.05 * cap, cap, size=(k, n))
        lam[: k // 2, 0] = cap  # half the draws sit on the cap
        q = haar_orthogonal(rng, k, n)
        return np.einsum("kij,kj,klj->kil", q, lam, q)
    if isinstance(v, FrobeniusBall):
        x = rng.standard_normal((k, n, n))
        x = 0.5 * (x + np.transpose(x, (0, 2, 1)))
        x /= np.linalg.norm(x, axis=(1, 2), keepdims=True)
        radius = np.where(np.arange(k) % 2 == 0, 1.0, rng.uniform(size=k) ** (1.0 / (n * (n + 1) / 2)))
        return sigma_hat[None] + v.delta * radius[:, None, None] * x
    raise UnsupportedVariant(f"unknown volatility ambiguity {v!r}")


def _perturb_in_set(amb: AmbiguityModel, sigma_hat: Array, best: Array, step: float, k: int,
                    rng: np.random.Generator) -> Array:
    """k random neighbours of ``best`` inside the volatility set, at relative distance ~ step."""
    n = sigma_hat.shape[0]
    v = amb.vol_ambiguity
    if v is None:
        return sigma_hat[None].copy()
    if isinstance(v, DiagonalBox):
        d = np.diag(best)[None] + step * (v.upper - v.lower) * rng.standard_normal((k, n))
        d = np.clip(d, v.lower, v.upper)
        return d[:, :, None] * np.eye(n)[None]
    if isinstance(v, EigenvalueCap):
        cap = v.lambda_bar_sq
        lam, q = np.linalg.eigh(best)
        lam = np.clip(lam[None] + step * cap * rng.standard_normal((k, n)), 1e-6 * cap, cap)
        a = step * rng.standard_normal((k, n, n))
        rot, r = np.linalg.qr(np.eye(n)[None] + 0.5 * (a - np.transpose(a, (0, 2, 1))))
        rot = rot * np.sign(np.diagonal(r, axis1=1, axis2=2))[:, None, :]
        qk = q[None] @ rot
        return np.einsum("kij,kj,klj->kil", qk, lam, qk)
    if isinstance(v, FrobeniusBall):
        x = rng.standard_normal((k, n, n))
        d = (best - sigma_hat)[None] + step * v.delta * 0.5 * (x + np.transpose(x, (0, 2, 1)))
        nrm = np.linalg.norm(d, axis=(1, 2), keepdims=True)
        d = np.where(nrm > v.delta, d * (v.delta / np.maximum(nrm, np.finfo(float).tiny)), d)
        return sigma_hat[None] + d
    raise UnsupportedVariant(f"unknown volatility ambiguity {v!r}")


@dataclass(frozen=True)
class VolsetMin:
    value: float
    argmin_cov: Array
    uniform_value: float


def volset_min_sampled(theta, amb: AmbiguityModel, sigma_hat, epsilon: float, R: float,
                       cfg: OracleConfig) -> VolsetMin:
    """Minimize -eps sqrt(theta' S theta) - (R/2) theta' S theta over S in the set.

    This is the covariance part of the robust HJB per unit w V_w (marginal
    utility scale 1, curvature scale -R). Half of the budget samples the set
    directly; the rest perturbs the incumbent and projects back into the set
    with a shrinking step. ``uniform_value`` is the direct-sampling phase alone.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    sigma_hat = np.atleast_2d(np.asarray(sigma_hat, dtype=np.float64))

    def obj(covs):
        q = np.einsum("i,kij,j->k", theta, covs, theta)
        return -epsilon * np.sqrt(np.maximum(q, 0.0)) - 0.5 * R * q

    n_uniform, per_round, steps = _refine_steps(cfg)
    best, best_cov = np.inf, sigma_hat
    for i, k in _chunks(n_uniform):
        covs = sample_vol_set(amb, sigma_hat, k, chunk_rng(cfg.seed, i, 2))
        vals = obj(covs)
        j = int(np.argmin(vals))
        if vals[j] < best:
            best, best_cov = float(vals[j]), covs[j]
    uniform = best
    for i, step in enumerate(steps):
        covs = _perturb_in_set(amb, sigma_hat, best_cov, step, per_round, chunk_rng(cfg.seed, i, 5))
        vals = obj(covs)
        j = int(np.argmin(vals))
        if vals[j] < best:
            best, best_cov = float(vals[j]), covs[j]
    return VolsetMin(best, best_cov, uniform)


# ---------------------------------------------------------------------------
# HJB residual
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HJBResidual:
    analytic: float
    finite_difference: float
    scale: float
    method: str

    @property
    def relative(self) -> float:
        return self.analytic / self.scale


def _value_fn(report):
    prefs = report.problem.prefs
    R, rho = prefs.R, prefs.rho
    if report.horizon == "infinite":
        report.require_well_posed()
        g = report.gamma_eps ** (-R)

        def V(t, w):
            return g * np.exp(-rho * t) * w ** (1 - R) / (1 - R)

        def derivs(t, w):
            v = V(t, w)
            return -rho * v, g * np.exp(-rho * t) * w ** (-R), -R * g * np.exp(-rho * t) * w ** (-R - 1)

        return V, derivs

    def V(t, w):
        return report.f(t) * w ** (1 - R) / (1 - R)

    def derivs(t, w):
        f = float(report.f(t))
        return float(report.f_prime(t)) * w ** (1 - R) / (1 - R), f * w ** (-R), -R * f * w ** (-R - 1)

    return V, derivs


def _fd_derivs(V, t, w, h):
    ht = h * max(abs(t), 1.0)
    hw = h * w
    vt = (V(t + ht, w) - V(t - ht, w)) / (2 * ht)
    vw = (V(t, w + hw) - V(t, w - hw)) / (2 * hw)
    vww = (V(t, w + hw) - 2 * V(t, w) + V(t, w - hw)) / hw**2
    return vt, vw, vww


def _hjb_terms(report, t, w, theta, c, vt, vw, vww):
    from .kernel import worst_quadratic_form

    p = report.problem
    R, rho = p.prefs.R, p.prefs.rho
    m = p.market
    eps = p.ambiguity.epsilon
    q = worst_quadratic_form(p.ambiguity, m.sigma_cov, theta)
    util = np.exp(-rho * t) * c ** (1 - R) / (1 - R) if c > 0 else 0.0
    drift = m.r * w + float(theta @ m.excess) - eps * np.sqrt(q) - c
    return np.array([util, vt, vw * m.r * w, vw * float(theta @ m.excess), -vw * eps * np.sqrt(q),
                     -vw * c, 0.5 * q * vww]), drift


def hjb_residual(report, t: float, w: float, theta, c: float, h: float = 1e-5) -> HJBResidual:
    """Robust HJB expression at (t, w) for controls (theta, c).

    u(t,c) + V_t + V_w (r w + theta'(mu_hat - r1) - eps sqrt(q) - c) + q V_ww / 2,
    where q is theta' S theta maximized over the volatility set. Zero at the
    optimal controls and non-positive elsewhere. Derivatives are analytic for
    ``analytic`` and central differences (step ``h`` relative, Richardson with
    a larger step if the two disagree by more than 1e-6) for
    ``finite_difference``.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    V, derivs = _value_fn(report)
    exact = derivs(t, w)
    terms, _ = _hjb_terms(report, t, w, theta, c, *exact)
    scale = float(np.sum(np.abs(terms)))
    fd = _fd_derivs(V, t, w, h)
    method = "central"
    if max(abs(a - b) / abs(a) for a, b in zip(exact, fd) if a != 0) > 1e-6:
        hh = 1e-3
        d1 = _fd_derivs(V, t, w, hh)
        d2 = _fd_derivs(V, t, w, hh / 2)
        fd = tuple((4 * b - a) / 3 for a, b in zip(d1, d2))
        method = "richardson"
    fd_terms, _ = _hjb_terms(report, t, w, theta, c, *fd)
    return HJBResidual(float(np.sum(terms)), float(np.sum(fd_terms)), scale, method)


# ---------------------------------------------------------------------------
# Minimax gap
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MinimaxGap:
    lower: float
    upper: float
    gap: float
    argmin_mu: Array

    @property
    def relative(self) -> float:
        return self.gap / abs(self.lower)


def ellipsoid_grid(mu_hat, cov, epsilon: float, resolution: int, seed: int = 0) -> Array:
    """Constant drifts covering U_eps(cov).

    n = 1: ``resolution`` evenly spaced points of the interval. n = 2: the
    boundary ellipse at ``resolution`` equally spaced angles. n >= 3: random
    boundary points. Interior points are not needed for the convex objectives
    used here unless their unconstrained minimizer is feasible, which callers
    add explicitly.
    """
    mu_hat = np.atleast_1d(np.asarray(mu_hat, dtype=np.float64))
    n = mu_hat.shape[0]
    L = cholesky(cov)
    if epsilon == 0:
        return mu_hat[None].copy()
    if n == 1:
        u = np.linspace(-1.0, 1.0, resolution)[:, None]
    elif n == 2:
        a = np.linspace(0.0, 2 * np.pi, resolution, endpoint=False)
        u = np.column_stack([np.cos(a), np.sin(a)])
    else:
        u = unit_sphere(chunk_rng(seed, 0, 3), resolution, n)
    return mu_hat[None] + epsilon * u @ L.T


def merton_value(prefs, r: float, mu, cov, w0: float = 1.0) -> float:
    """Classical infinite-horizon Merton value at constant (mu, cov); inf if ill-posed."""
    R = prefs.R
    ex = np.atleast_1d(mu) - r
    H2 = float(ex @ cho_solve(cholesky(cov), ex))
    gamma = (prefs.rho + (R - 1) * (r + H2 / (2 * R))) / R
    if gamma <= 0:
        return np.inf if R < 1 else -np.inf
    return gamma ** (-R) * w0 ** (1 - R) / (1 - R)


def minimax_gap(report, mu_grid_resolution: int = 10_000, w0: float = 1.0) -> MinimaxGap:
    """inf over constant drifts of the Merton value, minus the robust value.

    Weak duality makes the gap non-negative; it vanishes at the worst drift.
    """
    if report.horizon != "infinite":
        raise UnsupportedVariant("minimax_gap is defined for the infinite horizon")
    if not report.well_posed:
        raise IllPosed(report.diagnostic, report.gamma_eps, report.witness)
    p = report.problem
    m = p.market
    cov = report.worst_cov
    lower = report.value_at(w0)
    grid = ellipsoid_grid(m.mu_hat, cov, p.ambiguity.epsilon, mu_grid_resolution)
    L = cholesky(cov)
    ones = np.full(m.n, m.r)
    z = np.linalg.solve(L, (ones - m.mu_hat))
    if z @ z <= p.ambiguity.epsilon ** 2:
        grid = np.vstack([grid, ones])
    R = p.prefs.R
    zs = np.linalg.solve(L, (grid - m.r).T)
    gam = (p.prefs.rho + (R - 1) * (m.r + np.sum(zs**2, axis=0) / (2 * R))) / R
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(gam > 0, np.abs(gam) ** (-R) * w0 ** (1 - R) / (1 - R),
                        np.inf if R < 1 else -np.inf)
    j = int(np.argmin(vals))
    upper = float(vals[j])
    return MinimaxGap(lower, upper, upper - lower, grid[j])
