"""Monte Carlo simulation of wealth and consumption under constant (mu, Sigma).

Controls are proportional to wealth (theta = pi w, c = rate(t) w), so the
wealth SDE is geometric. ``ExactLog`` integrates log-wealth exactly (the
deterministic consumption integral per step by Simpson's rule); ``Euler``
steps the level SDE and flags paths that hit zero instead of clipping them.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import HorizonMismatch, InvalidScheme
from .kernel import utility_growth_rate
from .model import Array, Preferences, ValidatedProblem, cholesky
from .rng import standard_normals

SCHEMES = ("ExactLog", "Euler")
DEFAULT_DT = 1.0 / 2520
DEFAULT_INFINITE_TMAX = 200.0


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 10_000
    dt: float = DEFAULT_DT
    t_max: float | None = None
    seed: int = 0
    scheme: str = "ExactLog"
    record_stride: int | None = None
    n_threads: int = 1
    chunk_paths: int = 2_000

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InvalidScheme(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.t_max is not None and not self.t_max > 0:
            raise ValueError("t_max must be > 0")


@dataclass(frozen=True)
class Measure:
    """Constant drift and covariance generating the paths."""

    mu: Array
    cov: Array
    tag: str = "custom"


@dataclass(frozen=True)
class Controls:
    """Proportional controls: fraction ``pi`` in the risky assets and a
    consumption rate that is either a constant or a function of time.
    ``consumption=None`` means no consumption at all.
    """

    pi: Array
    consumption: float | Callable | None

    @property
    def constant_rate(self) -> float | None:
        c = self.consumption
        return float(c) if isinstance(c, (int, float, np.floating)) else None

    def rate(self, t: Array) -> Array:
        c = self.consumption
        if c is None:
            return np.zeros_like(t)
        if callable(c):
            return np.asarray(c(t), dtype=np.float64)
        return np.full_like(t, float(c))


def nominal_measure(problem: ValidatedProblem) -> Measure:
    return Measure(problem.market.mu_hat, problem.market.sigma_cov, "nominal")


def worst_measure(report) -> Measure:
    report.require_well_posed()
    return Measure(report.worst_mu, report.worst_cov, "worst")


def optimal_controls(report) -> Controls:
    report.require_well_posed()
    if report.horizon == "infinite":
        return Controls(report.pi_eps, float(report.gamma_eps))
    return Controls(report.pi_eps, report.consumption_rate)


@dataclass(frozen=True)
class PathEnsemble:
    times: Array
    wealth: Array
    consumption: Array
    measure_tag: str
    seed: int
    scheme: str
    discounted_utility: Array
    terminal_wealth: Array
    rejected: Array
    t_max: float
    dt: float
    w0: float
    horizon: str
    controls: Controls = field(repr=False)
    measure: Measure = field(repr=False)
    r: float = 0.0

    @property
    def n_paths(self) -> int:
        return self.terminal_wealth.shape[0]

    @property
    def n_rejected(self) -> int:
        return int(np.count_nonzero(self.rejected))


def _simulate_chunk(p0, p1, cfg, n_steps, dt, base_drift, loading, controls, rho, R, w0):
    times = np.arange(n_steps + 1) * dt
    rate = controls.rate(times)
    z = standard_normals(cfg.seed, (p0, p1), (0, n_steps), loading.shape[0])
    shock = (z @ loading) * np.sqrt(dt)
    m = p1 - p0
    rejected = np.zeros(m, dtype=bool)
    if cfg.scheme == "ExactLog":
        if controls.constant_rate is not None:
            cons = np.full(n_steps, controls.constant_rate * dt)
        else:
            mid = controls.rate(times[:-1] + 0.5 * dt)
            cons = dt / 6.0 * (rate[:-1] + 4.0 * mid + rate[1:])
        inc = (base_drift * dt - cons)[None, :] + shock
        logw = np.empty((m, n_steps + 1))
        logw[:, 0] = np.log(w0)
        np.cumsum(inc, axis=1, out=logw[:, 1:])
        logw[:, 1:] += np.log(w0)
        wealth = np.exp(logw)
    else:
        # level Euler step for the geometric SDE: w_{k+1} = w_k (1 + a_k dt + b dW)
        factor = 1.0 + ((base_drift + 0.5 * float(loading @ loading)) - rate[:-1])[None, :] * dt + shock
        bad = factor <= 0
        rejected = bad.any(axis=1)
        wealth = np.empty((m, n_steps + 1))
        wealth[:, 0] = w0
        np.cumprod(factor, axis=1, out=wealth[:, 1:])
        wealth[:, 1:] *= w0
        if rejected.any():
            first = np.argmax(bad, axis=1)
            cols = np.arange(n_steps + 1)[None, :]
            wealth[(cols > first[:, None]) & rejected[:, None]] = np.nan
    consumption = wealth * rate[None, :]
    if controls.consumption is None:
        util = np.zeros(m)
    else:
        integrand = np.exp(-rho * times)[None, :] * consumption ** (1.0 - R) / (1.0 - R)
        util = dt * (0.5 * integrand[:, 0] + integrand[:, 1:-1].sum(axis=1) + 0.5 * integrand[:, -1])
    util[rejected] = np.nan
    return wealth, consumption, util, rejected


def simulate(
    problem: ValidatedProblem,
    solution,
    measure: Measure,
    cfg: SimConfig,
    controls: Controls | None = None,
    w0: float = 1.0,
) -> PathEnsemble:
    """Simulate wealth under ``measure`` with the solution's optimal controls.

    Paths are split into fixed chunks whose normals depend only on path and
    step indices, so the result is bit-identical for any ``cfg.n_threads``.
    """
    if controls is None:
        controls = optimal_controls(solution)
    prefs = problem.prefs
    if prefs.is_finite:
        t_max = prefs.horizon.T if cfg.t_max is None else cfg.t_max
    else:
        t_max = DEFAULT_INFINITE_TMAX if cfg.t_max is None else cfg.t_max
    n_steps = max(1, int(round(t_max / cfg.dt)))
    dt = t_max / n_steps

    chol = cholesky(measure.cov)
    pi = np.atleast_1d(np.asarray(controls.pi, dtype=np.float64))
    mu = np.atleast_1d(np.asarray(measure.mu, dtype=np.float64))
    r = problem.market.r
    loading = chol.T @ pi
    # log-wealth drift before consumption
    base_drift = r + float(pi @ (mu - r)) - 0.5 * float(loading @ loading)

    stride = cfg.record_stride or max(1, n_steps // 100)
    rec = np.arange(0, n_steps + 1, stride)
    if rec[-1] != n_steps:
        rec = np.append(rec, n_steps)

    bounds = [(p, min(p + cfg.chunk_paths, cfg.n_paths)) for p in range(0, cfg.n_paths, cfg.chunk_paths)]

    def run(b):
        w, c, u, rej = _simulate_chunk(b[0], b[1], cfg, n_steps, dt, base_drift, loading,
                                       controls, prefs.rho, prefs.R, w0)
        return w[:, rec], c[:, rec], u, rej, w[:, -1]

    if cfg.n_threads > 1:
        with ThreadPoolExecutor(cfg.n_threads) as pool:
            parts = list(pool.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]

    return PathEnsemble(
        times=rec * dt,
        wealth=np.concatenate([p[0] for p in parts]),
        consumption=np.concatenate([p[1] for p in parts]),
        measure_tag=measure.tag,
        seed=cfg.seed,
        scheme=cfg.scheme,
        discounted_utility=np.concatenate([p[2] for p in parts]),
        terminal_wealth=np.concatenate([p[4] for p in parts]),
        rejected=np.concatenate([p[3] for p in parts]),
        t_max=t_max,
        dt=dt,
        w0=w0,
        horizon="finite" if prefs.is_finite else "infinite",
        controls=controls,
        measure=measure,
        r=r,
    )


@dataclass(frozen=True)
class UtilityEstimate:
    estimate: float
    std_error: float
    n_used: int
    tail: float = 0.0

    @property
    def total(self) -> float:
        """Truncated estimate plus the analytic tail (infinite horizon)."""
        return self.estimate + self.tail


def tail_value(ens: PathEnsemble, prefs: Preferences) -> float:
    """Expected discounted utility beyond t_max for constant-rate proportional controls.

    E[e^{-rho t} c_t^{1-R}] decays like exp(kappa t), so the tail is
    c^{1-R} w0^{1-R} e^{kappa t_max} / ((1-R)(-kappa)); infinite if kappa >= 0.
    """
    c = ens.controls.constant_rate
    if c is None:
        raise HorizonMismatch("tail needs a constant consumption rate")
    if c == 0:
        return 0.0
    R = prefs.R
    kappa = utility_growth_rate(prefs, ens.r, ens.controls.pi, c, ens.measure.mu, ens.measure.cov)
    scale = c ** (1 - R) * ens.w0 ** (1 - R) / (1 - R)
    if kappa >= 0:
        return float(np.sign(scale) * np.inf)
    return float(scale * np.exp(kappa * ens.t_max) / (-kappa))


def realized_utility(ens: PathEnsemble, prefs: Preferences) -> UtilityEstimate:
    """Sample mean and standard error of realized discounted utility.

    Finite horizon adds the bequest A w_T^{1-R}/(1-R). Infinite horizon
    reports the analytic tail beyond the truncation in ``tail``.
    """
    R = prefs.R
    ok = ~ens.rejected
    per_path = ens.discounted_utility[ok]
    tail = 0.0
    if prefs.is_finite:
        if ens.horizon != "finite" or abs(ens.t_max - prefs.horizon.T) > 1e-12 * max(1.0, ens.t_max):
            raise HorizonMismatch(f"ensemble covers [0, {ens.t_max}] but T = {prefs.horizon.T}")
        per_path = per_path + prefs.horizon.A * ens.terminal_wealth[ok] ** (1 - R) / (1 - R)
    else:
        if ens.horizon != "infinite":
            raise HorizonMismatch("ensemble was simulated for a finite horizon")
        tail = tail_value(ens, prefs)
    n = per_path.shape[0]
    se = float(np.std(per_path, ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    return UtilityEstimate(float(np.mean(per_path)), se, n, tail)


def proportional_value(prefs: Preferences, r: float, controls: Controls, measure: Measure, w0: float = 1.0) -> float:
    """Exact infinite-horizon expected utility of constant proportional controls."""
    c = controls.constant_rate
    R = prefs.R
    kappa = utility_growth_rate(prefs, r, controls.pi, c, measure.mu, measure.cov)
    scale = c ** (1 - R) * w0 ** (1 - R) / (1 - R)
    return float(scale / (-kappa)) if kappa < 0 else float(np.sign(scale) * np.inf)


# ---------------------------------------------------------------------------
# Stress test over plausible measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StressRow:
    tag: str
    mu: Array
    cov: Array
    estimate: float
    std_error: float
    analytic: float | None


def sample_measures(problem: ValidatedProblem, report, n_measures: int, seed: int) -> list[Measure]:
    """The worst-case measure followed by n_measures - 1 draws from the ambiguity set.

    Covariances come from the volatility set, drifts from the ellipsoid of
    that covariance (half of them on its boundary).
    """
    from .oracle import sample_vol_set

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 7])))
    m = problem.market
    eps = problem.ambiguity.epsilon
    out = [worst_measure(report)]
    covs = sample_vol_set(problem.ambiguity, m.sigma_cov, max(n_measures - 1, 0), rng)
    for i, cov in enumerate(covs):
        u = rng.standard_normal(m.n)
        u /= np.linalg.norm(u)
        radius = 1.0 if i % 2 == 0 else rng.uniform() ** (1.0 / m.n)
        mu = m.mu_hat + eps * radius * (np.linalg.cholesky(cov) @ u)
        out.append(Measure(mu, cov, f"sample{i + 1}"))
    return out


def ambiguity_stress(
    problem: ValidatedProblem,
    report,
    cfg: SimConfig,
    n_measures: int,
    controls: Controls | None = None,
    measure_seed: int = 0,
) -> list[StressRow]:
    """Realized utility of fixed controls under many plausible measures.

    Every measure reuses ``cfg.seed`` (common random numbers), so differences
    between rows reflect the measures rather than sampling noise.
    """
    if controls is None:
        controls = optimal_controls(report)
    rows = []
    for meas in sample_measures(problem, report, n_measures, measure_seed):
        ens = simulate(problem, report, meas, cfg, controls=controls)
        est = realized_utility(ens, problem.prefs)
        analytic = None
        if not problem.prefs.is_finite and controls.constant_rate is not None:
            analytic = proportional_value(problem.prefs, problem.market.r, controls, meas)
        rows.append(StressRow(meas.tag, meas.mu, meas.cov, est.total, est.std_error, analytic))
    return rows
