"""Configuration files, return-data estimation, result persistence and the CLI.

Exit codes: 0 success, 1 input error, 2 ill-posed problem or failed check.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import struct
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    DegenerateSample,
    MalformedCSV,
    NonSPDCovariance,
    RobustMertonError,
    WriteFailure,
)
from .kernel import solve, worst_case_cov, worst_case_drift
from .model import (
    AmbiguityModel,
    DiagonalBox,
    EigenvalueCap,
    Finite,
    FrobeniusBall,
    Infinite,
    MarketModel,
    Preferences,
    ValidatedProblem,
    cholesky,
    validate,
)
from .oracle import OracleConfig
from .sim import Measure, SimConfig, nominal_measure, realized_utility, simulate, worst_measure

FLOAT_FMT = "%.17g"
RMPE_MAGIC = b"RMPE"
RMPE_VERSION = 1


# ---------------------------------------------------------------------------
# Market estimation
# ---------------------------------------------------------------------------

def estimate_market(returns_csv, periods_per_year: float, r: float) -> MarketModel:
    """Annualized sample mean and unbiased covariance of simple per-period returns.

    Annualization is linear (mean x periods, covariance x periods); log-return
    data will give a shifted drift estimate.
    """
    path = Path(returns_csv)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCSV(f"{path}: empty file") from None
        n = len(header)
        rows = []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != n:
                raise MalformedCSV(f"{path}:{reader.line_num}: expected {n} columns, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise MalformedCSV(f"{path}:{reader.line_num}: non-numeric cell ({exc})") from None
    data = np.asarray(rows, dtype=np.float64).reshape(-1, n)
    if not np.all(np.isfinite(data)):
        raise MalformedCSV(f"{path}: non-finite return value")
    if data.shape[0] < n + 2:
        raise DegenerateSample(f"{path}: need at least {n + 2} rows for {n} assets, got {data.shape[0]}")
    mu = data.mean(axis=0) * periods_per_year
    cov = np.atleast_2d(np.cov(data, rowvar=False, ddof=1)) * periods_per_year
    eig = np.linalg.eigvalsh(cov)
    if eig[-1] <= 0 or eig[0] <= 1e-12 * eig[-1]:
        raise DegenerateSample(f"{path}: sample covariance is singular")
    try:
        cholesky(cov)
    except NonSPDCovariance as exc:
        raise DegenerateSample(f"{path}: sample covariance is not positive definite") from exc
    return MarketModel(r, mu, cov)


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProblemConfig:
    problem: ValidatedProblem
    sim: SimConfig | None
    oracle: OracleConfig
    w0: float
    raw: dict


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing key {key!r}")
    return d[key]


def parse_vol(vol) -> object:
    if vol is None or vol == "none":
        return None
    if not isinstance(vol, dict) or len(vol) != 1:
        raise ConfigError("ambiguity.vol must be 'none' or a single-key object box/cap/frobenius")
    (kind, body), = vol.items()
    if kind == "box":
        return DiagonalBox(_require(body, "lower", "vol.box"), _require(body, "upper", "vol.box"))
    if kind == "cap":
        return EigenvalueCap(float(_require(body, "lambda_bar_sq", "vol.cap")))
    if kind == "frobenius":
        return FrobeniusBall(float(_require(body, "delta", "vol.frobenius")))
    raise ConfigError(f"unknown volatility ambiguity {kind!r}")


def parse_config(raw: dict, base_dir: Path = Path(".")) -> ProblemConfig:
    market = _require(raw, "market", "config")
    inline = "mu_hat" in market or "cov" in market
    if inline == ("returns_csv" in market):
        raise ConfigError("market needs exactly one of inline {r, mu_hat, cov} or returns_csv")
    r = float(_require(market, "r", "market"))
    if inline:
        model = MarketModel(r, _require(market, "mu_hat", "market"), _require(market, "cov", "market"))
    else:
        csv_path = base_dir / market["returns_csv"]
        if not csv_path.exists():
            raise ConfigError(f"returns file {csv_path} does not exist")
        model = estimate_market(csv_path, float(_require(market, "periods_per_year", "market")), r)

    amb_raw = _require(raw, "ambiguity", "config")
    amb = AmbiguityModel(float(_require(amb_raw, "epsilon", "ambiguity")), parse_vol(amb_raw.get("vol")))

    pr = _require(raw, "preferences", "config")
    hz = pr.get("horizon", "infinite")
    if hz == "infinite":
        horizon = Infinite()
    elif isinstance(hz, dict):
        horizon = Finite(float(_require(hz, "T", "horizon")), float(hz.get("A", 1.0)))
    else:
        raise ConfigError("preferences.horizon must be 'infinite' or {T, A}")
    prefs = Preferences(float(_require(pr, "rho", "preferences")), float(_require(pr, "R", "preferences")), horizon)

    sim = None
    if raw.get("sim") is not None:
        s = raw["sim"]
        known = {"n_paths", "dt", "t_max", "seed", "scheme", "record_stride", "n_threads", "chunk_paths"}
        extra = set(s) - known
        if extra:
            raise ConfigError(f"sim: unknown keys {sorted(extra)}")
        try:
            sim = SimConfig(**s)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"sim: {exc}") from None
    o = raw.get("oracle") or {}
    try:
        oracle = OracleConfig(**o)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"oracle: {exc}") from None
    return ProblemConfig(validate(model, amb, prefs), sim, oracle, float(raw.get("w0", 1.0)), raw)


def load_config(path) -> ProblemConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(raw, path.parent)


# ---------------------------------------------------------------------------
# Result serialization
# ---------------------------------------------------------------------------

def _vec(x):
    return None if x is None else [float(v) for v in np.ravel(x)]


def _mat(x):
    return None if x is None else [[float(v) for v in row] for row in np.atleast_2d(x)]


def _finite_or_none(x):
    x = float(x)
    return x if np.isfinite(x) else None


def solution_to_dict(report, w0: float = 1.0) -> dict:
    """Schema-stable dict of a solution; ill-posed values are null."""
    finite = report.horizon == "finite"
    w = report.witness if not finite else None
    return {
        "horizon": report.horizon,
        "well_posed": bool(report.well_posed),
        "epsilon": float(report.epsilon),
        "pi": _vec(report.pi_eps),
        "gamma_eps": None if finite else float(report.gamma_eps),
        "g0": float(report.g(0.0)) if finite else None,
        "k_eps": float(report.k_eps) if finite else None,
        "H": float(report.H),
        "H_eps_plus": float(report.H_eps_plus),
        "shrink": float(report.shrink),
        "worst_mu": _vec(report.worst_mu),
        "worst_cov": _mat(report.worst_cov),
        "w0": float(w0),
        "value": _finite_or_none(report.value_at(w0)),
        "diagnostic": "" if finite else report.diagnostic,
        "witness": None if w is None else {
            "kind": w.kind, "pi": _vec(w.pi), "lam": w.lam, "k": w.k,
            "growth": w.growth, "decay": w.decay,
        },
    }


def _fmt_vec(v) -> str:
    if v is None:
        return "n/a"
    if len(v) == 1:
        return f"{v[0]:.4f}"
    return "[" + ", ".join(f"{x:.4f}" for x in v) + "]"


def format_text(d: dict) -> str:
    lines = [
        f"horizon = {d['horizon']}",
        f"well_posed = {str(d['well_posed']).lower()}",
        f"epsilon = {d['epsilon']:.4f}",
        f"pi = {_fmt_vec(d['pi'])}",
    ]
    if d["horizon"] == "infinite":
        lines.append(f"gamma_eps = {d['gamma_eps']:.4f}")
    else:
        lines.append(f"g0 = {d['g0']:.6f}")
        lines.append(f"k_eps = {d['k_eps']:.6f}")
    lines += [
        f"H = {d['H']:.6f}",
        f"H_eps_plus = {d['H_eps_plus']:.6f}",
        f"shrink = {d['shrink']:.6f}",
        f"worst_mu = {_fmt_vec(d['worst_mu'])}",
        "worst_cov = [" + "; ".join(_fmt_vec(row) for row in d["worst_cov"]) + "]",
        f"value(w0={d['w0']:g}) = " + ("inf" if d["value"] is None else f"{d['value']:.8g}"),
    ]
    if d["diagnostic"]:
        lines.append(f"diagnostic: {d['diagnostic']}")
    return "\n".join(lines) + "\n"


def format_csv(d: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for key, val in d.items():
        if key in ("witness", "diagnostic"):
            continue
        if isinstance(val, list):
            flat = np.ravel(np.asarray(val, dtype=np.float64))
            for i, x in enumerate(flat):
                w.writerow([f"{key}[{i}]", FLOAT_FMT % x])
        elif isinstance(val, bool):
            w.writerow([key, str(val).lower()])
        elif isinstance(val, float):
            w.writerow([key, FLOAT_FMT % val])
        else:
            w.writerow([key, "" if val is None else val])
    return buf.getvalue()


def write_ensemble(path, ens) -> None:
    """Binary path dump: b"RMPE", u32 version, u64 n_paths, u64 n_times, then
    times, wealth and consumption as little-endian f64, row-major."""
    try:
        with open(path, "wb") as fh:
            fh.write(RMPE_MAGIC)
            fh.write(struct.pack("<IQQ", RMPE_VERSION, ens.wealth.shape[0], ens.times.shape[0]))
            for arr in (ens.times, ens.wealth, ens.consumption):
                fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    except OSError as exc:
        raise WriteFailure(f"cannot write {path}: {exc}") from None


def read_ensemble(path) -> dict:
    data = Path(path).read_bytes()
    if data[:4] != RMPE_MAGIC:
        raise ValueError("not an RMPE file")
    version, n_paths, n_times = struct.unpack_from("<IQQ", data, 4)
    if version != RMPE_VERSION:
        raise ValueError(f"unsupported RMPE version {version}")
    off = 4 + struct.calcsize("<IQQ")
    flat = np.frombuffer(data, dtype="<f8", offset=off)
    times = flat[:n_times]
    m = n_paths * n_times
    wealth = flat[n_times:n_times + m].reshape(n_paths, n_times)
    cons = flat[n_times + m:n_times + 2 * m].reshape(n_paths, n_times)
    return {"version": version, "times": times, "wealth": wealth, "consumption": cons}


def _write_text(out, text: str) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise WriteFailure(f"cannot write {out}: {exc}") from None


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_solve(config_path, fmt: str = "text", out=None) -> int:
    cfg = load_config(config_path)
    report = solve(cfg.problem)
    d = solution_to_dict(report, cfg.w0)
    if fmt == "json":
        text = json.dumps(d, indent=2, sort_keys=False) + "\n"
    elif fmt == "csv":
        text = format_csv(d)
    else:
        text = format_text(d)
    _write_text(out, text)
    return 0 if report.well_posed else 2


SWEEP_PARAMS = ("epsilon", "delta")


def sweep_rows(cfg: ProblemConfig, param: str, a: float, b: float, k: int) -> list[dict]:
    p = cfg.problem
    rows = []
    for x in np.linspace(a, b, k):
        x = float(x)
        if param == "epsilon":
            amb = AmbiguityModel(x, p.ambiguity.vol_ambiguity)
        else:
            if p.ambiguity.vol_kind not in ("none", "frobenius"):
                raise ConfigError("a delta sweep needs Frobenius-ball (or no) volatility ambiguity")
            amb = AmbiguityModel(p.ambiguity.epsilon, FrobeniusBall(x))
        rep = solve(p.replace(ambiguity=amb))
        pi = rep.pi_eps
        rows.append({
            param: x,
            "pi_norm": float(np.linalg.norm(pi)) if pi is not None else float("nan"),
            "shrink": float(rep.shrink),
            "gamma_eps": float(rep.gamma_eps),
            "value": float(rep.value_at(cfg.w0)),
            "well_posed": bool(rep.well_posed),
        })
    return rows


def cmd_sweep(config_path, param: str, a: float, b: float, k: int, out=None) -> int:
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"--param must be one of {SWEEP_PARAMS}")
    if not a <= b:
        raise ConfigError("--from must not exceed --to")
    if k < 2:
        raise ConfigError("--points must be >= 2")
    cfg = load_config(config_path)
    rows = sweep_rows(cfg, param, a, b, k)
    buf = io.StringIO()
    cols = [param, "pi_norm", "shrink", "gamma_eps", "value", "well_posed"]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([FLOAT_FMT % row[c] if c != "well_posed" else str(row[c]).lower() for c in cols])
    _write_text(out, buf.getvalue())
    return 0


def _load_measure(choice: str, cfg: ProblemConfig, report) -> Measure:
    if choice == "nominal":
        return nominal_measure(cfg.problem)
    if choice == "worst":
        return worst_measure(report)
    path = Path(choice)
    if not path.exists():
        raise ConfigError(f"--measure must be nominal, worst, or a JSON file; {choice!r} not found")
    raw = json.loads(path.read_text())
    mu = np.atleast_1d(np.asarray(_require(raw, "mu", "measure"), dtype=np.float64))
    cov = np.atleast_2d(np.asarray(_require(raw, "cov", "measure"), dtype=np.float64))
    if mu.shape != (cfg.problem.market.n,) or cov.shape != (mu.shape[0],) * 2:
        raise ConfigError("measure file dimensions do not match the market")
    cholesky(cov)
    return Measure(mu, cov, path.stem)


def cmd_simulate(config_path, measure: str = "worst", out=None, paths_out=None,
                 threads: int | None = None) -> int:
    cfg = load_config(config_path)
    if cfg.sim is None:
        raise ConfigError("sim config required")
    report = solve(cfg.problem)
    if not report.well_posed:
        print(f"ILL-POSED: {report.diagnostic}", file=sys.stderr)
        return 2
    sim_cfg = cfg.sim
    if threads is not None:
        sim_cfg = SimConfig(**{**sim_cfg.__dict__, "n_threads": threads})
    meas = _load_measure(measure, cfg, report)
    ens = simulate(cfg.problem, report, meas, sim_cfg, w0=cfg.w0)
    est = realized_utility(ens, cfg.problem.prefs)

    buf = io.StringIO()
    buf.write(f"# measure={meas.tag}\n")
    buf.write(f"# scheme={ens.scheme}\n")
    buf.write(f"# n_paths={ens.n_paths}\n")
    buf.write(f"# rejected_paths={ens.n_rejected}\n")
    buf.write(f"# realized_utility={FLOAT_FMT % est.total}\n")
    buf.write(f"# std_error={FLOAT_FMT % est.std_error}\n")
    buf.write(f"# tail_included={FLOAT_FMT % est.tail}\n")
    buf.write(f"# robust_value={FLOAT_FMT % report.value_at(cfg.w0)}\n")
    w = csv.writer(buf, lineterminator="\n")
    qs = (5, 25, 50, 75, 95)
    w.writerow(["time", "wealth_mean"] + [f"wealth_q{q:02d}" for q in qs] + ["consumption_mean"])
    ok = ~ens.rejected
    wealth = ens.wealth[ok]
    quant = np.percentile(wealth, qs, axis=0)
    mean_w = wealth.mean(axis=0)
    mean_c = ens.consumption[ok].mean(axis=0)
    for j, t in enumerate(ens.times):
        w.writerow([FLOAT_FMT % t, FLOAT_FMT % mean_w[j]] + [FLOAT_FMT % quant[i, j] for i in range(len(qs))]
                   + [FLOAT_FMT % mean_c[j]])
    _write_text(out, buf.getvalue())
    if paths_out is not None:
        write_ensemble(paths_out, ens)
    if out not in (None, "-"):
        print(f"realized_utility = {est.total:.8g} +/- {est.std_error:.3g} "
              f"(measure {meas.tag}, robust value {report.value_at(cfg.w0):.8g})")
    return 0


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    observed: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        s = f"{tag} {self.name}: observed={self.observed:.3e} tolerance={self.tolerance:.1e}"
        return s + (f" ({self.detail})" if self.detail else "")


def _oracle_gap(closed: float, sampled: float, scale: float) -> float:
    """Relative distance of a sampled minimum above the closed form.

    Returns +inf if the samples beat the closed form by more than rounding,
    since no admissible point may do better than the exact minimum.
    """
    scale = max(scale, np.finfo(float).tiny)
    if closed - sampled > 1e-13 * scale:
        return np.inf
    return max(sampled - closed, 0.0) / max(abs(closed), np.finfo(float).tiny)


def run_checks(cfg: ProblemConfig, report, override_pi=None) -> list[Check]:
    from .frobenius import worst_cov_frobenius
    from .oracle import ellipsoid_min_sampled, hjb_residual, minimax_gap, volset_min_sampled

    p = cfg.problem
    m = p.market
    eps, R = p.ambiguity.epsilon, p.prefs.R
    oc = cfg.oracle
    tol = oc.tolerance
    checks = []
    pi = report.pi_eps if override_pi is None else np.asarray(override_pi, dtype=np.float64)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([oc.seed, 11])))

    # drift ellipsoid at the worst covariance
    thetas = [pi] if np.any(pi) else []
    thetas += list(rng.standard_normal((3, m.n)))
    worst = 0.0
    for th in thetas:
        closed = float(th @ worst_case_drift(th, report.worst_cov, eps, m.mu_hat))
        o = ellipsoid_min_sampled(th, report.worst_cov, eps, m.mu_hat, oc)
        worst = max(worst, _oracle_gap(closed, o.min_value, abs(th @ m.mu_hat) + abs(closed)))
    checks.append(Check("ellipsoid_min", worst <= tol, worst, tol, f"{len(thetas)} directions"))

    # volatility set
    th = pi if np.any(pi) else np.eye(m.n)[0]
    if p.ambiguity.vol_kind == "frobenius":
        cov = worst_cov_frobenius(th, m.sigma_cov, p.ambiguity.vol_ambiguity.delta, R, eps).Sigma_bar
    else:
        cov = worst_case_cov(p.ambiguity, m.sigma_cov)
    q = float(th @ cov @ th)
    closed = -eps * np.sqrt(q) - 0.5 * R * q
    o = volset_min_sampled(th, p.ambiguity, m.sigma_cov, eps, R, oc)
    err = _oracle_gap(closed, o.value, abs(closed))
    checks.append(Check("volset_min", err <= tol, err, tol, p.ambiguity.vol_kind))

    # HJB residual on a (t, w) grid, then at perturbed controls
    t_end = p.prefs.horizon.T if p.prefs.is_finite else 10.0
    worst_abs, worst_signed, fd_gap = 0.0, 0.0, 0.0
    for t in np.linspace(0.0, t_end, 10):
        for w in np.linspace(0.5, 2.0, 10):
            c = float(report.consumption_rate(t)) * w
            res = hjb_residual(report, float(t), float(w), pi * w, c)
            if abs(res.relative) > worst_abs:
                worst_abs, worst_signed = abs(res.relative), res.relative
            fd_gap = max(fd_gap, abs(res.analytic - res.finite_difference) / res.scale)
    checks.append(Check("hjb_residual_optimum", worst_abs < 1e-9, worst_signed, 1e-9,
                        "signed max relative residual"))
    checks.append(Check("hjb_finite_difference", fd_gap < 1e-6, fd_gap, 1e-6))
    base = report.pi_eps
    max_pert = -np.inf
    for _ in range(100):
        t = float(rng.uniform(0.0, t_end))
        w = float(rng.uniform(0.5, 2.0))
        th_p = (base + 0.5 * rng.standard_normal(m.n)) * w
        c = float(report.consumption_rate(t)) * w * float(rng.uniform(0.2, 2.0))
        res = hjb_residual(report, t, w, th_p, c)
        max_pert = max(max_pert, res.relative)
    checks.append(Check("hjb_max_property", max_pert <= 1e-9, max_pert, 1e-9, "max over 100 perturbed controls"))

    if report.horizon == "infinite":
        g = minimax_gap(report, 10_000, cfg.w0)
        ok = g.gap >= -1e-9 * abs(g.lower) and g.relative < 1e-6
        checks.append(Check("minimax_gap", ok, g.relative, 1e-6))

    if p.ambiguity.vol_kind == "frobenius" and np.any(report.pi_eps):
        from .kernel import robust_portfolio

        again = robust_portfolio(m.mu_hat, report.worst_cov, m.r, eps, R).pi
        err = float(np.max(np.abs(again - report.pi_eps)))
        checks.append(Check("frobenius_stationary", err < 1e-8, err, 1e-8))

    if cfg.sim is not None:
        ens = simulate(p, report, worst_measure(report), cfg.sim, w0=cfg.w0)
        est = realized_utility(ens, p.prefs)
        target = report.value_at(cfg.w0)
        z = abs(est.total - target) / est.std_error
        checks.append(Check("monte_carlo_value", z <= 3.0, z, 3.0,
                            f"estimate {est.total:.6g} vs value {target:.6g}, in standard errors"))
    return checks


def cmd_verify(config_path, override_pi=None) -> int:
    cfg = load_config(config_path)
    report = solve(cfg.problem)
    if not report.well_posed:
        print(f"ILL-POSED: gamma_eps = {report.gamma_eps:.12g} <= 0")
        if report.witness is not None:
            print(f"divergence witness: {report.witness.describe()}")
        return 2
    if override_pi is not None and len(override_pi) != cfg.problem.market.n:
        raise ConfigError("--override-pi length does not match the number of assets")
    checks = run_checks(cfg, report, override_pi)
    for c in checks:
        print(c.line())
    ok = all(c.passed for c in checks)
    print("ALL PASS" if ok else "VERIFICATION FAILED")
    return 0 if ok else 2


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="robust-merton", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="closed-form robust rule")
    s.add_argument("config")
    s.add_argument("--format", choices=("text", "json", "csv"), default="text")
    s.add_argument("--out", default=None)

    s = sub.add_parser("sweep", help="tabulate the solution over a parameter range")
    s.add_argument("config")
    s.add_argument("--param", choices=SWEEP_PARAMS, default="epsilon")
    s.add_argument("--from", dest="a", type=float, required=True)
    s.add_argument("--to", dest="b", type=float, required=True)
    s.add_argument("--points", type=int, required=True)
    s.add_argument("--out", default=None)

    s = sub.add_parser("verify", help="run the brute-force oracle checks")
    s.add_argument("config")
    s.add_argument("--override-pi", type=_floats, default=None,
                   help="comma-separated portfolio to check instead of the optimum")

    s = sub.add_parser("simulate", help="Monte Carlo wealth paths")
    s.add_argument("config")
    s.add_argument("--measure", default="worst", help="nominal, worst, or a JSON file {mu, cov}")
    s.add_argument("--out", default=None)
    s.add_argument("--paths-out", default=None, help="binary RMPE dump of the recorded paths")
    s.add_argument("--threads", type=int, default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args.config, args.format, args.out)
        if args.command == "sweep":
            return cmd_sweep(args.config, args.param, args.a, args.b, args.points, args.out)
        if args.command == "verify":
            return cmd_verify(args.config, args.override_pi)
        return cmd_simulate(args.config, args.measure, args.out, args.paths_out, args.threads)
    except RobustMertonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
