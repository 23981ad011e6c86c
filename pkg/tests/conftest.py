import json

import numpy as np
import pytest

from robust_merton import (
    AmbiguityModel,
    Finite,
    MarketModel,
    Preferences,
    validate,
)


def random_spd(rng, n, lo=0.01, hi=0.2):
    """Covariance with eigenvalues in [lo, hi] and a Haar-random eigenbasis."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    lam = rng.uniform(lo, hi, n)
    cov = (q * lam) @ q.T
    return 0.5 * (cov + cov.T)


def make_problem(mu=0.08, cov=0.04, r=0.02, eps=0.1, rho=0.05, R=2.0, vol=None, horizon=None):
    prefs = Preferences(rho, R) if horizon is None else Preferences(rho, R, horizon)
    return validate(MarketModel(r, [mu] if np.isscalar(mu) else mu, [[cov]] if np.isscalar(cov) else cov),
                    AmbiguityModel(eps, vol), prefs)


@pytest.fixture
def base_problem():
    return make_problem()


@pytest.fixture
def base_finite():
    return make_problem(horizon=Finite(1.0, 1.0))


BASE_CONFIG = {
    "market": {"r": 0.02, "mu_hat": [0.08], "cov": [[0.04]]},
    "ambiguity": {"epsilon": 0.1, "vol": "none"},
    "preferences": {"rho": 0.05, "R": 2, "horizon": "infinite"},
}


@pytest.fixture
def write_config(tmp_path):
    """Write a config dict (deep-merged over the base case) and return its path."""

    def _write(overrides=None, name="config.json"):
        cfg = json.loads(json.dumps(BASE_CONFIG))
        for key, val in (overrides or {}).items():
            if isinstance(val, dict) and isinstance(cfg.get(key), dict):
                cfg[key].update(val)
            else:
                cfg[key] = val
        path = tmp_path / name
        path.write_text(json.dumps(cfg))
        return path

    return _write


# --------------------------------------------------------------------------- acceptance report

ACCEPTANCE = {}


def record(number: int, title: str, passed: bool, elapsed: float, limit: float, detail: str) -> None:
    ACCEPTANCE[number] = (title, passed, elapsed, limit, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, elapsed, limit, detail = ACCEPTANCE[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(
            f"AC{number:02d} {status}  {title}: {detail} [{elapsed:.2f} s, limit {limit:g} s]"
        )
