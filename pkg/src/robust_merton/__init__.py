"""Robust Merton investment and consumption under drift and volatility ambiguity."""

from .errors import *  # noqa: F401,F403
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
    market_price_of_ambiguity,
    sharpe_ratio,
    validate,
)
from .kernel import (
    FiniteHorizonReport,
    InfiniteHorizonReport,
    gamma_epsilon,
    optimal_wealth_law,
    solve,
    solve_finite,
    solve_infinite,
    worst_case_cov,
    worst_case_drift,
)
from .frobenius import solve_infinite_frobenius, worst_cov_frobenius

__version__ = "0.1.0"
