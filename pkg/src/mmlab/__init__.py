"""Optimal market-making quotes under inventory risk, and a Monte Carlo lab to test them."""

from .models import MidPriceModel, ModelKind, affine_coeffs, conditional_mean, conditional_variance
from .quotes import (
    MarketState,
    Penalty,
    QuotePair,
    StrategyParams,
    Utility,
    compute_quotes,
    exponential_quotes,
    general_penalty_quotes,
    intensity,
    linear_penalty_quotes,
    linear_quotes,
    theta2_exponential,
    value_lower_bound,
)
from .sim import Ensemble, PathResult, SimConfig, Strategy, run_monte_carlo, simulate_path
from .stats import StatsRecord, histogram, quantile, summarize

__version__ = "0.1.0"
