"""Closed-form optimal bid/ask distances under inventory risk.

Every setting produces quotes of the form ``delta_ask = h + d`` and
``delta_bid = h - d`` where ``h`` is the half spread and ``d`` the skew:

=================  ================================  ==================================
utility            half spread ``h``                 skew ``d``
=================  ================================  ==================================
linear             ``1/k``                           ``theta1 - s``
linear + penalty   ``1/k + eta``                     ``theta1 - s - 2 q eta``
general penalty    ``1/k + eta``                     ``theta1 - s - 2 q eta E[pi(S_T)]``
exponential        ``log(1 + g/k)/g - theta2``       ``theta1 - s + 2 q theta2``
=================  ================================  ==================================

with ``theta1 = E[S(T) | S(t) = s]`` and, for exponential utility,
``theta2(t) = -eta - g/2 * int_t^T sigma^2 beta^2``. Quote functions accept
numpy arrays for ``s`` and ``q`` so the simulator can evaluate many paths at
once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy.integrate import simpson

from .errors import AffineHypothesisError, UnsupportedPenaltyError
from .models import (
    MidPriceModel,
    ModelKind,
    conditional_mean,
    conditional_variance,
    integrated_variance,
)


class Utility(str, Enum):
    LINEAR = "linear"
    LINEAR_PENALTY = "linear_penalty"
    GENERAL_PENALTY = "general_penalty"
    EXPONENTIAL = "exponential"


class Penalty(str, Enum):
    ONE = "one"
    SQUARE = "square"


@dataclass(frozen=True)
class StrategyParams:
    """Fill intensity ``A exp(-k delta)``, risk aversion and horizon."""

    A: float
    k: float
    T: float
    gamma: float = 1.0
    eta: float = 0.0
    utility: Utility = Utility.LINEAR
    penalty_pi: Penalty = Penalty.ONE

    def __post_init__(self):
        object.__setattr__(self, "utility", Utility(self.utility))
        try:
            object.__setattr__(self, "penalty_pi", Penalty(self.penalty_pi))
        except ValueError:
            raise UnsupportedPenaltyError(
                f"unsupported inventory penalty {self.penalty_pi!r}; use 'one' or 'square'"
            ) from None
        # A = 0 is allowed: a market with no limit-order flow
        if not self.A >= 0:
            raise ValueError(f"A must be >= 0, got {self.A}")
        if not self.k > 0:
            raise ValueError(f"k must be > 0, got {self.k}")
        if not self.T > 0:
            raise ValueError(f"T must be > 0, got {self.T}")
        if not self.eta >= 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        if self.utility is Utility.EXPONENTIAL and not self.gamma > 0:
            raise ValueError(f"exponential utility needs gamma > 0, got {self.gamma}")


@dataclass(frozen=True)
class MarketState:
    t: float
    s: float
    q: int = 0
    x: float = 0.0


@dataclass(frozen=True)
class QuotePair:
    """Quote distances around the mid-price.

    ``spread`` is the closed-form total spread; it agrees with
    ``delta_ask + delta_bid`` up to rounding. Either distance may be
    negative, which a simulator treats as a market order.
    """

    delta_ask: float
    delta_bid: float
    spread: float
    indifference: float

    @classmethod
    def from_half_spread(cls, half: float, skew, s) -> QuotePair:
        return cls(
            delta_ask=half + skew,
            delta_bid=half - skew,
            spread=2.0 * half,
            indifference=s + skew,
        )

    @property
    def ask(self):
        return self.indifference + 0.5 * self.spread

    @property
    def bid(self):
        return self.indifference - 0.5 * self.spread


def intensity(params: StrategyParams, delta):
    """Execution rate ``A exp(-k delta)`` of a limit order at distance ``delta``."""
    return params.A * np.exp(-params.k * np.asarray(delta, dtype=float))


def penalty_moment(model: MidPriceModel, params: StrategyParams, t: float, s):
    """``E[pi(S(T)) | S(t) = s]`` for the supported penalties."""
    if params.penalty_pi is Penalty.ONE:
        return 1.0
    m = conditional_mean(model, t, s, params.T)
    return m * m + conditional_variance(model, t, params.T)


def theta2_exponential(model: MidPriceModel, params: StrategyParams, t: float) -> float:
    """Quadratic-in-inventory coefficient of the exponential sub-solution (<= 0)."""
    if model.kind not in (ModelKind.ABM, ModelKind.MARTINGALE, ModelKind.OU):
        raise AffineHypothesisError(f"model kind {model.kind!r} has no affine conditional mean")
    return -params.eta - 0.5 * params.gamma * integrated_variance(model, t, params.T)


def exponential_base_spread(params: StrategyParams) -> float:
    """``log(1 + gamma/k) / gamma``, the half spread at zero risk horizon."""
    g = params.gamma
    return math.log1p(g / params.k) / g


def _half_and_skew(model, params, t, s, q):
    u = params.utility
    theta1 = conditional_mean(model, t, s, params.T)
    if u is Utility.LINEAR:
        return 1.0 / params.k, theta1 - s
    if u is Utility.LINEAR_PENALTY:
        return 1.0 / params.k + params.eta, theta1 - s - 2.0 * q * params.eta
    if u is Utility.GENERAL_PENALTY:
        pm = penalty_moment(model, params, t, s)
        return 1.0 / params.k + params.eta, theta1 - s - 2.0 * q * params.eta * pm
    if u is Utility.EXPONENTIAL:
        th2 = theta2_exponential(model, params, t)
        return exponential_base_spread(params) - th2, theta1 - s + 2.0 * q * th2
    raise ValueError(f"unknown utility {u!r}")


def quote_distances(model: MidPriceModel, params: StrategyParams, t: float, s, q):
    """Vectorised ``(delta_ask, delta_bid)`` for the utility in ``params``."""
    half, skew = _half_and_skew(model, params, t, s, q)
    return half + skew, half - skew


def compute_quotes(model: MidPriceModel, params: StrategyParams, state: MarketState) -> QuotePair:
    """Dispatch on ``params.utility``."""
    half, skew = _half_and_skew(model, params, state.t, state.s, state.q)
    return QuotePair.from_half_spread(half, skew, state.s)


def _with_utility(params: StrategyParams, utility: Utility) -> StrategyParams:
    if params.utility is utility:
        return params
    return replace(params, utility=utility)


def linear_quotes(model, params, state) -> QuotePair:
    return compute_quotes(model, _with_utility(params, Utility.LINEAR), state)


def linear_penalty_quotes(model, params, state) -> QuotePair:
    return compute_quotes(model, _with_utility(params, Utility.LINEAR_PENALTY), state)


def general_penalty_quotes(model, params, state) -> QuotePair:
    return compute_quotes(model, _with_utility(params, Utility.GENERAL_PENALTY), state)


def exponential_quotes(model, params, state) -> QuotePair:
    return compute_quotes(model, _with_utility(params, Utility.EXPONENTIAL), state)


def _double_integrated_variance(model: MidPriceModel, t: float, T: float) -> float:
    """``int_t^T int_z^T sigma^2(xi) beta^2(xi, T) dxi dz``."""
    tau = T - t
    if model.sigma_schedule is None:
        sig2 = model.sigma**2
        if model.kind is ModelKind.OU:
            two_a = 2.0 * model.a
            return sig2 / two_a * (tau + math.expm1(-two_a * tau) / two_a)
        return 0.5 * sig2 * tau * tau
    # piecewise sigma: composite Simpson on each smooth piece, doubling to 1e-10
    cuts = [t] + [c for c, _ in model.sigma_schedule if t < c < T] + [T]
    total = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        n, prev = 8, None
        while True:
            z = np.linspace(lo, hi, n + 1)
            val = simpson([integrated_variance(model, zi, T) for zi in z], x=z)
            if prev is not None and abs(val - prev) < 1e-10:
                break
            prev, n = val, 2 * n
        total += val
    return total


def theta0_exponential(model: MidPriceModel, params: StrategyParams, t: float) -> float:
    """Inventory-free term of the exponential sub-solution."""
    A, k, g, eta = params.A, params.k, params.gamma, params.eta
    tau = params.T - t
    linear = 2.0 * A / (k + g) * (1.0 - k / g * math.log1p(g / k) - k * eta) * tau
    return linear - k * g * A / (k + g) * _double_integrated_variance(model, t, params.T)


def value_lower_bound(model: MidPriceModel, params: StrategyParams, state: MarketState) -> float:
    """Explicit sub-solution of the value function at ``state``."""
    A, k, eta = params.A, params.k, params.eta
    t, s, q, x = state.t, state.s, state.q, state.x
    tau = params.T - t
    theta1 = conditional_mean(model, t, s, params.T)
    u = params.utility
    if u is Utility.LINEAR:
        return x + 2.0 * A / (math.e * k) * tau + q * theta1
    if u is Utility.LINEAR_PENALTY:
        return x + A / (math.e * k) * (2.0 - k * eta) * tau + q * theta1 - eta * q * q
    if u is Utility.GENERAL_PENALTY:
        theta2 = penalty_moment(model, params, t, s)
        # E[theta2(xi, S(xi))] = E[pi(S(T))] for every xi by the tower property
        running = tau * theta2
        return (
            x + 2.0 * A / (math.e * k) * tau - eta * A / math.e * running
            + q * theta1 - eta * q * q * theta2
        )
    if u is Utility.EXPONENTIAL:
        th0 = theta0_exponential(model, params, t)
        th2 = theta2_exponential(model, params, t)
        return -math.exp(-params.gamma * (x + th0 + q * theta1 + q * q * th2))
    raise ValueError(f"unknown utility {u!r}")
