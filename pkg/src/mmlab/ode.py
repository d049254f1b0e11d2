"""Exact exponential-utility quotes for ABM-class prices via a truncated ODE system.

With ``u = -exp(-g (x + q s)) v_q(t)^(-g/k)`` the value function reduces to

    v_q'(t) = (k g q^2 sigma(t)^2 / 2 - g q b(t)) v_q(t) - c (v_{q+1}(t) + v_{q-1}(t))
    v_q(T) = exp(-k eta q^2)        (= 1 without an inventory penalty)

and the optimal distances are

    delta_ask = log(1 + g/k)/g + log(v_q / v_{q-1}) / k
    delta_bid = log(1 + g/k)/g - log(v_{q+1} / v_q) / k.

The system is truncated to ``|q| <= q_max`` with ``v_{+-(q_max+1)} = 0`` and
integrated backward from ``T`` with classical RK4 on a uniform grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import AffineHypothesisError, OutOfTruncationError, TruncationError
from .models import MidPriceModel
from .quotes import QuotePair, StrategyParams, exponential_base_spread


def coupling_constant(params: StrategyParams) -> float:
    """``A (1 + k/g)^(-1 - k/g)``, evaluated in log space to avoid underflow."""
    r = params.k / params.gamma
    return params.A * math.exp(-(1.0 + r) * math.log1p(r))


@dataclass(frozen=True)
class OdeSystem:
    params: StrategyParams
    drift_fn: Callable[[float], float]
    vol_fn: Callable[[float], float]
    q_max: int = 30
    n_steps: int = 2000
    # overrides coupling_constant(params) when set
    coupling: float | None = None

    def __post_init__(self):
        if self.q_max < 1:
            raise ValueError(f"q_max must be >= 1, got {self.q_max}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        if not self.params.gamma > 0:
            raise ValueError("the ODE system needs gamma > 0")

    @classmethod
    def from_model(cls, model: MidPriceModel, params: StrategyParams, **kw) -> OdeSystem:
        if not model.is_abm_class:
            raise AffineHypothesisError(
                "the ODE system needs drift and volatility independent of the price"
            )
        b = model.b
        return cls(params=params, drift_fn=lambda t: b, vol_fn=model.sigma_at, **kw)

    @property
    def c(self) -> float:
        return coupling_constant(self.params) if self.coupling is None else self.coupling

    def rhs(self, t: float, v: np.ndarray, q: np.ndarray) -> np.ndarray:
        k, g = self.params.k, self.params.gamma
        sig = self.vol_fn(t)
        diag = 0.5 * k * g * q * q * sig * sig - g * q * self.drift_fn(t)
        nb = np.zeros_like(v)
        nb[1:] += v[:-1]
        nb[:-1] += v[1:]
        return diag * v - self.c * nb


@dataclass(frozen=True)
class OdeSolution:
    grid: np.ndarray  # shape (n_steps + 1,), increasing from 0 to T
    values: np.ndarray  # shape (n_steps + 1, 2 q_max + 1); column j is q = j - q_max
    params: StrategyParams
    q_max: int
    _log_values: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.grid.setflags(write=False)
        self.values.setflags(write=False)
        object.__setattr__(self, "_log_values", np.log(self.values))

    @property
    def inventories(self) -> np.ndarray:
        return np.arange(-self.q_max, self.q_max + 1)

    def v(self, q: int) -> np.ndarray:
        return self.values[:, q + self.q_max]

    def log_v_at(self, t: float) -> np.ndarray:
        """``log v_q(t)`` for all q, linearly interpolated in time."""
        grid = self.grid
        if not grid[0] <= t <= grid[-1]:
            raise ValueError(f"t={t} outside solution grid [{grid[0]}, {grid[-1]}]")
        i = int(np.searchsorted(grid, t, side="right")) - 1
        if i >= len(grid) - 1:
            return self._log_values[-1]
        w = (t - grid[i]) / (grid[i + 1] - grid[i])
        if w == 0.0:
            return self._log_values[i]
        return (1.0 - w) * self._log_values[i] + w * self._log_values[i + 1]


def solve_backward(system: OdeSystem) -> OdeSolution:
    """Integrate the truncated system from ``T`` down to 0 with fixed-step RK4."""
    T = system.params.T
    n = system.n_steps
    q = np.arange(-system.q_max, system.q_max + 1, dtype=float)
    grid = np.linspace(0.0, T, n + 1)
    values = np.empty((n + 1, q.size))
    v = np.exp(-system.params.k * system.params.eta * q * q)
    values[n] = v
    with np.errstate(over="ignore", invalid="ignore"):
        _march(system, grid, q, v, values)
    return OdeSolution(grid=grid, values=values, params=system.params, q_max=system.q_max)


def _march(system, grid, q, v, values):
    # march in tau = T - t where dv/dtau = -rhs(t); fills values[:-1] in place
    for i in range(len(grid) - 1, 0, -1):
        t, h = grid[i], grid[i] - grid[i - 1]
        tm = t - 0.5 * h
        k1 = -system.rhs(t, v, q)
        k2 = -system.rhs(tm, v + 0.5 * h * k1, q)
        k3 = -system.rhs(tm, v + 0.5 * h * k2, q)
        k4 = -system.rhs(grid[i - 1], v + h * k3, q)
        v = v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(v) & (v > 0)):
            raise TruncationError(
                f"non-positive or non-finite v_q at t={grid[i - 1]:.6g}; increase q_max or n_steps"
            )
        values[i - 1] = v


def ode_quotes(solution: OdeSolution, t: float, q: int, s: float = 0.0) -> QuotePair:
    """Quotes at inventory ``q``; ``s`` only positions the indifference price."""
    if abs(q) >= solution.q_max:
        raise OutOfTruncationError(
            f"|q|={abs(q)} must be below q_max={solution.q_max} to have both neighbours"
        )
    lv = solution.log_v_at(t)
    j = q + solution.q_max
    base = exponential_base_spread(solution.params)
    k = solution.params.k
    da = base + (lv[j] - lv[j - 1]) / k
    db = base - (lv[j + 1] - lv[j]) / k
    return QuotePair(delta_ask=da, delta_bid=db, spread=da + db, indifference=s + 0.5 * (da - db))


def ode_quote_distances(solution: OdeSolution, t: float, q: np.ndarray):
    """Vectorised distances; inventories beyond the truncation are clamped to ``q_max - 1``."""
    lv = solution.log_v_at(t)
    qm = solution.q_max
    j = np.clip(np.asarray(q, dtype=np.int64), -(qm - 1), qm - 1) + qm
    base = exponential_base_spread(solution.params)
    k = solution.params.k
    return base + (lv[j] - lv[j - 1]) / k, base - (lv[j + 1] - lv[j]) / k
