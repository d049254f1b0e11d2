"""Monte Carlo simulation of one trading day of optimal market making.

Each step of length ``dt = T / n_steps`` runs in this order:

1. quote ``(delta_ask, delta_bid)`` from the current state;
2. a side with ``delta > 0`` is filled ``N ~ Poisson(A exp(-k delta) dt)``
   times at ``s + delta_ask`` (sell) or ``s - delta_bid`` (buy); a side with
   ``delta <= 0`` instead trades one unit at the mid-price;
3. the mid-price takes an Euler-Maruyama step.

Paths are simulated in fixed-size batches of vectorised numpy arrays. Random
numbers come from :mod:`mmlab.rng`, so an ensemble is bit-identical whatever
the number of workers.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import models
from .models import MidPriceModel
from .ode import OdeSystem, ode_quote_distances, solve_backward
from .quotes import StrategyParams, Utility, quote_distances
from .rng import Channel, derive_path_key, path_streams, poisson_from_uniform

log = logging.getLogger(__name__)

BATCH_SIZE = 1000


class Strategy(str, Enum):
    LINEAR = "linear"
    LINEAR_PENALTY = "linear_penalty"
    GENERAL_PENALTY = "general_penalty"
    EXPONENTIAL = "exponential"
    ODE_EXPONENTIAL = "ode_exponential"


@dataclass(frozen=True)
class SimConfig:
    """One strategy run against one price model.

    ``model`` drives the simulated mid-price. ``strategy_model`` is the
    dynamics the market-maker assumes when quoting (for instance a
    martingale benchmark quoting against a mean-reverting market); it
    defaults to ``model``.
    """

    model: MidPriceModel
    params: StrategyParams
    strategy: Strategy
    n_steps: int = 1000
    n_paths: int = 20000
    seed: int = 0
    q0: int = 0
    x0: float = 0.0
    strategy_model: MidPriceModel | None = None
    q_max: int = 30
    ode_steps: int = 2000

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be >= 1, got {self.n_paths}")
        if self.strategy is Strategy.ODE_EXPONENTIAL and not self.belief.is_abm_class:
            raise ValueError("ode_exponential quoting needs an ABM-class strategy model")

    @property
    def belief(self) -> MidPriceModel:
        return self.model if self.strategy_model is None else self.strategy_model

    @property
    def dt(self) -> float:
        return self.params.T / self.n_steps


@dataclass(frozen=True)
class Trajectory:
    """Per-step record; row ``i`` is the state at ``t_i`` and the quotes posted there."""

    t: np.ndarray
    s: np.ndarray
    delta_ask: np.ndarray
    delta_bid: np.ndarray
    q: np.ndarray
    x: np.ndarray

    @property
    def pnl(self) -> np.ndarray:
        return self.x + self.q * self.s


@dataclass(frozen=True)
class PathResult:
    pnl_final: float
    q_final: int
    x_final: float
    s_final: float
    trajectory: Trajectory | None = None


@dataclass(frozen=True)
class Ensemble:
    """Final states of ``n_paths`` paths, ordered by path index."""

    pnl: np.ndarray
    q_final: np.ndarray
    x_final: np.ndarray
    s_final: np.ndarray

    def __len__(self) -> int:
        return len(self.pnl)

    def __getitem__(self, i: int) -> PathResult:
        return PathResult(
            pnl_final=float(self.pnl[i]),
            q_final=int(self.q_final[i]),
            x_final=float(self.x_final[i]),
            s_final=float(self.s_final[i]),
        )


def make_quoter(config: SimConfig):
    """Return ``f(t, s, q) -> (delta_ask, delta_bid)`` for the configured strategy."""
    belief = config.belief
    if config.strategy is Strategy.ODE_EXPONENTIAL:
        params = replace(config.params, utility=Utility.EXPONENTIAL)
        system = OdeSystem.from_model(belief, params, q_max=config.q_max, n_steps=config.ode_steps)
        solution = solve_backward(system)
        return lambda t, s, q: ode_quote_distances(solution, t, q)
    params = replace(config.params, utility=Utility(config.strategy.value))
    return lambda t, s, q: quote_distances(belief, params, t, s, q)


def fill_counts(delta, u, A: float, k: float, dt: float):
    """Units traded on one side this step.

    A positive distance rests a limit order filled ``Poisson(A e^{-k delta} dt)``
    times; a non-positive distance sends a single market order.
    """
    limit = delta > 0
    mean = np.where(limit, A * np.exp(-k * np.maximum(delta, 0.0)) * dt, 0.0)
    return np.where(limit, poisson_from_uniform(u, mean), 1)


def settle(s, q, x, delta_ask, delta_bid, n_ask, n_bid):
    """Apply one step of trades; market orders (distance <= 0) execute at ``s``."""
    sell_px = np.where(delta_ask > 0, s + delta_ask, s)
    buy_px = np.where(delta_bid > 0, s - delta_bid, s)
    return q + n_bid - n_ask, x + n_ask * sell_px - n_bid * buy_px


def simulate_batch(config: SimConfig, path_keys, record: bool = False, quoter=None):
    """Simulate the given paths side by side.

    Returns ``(s, q, x)`` final arrays and, when ``record`` is set, a list of
    per-path :class:`Trajectory` objects.
    """
    n, dt, T = config.n_steps, config.dt, config.params.T
    A, k = config.params.A, config.params.k
    quoter = quoter or make_quoter(config)
    streams = path_streams(path_keys, n)
    z, ua, ub = streams[Channel.PRICE], streams[Channel.ASK_FILL], streams[Channel.BID_FILL]
    m = len(path_keys)

    s = np.full(m, float(config.model.s0))
    q = np.full(m, int(config.q0), dtype=np.int64)
    x = np.full(m, float(config.x0))
    if record:
        rec = {name: np.empty((n + 1, m)) for name in ("s", "da", "db", "x")}
        rec_q = np.empty((n + 1, m), dtype=np.int64)

    for i in range(n):
        t = T * i / n
        da, db = quoter(t, s, q)
        da = np.broadcast_to(da, s.shape)
        db = np.broadcast_to(db, s.shape)
        if record:
            rec["s"][i], rec["da"][i], rec["db"][i], rec["x"][i], rec_q[i] = s, da, db, x, q
        na = fill_counts(da, ua[i], A, k, dt)
        nb = fill_counts(db, ub[i], A, k, dt)
        q, x = settle(s, q, x, da, db, na, nb)
        s = models.step(config.model, t, s, dt, z[i])

    trajectories = None
    if record:
        da, db = quoter(T, s, q)
        rec["s"][n], rec["da"][n], rec["db"][n], rec["x"][n], rec_q[n] = s, da, db, x, q
        grid = T * np.arange(n + 1) / n
        trajectories = [
            Trajectory(
                t=grid, s=rec["s"][:, j], delta_ask=rec["da"][:, j],
                delta_bid=rec["db"][:, j], q=rec_q[:, j], x=rec["x"][:, j],
            )
            for j in range(m)
        ]
    return s, q, x, trajectories


def simulate_path(config: SimConfig, path_key: int, record: bool = False) -> PathResult:
    s, q, x, traj = simulate_batch(config, [path_key], record=record)
    return PathResult(
        pnl_final=float(x[0] + q[0] * s[0]),
        q_final=int(q[0]),
        x_final=float(x[0]),
        s_final=float(s[0]),
        trajectory=traj[0] if traj else None,
    )


def _run_range(config: SimConfig, start: int, stop: int):
    keys = [derive_path_key(config.seed, i) for i in range(start, stop)]
    s, q, x, _ = simulate_batch(config, keys)
    return s, q, x


def run_monte_carlo(config: SimConfig, workers: int = 1, batch_size: int = BATCH_SIZE) -> Ensemble:
    """Simulate ``config.n_paths`` paths; path ``i`` uses key ``derive_path_key(seed, i)``.

    Batches have a fixed size independent of ``workers`` so the output is
    bit-identical for any degree of parallelism.
    """
    bounds = [
        (lo, min(lo + batch_size, config.n_paths)) for lo in range(0, config.n_paths, batch_size)
    ]
    log.debug("simulating %d paths in %d batches on %d workers", config.n_paths, len(bounds), workers)
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_range, [config] * len(bounds), *zip(*bounds)))
    else:
        parts = [_run_range(config, lo, hi) for lo, hi in bounds]
    s = np.concatenate([p[0] for p in parts])
    q = np.concatenate([p[1] for p in parts])
    x = np.concatenate([p[2] for p in parts])
    return Ensemble(pnl=x + q * s, q_final=q, x_final=x, s_final=s)
