"""Run configuration: a flat ``key = value`` file with ``#`` comments.

Example::

    kind = ou
    a = 1
    mu = 1.00
    sigma = 0.05
    s0 = 1
    A = 1500
    k = 100
    T = 1
    eta = 0.001
    strategy = linear_penalty, exponential
    belief = martingale, model
    seed = 20240601
    sweep = eta: 0, 0.0001, 0.001

``strategy`` and ``belief`` take comma-separated lists; a table run covers
every (strategy, belief) pair at every sweep point. ``belief = model`` quotes
with the simulated dynamics, ``belief = martingale`` with a driftless ABM of
the same volatility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError
from .models import MidPriceModel, ModelKind
from .quotes import Penalty, StrategyParams
from .sim import SimConfig, Strategy

REQUIRED = ("kind", "sigma", "s0", "A", "k", "T", "strategy", "seed")
SWEEPABLE = ("eta", "gamma", "mu", "b")
BELIEFS = ("model", "martingale")
TABLE_FORMATS = ("csv", "json")

_FLOAT_KEYS = ("sigma", "s0", "b", "a", "mu", "A", "k", "T", "gamma", "eta", "x0")
_INT_KEYS = ("n_steps", "n_paths", "seed", "q0", "q_max", "ode_steps", "workers", "histogram_bins")


@dataclass(frozen=True)
class RunConfig:
    kind: ModelKind
    sigma: float
    s0: float
    A: float
    k: float
    T: float
    strategy: tuple[Strategy, ...]
    seed: int
    b: float = 0.0
    a: float = 0.0
    mu: float = 0.0
    gamma: float = 1.0
    eta: float = 0.0
    penalty_pi: Penalty = Penalty.ONE
    belief: tuple[str, ...] = ("model",)
    n_steps: int = 1000
    n_paths: int = 20000
    q0: int = 0
    x0: float = 0.0
    q_max: int = 30
    ode_steps: int = 2000
    sweep: tuple[str, tuple[float, ...]] | None = None
    output_dir: str = "out"
    emit_trajectories: bool = False
    table_format: str = "csv"
    workers: int = 1
    histogram_bins: int = 0

    def price_model(self, **override) -> MidPriceModel:
        kw = dict(kind=self.kind, sigma=self.sigma, s0=self.s0, b=self.b, a=self.a, mu=self.mu)
        kw.update(override)
        return MidPriceModel(**kw)

    def strategy_params(self, **override) -> StrategyParams:
        kw = dict(A=self.A, k=self.k, T=self.T, gamma=self.gamma, eta=self.eta,
                  penalty_pi=self.penalty_pi)
        kw.update(override)
        return StrategyParams(**kw)

    def sweep_points(self) -> list[tuple[str | None, float | None]]:
        if self.sweep is None:
            return [(None, None)]
        name, values = self.sweep
        return [(name, v) for v in values]

    def sim_config(self, strategy: Strategy, belief: str, sweep_name=None, sweep_value=None) -> SimConfig:
        model_kw, param_kw = {}, {}
        if sweep_name in ("mu", "b"):
            model_kw[sweep_name] = sweep_value
        elif sweep_name in ("eta", "gamma"):
            param_kw[sweep_name] = sweep_value
        model = self.price_model(**model_kw)
        believed = None
        if belief == "martingale":
            believed = MidPriceModel.martingale(sigma=self.sigma, s0=self.s0)
        return SimConfig(
            model=model,
            params=self.strategy_params(**param_kw),
            strategy=strategy,
            n_steps=self.n_steps,
            n_paths=self.n_paths,
            seed=self.seed,
            q0=self.q0,
            x0=self.x0,
            strategy_model=believed,
            q_max=self.q_max,
            ode_steps=self.ode_steps,
        )

    def runs(self):
        """``(strategy, belief, sweep_name, sweep_value, SimConfig)`` in table order."""
        for name, value in self.sweep_points():
            for strategy in self.strategy:
                for belief in self.belief:
                    yield strategy, belief, name, value, self.sim_config(strategy, belief, name, value)


def _parse_list(raw: str) -> list[str]:
    return [item.strip() for item in raw.split(",") if item.strip()]


def _parse_float(raw: str, key: str, line: int) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}", line) from None
    if not math.isfinite(value):
        raise ConfigError(f"{key}: value must be finite, got {raw!r}", line)
    return value


def _parse_int(raw: str, key: str, line: int) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}", line) from None


def _parse_value(key: str, raw: str, line: int):
    if key in _FLOAT_KEYS:
        return _parse_float(raw, key, line)
    if key in _INT_KEYS:
        return _parse_int(raw, key, line)
    if key == "kind":
        try:
            return ModelKind(raw.lower())
        except ValueError:
            raise ConfigError(f"kind: expected one of abm, ou, martingale, got {raw!r}", line) from None
    if key == "penalty_pi":
        try:
            return Penalty(raw.lower())
        except ValueError:
            raise ConfigError(f"penalty_pi: expected one or square, got {raw!r}", line) from None
    if key == "strategy":
        items = _parse_list(raw)
        try:
            out = tuple(Strategy(item.lower()) for item in items)
        except ValueError as exc:
            raise ConfigError(f"strategy: {exc}", line) from None
        if not out:
            raise ConfigError("strategy: empty list", line)
        return out
    if key == "belief":
        items = tuple(item.lower() for item in _parse_list(raw))
        bad = [item for item in items if item not in BELIEFS]
        if bad or not items:
            raise ConfigError(f"belief: expected entries from {BELIEFS}, got {raw!r}", line)
        return items
    if key == "sweep":
        name, sep, rest = raw.partition(":")
        name = name.strip()
        if not sep or name not in SWEEPABLE:
            raise ConfigError(f"sweep: expected '<{'|'.join(SWEEPABLE)}>: v1, v2, ...', got {raw!r}", line)
        values = tuple(_parse_float(v, "sweep", line) for v in _parse_list(rest))
        if not values:
            raise ConfigError("sweep: no values given", line)
        return name, values
    if key == "emit_trajectories":
        low = raw.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"emit_trajectories: expected true/false, got {raw!r}", line)
        return low in ("true", "1", "yes")
    if key == "table_format":
        if raw.lower() not in TABLE_FORMATS:
            raise ConfigError(f"table_format: expected csv or json, got {raw!r}", line)
        return raw.lower()
    if key == "output_dir":
        return raw
    raise ConfigError(f"unknown key {key!r}", line)


_KNOWN = {f.name for f in fields(RunConfig)}


def parse_config(text: str) -> RunConfig:
    values: dict = {}
    lines: dict[str, int] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ConfigError(f"expected 'key = value', got {raw_line.strip()!r}", lineno)
        if key not in _KNOWN:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", lineno)
        values[key] = _parse_value(key, raw, lineno)
        lines[key] = lineno

    missing = [k for k in REQUIRED if k not in values]
    if values.get("kind") is ModelKind.OU:
        missing += [k for k in ("a", "mu") if k not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    cfg = RunConfig(**values)
    validate(cfg, lines)
    return cfg


def validate(cfg: RunConfig, lines: dict[str, int] | None = None) -> None:
    """Check invariants; raise :class:`ConfigError` pointing at the offending line."""
    lines = lines or {}

    def fail(key, msg):
        raise ConfigError(f"{key}: {msg}", lines.get(key))

    if not 0 <= cfg.seed < 2**64:
        fail("seed", "must be an unsigned 64-bit integer")
    for key in ("n_steps", "n_paths", "workers", "q_max", "ode_steps"):
        if getattr(cfg, key) < 1:
            fail(key, "must be >= 1")
    if cfg.histogram_bins < 0:
        fail("histogram_bins", "must be >= 0")
    if cfg.eta < 0:
        fail("eta", "must be >= 0")
    if cfg.sweep is not None and cfg.sweep[0] == "eta" and min(cfg.sweep[1]) < 0:
        fail("sweep", "eta values must be >= 0")
    if cfg.sweep is not None and cfg.sweep[0] == "gamma" and min(cfg.sweep[1]) <= 0:
        fail("sweep", "gamma values must be > 0")
    if cfg.sweep is not None and cfg.sweep[0] == "mu" and cfg.kind is not ModelKind.OU:
        fail("sweep", "mu only applies to kind = ou")
    if cfg.sweep is not None and cfg.sweep[0] == "b" and cfg.kind is not ModelKind.ABM:
        fail("sweep", "b only applies to kind = abm")
    try:
        cfg.price_model()
    except ValueError as exc:
        fail("sigma" if "sigma" in str(exc) else "kind", str(exc))
    try:
        cfg.strategy_params()
    except ValueError as exc:
        key = next((k for k in ("A", "k", "T", "eta", "gamma") if str(exc).startswith(k)), "A")
        fail(key, str(exc))
    if Strategy.EXPONENTIAL in cfg.strategy or Strategy.ODE_EXPONENTIAL in cfg.strategy:
        if not cfg.gamma > 0:
            fail("gamma", "exponential strategies need gamma > 0")
    if Strategy.ODE_EXPONENTIAL in cfg.strategy and "model" in cfg.belief and cfg.kind is ModelKind.OU:
        fail("belief", "ode_exponential needs an ABM-class belief; use belief = martingale")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (ModelKind, Penalty, Strategy)):
        return value.value
    return str(value)


def emit_config(cfg: RunConfig) -> str:
    """Serialise every field; ``parse_config(emit_config(c)) == c``."""
    out = []
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        if f.name == "sweep":
            name, vals = value
            text = f"{name}: {', '.join(repr(v) for v in vals)}"
        elif f.name in ("strategy", "belief"):
            text = ", ".join(_fmt(v) for v in value)
        else:
            text = _fmt(value)
        out.append(f"{f.name} = {text}")
    return "\n".join(out) + "\n"


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text())


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    kw = {k: v for k, v in kw.items() if v is not None}
    if not kw:
        return cfg
    new = replace(cfg, **kw)
    validate(new)
    return new
