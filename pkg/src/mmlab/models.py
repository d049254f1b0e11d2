"""Mid-price diffusions ``dS = b dt + sigma dW`` and their conditional moments.

Two families are supported, both Gaussian with a conditional mean that is
affine in the current price:

* arithmetic Brownian motion with constant drift ``b`` (``b = 0`` is the
  martingale case), and
* Ornstein-Uhlenbeck ``dS = a (mu - S) dt + sigma dW``.

Volatility may be a piecewise-constant function of time through
``sigma_schedule``; by default it is the constant ``sigma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidHorizonError


class ModelKind(str, Enum):
    ABM = "abm"
    OU = "ou"
    MARTINGALE = "martingale"


@dataclass(frozen=True)
class MidPriceModel:
    """Parameters of the mid-price process.

    Attributes
    ----------
    kind : ModelKind
    b : float
        Drift in price per day (ABM only; forced to 0 for MARTINGALE).
    a : float
        Mean-reversion speed per day (OU only).
    mu : float
        Long-run mean (OU only).
    sigma : float
        Volatility in price per sqrt(day).
    s0 : float
        Initial price.
    sigma_schedule : tuple of (start_time, sigma) pairs, optional
        Piecewise-constant volatility. The first start time must be 0 and
        start times must increase; the last value extends to infinity.
    """

    kind: ModelKind
    sigma: float
    s0: float = 1.0
    b: float = 0.0
    a: float = 0.0
    mu: float = 0.0
    sigma_schedule: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.kind is ModelKind.OU and not self.a > 0:
            raise ValueError(f"OU mean-reversion speed a must be > 0, got {self.a}")
        if self.kind is ModelKind.MARTINGALE and self.b != 0:
            raise ValueError("a martingale model has b = 0")
        if self.sigma_schedule is not None:
            sched = tuple((float(t0), float(v)) for t0, v in self.sigma_schedule)
            if not sched or sched[0][0] != 0.0:
                raise ValueError("sigma_schedule must start at t = 0")
            starts = [t0 for t0, _ in sched]
            if any(t1 <= t0 for t0, t1 in zip(starts, starts[1:])):
                raise ValueError("sigma_schedule start times must increase")
            if any(v < 0 for _, v in sched):
                raise ValueError("sigma_schedule values must be >= 0")
            object.__setattr__(self, "sigma_schedule", sched)

    @classmethod
    def martingale(cls, sigma: float, s0: float = 1.0, **kw) -> MidPriceModel:
        return cls(ModelKind.MARTINGALE, sigma=sigma, s0=s0, **kw)

    @classmethod
    def abm(cls, b: float, sigma: float, s0: float = 1.0, **kw) -> MidPriceModel:
        return cls(ModelKind.ABM, sigma=sigma, s0=s0, b=b, **kw)

    @classmethod
    def ou(cls, a: float, mu: float, sigma: float, s0: float = 1.0, **kw) -> MidPriceModel:
        return cls(ModelKind.OU, sigma=sigma, s0=s0, a=a, mu=mu, **kw)

    @property
    def is_abm_class(self) -> bool:
        """Drift and volatility do not depend on the price."""
        return self.kind is not ModelKind.OU

    def sigma_at(self, t: float) -> float:
        if self.sigma_schedule is None:
            return self.sigma
        value = self.sigma_schedule[0][1]
        for start, v in self.sigma_schedule:
            if t >= start:
                value = v
            else:
                break
        return value

    def drift(self, t, s):
        if self.kind is ModelKind.OU:
            return self.a * (self.mu - s)
        return self.b + 0.0 * s

    def _pieces(self, t: float, T: float):
        """Yield (lo, hi, sigma) over [t, T] on which volatility is constant."""
        if self.sigma_schedule is None:
            yield t, T, self.sigma
            return
        cuts = [t] + [start for start, _ in self.sigma_schedule if t < start < T] + [T]
        for lo, hi in zip(cuts, cuts[1:]):
            yield lo, hi, self.sigma_at(lo)


def _check_horizon(t: float, T: float) -> None:
    if t > T:
        raise InvalidHorizonError(f"evaluation time t={t} is after horizon T={T}")


def affine_coeffs(model: MidPriceModel, t: float, T: float) -> tuple[float, float]:
    """Return ``(alpha, beta)`` with ``E[S(T) | S(t)=s] = alpha + beta*s``."""
    _check_horizon(t, T)
    tau = T - t
    if model.kind is ModelKind.OU:
        beta = math.exp(-model.a * tau)
        # mu*(1 - e^{-a tau}) without cancellation for small tau
        return -model.mu * math.expm1(-model.a * tau), beta
    return model.b * tau, 1.0


def conditional_mean(model: MidPriceModel, t: float, s, T: float):
    alpha, beta = affine_coeffs(model, t, T)
    return alpha + beta * s


def integrated_variance(model: MidPriceModel, t: float, T: float) -> float:
    """``int_t^T sigma(xi)^2 beta(xi, T)^2 dxi``.

    For both supported families this is also the conditional variance of
    ``S(T)`` given ``S(t)``.
    """
    _check_horizon(t, T)
    total = 0.0
    for lo, hi, sig in model._pieces(t, T):
        if model.kind is ModelKind.OU:
            two_a = 2.0 * model.a
            total += sig**2 * -math.expm1(-two_a * (hi - lo)) * math.exp(-two_a * (T - hi)) / two_a
        else:
            total += sig**2 * (hi - lo)
    return total


def conditional_variance(model: MidPriceModel, t: float, T: float) -> float:
    return integrated_variance(model, t, T)


def step(model: MidPriceModel, t: float, s, dt: float, z):
    """One Euler-Maruyama step. Works elementwise on arrays of ``s`` and ``z``."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    return s + model.drift(t, s) * dt + model.sigma_at(t) * np.sqrt(dt) * z
