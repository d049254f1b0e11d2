"""Summary statistics of final PNL and inventory distributions."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import InsufficientSampleError

NAN = float("nan")


@dataclass(frozen=True)
class Moments:
    mean: float
    std_dev: float
    skewness: float
    kurtosis: float
    jarque_bera: float


def moments(samples) -> Moments:
    """Sample mean, n-1 standard deviation and standardized higher moments.

    Kurtosis is non-excess (3 for a Gaussian). Skewness and kurtosis use
    population central moments, as does Jarque-Bera
    ``n/6 (S^2 + (K - 3)^2 / 4)``. Degenerate samples yield NaN for the
    undefined fields.
    """
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 2:
        raise InsufficientSampleError(f"need at least 2 samples, got {n}")
    mean = float(x.mean())
    dev = x - mean
    m2 = float(np.mean(dev**2))
    std = math.sqrt(m2 * n / (n - 1))
    if m2 == 0.0:
        return Moments(mean, std, NAN, NAN, NAN)
    # standardise first so tiny variances do not underflow m2**1.5 or m2**2
    z = dev / math.sqrt(m2)
    skew = float(np.mean(z**3))
    kurt = float(np.mean(z**4))
    return Moments(mean, std, skew, kurt, jarque_bera(n, skew, kurt))


def jarque_bera(n: int, skewness: float, kurtosis: float) -> float:
    return n / 6.0 * (skewness**2 + (kurtosis - 3.0) ** 2 / 4.0)


def quantile(samples, p: float) -> float:
    """Nearest-rank quantile: the ``ceil(p n)``-th smallest sample."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise InsufficientSampleError("quantile of an empty sample")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    # round before ceil so that p*n = 5.000000000000001 still means rank 5
    rank = max(1, math.ceil(round(p * x.size, 9)))
    return float(np.partition(x, rank - 1)[rank - 1])


@dataclass(frozen=True)
class StatsRecord:
    """One column of a PNL statistics table.

    PNL fields come first, then the inventory block. ``var5``/``var1`` are
    PNL levels (lower quantiles), not losses. Undefined values are NaN.
    """

    n: int
    mean: float
    std_dev: float
    sharpe: float
    skewness: float
    kurtosis: float
    jarque_bera: float
    var5: float
    var1: float
    inv_mean: float
    inv_std_dev: float
    inv_skewness: float
    inv_kurtosis: float
    inv_jarque_bera: float
    q_low: int
    q_high: int

    @property
    def q_interval_90(self) -> tuple[int, int]:
        return self.q_low, self.q_high

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def summarize(samples, inventories) -> StatsRecord:
    pnl = np.asarray(samples, dtype=float)
    inv = np.asarray(inventories, dtype=float)
    if pnl.size < 2 or inv.size < 2:
        raise InsufficientSampleError(f"need at least 2 paths, got {min(pnl.size, inv.size)}")
    pm = moments(pnl)
    im = moments(inv)
    return StatsRecord(
        n=int(pnl.size),
        mean=pm.mean,
        std_dev=pm.std_dev,
        sharpe=pm.mean / pm.std_dev if pm.std_dev > 0 else NAN,
        skewness=pm.skewness,
        kurtosis=pm.kurtosis,
        jarque_bera=pm.jarque_bera,
        var5=quantile(pnl, 0.05),
        var1=quantile(pnl, 0.01),
        inv_mean=im.mean,
        inv_std_dev=im.std_dev,
        inv_skewness=im.skewness,
        inv_kurtosis=im.kurtosis,
        inv_jarque_bera=im.jarque_bera,
        q_low=round(quantile(inv, 0.05)),
        q_high=round(quantile(inv, 0.95)),
    )


def single_path_record(pnl: float, q: int) -> StatsRecord:
    """Record for a one-path run: dispersion fields are NaN sentinels."""
    return StatsRecord(
        n=1, mean=float(pnl), std_dev=NAN, sharpe=NAN, skewness=NAN, kurtosis=NAN,
        jarque_bera=NAN, var5=float(pnl), var1=float(pnl), inv_mean=float(q),
        inv_std_dev=NAN, inv_skewness=NAN, inv_kurtosis=NAN, inv_jarque_bera=NAN,
        q_low=int(q), q_high=int(q),
    )


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    underflow: int
    overflow: int

    def rows(self):
        """``(bin_left, bin_right, count)`` triples."""
        return [
            (float(lo), float(hi), int(c))
            for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts)
        ]


def histogram(samples, n_bins: int, range: tuple[float, float]) -> Histogram:
    """Equal-width bins over ``range`` (right edge inclusive) plus overflow counts."""
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    lo, hi = map(float, range)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError(f"degenerate histogram range ({lo}, {hi})")
    x = np.asarray(samples, dtype=float).ravel()
    counts, edges = np.histogram(x, bins=n_bins, range=(lo, hi))
    return Histogram(
        edges=edges,
        counts=counts,
        underflow=int(np.count_nonzero(x < lo)),
        overflow=int(np.count_nonzero(x > hi)),
    )
