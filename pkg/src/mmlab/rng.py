"""Counter-based random streams keyed by (seed, path, channel, step).

Each path owns a 128-bit Philox key ``seed << 64 | path_index``; each channel
starts at its own counter block, so the value consumed at a given step depends
only on ``(seed, path, channel, step)``. Results therefore do not depend on how
paths are split across batches or workers, and two strategies run on the same
path key see the same price noise and the same fill uniforms.
"""

from __future__ import annotations

from enum import IntEnum

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1
_TINY = 2.0**-54


class Channel(IntEnum):
    PRICE = 0
    ASK_FILL = 1
    BID_FILL = 2


def derive_path_key(seed: int, path_index: int) -> int:
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must fit in 64 bits, got {seed}")
    if not 0 <= path_index <= _MASK64:
        raise ValueError(f"path index must fit in 64 bits, got {path_index}")
    return (seed << 64) | path_index


def uniforms(path_key: int, channel: Channel, n: int) -> np.ndarray:
    """``n`` draws in the open interval (0, 1); element ``i`` belongs to step ``i``."""
    bg = np.random.Philox(key=path_key, counter=[0, 0, 0, int(channel)])
    return np.maximum(np.random.Generator(bg).random(n), _TINY)


def path_streams(path_keys, n_steps: int) -> dict[Channel, np.ndarray]:
    """Stack every channel for a batch of paths into ``(n_steps, n_paths)`` arrays."""
    out = {}
    for ch in Channel:
        cols = [uniforms(key, ch, n_steps) for key in path_keys]
        out[ch] = np.stack(cols, axis=1) if cols else np.empty((n_steps, 0))
    out[Channel.PRICE] = ndtri(out[Channel.PRICE])
    return out


def poisson_from_uniform(u: np.ndarray, mean: np.ndarray) -> np.ndarray:
    """Inverse-CDF Poisson draw: the smallest ``n`` with ``u < P(N <= n)``.

    ``N >= 1`` exactly when ``u >= exp(-mean)``, so the probability of at
    least one event is ``1 - exp(-mean)``.
    """
    u = np.asarray(u, dtype=float)
    mean = np.broadcast_to(np.asarray(mean, dtype=float), u.shape)
    n = np.zeros(u.shape, dtype=np.int64)
    p = np.exp(-mean)
    cdf = p.copy()
    active = u >= cdf
    j = 0
    while active.any():
        j += 1
        p = p * mean / j
        n[active] += 1
        cdf = cdf + p
        active &= (u >= cdf) & (p > 0)
    return n
