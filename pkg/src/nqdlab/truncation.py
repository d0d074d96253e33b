"""Three-way split of a nonnegative sample at thresholds ``c <= d`` and the
block-sum bookkeeping along the deduplicated block grid."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .marginals import Marginal
from .scaling import ScalingFamily


class TruncationError(ValueError):
    pass


@dataclass(frozen=True)
class TruncationTriple:
    x_prime: float
    x_dprime: float
    x_tprime: float

    def total(self) -> float:
        return (self.x_prime + self.x_dprime) + self.x_tprime


def _split(x, c, d):
    x, c, d = np.broadcast_arrays(
        np.asarray(x, dtype=float), np.asarray(c, dtype=float), np.asarray(d, dtype=float)
    )
    if np.any(c > d):
        raise TruncationError("lower threshold c exceeds upper threshold d")
    if np.any(c < 0) or np.any(x < 0):
        raise TruncationError("decompose needs x >= 0 and c >= 0")
    xp = np.minimum(x, c)
    band = d - c
    mid = (x > c) & (x <= d)
    top = x > d
    xpp = np.where(mid, x - c, np.where(top, band, 0.0))
    # remove exactly what the first two parts represent so the sum rounds back to x
    xppp = np.where(top, np.maximum(x - (c + band), 0.0), 0.0)
    return xp, xpp, xppp


def decompose(x: float, c: float, d: float) -> TruncationTriple:
    """Split ``x`` into the part up to ``c``, the band ``(c, d]`` and the excess over ``d``.

    ``x == c`` stays entirely in the first part and ``x == d`` fills the band.
    """
    xp, xpp, xppp = _split(x, c, d)
    return TruncationTriple(float(xp), float(xpp), float(xppp))


def decompose_array(x, c, d):
    """Vectorized :func:`decompose`; returns three arrays."""
    return _split(x, c, d)


def component_means(m: Marginal, c, d):
    """Exact ``(E X', E X'', E X''')`` for thresholds ``c <= d`` (vectorized)."""
    c = np.asarray(c, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.any(c > d):
        raise TruncationError("lower threshold c exceeds upper threshold d")
    tc = np.asarray(m.tail(c), dtype=float)
    td = np.asarray(m.tail(d), dtype=float)
    e1 = np.asarray(m.truncated_moment(1.0, c), dtype=float) + c * tc
    e2 = np.asarray(m.window_moment(1.0, c, d), dtype=float) + d * td - c * tc
    e3 = np.asarray(m.upper_mean(d), dtype=float) - d * td
    return e1, np.maximum(e2, 0.0), np.maximum(e3, 0.0)


@dataclass(frozen=True)
class DecomposedPaths:
    thresholds_c: np.ndarray
    thresholds_d: np.ndarray
    prime: np.ndarray
    dprime: np.ndarray
    tprime: np.ndarray
    mean_prime: np.ndarray
    mean_dprime: np.ndarray
    mean_tprime: np.ndarray


def _marginal_list(marginals, n):
    if isinstance(marginals, Marginal):
        return [marginals] * n
    ms = list(marginals)
    if len(ms) < n:
        raise TruncationError(f"need {n} per-index marginals, got {len(ms)}")
    return ms[:n]


def _grouped_means(ms, c, d):
    out = [np.empty(len(ms)) for _ in range(3)]
    groups: dict[int, list[int]] = {}
    keyed = {}
    for i, m in enumerate(ms):
        keyed.setdefault(id(m), m)
        groups.setdefault(id(m), []).append(i)
    for key, idx in groups.items():
        idx = np.asarray(idx)
        for arr, val in zip(out, component_means(keyed[key], c[idx], d[idx])):
            arr[idx] = val
    return out


def decompose_path(values, marginals, fam: ScalingFamily) -> DecomposedPaths:
    """Apply the split with ``(c_k, d_k)`` at every index ``k = 1..n``.

    ``values`` has shape ``(paths, n)`` or ``(n,)``; ``marginals`` is one
    marginal or a per-index sequence.  Component means are exact.
    """
    x = np.asarray(values, dtype=float)
    n = x.shape[-1]
    k = np.arange(1, n + 1, dtype=float)
    c, d = fam.c(k), fam.d(k)
    d = np.maximum(c, d)  # c <= d holds analytically; guard the last ulp
    xp, xpp, xppp = _split(x, c, d)
    e1, e2, e3 = _grouped_means(_marginal_list(marginals, n), c, d)
    return DecomposedPaths(c, d, xp, xpp, xppp, e1, e2, e3)


@dataclass(frozen=True)
class BlockSum:
    k: int
    start: int
    stop: int
    sum: float


def block_bounds(fam: ScalingFamily, horizon: int):
    """Distinct block ends ``l_1 < l_2 < ... <= horizon`` with ``l_0 = 0`` prepended."""
    if horizon < 2:
        raise TruncationError("horizon must reach the first block end l_1 = 2")
    ends, _ = fam.blocks.dedup(int(horizon))
    return np.concatenate(([0], ends.astype(np.int64)))


def block_sums(path, means, fam: ScalingFamily, bounds: Sequence[int] | None = None):
    """Block sums ``T_k`` of ``path - means`` and prefix maxima at block ends.

    Returns ``(blocks, stat)`` where ``stat[k-1]`` is
    ``max_{1<=n<=k+1} |S_{l_n}|`` for ``k = 1..K-1`` (``K`` blocks fit in the
    path) and ``S`` is the centered prefix sum.
    """
    x = np.asarray(path, dtype=float)
    mu = np.broadcast_to(np.asarray(means, dtype=float), x.shape)
    if bounds is None:
        bounds = block_bounds(fam, x.size)
    bounds = np.asarray(bounds, dtype=np.int64)
    if bounds[-1] > x.size:
        raise TruncationError("block grid extends past the path")
    if bounds.size < 2:
        raise TruncationError("horizon shorter than the first block end")
    S = np.cumsum(x - mu)
    at_ends = S[bounds[1:] - 1]
    T = np.diff(np.concatenate(([0.0], at_ends)))
    blocks = [
        BlockSum(k=i + 1, start=int(bounds[i]) + 1, stop=int(bounds[i + 1]), sum=float(T[i]))
        for i in range(T.size)
    ]
    running = np.maximum.accumulate(np.abs(at_ends))
    return blocks, running[1:]


__all__ = [
    "BlockSum",
    "DecomposedPaths",
    "TruncationError",
    "TruncationTriple",
    "block_bounds",
    "block_sums",
    "component_means",
    "decompose",
    "decompose_array",
    "decompose_path",
]
