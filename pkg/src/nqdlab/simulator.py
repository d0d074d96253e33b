"""Monte-Carlo runs of normalized centered partial sums along full paths."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dependence import DependenceModel
from .scaling import ScalingFamily, TruncationWindow, g_trunc, plain_normalizer
from .truncation import block_bounds

NORMALIZERS = ("paper", "plain", "sung")


class SimulationError(ValueError):
    pass


def geometric_checkpoints(start: int, horizon: int, per_decade: int = 4) -> list[int]:
    """``round(start * 10^(i/per_decade))`` up to ``horizon``, deduplicated."""
    if start < 1 or horizon < start:
        raise SimulationError("checkpoints need 1 <= start <= horizon")
    out, i = [], 0
    while True:
        n = int(round(start * 10 ** (i / per_decade)))
        if n > horizon:
            break
        if not out or n > out[-1]:
            out.append(n)
        i += 1
    return out


@dataclass
class SimConfig:
    """Everything a run depends on; equal configs give bitwise-equal statistics.

    ``window``, ``ineq_r`` and ``ineq_blocks`` switch on the block moment
    inequality estimate (``ineq_blocks`` are the bounds ``xi_0 < ... < xi_K``).
    """

    model: DependenceModel
    fam: ScalingFamily
    master_seed: int = 0
    path_count: int = 200
    horizon: int = 10**6
    checkpoints: Sequence[int] | None = None
    epsilons: Sequence[float] = (0.5, 1.0, 2.0)
    normalizers: Sequence[str] = NORMALIZERS
    empirical_centering: bool = False
    event_points: int = 64
    window: TruncationWindow | None = None
    ineq_r: float = 2.0
    ineq_blocks: Sequence[int] | None = None
    ineq_eta: int = 0

    def __post_init__(self):
        if self.path_count < 2:
            raise SimulationError("path_count must be at least 2")
        if self.horizon < 2:
            raise SimulationError("horizon must be at least 2")
        if self.checkpoints is None:
            self.checkpoints = geometric_checkpoints(min(1000, self.horizon), self.horizon)
        cps = [int(c) for c in self.checkpoints]
        if not cps or any(b <= a for a, b in zip(cps, cps[1:])) or cps[0] < 1:
            raise SimulationError("checkpoints must be a strictly increasing list of positive integers")
        if cps[-1] > self.horizon:
            raise SimulationError("horizon must reach the largest checkpoint")
        self.checkpoints = cps
        bad = [n for n in self.normalizers if n not in NORMALIZERS]
        if bad:
            raise SimulationError(f"unknown normalizers {bad}; expected a subset of {NORMALIZERS}")
        if any(not e > 0 for e in self.epsilons):
            raise SimulationError("epsilons must be positive")
        if self.ineq_r <= 1:
            raise SimulationError("moment order r must exceed 1")


@dataclass
class TrajectoryStats:
    checkpoints: list
    # normalizer -> array (len(checkpoints), 3) of median, q90, max
    quantiles: dict
    epsilons: list
    event_k: list
    # array (len(epsilons), len(event_k)) of frequencies
    event_freq: np.ndarray
    path_count: int
    centering: str
    moment_inequality: dict | None = None
    notes: list = field(default_factory=list)

    def median(self, normalizer: str = "paper") -> np.ndarray:
        return self.quantiles[normalizer][:, 0]

    def rows(self):
        """``(checkpoint_n, normalizer, median, q90, max)`` rows."""
        out = []
        for i, n in enumerate(self.checkpoints):
            for name in self.quantiles:
                q = self.quantiles[name][i]
                out.append((n, name, float(q[0]), float(q[1]), float(q[2])))
        return out

    def event_rows(self):
        return [
            (float(e), int(k), float(self.event_freq[i, j]))
            for i, e in enumerate(self.epsilons)
            for j, k in enumerate(self.event_k)
        ]


def _normalizer_values(name: str, fam: ScalingFamily, n: np.ndarray) -> np.ndarray:
    if name == "paper":
        return fam.b(n)
    # Sung's setting keeps n^(1/p) and moves the log factor into the moment condition
    return plain_normalizer(n, fam.p)


def _centering_means(cfg: SimConfig, workers: int) -> tuple[np.ndarray, str]:
    model = cfg.model
    exact = model.means(cfg.horizon)
    if np.all(np.isfinite(exact)) and not cfg.empirical_centering:
        return exact, "exact"
    if not cfg.empirical_centering:
        raise SimulationError("exact means are unavailable (infinite mean); enable empirical_centering")
    # first pass: pooled mean per marginal slot, in path order
    slots = len(model.marginals())
    totals = np.zeros(slots)
    counts = np.zeros(slots)
    idx = np.arange(cfg.horizon) % slots

    def one(i):
        x = model.path(cfg.master_seed, i, cfg.horizon)
        return np.bincount(idx, weights=x, minlength=slots), np.bincount(idx, minlength=slots)

    for t, c in _ordered_map(one, range(cfg.path_count), workers):
        totals += t
        counts += c
    per = totals / counts
    return per[idx], "empirical"


def _ordered_map(fn, items, workers: int):
    items = list(items)
    if workers <= 1:
        for it in items:
            yield fn(it)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(fn, items)


def _event_grid(ends: np.ndarray, points: int) -> np.ndarray:
    """Block indices ``k`` (1-based) where event frequencies are reported."""
    K = ends.size - 1  # the event at k needs l_{k+1}
    if K < 1:
        return np.zeros(0, dtype=np.int64)
    ks = np.unique(np.round(np.geomspace(1, K, min(points, K))).astype(np.int64))
    return ks


def run(cfg: SimConfig, workers: int = 1) -> TrajectoryStats:
    """Stream every path once and reduce in path order."""
    means, centering = _centering_means(cfg, workers)
    cps = np.asarray(cfg.checkpoints, dtype=np.int64)
    norms = {name: _normalizer_values(name, cfg.fam, cps.astype(float)) for name in cfg.normalizers}
    ends = block_bounds(cfg.fam, cfg.horizon)[1:]
    ks = _event_grid(ends, cfg.event_points)
    eps = np.asarray(cfg.epsilons, dtype=float)
    b_at_l = cfg.fam.b(ends[ks - 1].astype(float)) if ks.size else np.zeros(0)
    ineq = _ineq_setup(cfg)

    def one(i):
        x = cfg.model.path(cfg.master_seed, i, cfg.horizon)
        S = np.cumsum(x - means)
        absS = np.abs(S)
        at_cp = absS[cps - 1]
        # running max over l_1..l_{k+1} of |S_{l_n}|
        run_max = np.maximum.accumulate(absS[ends - 1])
        m_k = run_max[ks] if ks.size else np.zeros(0)
        events = m_k[None, :] > eps[:, None] * b_at_l[None, :]
        extra = _ineq_sample(x, ineq) if ineq else None
        return at_cp, events, extra

    dev, ev_count, samples = [], np.zeros((eps.size, ks.size)), []
    for at_cp, events, extra in _ordered_map(one, range(cfg.path_count), workers):
        dev.append(at_cp)
        ev_count += events
        if extra is not None:
            samples.append(extra)
    dev = np.stack(dev)  # paths x checkpoints
    quant = {}
    for name, b in norms.items():
        z = dev / b[None, :]
        quant[name] = np.column_stack(
            [np.median(z, axis=0), np.quantile(z, 0.9, axis=0), np.max(z, axis=0)]
        )
    stats = TrajectoryStats(
        checkpoints=cps.tolist(),
        quantiles=quant,
        epsilons=eps.tolist(),
        event_k=ks.tolist(),
        event_freq=ev_count / cfg.path_count,
        path_count=cfg.path_count,
        centering=centering,
    )
    if ineq:
        stats.moment_inequality = _ineq_reduce(np.array(samples), cfg.ineq_r)
    return stats


def compare_normalizers(cfg: SimConfig, workers: int = 1):
    """Rows ``(checkpoint_n, normalizer, median, q90, max)`` for all three normalizers on the same paths."""
    full = SimConfig(**{**cfg.__dict__, "normalizers": NORMALIZERS})
    return run(full, workers).rows()


# ---------------------------------------------------------------------------
# block moment inequality
# ---------------------------------------------------------------------------


def _ineq_setup(cfg: SimConfig):
    if cfg.window is None:
        return None
    xi = np.asarray(cfg.ineq_blocks if cfg.ineq_blocks is not None else np.arange(0, 9), dtype=np.int64)
    if xi.size < 2 or np.any(np.diff(xi) <= 0) or xi[0] < 0:
        raise SimulationError("inequality blocks must be strictly increasing nonnegative bounds")
    if xi[-1] > cfg.horizon:
        raise SimulationError("inequality blocks exceed the horizon")
    if not 0 <= cfg.ineq_eta < xi.size - 1:
        raise SimulationError("offset eta leaves no block")
    n = int(xi[-1])
    w = cfg.window
    ms = cfg.model.marginals(n)
    mu = np.array([m.truncated_window_mean(w.s_lo, w.t_len) for m in ms])
    return {"xi": xi, "eta": cfg.ineq_eta, "window": w, "mu": mu, "r": cfg.ineq_r}


def _ineq_sample(x, st):
    xi, eta, r = st["xi"], st["eta"], st["r"]
    y = g_trunc(x[: xi[-1]], st["window"]) - st["mu"]
    c = np.concatenate(([0.0], np.cumsum(y)))
    T = c[xi[eta + 1:]] - c[xi[eta:-1]]
    return abs(float(np.sum(T))) ** r, float(np.sum(np.abs(T) ** r))


def _ineq_reduce(samples: np.ndarray, r: float) -> dict:
    lhs, rhs = samples[:, 0], samples[:, 1]
    n = samples.shape[0]
    ml, mr = float(np.mean(lhs)), float(np.mean(rhs))
    cov = np.cov(lhs, rhs, ddof=1) / n
    se_l, se_r = math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1])
    ratio = ml / mr if mr > 0 else math.nan
    # delta method for a ratio of correlated means
    var_ratio = (cov[0, 0] - 2 * ratio * cov[0, 1] + ratio**2 * cov[1, 1]) / mr**2 if mr > 0 else math.nan
    return {
        "r": r,
        "lhs": ml,
        "rhs": mr,
        "lhs_se": se_l,
        "rhs_se": se_r,
        "ratio": ratio,
        "ratio_se": math.sqrt(max(var_ratio, 0.0)) if mr > 0 else math.nan,
        "paths": n,
    }


def empirical_moment_inequality(cfg: SimConfig, window: TruncationWindow, r: float = 2.0,
                                blocks: Sequence[int] | None = None, eta: int = 0, workers: int = 1) -> dict:
    """Monte-Carlo estimates of both sides of the block moment inequality with unit constant.

    Returns ``lhs``, ``rhs``, their standard errors, ``ratio`` and ``ratio_se``.
    Only the first ``blocks[-1]`` values of each path are drawn.
    """
    xi = list(blocks) if blocks is not None else list(range(9))
    sub = SimConfig(
        **{**cfg.__dict__, "horizon": max(int(xi[-1]), 2), "checkpoints": [max(int(xi[-1]), 2)],
           "window": window, "ineq_r": r, "ineq_blocks": xi, "ineq_eta": eta}
    )
    st = _ineq_setup(sub)
    samples = np.array(list(_ordered_map(
        lambda i: _ineq_sample(sub.model.path(sub.master_seed, i, sub.horizon), st),
        range(sub.path_count), workers)))
    return _ineq_reduce(samples, r)


__all__ = [
    "NORMALIZERS",
    "SimConfig",
    "SimulationError",
    "TrajectoryStats",
    "compare_normalizers",
    "empirical_moment_inequality",
    "geometric_checkpoints",
    "run",
]
