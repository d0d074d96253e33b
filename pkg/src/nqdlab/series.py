"""Certified evaluation of slowly convergent nonnegative series.

A series is summed exactly up to ``n_exact`` and then over a grid of blocks
that are uniform in ``u = log n``.  Every summand is a product of factors that
are monotone in ``n`` (or in a block index), so evaluating each factor at the
two ends of a block gives a rigorous lower and upper value for every term in
it.  All block quantities live in log space, which lets the grid run out to
``n = e^700`` without overflow.  Past the last block the remainder is bounded
by a power envelope fitted to the local decay of the block densities.

Three shapes are supported:

* nested double sums ``sum_n A_n sum_{k<=n} B_k``,
* block triple sums ``sum_k sum_{l_k<j<=l_{k+1}} (1/j) w(k) sum_{i<=l_{k+1}} B_i``,
  rewritten as a single sum over ``j`` with ``k = phi_s(j)``,
* finite block sums ``sum_{l_k<j<=l_{k+1}} B_j`` used for ratio sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .marginals import Marginal
from .scaling import BlockSequence, MomentInequalityProfile, harmonic_increment

_LN2 = math.log(2.0)
# integer block edges are used while exp(u) is exactly representable
_INT_EDGE_LIMIT = 2.0**52
_WIDEN = 1e-9


@dataclass(frozen=True)
class EngineConfig:
    """Knobs of the certification engine.

    ``tol`` is the relative tolerance a converged verdict must meet;
    ``eps`` the block width in ``log n``; ``u_cap`` the largest ``log n``
    the block grid may reach.
    """

    n_exact: int = 2**20
    eps: float = 2e-4
    chunk_u: float = 20.0
    u_cap: float = 700.0
    tol: float = 1e-3
    stop_fraction: float = 0.05
    fit_window: float = 5.0
    checkpoint_start: int = 4

    def __post_init__(self):
        if self.n_exact < 2**6:
            raise ValueError("n_exact must be at least 64")
        if not 0 < self.eps < 0.1:
            raise ValueError("eps must lie in (0, 0.1)")
        if not self.u_cap > math.log(self.n_exact):
            raise ValueError("u_cap must exceed log(n_exact)")


@dataclass
class SeriesDiagnostic:
    """Outcome of one certification.

    ``partial_sums`` holds ``(log n, estimate of the sum up to n)`` pairs;
    ``tail_majorant`` bounds ``|S - value_estimate|`` (bracket half width
    plus the envelope remainder past the last block).
    """

    condition_id: str
    verdict: str
    value_estimate: float
    tail_majorant: float
    partial_sums: list = field(default_factory=list)
    lower: float = math.nan
    upper: float = math.nan
    far_tail: float = math.nan
    log_n_reached: float = math.nan
    decay_exponent: float = math.nan
    notes: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.verdict == "converged"

    def relative_majorant(self) -> float:
        if self.value_estimate == 0:
            return 0.0 if self.tail_majorant == 0 else math.inf
        return self.tail_majorant / abs(self.value_estimate)


# ---------------------------------------------------------------------------
# summand factors
# ---------------------------------------------------------------------------


def log_Log_u(u):
    """``log Log(e^u)``."""
    return np.log(np.maximum(u, 1.0))


def log_LLog_u(u):
    """``log LLog(e^u)``."""
    return np.log(np.log(np.maximum(u, math.e)))


class Term:
    """Log of a positive factor of the summand, as a function of ``n``.

    ``exact`` takes integer ``n``; ``bracket`` takes the logs of the
    smallest and largest ``n`` of each block and returns lower and upper
    log values valid for every integer in between.
    """

    def exact(self, n: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bracket(self, ulo: np.ndarray, uhi: np.ndarray):
        raise NotImplementedError

    def __mul__(self, other: "Term") -> "Term":
        return Product([self, other])

    def regime_u(self) -> float:
        """``log n`` past which the factor follows its asymptotic shape."""
        return 0.0


class Product(Term):
    def __init__(self, parts: Sequence[Term]):
        flat = []
        for p in parts:
            flat.extend(p.parts if isinstance(p, Product) else [p])
        self.parts = flat

    def regime_u(self):
        return max(p.regime_u() for p in self.parts)

    def exact(self, n):
        out = np.zeros(np.shape(n))
        for p in self.parts:
            out = out + p.exact(n)
        return out

    def bracket(self, ulo, uhi):
        lo = np.zeros(np.shape(ulo))
        hi = np.zeros(np.shape(ulo))
        for p in self.parts:
            a, b = p.bracket(ulo, uhi)
            lo = lo + a
            hi = hi + b
        return lo, hi


class Mono(Term):
    """``fn(log n)`` for a monotone ``fn``."""

    def __init__(self, fn: Callable, increasing: bool):
        self.fn = fn
        self.increasing = increasing

    def exact(self, n):
        return self.fn(np.log(np.asarray(n, dtype=float)))

    def bracket(self, ulo, uhi):
        a, b = self.fn(ulo), self.fn(uhi)
        return (a, b) if self.increasing else (b, a)


def power_log(power: float = 0.0, log_power: float = 0.0, loglog_power: float = 0.0) -> Term:
    """``n^power Log(n)^log_power LLog(n)^loglog_power`` as a product of monotone pieces."""
    parts = []
    if power:
        parts.append(Mono(lambda u, c=power: c * u, power > 0))
    if log_power:
        parts.append(Mono(lambda u, c=log_power: c * log_Log_u(u), log_power > 0))
    if loglog_power:
        parts.append(Mono(lambda u, c=loglog_power: c * log_LLog_u(u), loglog_power > 0))
    if not parts:
        parts.append(Mono(lambda u: np.zeros_like(u), True))
    return Product(parts)


@dataclass(frozen=True)
class Threshold:
    """``t_n = n^(1/p) / Log(n)^gamma`` (``kind='Log'``) or ``/ LLog(n)^gamma``."""

    inv_p: float
    gamma: float
    kind: str = "Log"

    def _g(self, u):
        return log_Log_u(u) if self.kind == "Log" else log_LLog_u(u)

    def log_t(self, u):
        return self.inv_p * u - self.gamma * self._g(u)

    def bracket(self, ulo, uhi):
        return self.inv_p * ulo - self.gamma * self._g(uhi), self.inv_p * uhi - self.gamma * self._g(ulo)


class MarginalTerm(Term):
    """A closed-form marginal quantity at thresholds that depend on ``n``.

    ``what`` is one of ``'tm'`` (``E X^r 1{X<=t}``), ``'um'`` (``E X 1{X>t}``),
    ``'tail_r'`` (``t^r P(X>t)``) and ``'window'`` (``E X^r 1{t<X<=t2}``).
    """

    def __init__(self, m: Marginal, what: str, thr: Threshold, order: float = 1.0, thr2: Threshold | None = None):
        if what not in ("tm", "um", "tail_r", "window"):
            raise ValueError(what)
        if what == "window" and thr2 is None:
            raise ValueError("window needs an upper threshold")
        self.m, self.what, self.thr, self.order, self.thr2 = m, what, thr, order, thr2

    def regime_u(self):
        # thresholds must sit in the upper tail before local decay is predictive
        target = math.log(max(float(self.m.isf(0.01)), 1e-300))
        u = np.arange(0.0, 700.0, 0.25)
        out = 0.0
        for thr in (self.thr, self.thr2):
            if thr is None:
                continue
            below = np.flatnonzero(thr.log_t(u) < target)
            if below.size:
                out = max(out, float(u[min(below[-1] + 1, u.size - 1)]))
        return out

    def _eval(self, tlo, thi, t2lo=None, t2hi=None):
        m, r = self.m, self.order
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if self.what == "tm":
                return m.log_truncated_moment(r, tlo), m.log_truncated_moment(r, thi)
            if self.what == "um":
                return m.log_upper_moment(1.0, thi), m.log_upper_moment(1.0, tlo)
            if self.what == "tail_r":
                return r * tlo + m.log_tail(thi), r * thi + m.log_tail(tlo)
            return m.log_window_moment(r, thi, t2lo), m.log_window_moment(r, tlo, t2hi)

    def exact(self, n):
        u = np.log(np.asarray(n, dtype=float))
        t = self.thr.log_t(u)
        t2 = self.thr2.log_t(u) if self.thr2 is not None else None
        return self._eval(t, t, t2, t2)[0]

    def bracket(self, ulo, uhi):
        tlo, thi = self.thr.bracket(ulo, uhi)
        if self.thr2 is not None:
            t2lo, t2hi = self.thr2.bracket(ulo, uhi)
            return self._eval(tlo, thi, t2lo, t2hi)
        return self._eval(tlo, thi)


class CapitalTerm(Term):
    """``Lambda_n^r`` from a moment-inequality profile."""

    def __init__(self, profile: MomentInequalityProfile, r: float):
        self.profile, self.r = profile, r

    def _log_capital_of_log2(self, log2n):
        if self.profile.is_unit:
            return np.log(np.floor(log2n) + 1.0)
        n = np.exp2(np.minimum(log2n, 1020.0))
        return np.log(self.profile.capital(np.maximum(n, 1.0)))

    def exact(self, n):
        return self.r * np.log(self.profile.capital(np.asarray(n, dtype=float)))

    def bracket(self, ulo, uhi):
        lo = self._log_capital_of_log2(ulo / _LN2 - _WIDEN)
        hi = self._log_capital_of_log2(uhi / _LN2 + _WIDEN)
        return self.r * lo, self.r * hi


# ---------------------------------------------------------------------------
# block grid along n
# ---------------------------------------------------------------------------


@dataclass
class _Chunk:
    ulo: np.ndarray  # log of the first integer of each block
    uhi: np.ndarray  # log of the last integer of each block
    edge: np.ndarray  # log of the right edge
    lcnt_lo: np.ndarray
    lcnt_hi: np.ndarray
    lharm_lo: np.ndarray  # log sum_{j in block} 1/j
    lharm_hi: np.ndarray


class _BlockGrid:
    """Blocks ``(b_{i-1}, b_i]`` with ``log b_i`` advancing by ``eps``."""

    def __init__(self, n_start: int, eps: float):
        self.eps = eps
        self.u0 = math.log(n_start)
        self.i = 0
        self.prev_edge_int = float(n_start)

    @property
    def u_end(self) -> float:
        return self.u0 + self.i * self.eps

    def next_chunk(self, du: float) -> _Chunk:
        eps = self.eps
        m = max(int(round(du / eps)), 1)
        idx = np.arange(self.i + 1, self.i + m + 1, dtype=float)
        u = self.u0 + idx * eps
        uprev = u - eps
        self.i += m
        ints = np.exp(u) < _INT_EDGE_LIMIT
        ulo = uprev.copy()
        uhi = u.copy()
        lcnt = u + math.log(-math.expm1(-eps))
        lcnt_lo = lcnt - _WIDEN
        lcnt_hi = lcnt + _WIDEN
        a_cont = np.exp(np.minimum(uprev, 700.0))
        lharm_lo = np.log(np.maximum(eps - 3.0 / a_cont, 1e-300))
        lharm_hi = np.log(eps + 3.0 / a_cont)
        edge = u.copy()
        if np.any(ints):
            k = np.flatnonzero(ints)
            b = np.floor(np.exp(u[k]))
            a = np.concatenate(([self.prev_edge_int], b[:-1]))
            ulo[k] = np.log(a + 1.0)
            uhi[k] = np.log(b)
            edge[k] = np.log(b)
            c = np.log(b - a)
            lcnt_lo[k] = c
            lcnt_hi[k] = c
            h = np.log(harmonic_increment(a, b))
            lharm_lo[k] = h - 1e-13
            lharm_hi[k] = h + 1e-13
            self.prev_edge_int = float(b[-1])
        return _Chunk(ulo, uhi, edge, lcnt_lo, lcnt_hi, lharm_lo, lharm_hi)


def _lse(x) -> float:
    """``log sum exp`` of an array (``-inf`` for empty or all ``-inf``)."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return -math.inf
    m = float(np.max(x))
    if not math.isfinite(m):
        return m
    return m + math.log(float(np.sum(np.exp(x - m))))


def _cum_lse(start: float, x: np.ndarray) -> np.ndarray:
    """Running ``log(exp(start) + cumsum(exp(x)))``."""
    return np.logaddexp.accumulate(np.concatenate(([start], x)))[1:]


class _Cumulative:
    """Prefix sums ``F(x) = sum_{i<=x} B_i`` with rigorous brackets on a block grid."""

    def __init__(self, B: Term, n_exact: int, eps: float, chunk_u: float):
        self.B = B
        self.n_exact = n_exact
        n = np.arange(1, n_exact + 1, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            self.B_exact = np.exp(B.exact(n))
        self.F_exact = np.cumsum(self.B_exact)
        self.grid = _BlockGrid(n_exact, eps)
        self.chunk_u = chunk_u
        with np.errstate(divide="ignore"):
            f_end = math.log(self.F_exact[-1]) if self.F_exact[-1] > 0 else -math.inf
        self.edges = [np.array([math.log(n_exact)])]
        self.lf_lo = [np.array([f_end])]
        self.lf_hi = [np.array([f_end])]
        self._cat = None

    @property
    def u_end(self) -> float:
        return self.grid.u_end

    def advance(self, du: float | None = None):
        """Grow by one chunk; returns the chunk with block-level B and F brackets."""
        ch = self.grid.next_chunk(self.chunk_u if du is None else du)
        blo, bhi = self.B.bracket(ch.ulo, ch.uhi)
        f_lo_prev_end = float(self.lf_lo[-1][-1])
        f_hi_prev_end = float(self.lf_hi[-1][-1])
        with np.errstate(invalid="ignore"):
            lf_lo = _cum_lse(f_lo_prev_end, ch.lcnt_lo + blo)
            lf_hi = _cum_lse(f_hi_prev_end, ch.lcnt_hi + bhi)
        lf_lo_left = np.concatenate(([f_lo_prev_end], lf_lo[:-1]))
        self.edges.append(ch.edge)
        self.lf_lo.append(lf_lo)
        self.lf_hi.append(lf_hi)
        self._cat = None
        return ch, lf_lo_left, lf_hi

    def ensure(self, u: float):
        while self.u_end < u:
            self.advance()

    def _arrays(self):
        if self._cat is None:
            self._cat = (
                np.concatenate(self.edges),
                np.concatenate(self.lf_lo),
                np.concatenate(self.lf_hi),
            )
        return self._cat

    def lookup(self, lx_lo, lx_hi):
        """Bracket ``log F(x)`` for every ``x`` with ``log x`` in ``[lx_lo, lx_hi]``."""
        lx_lo = np.asarray(lx_lo, dtype=float)
        lx_hi = np.asarray(lx_hi, dtype=float)
        self.ensure(float(np.max(lx_hi)) if lx_hi.size else 0.0)
        edges, flo, fhi = self._arrays()
        out_lo = np.empty_like(lx_lo)
        out_hi = np.empty_like(lx_hi)
        with np.errstate(divide="ignore"):
            lFe = np.log(self.F_exact)
        # lower end
        ex = lx_lo <= edges[0] + 1e-15
        if np.any(ex):
            idx = np.clip(np.floor(np.exp(lx_lo[ex]) * (1 + 1e-15)).astype(np.int64), 1, self.n_exact)
            out_lo[ex] = lFe[idx - 1]
        gr = ~ex
        if np.any(gr):
            i = np.searchsorted(edges, lx_lo[gr], side="right") - 1
            out_lo[gr] = flo[i]
        # upper end
        ex = lx_hi <= edges[0] + 1e-15
        if np.any(ex):
            idx = np.clip(np.floor(np.exp(lx_hi[ex]) * (1 + 1e-15)).astype(np.int64), 1, self.n_exact)
            out_hi[ex] = lFe[idx - 1]
        gr = ~ex
        if np.any(gr):
            i = np.minimum(np.searchsorted(edges, lx_hi[gr], side="left"), edges.size - 1)
            out_hi[gr] = fhi[i]
        return out_lo, out_hi

    def exact_at(self, x: np.ndarray) -> np.ndarray:
        return self.F_exact[np.asarray(x, dtype=np.int64) - 1]


# ---------------------------------------------------------------------------
# tail envelope and verdicts
# ---------------------------------------------------------------------------


class _Tracker:
    """Accumulates block contributions, densities and checkpoints."""

    def __init__(self, cfg: EngineConfig, decay_hint: float | None = None):
        self.cfg = cfg
        self.decay_hint = decay_hint
        self.lo_parts: list = []
        self.hi_parts: list = []
        self.dens_u: list = []
        self.dens_lo: list = []
        self.dens_hi: list = []
        self.checkpoints: list = []

    def add(self, edge, clo, chi):
        with np.errstate(over="ignore"):
            self.lo_parts.append(float(np.sum(np.exp(clo))))
            self.hi_parts.append(float(np.sum(np.exp(chi))))
        self.dens_u.append(edge)
        self.dens_lo.append(clo - math.log(self.cfg.eps))
        self.dens_hi.append(chi - math.log(self.cfg.eps))

    def totals(self):
        return math.fsum(self.lo_parts), math.fsum(self.hi_parts)

    def envelope(self):
        """``(far_tail, decay, rising)`` from the last ``fit_window`` units of ``log n``.

        The block density ``n * term(n)`` is fitted by ``D exp(-kappa u)``
        with ``kappa`` capped by the analytic power-log envelope exponent when
        one is known; the remainder is bounded by ``2 D / (kappa / 2)``.  ``rising`` reports whether
        the lower density is nondecreasing over the final half of the grid.
        """
        u = np.concatenate(self.dens_u)
        dlo = np.concatenate(self.dens_lo)
        dhi = np.concatenate(self.dens_hi)
        u_end = float(u[-1])
        win = u >= u_end - self.cfg.fit_window
        y = dhi[win]
        if not np.any(np.isfinite(y)):
            return 0.0, math.inf, False
        if np.any(~np.isfinite(y)):
            # zeros inside the window: the summand has left the support
            if not np.isfinite(y[-1]):
                return 0.0, math.inf, False
            keep = np.isfinite(y)
            uu, y = u[win][keep], y[keep]
        else:
            uu = u[win]
        slope = float(np.polyfit(uu - u_end, y, 1)[0]) if uu.size > 2 else 0.0
        d_end = float(np.max(y[uu >= u_end - 0.5])) if np.any(uu >= u_end - 0.5) else float(y[-1])
        half = u >= u_end - 0.5 * (u_end - float(u[0]))
        rising = _nondecreasing_trend(u[half], dlo[half])
        kappa = -slope
        if self.decay_hint is not None:
            # the analytic envelope exponent caps the fitted one
            kappa = min(kappa, self.decay_hint)
        if kappa <= 0:
            return math.inf, kappa, rising
        return 4.0 * math.exp(d_end) / kappa, kappa, rising


def _nondecreasing_trend(u, y, pieces: int = 8, slack: float = 1e-8) -> bool:
    """Coarse monotonicity: segment means of the log density ``y`` never drop by more than ``slack``.

    The slack absorbs bracket rounding (about 1e-10 here); a flat density
    still yields a harmonic minorant.
    """
    if u.size < pieces or not np.all(np.isfinite(y)):
        return False
    means = [float(np.mean(seg)) for seg in np.array_split(y, pieces)]
    return all(b >= a - slack for a, b in zip(means, means[1:]))


def _finish(cid, cfg, exact_sum, tracker: _Tracker, u_end, checkpoints, notes, extra=None):
    lo, hi = tracker.totals()
    far, kappa, rising = tracker.envelope()
    S_lo, S_hi = exact_sum + lo, exact_sum + hi
    est = 0.5 * (S_lo + S_hi)
    half = 0.5 * (S_hi - S_lo)
    tail = half + far
    if not math.isfinite(est) or not math.isfinite(tail):
        verdict = "diverged" if (rising and u_end >= cfg.u_cap - 1e-9) else "inconclusive"
    elif tail == 0 or tail < cfg.tol * abs(est):
        verdict = "converged"
    elif rising and u_end >= cfg.u_cap - 1e-9:
        verdict = "diverged"
    else:
        verdict = "inconclusive"
    if verdict == "diverged":
        notes.append("block density n*term(n) nondecreasing: terms dominate a multiple of 1/n")
    return SeriesDiagnostic(
        condition_id=cid,
        verdict=verdict,
        value_estimate=est,
        tail_majorant=tail,
        partial_sums=checkpoints,
        lower=S_lo,
        upper=S_hi + (far if math.isfinite(far) else math.inf),
        far_tail=far,
        log_n_reached=u_end,
        decay_exponent=1.0 + kappa if math.isfinite(kappa) else math.inf,
        notes=notes,
        extra=extra or {},
    )


def _should_stop(cfg: EngineConfig, exact_sum: float, tracker: _Tracker, regime: float) -> bool:
    if float(tracker.dens_u[-1][-1]) < regime + 2.0 * cfg.fit_window:
        return False
    lo, hi = tracker.totals()
    est = exact_sum + 0.5 * (lo + hi)
    far, _, _ = tracker.envelope()
    if far == 0.0:
        return True
    return math.isfinite(far) and far < cfg.stop_fraction * cfg.tol * abs(est)


def _exact_checkpoints(cfg: EngineConfig, partial: np.ndarray, offset: int = 0):
    """``(log n, S_n)`` at ``n = 2^start .. n_exact``; ``partial[i]`` is ``S_{i+1+offset}``."""
    out = []
    e = cfg.checkpoint_start
    while 2**e <= cfg.n_exact:
        n = 2**e
        i = n - 1 - offset
        out.append((math.log(n), float(partial[i]) if i >= 0 else 0.0))
        e += 1
    return out


# ---------------------------------------------------------------------------
# the three shapes
# ---------------------------------------------------------------------------


def certify_double(cid: str, A: Term, B: Term, cfg: EngineConfig = EngineConfig(),
                   decay_hint: float | None = None) -> SeriesDiagnostic:
    """``sum_n A_n sum_{k<=n} B_k`` for nonnegative factors."""
    notes: list = []
    try:
        with np.errstate(over="raise", invalid="ignore", divide="ignore"):
            cum = _Cumulative(B, cfg.n_exact, cfg.eps, cfg.chunk_u)
            n = np.arange(1, cfg.n_exact + 1, dtype=float)
            terms = np.exp(A.exact(n)) * cum.F_exact
            partial = np.cumsum(terms)
            exact_sum = math.fsum(terms.tolist())
            checkpoints = _exact_checkpoints(cfg, partial)
            tr = _Tracker(cfg, decay_hint)
            regime = max(A.regime_u(), B.regime_u())
            while cum.u_end < cfg.u_cap - 1e-9:
                ch, lf_lo_left, lf_hi = cum.advance(min(cfg.chunk_u, cfg.u_cap - cum.u_end))
                alo, ahi = A.bracket(ch.ulo, ch.uhi)
                clo = ch.lcnt_lo + alo + lf_lo_left
                chi = ch.lcnt_hi + ahi + lf_hi
                tr.add(ch.edge, clo, chi)
                lo, hi = tr.totals()
                checkpoints.append((float(ch.edge[-1]), exact_sum + 0.5 * (lo + hi)))
                if _should_stop(cfg, exact_sum, tr, regime):
                    break
    except FloatingPointError as exc:
        return _overflow(cid, exc)
    return _finish(cid, cfg, exact_sum, tr, cum.u_end, checkpoints, notes)


class BlockWeight:
    """Log of ``w(k)`` for the block triple sums, monotone pieces in ``k``.

    ``kind='lemma'`` gives ``Log(k)^r / (l_k^(r/p) LLog(l_k)^gamma)``;
    ``kind='theorem'`` gives ``Lambda_{D(k)+1}^r lambda_{gap}^r / b_{l_k}^r``
    with ``D`` the rank among distinct block values.
    """

    def __init__(self, blocks: BlockSequence, kind: str, p: float, r: float, gamma: float = 0.0,
                 profile: MomentInequalityProfile | None = None, b_loglog_power: float = 0.0):
        self.bs, self.kind, self.p, self.r, self.gamma = blocks, kind, p, r, gamma
        self.profile = profile or MomentInequalityProfile(r=r)
        self.b_loglog_power = b_loglog_power

    def _from_logl(self, logl, logk, lam_part):
        if self.kind == "lemma":
            return self.r * log_Log_u(logk) - (self.r / self.p) * logl - self.gamma * log_LLog_u(logl)
        log_b = logl / self.p + self.b_loglog_power * log_LLog_u(logl)
        return lam_part - self.r * log_b

    def _lam_part(self, k, widen):
        if self.kind != "theorem":
            return 0.0
        D = self.bs.distinct_rank(k)
        log2 = np.log2(D + 1.0) + widen
        if self.profile.is_unit:
            cap = np.floor(log2) + 1.0
            return self.r * np.log(cap)
        cap = self.profile.capital(np.maximum(np.exp2(np.minimum(log2, 1020.0)), 1.0))
        out = self.r * np.log(cap)
        if not (self.profile.lam_kind == "const"):
            # lambda at the gap between consecutive distinct values
            s = self.bs.s
            with np.errstate(over="ignore"):
                gap = np.exp(np.minimum(k**s, 700.0)) * -np.expm1(-s * np.maximum(k, 1.0) ** (s - 1.0))
            gap = np.maximum(gap + (1.0 if widen > 0 else -1.0), 1.0)
            out = out + self.r * np.log(self.profile.lam(gap))
        else:
            out = out + self.r * math.log(self.profile.lam_value)
        return out

    def exact(self, k: np.ndarray, logl: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        lam = self._lam_part(k, 0.0) if self.kind == "theorem" else 0.0
        if self.kind == "theorem" and not self.profile.is_unit and self.profile.lam_kind != "const":
            # exact gap from the deduplicated values
            ends, idx = self.bs.dedup(int(np.exp(np.max(logl))) + 1)
            pos = np.searchsorted(idx, k, side="left")
            prev = np.where(pos > 0, ends[np.maximum(pos - 1, 0)], 0)
            gap = np.floor(np.exp(logl)) - prev
            D = self.bs.distinct_rank(k)
            lam = self.r * np.log(self.profile.capital(D + 1.0)) + self.r * np.log(self.profile.lam(np.maximum(gap, 1.0)))
        return self._from_logl(np.asarray(logl, dtype=float), np.log(np.maximum(k, 1.0)), lam)

    def bracket(self, klo, khi, logl_lo, logl_hi):
        lam_lo = self._lam_part(klo, -_WIDEN)
        lam_hi = self._lam_part(khi, _WIDEN)
        logk_lo, logk_hi = np.log(klo), np.log(khi)
        if self.kind == "lemma":
            lo = self.r * log_Log_u(logk_lo) - (self.r / self.p) * logl_hi - self.gamma * log_LLog_u(logl_hi)
            hi = self.r * log_Log_u(logk_hi) - (self.r / self.p) * logl_lo - self.gamma * log_LLog_u(logl_lo)
            return lo, hi
        lo = lam_lo - self.r * (logl_hi / self.p + self.b_loglog_power * log_LLog_u(logl_hi))
        hi = lam_hi - self.r * (logl_lo / self.p + self.b_loglog_power * log_LLog_u(logl_lo))
        return lo, hi


def certify_block_triple(cid: str, weight: BlockWeight, B: Term, cfg: EngineConfig = EngineConfig(),
                         decay_hint: float | None = None) -> SeriesDiagnostic:
    """``sum_k H_k w(k) F(l_{k+1})`` with ``H_k = sum_{l_k<j<=l_{k+1}} 1/j``.

    Evaluated as ``sum_{j>l_1} (1/j) w(phi(j)) F(l_{phi(j)+1})``.
    """
    bs = weight.bs
    s = bs.s
    notes: list = []
    try:
        with np.errstate(over="raise", invalid="ignore", divide="ignore"):
            N = cfg.n_exact
            j = np.arange(3, N + 1, dtype=float)
            kap = bs.phi(j)
            k_max = float(kap[-1]) + 1.0
            l_next_max = int(bs.value(int(k_max)))
            cum = _Cumulative(B, max(N, l_next_max), cfg.eps, cfg.chunk_u)
            logl = np.log(np.floor(np.exp(kap**s)))
            l_next = np.floor(np.exp((kap + 1.0) ** s)).astype(np.int64)
            terms = np.exp(weight.exact(kap, logl)) * cum.exact_at(l_next) / j
            partial = np.cumsum(terms)
            exact_sum = math.fsum(terms.tolist())
            checkpoints = _exact_checkpoints(cfg, partial, offset=2)
            grid = _BlockGrid(N, cfg.eps)
            tr = _Tracker(cfg, decay_hint)
            regime = B.regime_u()
            inv_s = 1.0 / s
            while grid.u_end < cfg.u_cap - 1e-9:
                ch = grid.next_chunk(min(cfg.chunk_u, cfg.u_cap - grid.u_end))
                klo = np.maximum(np.ceil(ch.ulo**inv_s * (1 - 1e-13)) - 1.0, 1.0)
                khi = np.maximum(np.ceil(ch.uhi**inv_s * (1 + 1e-13)) - 1.0, 1.0)
                ks_lo = klo**s
                logl_lo = ks_lo + np.log1p(-np.exp(-ks_lo))
                logl_hi = np.minimum(khi**s, ch.uhi)
                wlo, whi = weight.bracket(klo, khi, logl_lo, logl_hi)
                # log l_{k+1} for the extreme k; (k+1)^s is formed without k + 1
                nxt_lo = klo**s * np.exp(s * np.log1p(1.0 / klo))
                nxt_hi = khi**s * np.exp(s * np.log1p(1.0 / khi)) * (1 + 1e-14)
                lx_lo = np.maximum(ch.ulo, nxt_lo + np.log1p(-np.exp(-nxt_lo)))
                flo, fhi = cum.lookup(lx_lo, nxt_hi)
                clo = ch.lharm_lo + wlo + flo
                chi = ch.lharm_hi + whi + fhi
                tr.add(ch.edge, clo, chi)
                lo, hi = tr.totals()
                checkpoints.append((float(ch.edge[-1]), exact_sum + 0.5 * (lo + hi)))
                if _should_stop(cfg, exact_sum, tr, regime):
                    break
    except FloatingPointError as exc:
        return _overflow(cid, exc)
    return _finish(cid, cfg, exact_sum, tr, grid.u_end, checkpoints, notes)


def _overflow(cid, exc) -> SeriesDiagnostic:
    return SeriesDiagnostic(
        condition_id=cid,
        verdict="inconclusive",
        value_estimate=math.nan,
        tail_majorant=math.inf,
        notes=[f"floating-point overflow: {exc}"],
    )


def range_sum_int(B: Term, a: int, b: int, eps: float = 2e-4, exact_limit: int = 2_000_000,
                  chunk: int = 100_000):
    """Bracket ``log sum_{a < n <= b} B_n`` for integers ``a < b``."""
    a, b = int(a), int(b)
    if b <= a:
        return -math.inf, -math.inf
    if b - a <= exact_limit:
        with np.errstate(divide="ignore"):
            v = B.exact(np.arange(a + 1, b + 1, dtype=float))
        t = _lse(v)
        return t - 1e-12, t + 1e-12
    nb = max(int(math.ceil(math.log(b / a) / eps)), 1)
    edges = np.unique(np.floor(np.exp(np.linspace(math.log(a), math.log(b), nb + 1))))
    edges[0], edges[-1] = a, b
    los, his = [], []
    for i in range(0, edges.size - 1, chunk):
        lft, rgt = edges[i:i + chunk], edges[i + 1:i + chunk + 1]
        k = min(lft.size, rgt.size)
        lft, rgt = lft[:k], rgt[:k]
        blo, bhi = B.bracket(np.log(lft + 1.0), np.log(rgt))
        lc = np.log(rgt - lft)
        los.append(_lse(lc + blo))
        his.append(_lse(lc + bhi))
    return _lse(np.array(los)), _lse(np.array(his))


def range_sum(B: Term, u_a: float, u_b: float, eps: float = 2e-4, exact_limit: int = 2_000_000,
              chunk: int = 100_000):
    """Bracket ``log sum_{n: e^u_a < n <= e^u_b} B_n``.

    Below ``2^52`` this defers to :func:`range_sum_int`.  Above it the range
    is split into about ``(u_b - u_a)/eps`` blocks whose endpoints are
    treated as reals, every block count widened by one integer either way.
    """
    if not u_b > u_a:
        return -math.inf, -math.inf
    if u_b < math.log(_INT_EDGE_LIMIT):
        a = int(math.floor(math.exp(u_a) * (1 + 1e-13)))
        b = int(math.floor(math.exp(u_b) * (1 + 1e-13)))
        return range_sum_int(B, a, b, eps, exact_limit, chunk)
    nb = max(int(math.ceil((u_b - u_a) / eps)), 1)
    u = np.linspace(u_a, u_b, nb + 1)
    los, his = [], []
    for i in range(0, nb, chunk):
        lft, rgt = u[i:i + chunk], u[i + 1:i + chunk + 1]
        k = min(lft.size, rgt.size)
        lft, rgt = lft[:k], rgt[:k]
        with np.errstate(divide="ignore"):
            lc = rgt + np.log(-np.expm1(lft - rgt))
            c_lo = lc + np.log(np.maximum(-np.expm1(-lc), 0.0))
            c_hi = lc + np.log1p(np.exp(-lc))
        blo, bhi = B.bracket(lft - 1e-12, rgt + 1e-12)
        los.append(_lse(c_lo + blo))
        his.append(_lse(c_hi + bhi))
    return _lse(np.array(los)), _lse(np.array(his))


def double_sum_both_orders(A: np.ndarray, B: np.ndarray):
    """``sum_{n<=N} sum_{k<=n} A_n B_k`` summed n-first and k-first, both compensated."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    F = np.cumsum(B)
    W = np.cumsum(A[::-1])[::-1]
    by_n = math.fsum((A * F).tolist())
    by_k = math.fsum((B * W).tolist())
    return by_n, by_k


__all__ = [
    "BlockWeight",
    "CapitalTerm",
    "EngineConfig",
    "MarginalTerm",
    "Mono",
    "Product",
    "SeriesDiagnostic",
    "Term",
    "Threshold",
    "certify_block_triple",
    "certify_double",
    "double_sum_both_orders",
    "power_log",
    "range_sum",
    "range_sum_int",
]
