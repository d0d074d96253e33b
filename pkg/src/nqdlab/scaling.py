"""Deterministic sequences: clamped logarithms, truncation windows, the
maximal-inequality constants and the normalizing / threshold / block
sequences used by the strong-law machinery.

Everything here is a pure function of its arguments.  Array versions take
``float`` arrays (possibly far beyond the int64 range) and work in log space
so that nothing overflows before the caller combines terms.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

E_E = math.exp(math.e)
INT64_MAX = 2**63 - 1
# ln(2**63): exp(k**s) must stay below this for l_k to fit in int64
_LOG_INT64 = 63 * math.log(2.0)
# beyond this exponent floor(exp(u)) and exp(u) agree to double precision
_FLOOR_EXACT_LIMIT = 36.0


class BlockRangeError(OverflowError):
    """Raised when an integer sequence value does not fit in 64 bits."""


def log_floor(x):
    """``log max(x, e)``; always >= 1."""
    if np.ndim(x) == 0:
        return math.log(max(float(x), math.e))
    return np.log(np.maximum(np.asarray(x, dtype=float), math.e))


def loglog_floor(x):
    """``log log max(x, e**e)``; always >= 1."""
    if np.ndim(x) == 0:
        return math.log(math.log(max(float(x), E_E)))
    return np.log(np.log(np.maximum(np.asarray(x, dtype=float), E_E)))


def log_Log(log_x):
    """log of ``log_floor`` given ``log x`` (vectorized, overflow free)."""
    return np.log(np.maximum(log_x, 1.0))


def log_LLog(log_x):
    """log of ``loglog_floor`` given ``log x``."""
    return np.log(np.log(np.maximum(log_x, math.e)))


@dataclass(frozen=True)
class TruncationWindow:
    """Lower cut ``s_lo`` and cap length ``t_len`` of ``max(min(x - s, t), 0)``."""

    s_lo: float = 0.0
    t_len: float = 1.0

    def __post_init__(self):
        if not self.t_len > 0:
            raise ValueError(f"t_len must be > 0, got {self.t_len}")
        if not self.s_lo >= 0:
            raise ValueError(f"s_lo must be >= 0, got {self.s_lo}")


def g_trunc(x, w: TruncationWindow):
    """Clip ``x - s_lo`` into ``[0, t_len]``."""
    if np.ndim(x) == 0:
        return max(min(float(x) - w.s_lo, w.t_len), 0.0)
    return np.clip(np.asarray(x, dtype=float) - w.s_lo, 0.0, w.t_len)


# ---------------------------------------------------------------------------
# moment-inequality constants
# ---------------------------------------------------------------------------


@dataclass
class MomentInequalityProfile:
    """Block constants ``lambda_n`` and the derived maximal constants.

    ``lam_kind`` is one of ``"const"`` (lambda_n = lam_value), ``"power"``
    (lambda_n = lam_value * n**gamma) or ``"table"`` (explicit values for
    n = 1..len(table)).
    """

    r: float = 2.0
    lam_kind: str = "const"
    lam_value: float = 1.0
    gamma: float = 0.0
    table: Sequence[float] | None = None
    block_bounds: Sequence[int] | None = None
    offset: int = 0
    _memo: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self):
        if self.r <= 1:
            raise ValueError("moment order r must exceed 1")
        if self.lam_kind not in ("const", "power", "table"):
            raise ValueError(f"unknown lambda rule {self.lam_kind!r}")
        if self.lam_kind in ("const", "power") and not self.lam_value > 0:
            raise ValueError("lambda must be positive")
        if self.lam_kind == "power" and self.gamma < 0:
            raise ValueError("power lambda needs gamma >= 0 to be nondecreasing")
        if self.lam_kind == "table":
            t = np.asarray(self.table, dtype=float)
            if t.size == 0 or np.any(t <= 0) or np.any(np.diff(t) < 0):
                raise ValueError("lambda table must be positive and nondecreasing")
        if self.block_bounds is not None:
            xi = np.asarray(self.block_bounds)
            if np.any(np.diff(xi) <= 0) or np.any(xi < 0):
                raise ValueError("block bounds must be strictly increasing and nonnegative")
        if self.offset < 0:
            raise ValueError("offset must be nonnegative")

    @property
    def is_unit(self) -> bool:
        return self.lam_kind == "const" and self.lam_value == 1.0

    def lam(self, n):
        """Vectorized ``lambda_n`` for n >= 1."""
        n = np.asarray(n, dtype=float)
        if self.lam_kind == "const":
            return np.full_like(n, self.lam_value)
        if self.lam_kind == "power":
            return self.lam_value * n**self.gamma
        t = np.asarray(self.table, dtype=float)
        if np.any(n > t.size):
            raise ValueError(f"lambda table only covers n <= {t.size}")
        return t[n.astype(np.int64) - 1]

    def capital(self, n):
        """Vectorized maximal constant ``Lambda_n``.

        Unrolls ``Lambda_n = lambda_{floor(n/2)+1} + Lambda_{floor(n/2)}``
        down to ``Lambda_1 = lambda_1``; the loop runs ``log2(n)`` times.
        """
        n = np.floor(np.asarray(n, dtype=float))
        if np.any(n < 1):
            raise ValueError("Lambda_n needs n >= 1")
        if self.is_unit:
            # closed form of the unit recursion
            return np.floor(np.log2(n)) + 1.0
        out = np.zeros_like(n)
        cur = n.copy()
        while True:
            active = cur >= 2
            if not np.any(active):
                break
            half = np.floor(cur / 2)
            out[active] += self.lam(half[active] + 1)
            cur = np.where(active, half, cur)
        return out + self.lam(np.ones(1))[0]


def lambda_capital(n: int, profile: MomentInequalityProfile) -> float:
    """Memoized ``Lambda_n`` for a single integer ``n >= 1``."""
    if n < 1:
        raise ValueError("Lambda_n needs n >= 1")
    memo = profile._memo
    if n in memo:
        return memo[n]
    # walk the halving chain iteratively; depth is log2(n)
    chain = []
    m = n
    while m not in memo and m >= 2:
        chain.append(m)
        m //= 2
    value = memo[m] if m in memo else float(profile.lam(np.array([1.0]))[0])
    with profile._lock:
        memo.setdefault(m, value)
        for k in reversed(chain):
            value = float(profile.lam(np.array([k // 2 + 1]))[0]) + value
            memo.setdefault(k, value)
    return memo[n]


# ---------------------------------------------------------------------------
# block sequence l_k = floor(exp(k**s))
# ---------------------------------------------------------------------------


class BlockSequence:
    """The subexponential grid ``l_k = floor(exp(k**s))`` and its bookkeeping.

    Besides the integer values this knows the smallest block index covering a
    given integer (``phi``) and the rank of ``l_k`` among the distinct values
    of ``l_1..l_k`` (the deduplicated index), both for arguments far beyond
    what can be enumerated.
    """

    enum_limit = 1 << 20

    def __init__(self, s: float):
        if not 0 < s < 1:
            raise ValueError(f"block exponent s must lie in (0, 1), got {s}")
        self.s = float(s)
        self._rank_setup()

    # values ---------------------------------------------------------------
    def value(self, k: int) -> int:
        if k < 1:
            raise ValueError("block index starts at 1")
        u = float(k) ** self.s
        if u >= _LOG_INT64:
            raise BlockRangeError(f"l_k overflows int64 at k={k}")
        return int(math.floor(math.exp(u)))

    def values(self, k):
        """Integer values for an int array of indices (int64, range checked)."""
        k = np.asarray(k, dtype=np.int64)
        u = k.astype(float) ** self.s
        if np.any(u >= _LOG_INT64):
            raise BlockRangeError("l_k overflows int64 inside the requested range")
        return np.floor(np.exp(u)).astype(np.int64)

    def log_values(self, k):
        """``log l_k`` for float indices of any size."""
        k = np.asarray(k, dtype=float)
        u = k**self.s
        small = u < _FLOOR_EXACT_LIMIT
        out = u.copy()
        if np.any(small):
            out[small] = np.log(np.floor(np.exp(u[small])))
        return out

    def phi(self, n):
        """Smallest ``k >= 1`` with ``l_{k+1} >= n`` (vectorized).

        Exact for ``n < 2**53`` (the closed form is corrected against the
        integer values); beyond that the closed form is used as is.
        """
        scalar = np.ndim(n) == 0
        n = np.atleast_1d(np.asarray(n, dtype=float))
        logn = np.log(np.maximum(n, 1.0))
        k = np.maximum(np.ceil(logn ** (1.0 / self.s)) - 1.0, 1.0)
        exact = n < 2.0**53
        if np.any(exact):
            ke = k[exact]
            ne = n[exact]
            for _ in range(4):
                up = self._floor_val(ke + 1) < ne
                ke = np.where(up, ke + 1, ke)
                down = (ke > 1) & (self._floor_val(ke) >= ne)
                ke = np.where(down, ke - 1, ke)
                if not (np.any(up) or np.any(down)):
                    break
            k[exact] = ke
        return k[0] if scalar else k

    def _floor_val(self, k):
        with np.errstate(over="ignore"):
            return np.floor(np.exp(np.asarray(k, dtype=float) ** self.s))

    # distinct-value rank --------------------------------------------------
    def _gap(self, k: float) -> float:
        """Continuous increment ``exp((k+1)**s) - exp(k**s)``."""
        a = k**self.s
        d = a * math.expm1(self.s * math.log1p(1.0 / k))
        log_gap = a + math.log(math.expm1(d))
        return math.inf if log_gap > 700.0 else math.exp(log_gap)

    def _rank_setup(self):
        s = self.s
        K = int(min(self.enum_limit, math.floor(600.0 ** (1.0 / s))))
        self._K = K
        vals = np.floor(np.exp(np.arange(1, K + 1, dtype=float) ** s))
        fresh = np.empty(K, dtype=bool)
        fresh[0] = True
        fresh[1:] = vals[1:] != vals[:-1]
        self._enum_vals = vals
        self._enum_rank = np.cumsum(fresh).astype(float)
        g_end = self._gap(float(K))
        k_turn = ((1.0 - s) / s) ** (1.0 / s)
        rank_K = self._enum_rank[-1]
        if g_end >= 1.0:
            if K < k_turn:
                raise NotImplementedError(
                    f"block exponent s={s} leaves a non-monotone increment past enumeration"
                )
            self._dense_end = float(K)
        else:
            lo = max(float(K), k_turn)
            hi = lo * 2.0
            while self._gap(hi) < 1.0:
                lo, hi = hi, hi * 2.0
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if self._gap(mid) < 1.0:
                    lo = mid
                else:
                    hi = mid
            self._dense_end = math.ceil(hi)
        self._rank_K = rank_K
        self._val_K = vals[-1]
        self._rank_dense_end = rank_K + (
            math.floor(math.exp(self._dense_end**s)) - self._val_K
            if self._dense_end > K
            else 0.0
        )

    def distinct_rank(self, k):
        """Number of distinct values among ``l_1, ..., l_k`` (vectorized)."""
        k = np.floor(np.asarray(k, dtype=float))
        out = np.empty_like(k)
        K = self._K
        enum = k <= K
        if np.any(enum):
            out[enum] = self._enum_rank[k[enum].astype(np.int64) - 1]
        dense = (~enum) & (k <= self._dense_end)
        if np.any(dense):
            with np.errstate(over="ignore"):
                lv = np.floor(np.exp(k[dense] ** self.s))
            out[dense] = self._rank_K + (lv - self._val_K)
        strict = k > self._dense_end
        if np.any(strict):
            out[strict] = self._rank_dense_end + (k[strict] - self._dense_end)
        return out

    def dedup(self, horizon: int):
        """Strictly increasing values ``<= horizon`` with the original last index.

        Returns ``(values, index)`` where ``index[i]`` is the largest ``k`` with
        ``l_k == values[i]``.
        """
        kmax = int(self.phi(horizon + 1)) + 1
        if kmax <= 5_000_000:
            ks = np.arange(1, kmax + 1, dtype=np.int64)
            vals = self.values(ks)
            keep = np.ones(vals.size, dtype=bool)
            keep[:-1] = vals[1:] != vals[:-1]
            keep &= vals <= horizon
            return vals[keep], ks[keep]
        if horizon > 50_000_000:
            raise BlockRangeError(f"dedup up to {horizon} is too large to enumerate")
        # many repeats: scan candidate values instead of indices
        m = np.arange(2, horizon + 1, dtype=float)
        last = np.ceil(np.log(m + 1) ** (1.0 / self.s)) - 1
        ok = (last >= 1) & (self._floor_val(last) == m)
        return m[ok].astype(np.int64), last[ok].astype(np.int64)


def block_l(k: int, fam: "ScalingFamily") -> int:
    return fam.blocks.value(k)


def block_m(k: int) -> int:
    if k < 1:
        raise ValueError("block index starts at 1")
    if k >= 63:
        raise BlockRangeError(f"m_k = 2**{k} overflows int64")
    return 1 << k


def phi_s(n: int, s: float) -> int:
    """Smallest ``k >= 1`` with ``floor(exp((k+1)**s)) >= n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return int(_block_cache(s).phi(float(n)))


_BLOCK_CACHE: dict[float, BlockSequence] = {}
_BLOCK_LOCK = threading.Lock()


def _block_cache(s: float) -> BlockSequence:
    with _BLOCK_LOCK:
        bs = _BLOCK_CACHE.get(s)
        if bs is None:
            bs = _BLOCK_CACHE[s] = BlockSequence(s)
        return bs


# ---------------------------------------------------------------------------
# normalizing family
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingFamily:
    """Normalizer ``b``, thresholds ``c <= d``, weights ``a`` and block grids.

    ``b_n = n^(1/p) LLog(n)^(2(p-1)/p)``, ``c_n = n^(1/p) / Log(n)^(2/(2-p))``,
    ``d_n = n^(1/p) / LLog(n)^(2/p)``, ``a_n = 1/n``, ``m_k = 2^k`` and
    ``l_k = floor(exp(k^s))`` with ``s`` defaulting to ``(2-p)/p``.
    """

    p: float = 1.5
    r: float = 2.0
    s: float | None = None

    def __post_init__(self):
        if not 1 < self.p < 2:
            raise ValueError(f"p must lie in (1, 2), got {self.p}")
        if not self.r > self.p:
            raise ValueError(f"r must exceed p, got r={self.r}, p={self.p}")
        if self.s is None:
            object.__setattr__(self, "s", (2.0 - self.p) / self.p)
        if not 0 < self.s < 1:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")

    @property
    def blocks(self) -> BlockSequence:
        return _block_cache(self.s)

    # log-space vectorized forms, argument is log n
    def log_a(self, log_n):
        return -np.asarray(log_n, dtype=float)

    def log_b(self, log_n):
        log_n = np.asarray(log_n, dtype=float)
        return log_n / self.p + (2.0 * (self.p - 1.0) / self.p) * log_LLog(log_n)

    def log_c(self, log_n):
        log_n = np.asarray(log_n, dtype=float)
        return log_n / self.p - (2.0 / (2.0 - self.p)) * log_Log(log_n)

    def log_d(self, log_n):
        log_n = np.asarray(log_n, dtype=float)
        return log_n / self.p - (2.0 / self.p) * log_LLog(log_n)

    # direct forms
    def a(self, n):
        return 1.0 / np.asarray(n, dtype=float)

    def b(self, n):
        return np.exp(self.log_b(np.log(np.asarray(n, dtype=float))))

    def c(self, n):
        return np.exp(self.log_c(np.log(np.asarray(n, dtype=float))))

    def d(self, n):
        return np.exp(self.log_d(np.log(np.asarray(n, dtype=float))))


def weight_a(n: int) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    return 1.0 / n


def normalizer_b(n: int, fam: ScalingFamily) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    return float(fam.b(n))


def threshold_c(n: int, fam: ScalingFamily) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    return float(fam.c(n))


def threshold_d(n: int, fam: ScalingFamily) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    return float(fam.d(n))


def plain_normalizer(n, p: float):
    return np.asarray(n, dtype=float) ** (1.0 / p)


# ---------------------------------------------------------------------------
# asymptotic equivalents
# ---------------------------------------------------------------------------

ASYMPTOTIC_KINDS = (
    "log_partial",
    "log_tail",
    "loglog_partial",
    "loglog_tail",
    "block_ratio",
    "block_growth",
    "block_loglog",
)


def _power_log_terms(k, alpha, beta, loglog):
    k = np.asarray(k, dtype=float)
    lg = loglog_floor(k) if loglog else log_floor(k)
    return lg**alpha * k ** (-beta)


def _em_tail(alpha, delta, loglog, m):
    """Euler-Maclaurin estimate of sum_{k>=m} f(k) for the smooth tail."""
    f = lambda x: float(_power_log_terms(np.array([x]), alpha, delta, loglog)[0])

    def integrand(t):  # x = exp(t), evaluated without forming x
        lg = math.log(max(t, 1.0)) if loglog else max(t, 1.0)
        return lg**alpha * math.exp((1.0 - delta) * t)

    val, _ = integrate.quad(integrand, math.log(m), np.inf, limit=400, epsabs=0, epsrel=1e-13)
    h = 1e-3 * m
    fp = (f(m + h) - f(m - h)) / (2 * h)
    return val + 0.5 * f(m) - fp / 12.0


def asymptotic_ratio(kind: str, params: dict, n_grid: Sequence[int]):
    """Compare a log-power sum (or block quantity) with its closed-form equivalent.

    Returns a list of ``(n, lhs, rhs, lhs/rhs)`` rows.
    """
    if kind not in ASYMPTOTIC_KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {ASYMPTOTIC_KINDS}")
    grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])) or (grid and grid[0] < 1):
        raise ValueError("n_grid must be positive and increasing")
    rows = []
    if kind in ("log_partial", "loglog_partial"):
        alpha = float(params.get("alpha", 0.0))
        beta = float(params["beta"])
        if not beta < 1:
            raise ValueError("partial-sum equivalents need beta < 1")
        loglog = kind == "loglog_partial"
        nmax = grid[-1]
        terms = _power_log_terms(np.arange(1, nmax + 1), alpha, beta, loglog)
        prev, acc = 0, 0.0
        parts = []
        for n in grid:
            parts.append(math.fsum(terms[prev:n]))
            prev = n
            acc = math.fsum(parts)
            lg = loglog_floor(n) if loglog else log_floor(n)
            rhs = n ** (1 - beta) * lg**alpha / (1 - beta)
            rows.append((n, acc, rhs, acc / rhs))
        return rows
    if kind in ("log_tail", "loglog_tail"):
        alpha = float(params.get("alpha", 0.0))
        delta = float(params["delta"])
        if not delta > 1:
            raise ValueError("tail equivalents need delta > 1")
        loglog = kind == "loglog_tail"
        for n in grid:
            m = max(2 * n, n + 100_000)
            head = math.fsum(_power_log_terms(np.arange(n, m), alpha, delta, loglog))
            lhs = head + _em_tail(alpha, delta, loglog, m)
            lg = loglog_floor(n) if loglog else log_floor(n)
            rhs = n ** (1 - delta) * lg**alpha / (delta - 1)
            rows.append((n, lhs, rhs, lhs / rhs))
        return rows
    s = float(params["s"])
    bs = _block_cache(s)
    for k in grid:
        lk1 = float(bs.log_values(np.array([k + 1.0]))[0])
        lk = float(bs.log_values(np.array([float(k)]))[0])
        if kind == "block_ratio":
            lhs, rhs = math.exp(lk1 - lk), 1.0
            rows.append((k, lhs, rhs, lhs))
            continue
        if kind == "block_growth":
            lhs = math.expm1(lk1 - lk)
            rhs = s * k ** (s - 1.0)
        else:
            lhs = float(log_LLog(np.array([lk1]))[0])
            lhs = math.exp(lhs)
            rhs = s * log_floor(k)
        rows.append((k, lhs, rhs, lhs / rhs))
    return rows


def harmonic_increment(lo, hi):
    """``sum_{j=lo+1}^{hi} 1/j`` for float arrays (digamma, asymptotic when huge)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    out = np.empty(np.broadcast(lo, hi).shape)
    lo, hi = np.broadcast_arrays(lo, hi)
    small = hi < 1e15
    out[small] = special.digamma(hi[small] + 1) - special.digamma(lo[small] + 1)
    big = ~small
    if np.any(big):
        a, b = lo[big] + 1, hi[big] + 1
        # psi(x) = log x - 1/(2x) - 1/(12x^2) + ...
        out[big] = np.log(b / a) - 0.5 / b + 0.5 / a
    return out


def lambda_table(horizon: int, profile: MomentInequalityProfile | None = None) -> np.ndarray:
    """``Lambda_n`` for ``n = 1..horizon`` (index 0 unused), built level by level from the recursion."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    profile = profile or MomentInequalityProfile()
    lam = profile.lam(np.arange(1, horizon // 2 + 2, dtype=float)) if horizon > 1 else profile.lam(np.ones(1))
    out = np.zeros(horizon + 1)
    out[1] = float(lam[0])
    lo = 2
    while lo <= horizon:
        hi = min(2 * lo, horizon + 1)
        n = np.arange(lo, hi)
        h = n // 2
        out[lo:hi] = lam[h] + out[h]  # lam[h] is lambda_{h+1}
        lo = hi
    return out


@dataclass(frozen=True)
class LambdaAudit:
    horizon: int
    base2_holds: bool
    base2_worst_gap: float
    equality_points: tuple
    base_e_first_failure: int | None
    base_e_failures_at_powers: tuple
    report: tuple


def lambda_bound_audit(horizon: int = 10**6) -> LambdaAudit:
    """Compare ``Lambda_n`` (unit block constants) with ``log(2n)`` in base 2 and base e."""
    L = lambda_table(horizon)[1:]
    n = np.arange(1, horizon + 1, dtype=float)
    bound2 = np.log2(2.0 * n)
    gap = L - bound2
    holds = bool(np.all(gap <= 1e-12))
    powers = [1 << j for j in range(int(math.log2(horizon)) + 1)]
    eq = tuple((k, int(L[k - 1])) for k in powers if abs(gap[k - 1]) <= 1e-12)
    bad_e = np.nonzero(L > np.log(2.0 * n) + 1e-12)[0]
    first_e = int(bad_e[0]) + 1 if bad_e.size else None
    lines = [
        f"Lambda_n <= log2(2n) for all n <= {horizon}: {'holds' if holds else 'FAILS'}"
        f" (max Lambda_n - log2(2n) = {float(gap.max()):.6g})",
        "equality at n = " + ", ".join(f"{k} (Lambda={v})" for k, v in eq[:8]) + (" ..." if len(eq) > 8 else ""),
    ]
    fails_e = tuple(k for k in powers if L[k - 1] > math.log(2.0 * k) + 1e-12)
    if first_e is not None:
        lines.append(
            f"natural-log reading fails: first at n = {first_e}, Lambda = {L[first_e - 1]:.0f}"
            f" > ln({2 * first_e}) = {math.log(2.0 * first_e):.6g}"
        )
        lines += [f"natural-log reading fails at n = {k}: Lambda = {L[k - 1]:.0f} > ln({2 * k}) = {math.log(2.0 * k):.6g}"
                  for k in fails_e if k in (8, 16)]
    else:
        lines.append("natural-log reading holds on the whole range")
    return LambdaAudit(horizon, holds, float(gap.max()), eq, first_e, fails_e, tuple(lines))


__all__ = [
    "ASYMPTOTIC_KINDS",
    "BlockRangeError",
    "BlockSequence",
    "MomentInequalityProfile",
    "ScalingFamily",
    "TruncationWindow",
    "asymptotic_ratio",
    "block_l",
    "block_m",
    "g_trunc",
    "LambdaAudit",
    "harmonic_increment",
    "lambda_bound_audit",
    "lambda_capital",
    "lambda_table",
    "log_floor",
    "loglog_floor",
    "normalizer_b",
    "phi_s",
    "plain_normalizer",
    "threshold_c",
    "threshold_d",
    "weight_a",
]
