"""Analytic nonnegative marginals with closed-form tails and truncated moments.

Every marginal offers plain evaluations (``tail``, ``truncated_moment``,
``upper_mean`` ...) and log-space twins that take the log of the threshold.
The log forms are what the series checker uses, since its thresholds run far
past the float range.  Divergent moments come back as ``math.inf``.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np
from scipy import integrate, special

INFINITE = math.inf
# pareto: switch to the logarithmic branch this close to order == alpha
SINGULAR_BAND = 1e-8


class MarginalError(ValueError):
    """Invalid marginal parameters or an undefined moment request."""


def _arr(x):
    return np.asarray(x, dtype=float)


def _ret(x, scalar):
    return float(x) if scalar else x


def _log_expm1_over(z, d):
    """``log(expm1(z) / d)`` for ``z`` and ``d`` of equal sign (elementwise)."""
    z = _arr(z)
    out = np.empty_like(z)
    pos = z > 0
    with np.errstate(divide="ignore"):
        out[pos] = z[pos] + np.log(-np.expm1(-z[pos]))
        out[~pos] = np.log(-np.expm1(z[~pos]))
    return out - math.log(abs(d))


def _floatify(obj):
    for f in fields(obj):
        object.__setattr__(obj, f.name, float(getattr(obj, f.name)))


class Marginal:
    """Base class; concrete kinds fill in the closed forms."""

    kind = "abstract"
    lower = 0.0
    upper = math.inf
    continuous = True
    # regular-variation index of the tail; inf when the tail is lighter than any power
    tail_index = math.inf

    # -- primitives each kind provides ---------------------------------------
    def tail(self, t):
        raise NotImplementedError

    def quantile(self, q):
        raise NotImplementedError

    def truncated_moment(self, order, cap):
        raise NotImplementedError

    def moment(self, order):
        raise NotImplementedError

    def spec(self) -> str:
        raise NotImplementedError

    # -- derived -------------------------------------------------------------
    def cdf(self, t):
        return 1.0 - self.tail(t) if np.ndim(t) == 0 else 1.0 - self.tail(_arr(t))

    def isf(self, q):
        """Inverse survival function: the ``t`` with ``P(X > t) = q``."""
        raise NotImplementedError

    def mean(self) -> float:
        return self.moment(1.0)

    def upper_moment(self, order, floor):
        """``E X^order 1{X > floor}`` (``inf`` when the moment diverges)."""
        full = self.moment(order)
        if math.isinf(full):
            scalar = np.ndim(floor) == 0
            return _ret(np.full(np.shape(floor), INFINITE), scalar) if not scalar else INFINITE
        scalar = np.ndim(floor) == 0
        out = np.maximum(full - _arr(self.truncated_moment(order, floor)), 0.0)
        return _ret(out, scalar)

    def upper_mean(self, floor):
        """``E X 1{X > floor}``; requires a finite mean."""
        if math.isinf(self.mean()):
            raise MarginalError(f"{self.spec()} has an infinite mean")
        if np.any(_arr(floor) < 0):
            raise MarginalError("floor must be >= 0")
        return self.upper_moment(1.0, floor)

    def window_moment(self, order, lo, hi):
        """``E X^order 1{lo < X <= hi}``."""
        scalar = np.ndim(lo) == 0 and np.ndim(hi) == 0
        out = _arr(self.truncated_moment(order, hi)) - _arr(self.truncated_moment(order, lo))
        return _ret(np.maximum(out, 0.0), scalar)

    def stop_loss(self, a):
        """``E (X - a)^+`` for ``a >= 0``."""
        scalar = np.ndim(a) == 0
        a = _arr(a)
        out = _arr(self.upper_mean(a)) - a * _arr(self.tail(a))
        return _ret(np.maximum(out, 0.0), scalar)

    def truncated_window_mean(self, s_lo: float, t_len: float) -> float:
        """``E max(min(X - s_lo, t_len), 0)``."""
        return float(self.stop_loss(s_lo) - self.stop_loss(s_lo + t_len))

    # -- log space (argument is the log of the threshold) --------------------
    def log_tail(self, log_t):
        log_t = _arr(log_t)
        with np.errstate(over="ignore", divide="ignore"):
            return np.log(_arr(self.tail(np.exp(log_t))))

    def log_truncated_moment(self, order, log_cap):
        log_cap = _arr(log_cap)
        with np.errstate(over="ignore", divide="ignore"):
            return np.log(_arr(self.truncated_moment(order, np.exp(log_cap))))

    def log_upper_moment(self, order, log_floor):
        log_floor = _arr(log_floor)
        with np.errstate(over="ignore", divide="ignore"):
            return np.log(_arr(self.upper_moment(order, np.exp(log_floor))))

    def log_window_moment(self, order, log_lo, log_hi):
        lo, hi = np.broadcast_arrays(_arr(log_lo), _arr(log_hi))
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            out = np.log(_arr(self.window_moment(order, np.exp(lo), np.exp(hi))))
        return np.where(hi > lo, out, -np.inf)

    # -- sampling ------------------------------------------------------------
    def sample_from_uniform(self, u):
        """Map uniforms on (0,1) to samples through the survival quantile."""
        return self.isf(u)

    def pdf(self, x):
        raise NotImplementedError

    def self_test(self, orders: Sequence[float] = (0.5, 1.0, 1.5), caps: Sequence[float] = (0.7, 2.0, 9.0)) -> float:
        """Worst relative gap between closed forms and quadrature of the density."""
        if not self.continuous:
            return 0.0
        worst = 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            for order in orders:
                for cap in caps:
                    a, b = self.lower, min(cap, self.upper)
                    if b <= a:
                        continue
                    num, _ = integrate.quad(
                        lambda x: x**order * self.pdf(x), a, b, epsabs=0, epsrel=1e-13, limit=200
                    )
                    ref = self.truncated_moment(order, cap)
                    worst = max(worst, abs(num - ref) / max(abs(ref), 1e-300))
        return worst

    def __repr__(self) -> str:
        return self.spec()


@dataclass(frozen=True, repr=False)
class Pareto(Marginal):
    alpha: float
    xm: float = 1.0
    kind = "pareto"

    def __post_init__(self):
        _floatify(self)
        if not (self.alpha > 0 and self.xm > 0):
            raise MarginalError(f"pareto needs alpha > 0 and xm > 0, got {self.alpha}, {self.xm}")

    @property
    def lower(self):
        return self.xm

    @property
    def tail_index(self):
        return self.alpha

    def spec(self):
        return f"pareto(alpha={self.alpha!r}, xm={self.xm!r})"

    def tail(self, t):
        scalar = np.ndim(t) == 0
        t = _arr(t)
        with np.errstate(divide="ignore"):
            out = np.where(t <= self.xm, 1.0, (self.xm / np.maximum(t, self.xm)) ** self.alpha)
        return _ret(out, scalar)

    def pdf(self, x):
        return self.alpha * self.xm**self.alpha / x ** (self.alpha + 1) if x >= self.xm else 0.0

    def quantile(self, q):
        scalar = np.ndim(q) == 0
        out = self.xm * (1.0 - _arr(q)) ** (-1.0 / self.alpha)
        return _ret(out, scalar)

    def isf(self, q):
        scalar = np.ndim(q) == 0
        out = self.xm * _arr(q) ** (-1.0 / self.alpha)
        return _ret(out, scalar)

    def moment(self, order):
        if order >= self.alpha:
            return INFINITE
        return self.alpha * self.xm**order / (self.alpha - order)

    def truncated_moment(self, order, cap):
        scalar = np.ndim(cap) == 0
        L = np.log(np.maximum(_arr(cap), self.xm) / self.xm)
        d = order - self.alpha
        z = d * L
        if abs(d) < SINGULAR_BAND:
            ratio = L * (1.0 + 0.5 * z)
        else:
            ratio = np.expm1(z) / d
        return _ret(self.alpha * self.xm**order * ratio, scalar)

    def upper_moment(self, order, floor):
        scalar = np.ndim(floor) == 0
        if order >= self.alpha:
            return INFINITE if scalar else np.full(np.shape(floor), INFINITE)
        f = np.maximum(_arr(floor), self.xm)
        out = self.alpha * self.xm**self.alpha * f ** (order - self.alpha) / (self.alpha - order)
        return _ret(out, scalar)

    def window_moment(self, order, lo, hi):
        scalar = np.ndim(lo) == 0 and np.ndim(hi) == 0
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            out = np.exp(self.log_window_moment(order, np.log(_arr(lo)), np.log(_arr(hi))))
        return _ret(out, scalar)

    def stop_loss(self, a):
        scalar = np.ndim(a) == 0
        if self.alpha <= 1:
            return INFINITE if scalar else np.full(np.shape(a), INFINITE)
        a = _arr(a)
        f = np.maximum(a, self.xm)
        # E(X-a)^+ = (xm - a)^+ + int_f^inf (xm/u)^alpha du
        out = np.maximum(self.xm - a, 0.0) + self.xm**self.alpha * f ** (1.0 - self.alpha) / (self.alpha - 1.0)
        return _ret(out, scalar)

    def truncated_window_mean(self, s_lo, t_len):
        lo, hi = s_lo, s_lo + t_len
        # int_lo^hi P(X > u) du split at xm
        below = max(min(hi, self.xm) - lo, 0.0)
        a = max(lo, self.xm)
        if hi <= a:
            return float(below)
        if abs(self.alpha - 1.0) < SINGULAR_BAND:
            above = self.xm * math.log(hi / a)
        else:
            above = self.xm**self.alpha * (hi ** (1 - self.alpha) - a ** (1 - self.alpha)) / (1 - self.alpha)
        return float(below + above)

    # log forms
    def log_tail(self, log_t):
        log_t = _arr(log_t)
        lx = math.log(self.xm)
        return np.where(log_t <= lx, 0.0, self.alpha * (lx - log_t))

    def log_truncated_moment(self, order, log_cap):
        lx = math.log(self.xm)
        L = np.maximum(_arr(log_cap) - lx, 0.0)
        d = order - self.alpha
        base = math.log(self.alpha) + order * lx
        with np.errstate(divide="ignore"):
            if abs(d) < SINGULAR_BAND:
                return base + np.log(L) + np.log1p(0.5 * d * L)
            return base + _log_expm1_over(d * L, d)

    def log_upper_moment(self, order, log_floor):
        if order >= self.alpha:
            return np.full(np.shape(log_floor), INFINITE)
        lx = math.log(self.xm)
        lf = np.maximum(_arr(log_floor), lx)
        return (
            math.log(self.alpha) + self.alpha * lx + (order - self.alpha) * lf - math.log(self.alpha - order)
        )

    def log_window_moment(self, order, log_lo, log_hi):
        lx = math.log(self.xm)
        lo, hi = np.broadcast_arrays(_arr(log_lo), _arr(log_hi))
        Llo = np.maximum(lo - lx, 0.0)
        Lhi = np.maximum(hi - lx, 0.0)
        d = order - self.alpha
        base = math.log(self.alpha) + order * lx
        gap = Lhi - Llo
        with np.errstate(divide="ignore", invalid="ignore"):
            if abs(d) < SINGULAR_BAND:
                out = base + np.log(gap)
            else:
                # (e^{d Lhi} - e^{d Llo}) / d = e^{d Llo} expm1(d gap) / d
                out = base + d * Llo + _log_expm1_over(d * gap, d)
        return np.where(gap > 0, out, -np.inf)


@dataclass(frozen=True, repr=False)
class Exponential(Marginal):
    rate: float = 1.0
    kind = "exponential"

    def __post_init__(self):
        _floatify(self)
        if not self.rate > 0:
            raise MarginalError(f"exponential needs rate > 0, got {self.rate}")

    def spec(self):
        return f"exponential(rate={self.rate!r})"

    def tail(self, t):
        scalar = np.ndim(t) == 0
        out = np.exp(-self.rate * np.maximum(_arr(t), 0.0))
        return _ret(out, scalar)

    def pdf(self, x):
        return self.rate * math.exp(-self.rate * x) if x >= 0 else 0.0

    def quantile(self, q):
        scalar = np.ndim(q) == 0
        return _ret(-np.log1p(-_arr(q)) / self.rate, scalar)

    def isf(self, q):
        scalar = np.ndim(q) == 0
        return _ret(-np.log(_arr(q)) / self.rate, scalar)

    def moment(self, order):
        return math.gamma(order + 1.0) / self.rate**order

    def truncated_moment(self, order, cap):
        scalar = np.ndim(cap) == 0
        x = self.rate * np.maximum(_arr(cap), 0.0)
        return _ret(self.moment(order) * special.gammainc(order + 1.0, x), scalar)

    def upper_moment(self, order, floor):
        scalar = np.ndim(floor) == 0
        x = self.rate * np.maximum(_arr(floor), 0.0)
        return _ret(self.moment(order) * special.gammaincc(order + 1.0, x), scalar)

    def stop_loss(self, a):
        scalar = np.ndim(a) == 0
        return _ret(np.exp(-self.rate * np.maximum(_arr(a), 0.0)) / self.rate, scalar)

    def log_tail(self, log_t):
        with np.errstate(over="ignore"):
            return -self.rate * np.exp(_arr(log_t))

    def log_upper_moment(self, order, log_floor):
        with np.errstate(over="ignore"):
            x = self.rate * np.exp(_arr(log_floor))
        a = order + 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            direct = np.log(special.gammaincc(a, x)) + math.lgamma(a)
            # Gamma(a, x) ~ x^(a-1) e^-x (1 + (a-1)/x) for large x
            asym = (a - 1.0) * np.log(x) - x + np.log1p((a - 1.0) / x)
        out = np.where(np.isfinite(direct), direct, asym)
        return out - order * math.log(self.rate)


@dataclass(frozen=True, repr=False)
class BoundedUniform(Marginal):
    lo: float = 0.0
    hi: float = 1.0
    kind = "bounded_uniform"

    def __post_init__(self):
        _floatify(self)
        if not (0 <= self.lo < self.hi < math.inf):
            raise MarginalError(f"bounded_uniform needs 0 <= lo < hi, got {self.lo}, {self.hi}")

    @property
    def lower(self):
        return self.lo

    @property
    def upper(self):
        return self.hi

    def spec(self):
        return f"bounded_uniform(lo={self.lo!r}, hi={self.hi!r})"

    def tail(self, t):
        scalar = np.ndim(t) == 0
        out = np.clip((self.hi - _arr(t)) / (self.hi - self.lo), 0.0, 1.0)
        return _ret(out, scalar)

    def pdf(self, x):
        return 1.0 / (self.hi - self.lo) if self.lo <= x <= self.hi else 0.0

    def quantile(self, q):
        scalar = np.ndim(q) == 0
        return _ret(self.lo + (self.hi - self.lo) * _arr(q), scalar)

    def isf(self, q):
        scalar = np.ndim(q) == 0
        return _ret(self.hi - (self.hi - self.lo) * _arr(q), scalar)

    def moment(self, order):
        return float(self.truncated_moment(order, self.hi))

    def truncated_moment(self, order, cap):
        scalar = np.ndim(cap) == 0
        c = np.clip(_arr(cap), self.lo, self.hi)
        out = (c ** (order + 1.0) - self.lo ** (order + 1.0)) / ((order + 1.0) * (self.hi - self.lo))
        return _ret(out, scalar)


@dataclass(frozen=True, repr=False)
class TwoPoint(Marginal):
    """Atoms ``v1`` (probability ``p1``) and ``v2``; ``p1 = 1`` is a point mass."""

    v1: float = 0.0
    p1: float = 0.5
    v2: float = 1.0
    kind = "two_point"
    continuous = False

    def __post_init__(self):
        _floatify(self)
        if not (0 <= self.v1 <= self.v2 < math.inf):
            raise MarginalError(f"two_point needs 0 <= v1 <= v2, got {self.v1}, {self.v2}")
        if not 0 < self.p1 <= 1:
            raise MarginalError(f"two_point needs 0 < p1 <= 1, got {self.p1}")

    @property
    def lower(self):
        return self.v1

    @property
    def upper(self):
        return self.v2 if self.p1 < 1 else self.v1

    def spec(self):
        return f"two_point(v1={self.v1!r}, p1={self.p1!r}, v2={self.v2!r})"

    def _atoms(self):
        if self.p1 >= 1:
            return ((self.v1, 1.0),)
        return ((self.v1, self.p1), (self.v2, 1.0 - self.p1))

    def tail(self, t):
        scalar = np.ndim(t) == 0
        t = _arr(t)
        out = sum(w * (v > t) for v, w in self._atoms())
        return _ret(np.asarray(out, dtype=float), scalar)

    def quantile(self, q):
        scalar = np.ndim(q) == 0
        out = np.where(_arr(q) <= self.p1, self.v1, self.v2)
        return _ret(out, scalar)

    def isf(self, q):
        scalar = np.ndim(q) == 0
        # P(X > t) = q with the upper atom taking the top 1-p1 of the mass
        out = np.where(_arr(q) < 1.0 - self.p1, self.v2, self.v1)
        return _ret(out, scalar)

    def moment(self, order):
        return math.fsum(w * v**order for v, w in self._atoms())

    def truncated_moment(self, order, cap):
        scalar = np.ndim(cap) == 0
        c = _arr(cap)
        out = sum(w * v**order * (v <= c) for v, w in self._atoms())
        return _ret(np.asarray(out, dtype=float), scalar)


class Discrete(Marginal):
    """Finite nonnegative support with given probabilities.

    Not part of the config grammar; it describes the per-index laws of a
    tabulated joint distribution.
    """

    kind = "discrete"
    continuous = False

    def __init__(self, values, probs):
        v = np.asarray(values, dtype=float)
        w = np.asarray(probs, dtype=float)
        if v.ndim != 1 or v.shape != w.shape or v.size == 0:
            raise MarginalError("discrete marginal needs matching 1-d values and probabilities")
        if np.any(v < 0) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise MarginalError("discrete marginal needs nonnegative values and probabilities summing to 1")
        order = np.argsort(v, kind="stable")
        v, w = v[order], w[order]
        uniq, inv = np.unique(v, return_inverse=True)
        self.values = uniq
        self.probs = np.bincount(inv, weights=w)
        self.lower = float(uniq[0])
        self.upper = float(uniq[-1])

    def __eq__(self, other):
        return (
            isinstance(other, Discrete)
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.probs, other.probs)
        )

    def __hash__(self):
        return hash((self.values.tobytes(), self.probs.tobytes()))

    def spec(self):
        pairs = ", ".join(f"{v!r}:{w!r}" for v, w in zip(self.values.tolist(), self.probs.tolist()))
        return f"discrete({pairs})"

    def tail(self, t):
        scalar = np.ndim(t) == 0
        t = _arr(t)
        out = (self.probs * (self.values > t[..., None])).sum(axis=-1)
        return _ret(out, scalar)

    def quantile(self, q):
        scalar = np.ndim(q) == 0
        cdf = np.cumsum(self.probs)
        idx = np.minimum(np.searchsorted(cdf, _arr(q) - 1e-15), self.values.size - 1)
        return _ret(self.values[idx], scalar)

    def isf(self, q):
        return self.quantile(1.0 - _arr(q)) if np.ndim(q) else float(self.quantile(1.0 - q))

    def moment(self, order):
        return math.fsum((self.probs * self.values**order).tolist())

    def truncated_moment(self, order, cap):
        scalar = np.ndim(cap) == 0
        c = _arr(cap)
        out = (self.probs * self.values**order * (self.values <= c[..., None])).sum(axis=-1)
        return _ret(out, scalar)


def degenerate(value: float) -> TwoPoint:
    """Point mass at ``value``."""
    return TwoPoint(v1=value, p1=1.0, v2=value)


_KINDS = {
    "pareto": (Pareto, ("alpha", "xm")),
    "exponential": (Exponential, ("rate",)),
    "bounded_uniform": (BoundedUniform, ("lo", "hi")),
    "two_point": (TwoPoint, ("v1", "p1", "v2")),
}

_SPEC_RE = re.compile(r"^\s*([a-z_]+)\s*\((.*)\)\s*$")


def parse_marginal(text: str) -> Marginal:
    """Parse ``kind(key=value, ...)``, e.g. ``pareto(alpha=1.8, xm=1.0)``.

    ``degenerate(value=v)`` is accepted as shorthand for a point mass.
    """
    m = _SPEC_RE.match(text)
    if not m:
        raise MarginalError(f"cannot parse marginal {text!r}; expected kind(key=value, ...)")
    kind, body = m.group(1), m.group(2).strip()
    kwargs = {}
    if body:
        for part in body.split(","):
            if "=" not in part:
                raise MarginalError(f"marginal argument {part.strip()!r} is not key=value")
            key, val = (s.strip() for s in part.split("=", 1))
            try:
                kwargs[key] = float(val)
            except ValueError:
                raise MarginalError(f"marginal argument {key}={val!r} is not a number") from None
    if kind == "degenerate":
        if set(kwargs) != {"value"}:
            raise MarginalError("degenerate takes exactly one argument: value")
        return degenerate(kwargs["value"])
    if kind not in _KINDS:
        raise MarginalError(f"unknown marginal kind {kind!r}; expected one of {sorted(_KINDS)}")
    cls, keys = _KINDS[kind]
    unknown = set(kwargs) - set(keys)
    if unknown:
        raise MarginalError(f"{kind} does not take {sorted(unknown)}; allowed {list(keys)}")
    return cls(**kwargs)


# ---------------------------------------------------------------------------
# stochastic domination
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DominationCheck:
    constant_C: float
    t_grid: tuple
    worst_ratio: float
    worst_index: int
    worst_t: float
    passed: bool
    skipped: int


def domination_audit(marginals, dominator: Marginal, C: float, t_grid) -> DominationCheck:
    """Worst ``P(X_n > t) / P(X > t)`` over indices and grid points.

    ``marginals`` is a sequence of per-index marginals or any object with a
    ``marginals()`` method.  Grid points where the dominator has no mass above
    ``t`` are skipped (and counted) unless some index still has mass there,
    in which case the ratio is infinite.
    """
    if not C > 0:
        raise MarginalError("domination constant must be positive")
    if hasattr(marginals, "marginals"):
        marginals = marginals.marginals()
    grid = np.asarray(sorted(float(t) for t in t_grid))
    if grid.size == 0 or np.any(grid <= 0):
        raise MarginalError("t_grid must be nonempty and positive")
    den = _arr(dominator.tail(grid))
    worst, w_i, w_t, skipped = 0.0, -1, float("nan"), 0
    for i, m in enumerate(marginals):
        num = _arr(m.tail(grid))
        zero = den <= 0
        skipped += int(np.count_nonzero(zero & (num <= 0)))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(zero, np.where(num > 0, np.inf, 0.0), num / np.where(zero, 1.0, den))
        j = int(np.argmax(ratio))
        if ratio[j] > worst or w_i < 0:
            worst, w_i, w_t = float(ratio[j]), i, float(grid[j])
    if skipped:
        warnings.warn(f"domination audit skipped {skipped} grid points with zero tails", stacklevel=2)
    return DominationCheck(
        constant_C=float(C),
        t_grid=tuple(grid.tolist()),
        worst_ratio=worst,
        worst_index=w_i,
        worst_t=w_t,
        passed=bool(worst <= C),
        skipped=skipped,
    )


__all__ = [
    "BoundedUniform",
    "Discrete",
    "DominationCheck",
    "Exponential",
    "INFINITE",
    "Marginal",
    "MarginalError",
    "Pareto",
    "TwoPoint",
    "degenerate",
    "domination_audit",
    "parse_marginal",
]
