"""Certification of the strong-law hypotheses (a)-(h) and the auxiliary summability claims.

Condition ids are the letters ``a``..``h``.  The auxiliary double sums have
ids ``L2.3.2``, ``L2.3.3``, ``L2.3.4`` and the block triple sums
``L4.3.11`` .. ``L4.3.14``.
"""

from __future__ import annotations

import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .marginals import Marginal, MarginalError
from .scaling import MomentInequalityProfile, ScalingFamily, _block_cache, harmonic_increment, log_LLog
from .series import (
    BlockWeight,
    CapitalTerm,
    EngineConfig,
    MarginalTerm,
    SeriesDiagnostic,
    Threshold,
    certify_block_triple,
    certify_double,
    power_log,
    range_sum,
    range_sum_int,
)

THEOREM_IDS = ("a", "b", "c", "d", "e", "f", "g", "h")
LEMMA2_IDS = ("L2.3.2", "L2.3.3", "L2.3.4")
LEMMA4_IDS = ("L4.3.11", "L4.3.12", "L4.3.13", "L4.3.14")
ALL_IDS = THEOREM_IDS + LEMMA2_IDS + LEMMA4_IDS

_BOUNDARY_TOL = 1e-12


class CheckerError(ValueError):
    """Parameters outside a lemma's or condition's domain."""


# ---------------------------------------------------------------------------
# condition (a)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionAResult:
    ratio_sup: float
    weight_inf: float
    passed: bool
    notes: tuple = ()


def check_condition_a(fam: ScalingFamily, k_max: int = 2**50, log_b=None, window: int = 64) -> ConditionAResult:
    """``sup b_{m_{k+1}}/b_{m_k}`` and ``inf sum_{m_k<=j<m_{k+1}} 1/j`` over ``k in [k_max/2, k_max]``.

    ``m_k = 2^k``.  ``log_b`` overrides the family normalizer (a function of
    ``log n``); an override that does not grow is flagged as violating the
    unboundedness precondition.
    """
    if k_max < 10:
        raise CheckerError("k_max must be at least 10")
    ks = np.unique(np.round(np.geomspace(k_max / 2, k_max, window)))
    logm = ks * math.log(2.0)
    notes = []
    if log_b is None:
        gamma = 2.0 * (fam.p - 1.0) / fam.p
        # log LLog(2^(k+1)) - log LLog(2^k), kept accurate for huge k
        d_ll = np.log1p(np.log1p(1.0 / ks) / np.log(np.maximum(logm, math.e)))
        log_ratio = math.log(2.0) / fam.p + gamma * d_ll
        growth = float(fam.log_b(np.array([logm[-1]]))[0] - fam.log_b(np.array([logm[0]]))[0])
    else:
        lb = lambda x: np.asarray(log_b(np.asarray(x, dtype=float)), dtype=float)
        log_ratio = lb(logm + math.log(2.0)) - lb(logm)
        growth = float(lb(np.array([logm[-1]]))[0] - lb(np.array([logm[0]]))[0])
    ratios = np.exp(log_ratio)
    ratio_sup = float(np.max(ratios))
    m_lo = np.exp2(np.minimum(ks, 1000.0))
    weights = harmonic_increment(m_lo - 1.0, 2.0 * m_lo - 1.0)
    weights = np.where(ks > 1000, math.log(2.0), weights)
    weight_inf = float(np.min(weights))
    unbounded = growth > 1e-9
    if not unbounded:
        notes.append("normalizer b_n does not grow: the unbounded precondition fails")
    stable = bool(np.ptp(ratios) <= 1e-6 * ratio_sup)
    if not stable:
        notes.append("ratio not stable across the tail window")
    passed = bool(math.isfinite(ratio_sup) and weight_inf > 0 and unbounded and stable)
    return ConditionAResult(ratio_sup, weight_inf, passed, tuple(notes))


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------


def _require_analytic(m):
    if not isinstance(m, Marginal) or not hasattr(m, "log_tail"):
        raise CheckerError("conditions need an analytic marginal")


def _decay_hint(m: Marginal, p: float, r: float) -> float:
    """Smallest decay of the block density ``n*term(n)`` over every series here.

    Summands behave like ``n^(-min(alpha, r)/p)`` up to log factors for a
    tail of index ``alpha``, and no slower than ``n^(-1-1/p)`` once the
    inner sums converge.
    """
    alpha = float(getattr(m, "tail_index", math.inf))
    return min(min(alpha, r) / p - 1.0, 1.0 / p)


def _fam_thresholds(fam: ScalingFamily):
    p = fam.p
    c = Threshold(1.0 / p, 2.0 / (2.0 - p), "Log")
    d = Threshold(1.0 / p, 2.0 / p, "LLog")
    return c, d


def _b_term(fam: ScalingFamily, power: float = 1.0):
    return power_log(power / fam.p, 0.0, power * 2.0 * (fam.p - 1.0) / fam.p)


def _lemma_thresholds(p: float, r: float):
    t = Threshold(1.0 / p, r / (r - p), "Log")
    t_prime = Threshold(1.0 / p, r / (p * (r - 1.0)), "LLog")
    return t, t_prime


# ---------------------------------------------------------------------------
# block ratio sequences: condition (b) and the o(1) block quantity
# ---------------------------------------------------------------------------


def block_ratio_sequence(cid: str, marginal: Marginal, thr: Threshold, s: float, log_den,
                         u_lo: float = 2.5, u_hi: float = 690.0, points: int = 16,
                         eps: float = 2e-4, tail_window: int = 5) -> SeriesDiagnostic:
    """Ratios ``sum_{l_k<j<=l_{k+1}} E X 1{X > t_j} / den(l_k)`` at checkpoints.

    Checkpoints are the blocks containing ``n = e^u`` for ``u`` geometric in
    ``[u_lo, u_hi]``.  ``log_den`` maps ``log l_k`` to the log of the
    normalizer.  The verdict is ``converged`` when the last ``tail_window``
    ratios decrease and a log-log fit of the ratios against ``k`` has a
    negative slope; the limit itself is not claimed.
    """
    B = MarginalTerm(marginal, "um", thr, 1.0)
    bs = _block_cache(s)
    us = np.geomspace(u_lo, u_hi, points)
    rows, ks = [], []
    for u in us:
        if u < 36.0:
            # the block holding j = floor(e^u) + 1, located exactly
            j = math.floor(math.exp(u)) + 1
            k = int(bs.phi(j))
        else:
            k = max(math.ceil(u ** (1.0 / s) * (1 - 1e-15)) - 1, 1)
        if k in ks:
            continue
        ks.append(k)
        ks_s = k**s
        J = ks_s * math.expm1(s * math.log1p(1.0 / k))  # log l_{k+1} - log l_k, up to flooring
        if ks_s + J < 36.0:
            l_k, l_next = bs.value(k), bs.value(k + 1)
            la = math.log(l_k)
            lo, hi = range_sum_int(B, l_k, l_next, eps=eps)
        elif J >= eps:
            la = ks_s
            lo, hi = range_sum(B, la, la + J, eps=eps)
        else:
            # a single short block: bracket the summand once and the integer count
            # by the real length plus or minus one (at least one, it contains e^u)
            la = ks_s
            cnt = math.exp(la + math.log(math.expm1(J)))
            b_lo, b_hi = B.bracket(np.array([la - 1e-12]), np.array([la + J + 1e-12]))
            lo = math.log(max(1.0, cnt - 1.0)) + float(b_lo[0])
            hi = math.log(cnt + 1.0) + float(b_hi[0])
        den = float(log_den(la))
        rows.append((k, la, lo - den, hi - den))
    k_arr = np.array([r[0] for r in rows], dtype=float)
    r_lo = np.exp([r[2] for r in rows])
    r_hi = np.exp([r[3] for r in rows])
    mid = 0.5 * (r_lo + r_hi)
    tail = mid[-tail_window:]
    decreasing = bool(tail.size == tail_window and np.all(np.diff(tail) < 0))
    half = max(len(rows) // 2, 2)
    with np.errstate(divide="ignore"):
        y = np.log(mid[-half:])
    x = np.log(k_arr[-half:])
    slope = float(np.polyfit(x, y, 1)[0]) if np.all(np.isfinite(y)) and x.size >= 2 else math.nan
    all_zero = bool(np.all(mid[-tail_window:] == 0))
    ok = all_zero or (decreasing and slope < 0)
    notes = ["ratio identically zero over the final checkpoints"] if all_zero else []
    return SeriesDiagnostic(
        condition_id=cid,
        verdict="converged" if ok else "inconclusive",
        value_estimate=float(mid[-1]),
        tail_majorant=float(0.5 * (r_hi[-1] - r_lo[-1])),
        partial_sums=[(float(r[1]), float(m)) for r, m in zip(rows, mid)],
        lower=float(r_lo[-1]),
        upper=float(r_hi[-1]),
        far_tail=0.0,
        log_n_reached=float(rows[-1][1]),
        decay_exponent=slope,
        notes=notes,
        extra={"k": k_arr.tolist(), "ratio_lo": r_lo.tolist(), "ratio_hi": r_hi.tolist(),
               "decreasing_tail": decreasing, "loglog_slope": slope},
    )


# ---------------------------------------------------------------------------
# conditions (b)-(h)
# ---------------------------------------------------------------------------


def check_condition(cid: str, marginal: Marginal, fam: ScalingFamily,
                    profile: MomentInequalityProfile | None = None,
                    cfg: EngineConfig | None = None) -> SeriesDiagnostic:
    """Certify one of the series conditions ``b``..``h`` for an identically distributed sequence.

    For a dominated sequence pass the dominating marginal: every summand is
    monotone in the tail, so the dominator is the worst case.
    """
    _require_analytic(marginal)
    cfg = cfg or EngineConfig()
    r = fam.r
    profile = profile or MomentInequalityProfile(r=r)
    if abs(profile.r - r) > 1e-12:
        raise CheckerError("profile order r differs from the family order r")
    c, d = _fam_thresholds(fam)
    hint = _decay_hint(marginal, fam.p, r)
    if cid == "b":
        return block_ratio_sequence("b", marginal, c, fam.s, lambda lu: float(fam.log_b(np.array([lu]))[0]))
    if cid in ("c", "d"):
        A = power_log(-1.0) * CapitalTerm(profile, r) * _b_term(fam, -r)
        B = MarginalTerm(marginal, "tm", c, r) if cid == "c" else MarginalTerm(marginal, "tail_r", c, r)
        return certify_double(cid, A, B, cfg, hint)
    if cid == "e":
        A = power_log(-1.0) * _b_term(fam, -1.0)
        B = MarginalTerm(marginal, "um", d, 1.0)
        return certify_double(cid, A, B, cfg, hint)
    if cid in ("f", "g", "h"):
        w = BlockWeight(fam.blocks, "theorem", fam.p, r, profile=profile,
                        b_loglog_power=2.0 * (fam.p - 1.0) / fam.p)
        if cid == "f":
            B = MarginalTerm(marginal, "window", c, r, thr2=d)
        elif cid == "g":
            B = MarginalTerm(marginal, "tail_r", c, r)
        else:
            B = MarginalTerm(marginal, "tail_r", d, r)
        return certify_block_triple(cid, w, B, cfg, hint)
    raise CheckerError(f"unknown condition {cid!r}; expected one of b..h")


# ---------------------------------------------------------------------------
# lemma sums
# ---------------------------------------------------------------------------


def lemma2_series(which: str, marginal: Marginal, p: float, r: float = 2.0,
                  cfg: EngineConfig | None = None) -> SeriesDiagnostic:
    """Nested double sums with thresholds ``t_k = k^(1/p)/Log(k)^(r/(r-p))``
    and ``t'_k = k^(1/p)/LLog(k)^(r/(p(r-1)))``.

    ``which`` is ``"3.2"``, ``"3.3"`` or ``"3.4"`` (or the prefixed id).
    """
    which = which.removeprefix("L2.")
    _require_analytic(marginal)
    if not 0 < p < 2:
        raise CheckerError("p must lie in (0, 2)")
    if not r > p:
        raise CheckerError("r must exceed p")
    if which == "3.4" and not p > 1:
        raise CheckerError("the upper-mean sum needs p > 1")
    cfg = cfg or EngineConfig()
    t, tp = _lemma_thresholds(p, r) if p > 1 else (Threshold(1.0 / p, r / (r - p), "Log"), None)
    hint = _decay_hint(marginal, p, r)
    cid = f"L2.{which}"
    if which in ("3.2", "3.3"):
        A = power_log(-(r / p + 1.0), r, 0.0)
        B = MarginalTerm(marginal, "tm" if which == "3.2" else "tail_r", t, r)
    elif which == "3.4":
        A = power_log(-(1.0 / p + 1.0), 0.0, -r * (p - 1.0) / (p * (r - 1.0)))
        B = MarginalTerm(marginal, "um", tp, 1.0)
    else:
        raise CheckerError(f"unknown sum {which!r}; expected 3.2, 3.3 or 3.4")
    return certify_double(cid, A, B, cfg, hint)


def lemma4_series(which: str, marginal: Marginal, p: float, r: float = 2.0, s: float | None = None,
                  cfg: EngineConfig | None = None) -> SeriesDiagnostic:
    """Block triple sums over ``l_k = floor(exp(k^s))`` and the o(1) block quantity.

    ``which`` is ``"3.11"`` .. ``"3.14"`` (or the prefixed id); ``s``
    defaults to ``(2-p)/p``.
    """
    which = which.removeprefix("L4.")
    _require_analytic(marginal)
    if not 1 < p < 2:
        raise CheckerError("p must lie in (1, 2)")
    if not r > p:
        raise CheckerError("r must exceed p")
    s = (2.0 - p) / p if s is None else float(s)
    if not 0 < s < 1:
        raise CheckerError("s must lie in (0, 1)")
    cfg = cfg or EngineConfig()
    t, tp = _lemma_thresholds(p, r)
    gamma = r * r * (p - 1.0) / (p * (r - 1.0))
    cid = f"L4.{which}"
    if which == "3.14":
        s_max = (r - p) / (p * (r - 1.0))
        if s > s_max + _BOUNDARY_TOL:
            raise CheckerError(f"the block quantity needs s <= (r-p)/(p(r-1)) = {s_max:.6g}, got {s}")
        g = r * (p - 1.0) / (p * (r - 1.0))
        return block_ratio_sequence(cid, marginal, t, s,
                                    lambda lu: lu / p + g * float(log_LLog(np.array([lu]))[0]))
    w = BlockWeight(_block_cache(s), "lemma", p, r, gamma=gamma)
    if which == "3.11":
        B = MarginalTerm(marginal, "tm", tp, r)
    elif which == "3.12":
        B = MarginalTerm(marginal, "tail_r", t, r)
    elif which == "3.13":
        B = MarginalTerm(marginal, "tail_r", tp, r)
    else:
        raise CheckerError(f"unknown sum {which!r}; expected 3.11 .. 3.14")
    return certify_block_triple(cid, w, B, cfg, _decay_hint(marginal, p, r))


# ---------------------------------------------------------------------------
# full report
# ---------------------------------------------------------------------------


def _condition_a_diagnostic(fam: ScalingFamily, k_max: int) -> SeriesDiagnostic:
    res = check_condition_a(fam, k_max)
    return SeriesDiagnostic(
        condition_id="a",
        verdict="converged" if res.passed else "inconclusive",
        value_estimate=res.ratio_sup,
        tail_majorant=0.0,
        notes=list(res.notes),
        extra={"ratio_sup": res.ratio_sup, "weight_inf": res.weight_inf, "pass": res.passed},
    )


def run_checks(ids, marginal: Marginal, fam: ScalingFamily,
               profile: MomentInequalityProfile | None = None,
               cfg: EngineConfig | None = None, threads: int = 1, k_max: int = 2**50):
    """Evaluate several ids in parallel; results keep the order of ``ids``."""
    cfg = cfg or EngineConfig()

    def one(cid):
        try:
            if cid == "a":
                return _condition_a_diagnostic(fam, k_max)
            if cid in THEOREM_IDS:
                return check_condition(cid, marginal, fam, profile, cfg)
            if cid in LEMMA2_IDS:
                return lemma2_series(cid, marginal, fam.p, fam.r, cfg)
            if cid in LEMMA4_IDS:
                return lemma4_series(cid, marginal, fam.p, fam.r, fam.s, cfg)
        except (CheckerError, MarginalError):
            raise
        except (OverflowError, FloatingPointError, ValueError) as exc:
            return SeriesDiagnostic(cid, "inconclusive", math.nan, math.inf, notes=[f"numeric failure: {exc}"])
        raise CheckerError(f"unknown condition id {cid!r}")

    ids = list(ids)
    if threads <= 1:
        return [one(c) for c in ids]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, ids))


# ---------------------------------------------------------------------------
# the stretched-exponential integral
# ---------------------------------------------------------------------------


class QuadratureError(RuntimeError):
    """Requested tolerance not reached within the subdivision budget."""


@dataclass(frozen=True)
class QuadratureSpec:
    """``int_x^inf u^(a-1) Log(u)^r exp(-b u^a) du`` with its tolerances."""

    a: float
    b: float
    r: float = 0.0
    x: float = 0.0
    abs_tol: float = 0.0
    rel_tol: float = 1e-11
    limit: int = 200

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise CheckerError("a and b must be positive")
        if not self.x >= 0:
            raise CheckerError("x must be nonnegative")
        if not (self.abs_tol >= 0 and self.rel_tol >= 0) or (self.abs_tol == 0 and self.rel_tol == 0):
            raise CheckerError("need a positive absolute or relative tolerance")
        if self.abs_tol == 0 and self.rel_tol < 50 * sys.float_info.epsilon:
            raise CheckerError("rel_tol below 50 machine epsilons cannot be requested")


def _log_floor_scalar(u: float) -> float:
    return math.log(max(u, math.e))


def lemma3_integral(spec: QuadratureSpec):
    """Return ``(value, bound_ratio)``.

    With ``v = u^a`` the integrand becomes ``(1/a) Log(v^(1/a))^r e^(-b v)``;
    the integral is computed after factoring out ``e^(-b x^a)``, so
    ``bound_ratio = value / ((1 + Log(x)^r) e^(-b x^a))`` stays accurate where
    ``value`` underflows.
    """
    a, b, r, x = spec.a, spec.b, spec.r, spec.x
    X = x**a

    def f(w):
        v = w + X
        lg = max(math.log(v) / a, 1.0) if v > 0 else 1.0
        return (lg**r if r else 1.0) * math.exp(-b * w) / a

    brk = math.exp(a) - X
    pieces = [(0.0, brk), (brk, math.inf)] if brk > 0 else [(0.0, math.inf)]
    total, err = 0.0, 0.0
    for lo, hi in pieces:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, e, info = integrate.quad(f, lo, hi, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                                          limit=spec.limit, full_output=True)[:3]
        total += val
        err += e
    if not math.isfinite(total) or err > max(spec.abs_tol, spec.rel_tol * abs(total)) * 10:
        raise QuadratureError(f"quadrature error estimate {err:.3g} exceeds the tolerance for {spec}")
    log_scale = -b * X
    value = total * math.exp(log_scale) if log_scale > -745 else 0.0
    lx = _log_floor_scalar(x) ** r if r else 1.0
    return value, total / (1.0 + lx)


__all__ = [
    "ALL_IDS",
    "CheckerError",
    "ConditionAResult",
    "LEMMA2_IDS",
    "LEMMA4_IDS",
    "QuadratureError",
    "QuadratureSpec",
    "SeriesDiagnostic",
    "THEOREM_IDS",
    "block_ratio_sequence",
    "check_condition",
    "check_condition_a",
    "lemma2_series",
    "lemma3_integral",
    "lemma4_series",
    "run_checks",
]
