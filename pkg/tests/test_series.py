import math

import numpy as np
import pytest
from scipy.special import zeta

from nqdlab.marginals import Pareto, parse_marginal
from nqdlab.scaling import MomentInequalityProfile, ScalingFamily
from nqdlab.series import (
    CapitalTerm,
    EngineConfig,
    MarginalTerm,
    Threshold,
    certify_double,
    double_sum_both_orders,
    power_log,
    range_sum_int,
)
from nqdlab.theorem1 import check_condition

SMALL = EngineConfig(n_exact=2**16)


def test_zeta_two_from_nested_sum():
    # sum_n n^-3 * sum_{k<=n} 1 = zeta(2)
    d = certify_double("z2", power_log(-3.0), power_log(0.0), decay_hint=1.0)
    assert d.converged
    assert abs(d.value_estimate - math.pi**2 / 6) <= d.tail_majorant
    assert d.tail_majorant < 1e-8


def test_zeta_three_halves_within_majorant():
    d = certify_double("z15", power_log(-2.5), power_log(0.0), decay_hint=0.5)
    assert d.converged
    assert abs(d.value_estimate - zeta(1.5)) <= d.tail_majorant
    assert d.lower <= zeta(1.5) <= d.upper


def test_harmonic_is_diverged():
    d = certify_double("h", power_log(-2.0), power_log(0.0))
    assert d.verdict == "diverged"
    assert not math.isfinite(d.tail_majorant)


def test_log_slow_series_is_not_called_converged():
    # sum 1/(n log^1.1 n) converges, far too slowly to certify
    d = certify_double("slow", power_log(-2.0), power_log(0.0, -1.1))
    assert d.verdict != "converged"


def test_partial_sums_are_nondecreasing_for_nonnegative_terms():
    d = certify_double("z2", power_log(-3.0), power_log(0.0), decay_hint=1.0)
    vals = [v for _, v in d.partial_sums]
    logs = [u for u, _ in d.partial_sums]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert all(b > a for a, b in zip(logs, logs[1:]))


def _condition_c_arrays(m, fam, N):
    n = np.arange(1, N + 1, dtype=float)
    prof = MomentInequalityProfile(r=fam.r)
    A = prof.capital(n) ** fam.r / (n * fam.b(n) ** fam.r)
    B = np.asarray(m.truncated_moment(fam.r, fam.c(n)), dtype=float)
    return A, B


@pytest.mark.parametrize("p", [1.2, 1.5, 1.8])
def test_interchange_of_summation_order(p):
    m = Pareto(alpha=max(p + 0.1, 1.4), xm=1.0)
    fam = ScalingFamily(p=p)
    A, B = _condition_c_arrays(m, fam, 2**16)
    by_n, by_k = double_sum_both_orders(A, B)
    assert abs(by_n - by_k) <= 4 * math.ulp(by_n)


def test_engine_exact_region_matches_independent_double_sum(pareto18, fam15):
    A, B = _condition_c_arrays(pareto18, fam15, 2**16)
    by_n, _ = double_sum_both_orders(A, B)
    d = check_condition("c", pareto18, fam15, cfg=SMALL)
    at_end = dict(d.partial_sums)[math.log(2**16)]
    assert at_end == pytest.approx(by_n, rel=1e-12)


@pytest.mark.parametrize("cid", ["c", "d", "e", "g"])
def test_refinement_stability(cid, pareto18, fam15):
    coarse = check_condition(cid, pareto18, fam15, cfg=EngineConfig(n_exact=2**19))
    fine = check_condition(cid, pareto18, fam15, cfg=EngineConfig(n_exact=2**20))
    assert coarse.converged and fine.converged
    assert abs(coarse.value_estimate - fine.value_estimate) <= max(coarse.tail_majorant, fine.tail_majorant)


@pytest.mark.parametrize("exact_limit", [2_000_000, 100])
def test_range_sum_int_brackets_direct_sum(pareto18, exact_limit):
    B = MarginalTerm(pareto18, "tail_r", Threshold(1 / 1.5, 4.0, "Log"), 2.0)
    lo, hi = range_sum_int(B, 10, 5000, exact_limit=exact_limit)
    n = np.arange(11, 5001, dtype=float)
    direct = math.log(math.fsum(np.exp(B.exact(n)).tolist()))
    assert lo - 1e-12 <= direct <= hi + 1e-12


def test_capital_term_matches_profile():
    prof = MomentInequalityProfile(r=2.0)
    term = CapitalTerm(prof, 2.0)
    n = np.array([1.0, 2.0, 8.0, 1000.0, 2.0**40])
    assert np.allclose(np.exp(term.exact(n)), prof.capital(n) ** 2, rtol=1e-13)


def test_engine_config_validation():
    with pytest.raises(ValueError):
        EngineConfig(n_exact=2**20, u_cap=10.0)


def test_degenerate_marginal_gives_zero_value():
    d = check_condition("e", parse_marginal("degenerate(value=0.5)"), ScalingFamily(p=1.5))
    assert d.converged and d.value_estimate == 0.0
