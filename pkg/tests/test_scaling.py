import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nqdlab.scaling import (
    BlockRangeError,
    MomentInequalityProfile,
    ScalingFamily,
    TruncationWindow,
    asymptotic_ratio,
    block_l,
    block_m,
    g_trunc,
    harmonic_increment,
    lambda_bound_audit,
    lambda_capital,
    lambda_table,
    log_floor,
    loglog_floor,
    normalizer_b,
    phi_s,
    threshold_c,
    threshold_d,
    weight_a,
)


@pytest.mark.parametrize("x, expected", [(0.5, 1.0), (math.e**2, 2.0), (10.0, math.log(10.0)), (-3.0, 1.0)])
def test_log_floor_examples(x, expected):
    assert log_floor(x) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("x, expected", [(10.0, 1.0), (math.exp(math.e), 1.0), (math.exp(math.e**2), 2.0)])
def test_loglog_floor_examples(x, expected):
    assert loglog_floor(x) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("s, t, x, expected", [(0, 5, 3, 3), (2, 5, 10, 5), (2, 5, 1, 0)])
def test_g_trunc_examples(s, t, x, expected):
    assert g_trunc(x, TruncationWindow(s, t)) == expected


@given(st.floats(0, 50), st.floats(0.01, 50), st.lists(st.floats(-100, 100), min_size=2, max_size=30))
def test_g_trunc_bounded_and_monotone(s, t, xs):
    w = TruncationWindow(s, t)
    xs = np.sort(np.array(xs))
    g = g_trunc(xs, w)
    assert np.all(g >= 0) and np.all(g <= t)
    assert np.all(np.diff(g) >= 0)


def test_truncation_window_rejects_bad_parameters():
    with pytest.raises(ValueError):
        TruncationWindow(0.0, 0.0)
    with pytest.raises(ValueError):
        TruncationWindow(-1.0, 1.0)


@pytest.mark.parametrize("n, expected", [(1, 1), (4, 3), (8, 4), (16, 5)])
def test_lambda_capital_unit_examples(n, expected):
    assert lambda_capital(n, MomentInequalityProfile()) == expected


def test_lambda_capital_rejects_zero():
    with pytest.raises(ValueError):
        lambda_capital(0, MomentInequalityProfile())


def test_lambda_recursion_matches_direct_unrolling():
    prof = MomentInequalityProfile(lam_kind="power", lam_value=1.3, gamma=0.4)

    def direct(n):
        # the recursion as literally written: lambda_{floor((n+2)/2)} + Lambda_{floor((n+2)/2)-1}
        if n == 1:
            return float(prof.lam(np.array([1.0]))[0])
        h = (n + 2) // 2
        return float(prof.lam(np.array([float(h)]))[0]) + direct(h - 1)

    for n in list(range(1, 200)) + [1023, 1024, 1025, 99_999]:
        assert lambda_capital(n, prof) == pytest.approx(direct(n), rel=1e-14)


@given(st.lists(st.floats(0.1, 10.0), min_size=1, max_size=40))
@settings(max_examples=50)
def test_lambda_capital_nondecreasing_for_any_nondecreasing_table(incr):
    table = np.cumsum(incr)
    prof = MomentInequalityProfile(lam_kind="table", table=list(table))
    horizon = 2 * len(table) - 2 if len(table) > 1 else 1
    vals = lambda_table(max(horizon, 1), prof)[1:]
    assert np.all(np.diff(vals) >= 0)


def test_lambda_table_agrees_with_vectorized_capital():
    prof = MomentInequalityProfile(lam_kind="power", lam_value=0.7, gamma=0.3)
    n = np.arange(1, 5001)
    assert np.allclose(lambda_table(5000, prof)[1:], prof.capital(n), rtol=1e-13, atol=0)


def test_lambda_audit_base_two_holds_and_base_e_fails_at_eight():
    audit = lambda_bound_audit(10**6)
    assert audit.base2_holds
    assert audit.equality_points[:5] == ((1, 1), (2, 2), (4, 3), (8, 4), (16, 5))
    assert 8 in audit.base_e_failures_at_powers
    assert any("n = 8" in line and "fails" in line for line in audit.report)


@pytest.mark.parametrize("n, expected", [(1, 1.0), (10, 10 ** (2 / 3))])
def test_normalizer_b_examples(n, expected, fam15):
    assert normalizer_b(n, fam15) == pytest.approx(expected, rel=1e-14)


def test_normalizer_b_beyond_second_loglog_breakpoint(fam15):
    n = round(math.exp(math.e**2))
    llog = math.log(math.log(n))
    assert normalizer_b(n, fam15) == pytest.approx(n ** (2 / 3) * llog ** (2 / 3), rel=1e-14)
    assert llog == pytest.approx(2.0, abs=1e-3)


def test_thresholds_and_weight_examples(fam15):
    # 10^(2/3) / ln(10)^4 = 0.165122..., quoted elsewhere as 0.16514
    assert threshold_c(10, fam15) == pytest.approx(10 ** (2 / 3) / math.log(10) ** 4, rel=1e-14)
    assert threshold_c(10, fam15) == pytest.approx(0.165122, abs=5e-7)
    assert threshold_d(10, fam15) == pytest.approx(10 ** (2 / 3), rel=1e-14)
    assert weight_a(4) == 0.25


@pytest.mark.parametrize("p", [1.05, 1.2, 1.5, 1.8, 1.95])
def test_threshold_ordering_and_b_monotone(p):
    fam = ScalingFamily(p=p)
    breaks = np.floor([math.e, math.exp(math.e), math.exp(math.e**2)])
    n = np.unique(np.concatenate([np.arange(1, 5000), np.geomspace(1, 1e15, 4000).round(),
                                  breaks - 1, breaks, breaks + 1]))
    c, d, b = fam.c(n), fam.d(n), fam.b(n)
    assert np.all(c <= d * (1 + 1e-15))
    assert np.all(d <= n ** (1 / p) * (1 + 1e-15))
    assert np.all(np.diff(b) >= 0)


@pytest.mark.parametrize("k, expected", [(1, 2), (8, 7), (27, 20)])
def test_block_l_examples(k, expected):
    assert block_l(k, ScalingFamily(p=1.5, s=1 / 3)) == expected


def test_block_m_and_overflow():
    assert [block_m(k) for k in (1, 2, 10)] == [2, 4, 1024]
    with pytest.raises(BlockRangeError):
        block_m(64)
    with pytest.raises(BlockRangeError):
        block_l(10**9, ScalingFamily(p=1.5))


@pytest.mark.parametrize("n, s, expected", [(2, 1 / 3, 1), (20, 1 / 3, 26), (3, 0.5, 1)])
def test_phi_s_examples(n, s, expected):
    assert phi_s(n, s) == expected


@pytest.mark.parametrize("s", [1 / 3, 0.5, 2 / 3])
def test_phi_s_is_smallest_covering_index(s):
    fam = ScalingFamily(p=2 / (1 + s), s=s)
    ls = [block_l(k, fam) for k in range(1, phi_s(3000, s) + 3)]
    for n in range(2, 3000):
        k = phi_s(n, s)
        assert ls[k] >= n  # l_{k+1}
        assert k == 1 or ls[k - 1] < n


def test_asymptotic_ratio_examples():
    (row,) = asymptotic_ratio("log_partial", {"alpha": 0.0, "beta": 0.5}, [10_000])
    assert row[3] == pytest.approx(0.9927, abs=1e-4)
    rows = asymptotic_ratio("log_partial", {"alpha": 0.0, "beta": 0.0}, [1, 10, 1000])
    assert all(r[3] == 1.0 for r in rows)
    (row,) = asymptotic_ratio("block_ratio", {"s": 1 / 3}, [1000])
    assert 1.0 <= row[3] <= 1.05


@pytest.mark.parametrize("kind, params", [
    ("log_partial", {"alpha": 2.0, "beta": 0.5}),
    ("loglog_partial", {"alpha": 1.0, "beta": 0.3}),
    ("log_tail", {"alpha": 2.0, "delta": 1.5}),
    ("loglog_tail", {"alpha": 1.5, "delta": 1.2}),
])
def test_asymptotic_ratio_trends_to_one(kind, params):
    rows = asymptotic_ratio(kind, params, [10, 1000, 100_000])
    assert abs(rows[-1][3] - 1) < abs(rows[0][3] - 1)


def test_asymptotic_ratio_rejects_bad_domain():
    with pytest.raises(ValueError):
        asymptotic_ratio("log_partial", {"beta": 1.0}, [10])
    with pytest.raises(ValueError):
        asymptotic_ratio("log_tail", {"delta": 1.0}, [10])
    with pytest.raises(ValueError):
        asymptotic_ratio("nope", {}, [10])


def test_harmonic_increment_matches_direct_sum():
    assert harmonic_increment(10, 1000) == pytest.approx(math.fsum(1 / j for j in range(11, 1001)), rel=1e-13)
    big = harmonic_increment(1e20, 2e20)
    assert big == pytest.approx(math.log(2), rel=1e-12)
