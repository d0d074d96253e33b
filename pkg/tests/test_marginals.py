import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from nqdlab.marginals import (
    INFINITE,
    BoundedUniform,
    Exponential,
    MarginalError,
    Pareto,
    TwoPoint,
    degenerate,
    domination_audit,
    parse_marginal,
)

ANALYTIC = [
    Pareto(alpha=1.8, xm=1.0),
    Pareto(alpha=2.5, xm=0.3),
    Exponential(rate=1.0),
    Exponential(rate=3.5),
    BoundedUniform(lo=0.5, hi=4.0),
]
ALL = ANALYTIC + [TwoPoint(v1=1.0, p1=0.3, v2=5.0), degenerate(2.0)]


def test_tail_examples(pareto18):
    assert pareto18.tail(2.0) == pytest.approx(2 ** -1.8, rel=1e-15)
    assert pareto18.tail(2.0) == pytest.approx(0.28717, abs=5e-6)
    assert pareto18.tail(0.5) == 1.0
    assert Exponential(rate=1.0).tail(0.0) == 1.0


def test_moment_examples(pareto18):
    assert pareto18.moment(1.0) == pytest.approx(2.25, rel=1e-15)
    assert pareto18.moment(1.5) == pytest.approx(6.0, rel=1e-14)
    assert pareto18.moment(2.0) == INFINITE


def test_truncated_moment_examples(pareto18):
    assert pareto18.truncated_moment(2.0, 4.0) == pytest.approx(9 * (4**0.2 - 1), rel=1e-14)
    assert pareto18.truncated_moment(2.0, 4.0) == pytest.approx(2.8756, abs=5e-5)
    for m in ALL:
        assert m.truncated_moment(1.0, 0.0) == 0.0
    # log-form branch when the order equals alpha
    assert pareto18.truncated_moment(1.8, math.e) == pytest.approx(1.8, rel=1e-14)
    near = pareto18.truncated_moment(1.8 + 1e-10, math.e)
    assert near == pytest.approx(1.8, rel=1e-8)


def test_upper_mean_examples(pareto18):
    assert pareto18.upper_mean(4.0) == pytest.approx(2.25 * 4 ** -0.8, rel=1e-14)
    assert pareto18.upper_mean(4.0) == pytest.approx(0.742223, abs=5e-7)  # quoted elsewhere as 0.74224
    assert pareto18.upper_mean(0.0) == pytest.approx(2.25, rel=1e-15)
    for t in (0.0, 0.5, 3.0, 20.0):
        assert Exponential(rate=1.0).upper_mean(t) == pytest.approx((t + 1) * math.exp(-t), rel=1e-13)


def test_upper_mean_rejects_infinite_mean():
    with pytest.raises(MarginalError):
        Pareto(alpha=0.9, xm=1.0).upper_mean(3.0)


@pytest.mark.parametrize("m", ANALYTIC, ids=repr)
def test_closed_forms_match_quadrature(m):
    assert m.self_test(orders=(0.5, 1.0, 1.5, 2.0), caps=(0.7, 2.0, 9.0, 60.0)) < 1e-9


@pytest.mark.parametrize("m", ANALYTIC, ids=repr)
@pytest.mark.parametrize("order", [0.5, 1.0, 1.5])
def test_lower_plus_upper_reconstructs_moment(m, order):
    full = m.moment(order)
    for cap in (0.9, 2.0, 7.5):
        upper, _ = integrate.quad(lambda x: x**order * m.pdf(x), max(cap, m.lower), m.upper,
                                  epsabs=0, epsrel=1e-12, limit=400)
        assert m.truncated_moment(order, cap) + upper == pytest.approx(full, rel=1e-9)


@pytest.mark.parametrize("m", [x for x in ALL if math.isfinite(x.mean())], ids=repr)
def test_upper_mean_bounded_and_nonincreasing(m):
    grid = np.geomspace(1e-3, 1e4, 400)
    um = np.asarray(m.upper_mean(grid))
    assert np.all(um <= m.mean() * (1 + 1e-14))
    assert np.all(np.diff(um) <= 1e-15)


@pytest.mark.parametrize("m", ALL, ids=repr)
def test_quantile_inverts_cdf(m):
    if not m.continuous:
        q = np.array([0.1, 0.5, 0.9])
        assert np.all(m.cdf(m.quantile(q)) >= q - 1e-15)
        return
    q = np.linspace(0.001, 0.999, 999)
    assert np.max(np.abs(m.cdf(m.quantile(q)) - q)) < 1e-12


@given(st.floats(0.05, 0.95), st.floats(1e-3, 1e3))
def test_tail_in_unit_interval_and_monotone(q, t):
    m = Pareto(alpha=1.8, xm=1.0)
    assert 0.0 <= m.tail(t) <= 1.0
    assert m.tail(t * 1.5) <= m.tail(t)


def test_parse_marginal_round_trip_and_errors():
    for m in ALL:
        assert parse_marginal(m.spec()).spec() == m.spec()
    assert parse_marginal("pareto(alpha=1.8, xm=1.0)").moment(1.0) == pytest.approx(2.25)
    for bad in ("pareto(1.8)", "gamma(k=1)", "pareto(alpha=x, xm=1)", "pareto(alpha=1.8, xm=1, c=2)", "nonsense"):
        with pytest.raises(MarginalError):
            parse_marginal(bad)
    with pytest.raises(MarginalError):
        Pareto(alpha=-1.0, xm=1.0)


def test_domination_audit_examples(pareto18):
    grid = np.geomspace(0.1, 1e6, 200)
    self_dom = domination_audit([pareto18] * 3, pareto18, 1.0, grid)
    assert self_dom.passed and self_dom.worst_ratio == pytest.approx(1.0)
    scaled = [Pareto(alpha=1.8, xm=f) for f in (0.5, 0.75, 1.0)]
    assert domination_audit(scaled, pareto18, 1.0, grid).passed
    heavy = domination_audit([pareto18, Pareto(alpha=1.4, xm=1.0)], pareto18, 1.0, grid)
    assert not heavy.passed and heavy.worst_index == 1 and heavy.worst_t == grid[-1]


def test_domination_audit_counts_skipped_points():
    dom = BoundedUniform(lo=0.0, hi=1.0)
    with pytest.warns(UserWarning):
        res = domination_audit([BoundedUniform(lo=0.0, hi=0.5)], dom, 1.0, [0.25, 2.0, 3.0])
    assert res.skipped == 2 and res.passed
