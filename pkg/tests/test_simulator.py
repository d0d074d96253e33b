import math

import numpy as np
import pytest

from nqdlab.dependence import DependenceModel, antithetic_atoms, moment_inequality_exact
from nqdlab.marginals import parse_marginal
from nqdlab.scaling import ScalingFamily, TruncationWindow, log_LLog
from nqdlab.simulator import (
    SimConfig,
    SimulationError,
    compare_normalizers,
    empirical_moment_inequality,
    geometric_checkpoints,
    run,
)


def _cfg(marginal, kind="iid", paths=20, horizon=20_000, **kw):
    model = DependenceModel(kind, parse_marginal(marginal) if isinstance(marginal, str) else marginal, **kw.pop("dep", {}))
    return SimConfig(model=model, fam=ScalingFamily(p=1.5), path_count=paths, horizon=horizon,
                     checkpoints=geometric_checkpoints(100, horizon), master_seed=7, **kw)


def test_checkpoints_are_quarter_decades():
    assert geometric_checkpoints(1000, 10**4) == [1000, 1778, 3162, 5623, 10000]
    with pytest.raises(SimulationError):
        geometric_checkpoints(10, 5)


def test_degenerate_marginal_gives_exact_zeros():
    st = run(_cfg("degenerate(value=2.5)"))
    for q in st.quantiles.values():
        assert np.all(q == 0.0)
    assert np.all(st.event_freq == 0.0)
    assert all(row[2:] == (0.0, 0.0, 0.0) for row in compare_normalizers(_cfg("degenerate(value=2.5)")))


def test_paper_normalizer_never_exceeds_plain(pareto18):
    st = run(_cfg(pareto18))
    assert np.all(st.quantiles["paper"] <= st.quantiles["plain"])


def test_paper_and_plain_differ_by_the_loglog_factor(pareto18):
    st = run(_cfg(pareto18))
    n = np.asarray(st.checkpoints, dtype=float)
    factor = np.exp(log_LLog(np.log(n)) * 2 * (1.5 - 1) / 1.5)
    assert np.allclose(st.quantiles["plain"], st.quantiles["paper"] * factor[:, None], rtol=1e-13, atol=0)


def test_sung_column_equals_plain(pareto18):
    st = run(_cfg(pareto18))
    assert np.array_equal(st.quantiles["sung"], st.quantiles["plain"])


@pytest.mark.parametrize("kind,dep", [("iid", {}), ("gaussian_copula", {"correlations": (-0.3,)}),
                                      ("antithetic_pairs", {})])
def test_bitwise_reproducible_across_workers(pareto18, kind, dep):
    a = run(_cfg(pareto18, kind, dep=dep), workers=1)
    b = run(_cfg(pareto18, kind, dep=dep), workers=4)
    for name in a.quantiles:
        assert np.array_equal(a.quantiles[name], b.quantiles[name])
    assert np.array_equal(a.event_freq, b.event_freq)


def test_seed_changes_the_sample(pareto18):
    a = run(_cfg(pareto18))
    cfg = _cfg(pareto18)
    cfg.master_seed = 8
    assert not np.array_equal(a.quantiles["paper"], run(cfg).quantiles["paper"])


def test_statistics_ranges(pareto18):
    st = run(_cfg(pareto18, "gaussian_copula", dep={"correlations": (-0.3,)}))
    assert np.all((st.event_freq >= 0) & (st.event_freq <= 1))
    for q in st.quantiles.values():
        assert np.all(q >= 0)
        assert np.all(q[:, 0] <= q[:, 1]) and np.all(q[:, 1] <= q[:, 2])
    # larger epsilon, rarer event
    assert np.all(np.diff(st.event_freq, axis=0) <= 0)


def test_infinite_mean_needs_empirical_centering():
    with pytest.raises(SimulationError, match="empirical_centering"):
        run(_cfg("pareto(alpha=0.9, xm=1.0)", paths=4, horizon=1000))
    st = run(_cfg("pareto(alpha=0.9, xm=1.0)", paths=4, horizon=1000, empirical_centering=True))
    assert st.centering == "empirical"


@pytest.mark.parametrize("kw", [dict(paths=1), dict(horizon=1), dict(normalizers=("nope",)),
                                dict(epsilons=(0.0,))])
def test_invalid_configs(pareto18, kw):
    with pytest.raises(SimulationError):
        _cfg(pareto18, **kw)


def test_checkpoint_beyond_horizon_rejected(pareto18):
    with pytest.raises(SimulationError):
        SimConfig(model=DependenceModel("iid", pareto18), fam=ScalingFamily(p=1.5), horizon=100, checkpoints=[50, 200])


def test_independent_singletons_are_the_equality_case(pareto18):
    cfg = _cfg(pareto18, paths=4000, horizon=100)
    est = empirical_moment_inequality(cfg, TruncationWindow(1.0, 2.0), r=2.0)
    assert abs(est["ratio"] - 1.0) <= 3 * est["ratio_se"]
    assert est["ratio_se"] < 0.1


def test_antithetic_pairs_satisfy_the_inequality():
    cfg = _cfg("bounded_uniform(lo=0, hi=1)", "antithetic_pairs", paths=2000, horizon=100)
    est = empirical_moment_inequality(cfg, TruncationWindow(0.0, 1.0), r=2.0, blocks=list(range(9)))
    assert est["ratio"] <= 1 + 3 * est["ratio_se"]
    assert est["rhs_se"] < 0.1 * est["rhs"]


def test_antithetic_r_one_and_a_half_is_reported():
    cfg = _cfg("bounded_uniform(lo=0, hi=1)", "antithetic_pairs", paths=200, horizon=100)
    est = empirical_moment_inequality(cfg, TruncationWindow(0.0, 1.0), r=1.5)
    assert math.isfinite(est["ratio"]) and est["r"] == 1.5


def test_empirical_agrees_with_exact_on_a_discrete_model():
    joint = antithetic_atoms(10)
    model = DependenceModel("discrete_joint", joint=joint)
    cfg = SimConfig(model=model, fam=ScalingFamily(p=1.5), path_count=3000, horizon=10, checkpoints=[10])
    w = TruncationWindow(0.0, 0.6)
    lhs, rhs = moment_inequality_exact(joint, w)
    est = empirical_moment_inequality(cfg, w, r=2.0, blocks=[0, 1, 2])
    assert abs(est["lhs"] - lhs) <= 3 * est["lhs_se"] + 1e-12
    assert abs(est["rhs"] - rhs) <= 3 * est["rhs_se"]


def test_inequality_block_validation(pareto18):
    cfg = _cfg(pareto18, paths=4, horizon=100)
    with pytest.raises(SimulationError):
        empirical_moment_inequality(cfg, TruncationWindow(), blocks=[0, 3, 2])
    with pytest.raises(SimulationError):
        empirical_moment_inequality(cfg, TruncationWindow(), blocks=[0, 1, 2], eta=2)
