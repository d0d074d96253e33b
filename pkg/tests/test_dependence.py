import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nqdlab.dependence import (
    DependenceError,
    DependenceModel,
    DiscreteJoint,
    ExactSizeError,
    antithetic_atoms,
    covariance_sign_oracle,
    empirical_nqd_band,
    generate,
    moment_inequality_exact,
    nqd_check_exact,
    nqd_corpus,
    product_joint,
    random_monotone_map,
    random_nqd_joint,
)
from nqdlab.marginals import BoundedUniform, Discrete, Pareto
from nqdlab.scaling import TruncationWindow

NQD_2x2 = DiscreteJoint.from_dict({(0, 0): 0.1, (1, 1): 0.1, (0, 1): 0.4, (1, 0): 0.4})
PQD_2x2 = DiscreteJoint.from_dict({(0, 0): 0.4, (1, 1): 0.4, (0, 1): 0.1, (1, 0): 0.1})
UNIT = TruncationWindow(0.0, 1.0)


def ident(x):
    return x


def test_nqd_check_examples():
    indep = product_joint([Discrete(np.array([0.0, 1.0]), np.array([0.5, 0.5]))] * 2)
    res = nqd_check_exact(indep)
    assert res.passed and res.worst_gap == pytest.approx(0.0, abs=1e-15)
    res = nqd_check_exact(NQD_2x2)
    assert res.passed
    from nqdlab.dependence import pair_gap_table

    _, _, gap = pair_gap_table(NQD_2x2, 0, 1)
    assert gap[0, 0] == pytest.approx(0.1 - 0.25, abs=1e-15)
    res = nqd_check_exact(PQD_2x2)
    assert not res.passed and res.worst_gap == pytest.approx(0.15, abs=1e-15)


def test_covariance_oracle_examples():
    assert covariance_sign_oracle(NQD_2x2, ident, ident) == pytest.approx(-0.15, abs=1e-15)
    indep = product_joint([Discrete(np.array([0.0, 2.0, 3.0]), np.array([0.2, 0.3, 0.5]))] * 2)
    rng = np.random.default_rng(1)
    for _ in range(10):
        assert covariance_sign_oracle(indep, random_monotone_map(rng), random_monotone_map(rng)) == pytest.approx(0, abs=1e-12)
    joint = antithetic_atoms(100)

    def g(x):
        return np.clip(np.asarray(x) - 0.0, 0.0, 1.0)

    assert covariance_sign_oracle(joint, g, g) <= 0


def test_covariance_oracle_rejects_decreasing_transform():
    with pytest.raises(DependenceError):
        covariance_sign_oracle(NQD_2x2, lambda x: -np.asarray(x), ident)


def test_moment_inequality_antithetic_example():
    lhs, rhs = moment_inequality_exact(antithetic_atoms(100), UNIT)
    assert lhs == pytest.approx(0.0, abs=1e-15)
    assert rhs == pytest.approx(1 / 6, abs=1e-12)


def test_moment_inequality_independent_blocks_equal():
    m = Discrete(np.array([0.0, 0.4, 1.5]), np.array([0.3, 0.3, 0.4]))
    joint = product_joint([m, m, m])
    lhs, rhs = moment_inequality_exact(joint, TruncationWindow(0.1, 1.0), blocks=[0, 1, 3])
    assert lhs == pytest.approx(rhs, rel=1e-13)


def test_moment_inequality_gap_is_twice_cross_block_covariance():
    joint = random_nqd_joint(np.random.default_rng(7), dim=3)
    w = TruncationWindow(0.0, 1.0)
    lhs, rhs = moment_inequality_exact(joint, w, blocks=[0, 1, 3])
    y = np.clip(joint.points - w.s_lo, 0, w.t_len)
    y = y - joint.probs @ y
    cross = sum(float(joint.probs @ (y[:, 0] * y[:, j])) for j in (1, 2))
    assert lhs <= rhs + 1e-15
    assert lhs - rhs == pytest.approx(2 * cross, abs=1e-14)


def test_moment_inequality_size_cap():
    big = DiscreteJoint(np.zeros((1_000_001, 2)), np.full(1_000_001, 1 / 1_000_001))
    with pytest.raises(ExactSizeError):
        moment_inequality_exact(big, UNIT)


def test_joint_validation():
    with pytest.raises(DependenceError):
        DiscreteJoint(np.array([[0.0, 1.0]]), np.array([0.5]))
    with pytest.raises(DependenceError):
        DiscreteJoint(np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([1.2, -0.2]))


def test_joint_csv_round_trip(tmp_path):
    path = tmp_path / "j.csv"
    NQD_2x2.to_csv(path)
    back = DiscreteJoint.from_csv(path)
    assert np.array_equal(back.points, NQD_2x2.points) and np.array_equal(back.probs, NQD_2x2.probs)


@given(st.integers(0, 2**32))
@settings(max_examples=40, deadline=None)
def test_corpus_joints_are_nqd_and_satisfy_inequality(seed):
    rng = np.random.default_rng(seed)
    joint = random_nqd_joint(rng)
    assert nqd_check_exact(joint).passed
    f, g = random_monotone_map(rng), random_monotone_map(rng)
    assert covariance_sign_oracle(joint, f, g) <= 1e-12
    lhs, rhs = moment_inequality_exact(joint, TruncationWindow(float(rng.uniform(0, 2)), float(rng.uniform(0.1, 3))))
    assert lhs <= rhs + 1e-12


def test_corpus_is_reproducible():
    a, b = nqd_corpus(5, seed=3), nqd_corpus(5, seed=3)
    assert all(np.array_equal(x.points, y.points) and np.array_equal(x.probs, y.probs) for x, y in zip(a, b))


def test_generate_iid_pareto_mean_within_three_se():
    model = DependenceModel("iid", Pareto(alpha=1.8, xm=1.0))
    batch = generate(model, master_seed=0, path_count=1, horizon=1000)
    x = batch.values[0]
    # finite variance is not available for alpha < 2; use a robust band from the truncated sample
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - 2.25) < 3 * se
    assert np.all(batch.means == 2.25)


def test_antithetic_pairs_are_exact():
    model = DependenceModel("antithetic_pairs", BoundedUniform(lo=0.0, hi=1.0))
    x = model.path(5, 2, 1001)
    assert x.size == 1001
    assert np.allclose(x[0:1000:2] + x[1:1000:2], 1.0, atol=1e-15, rtol=0)


def test_copula_with_zero_correlations_matches_iid():
    m = Pareto(alpha=1.8, xm=1.0)
    a = DependenceModel("gaussian_copula", m, ()).path(11, 4, 500)
    b = DependenceModel("iid", m).path(11, 4, 500)
    assert np.array_equal(a, b)


def test_copula_rejects_positive_or_indefinite_band():
    m = Pareto(alpha=1.8, xm=1.0)
    with pytest.raises(DependenceError):
        DependenceModel("gaussian_copula", m, (0.2,))
    with pytest.raises(DependenceError):
        DependenceModel("gaussian_copula", m, (-0.6, -0.6))


def test_copula_pairs_pass_empirical_nqd_band():
    model = DependenceModel("gaussian_copula", BoundedUniform(lo=0.0, hi=1.0), (-0.4,))
    x = model.path(0, 0, 200_001)
    u, v = x[0:200_000:2], x[1:200_001:2]
    assert empirical_nqd_band(u, v, grid=np.linspace(0.05, 0.95, 10)) <= 0


def test_paths_are_deterministic_and_order_independent():
    model = DependenceModel("gaussian_copula", Pareto(alpha=1.8, xm=1.0), (-0.3,))
    fwd = [model.path(9, i, 300) for i in range(4)]
    rev = [model.path(9, i, 300) for i in reversed(range(4))][::-1]
    assert all(np.array_equal(a, b) for a, b in zip(fwd, rev))
    assert not np.array_equal(fwd[0], fwd[1])
