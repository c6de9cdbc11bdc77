import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from umfi.core import Dataset, SeedSpec
from umfi.forest import EvaluationFunction, ForestConfig
from umfi.info import (DiscreteJoint, OverlappingGroups, TooFewPoints,
                       conditional_mutual_information, dependence_removal_report, entropy,
                       joint_entropy, mic_approx, mutual_information, random_independent_joint,
                       supermodularity_gap, verify_supermodularity)


def _random_joint(seed, dims=(2, 2, 2)):
    rng = np.random.default_rng(seed)
    t = rng.random(dims)
    return DiscreteJoint(t / t.sum())


def test_joint_validation():
    with pytest.raises(ValueError):
        DiscreteJoint(np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        DiscreteJoint(np.array([1.5, -0.5]))


def test_independent_bits():
    j = DiscreteJoint(np.full((2, 2), 0.25))
    assert mutual_information(j, [0], [1]) == pytest.approx(0.0, abs=1e-15)


def test_copy_bit():
    j = DiscreteJoint(np.array([[0.5, 0.0], [0.0, 0.5]]))
    assert mutual_information(j, [0], [1]) == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(5))
def test_entropy_identity(seed):
    j = _random_joint(seed)
    mi = mutual_information(j, [0], [1, 2])
    oracle = joint_entropy(j, [0]) + joint_entropy(j, [1, 2]) - joint_entropy(j, [0, 1, 2])
    assert mi == pytest.approx(oracle, abs=1e-12)


def test_overlap_rejected():
    with pytest.raises(OverlappingGroups):
        mutual_information(_random_joint(0), [0, 1], [1])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.lists(st.integers(2, 3), min_size=3, max_size=4))
def test_symmetry_nonnegativity_chain_rule(seed, dims):
    j = _random_joint(seed, tuple(dims))
    a, b = mutual_information(j, [0], [1, 2]), mutual_information(j, [1, 2], [0])
    assert abs(a - b) < 1e-12
    assert a >= -1e-12
    # I(Y; S, f) = I(Y; S) + I(Y; f | S) with Y=0, S=1, f=2
    lhs = mutual_information(j, [0], [1, 2])
    rhs = mutual_information(j, [0], [1]) + conditional_mutual_information(j, [0], [2], [1])
    assert lhs == pytest.approx(rhs, abs=1e-9)


def test_entropy_of_uniform():
    assert entropy(np.full(8, 1 / 8)) == pytest.approx(3.0)


def _joint_with_y(rng, k, y_of):
    ps, pf, px = (rng.dirichlet(np.ones(k)) for _ in range(3))
    t = np.zeros((k, k, k, k))
    for s in range(k):
        for f in range(k):
            for x in range(k):
                t[s, f, x, y_of(s, f, x)] = ps[s] * pf[f] * px[x]
    return DiscreteJoint(t)


def test_supermodularity_constant_y():
    j = _joint_with_y(np.random.default_rng(0), 3, lambda s, f, x: 0)
    assert supermodularity_gap(j) == pytest.approx(0.0, abs=1e-12)


def test_supermodularity_copy_of_f():
    j = _joint_with_y(np.random.default_rng(1), 3, lambda s, f, x: f)
    y = [3]
    lhs = mutual_information(j, y, [0, 1, 2]) - mutual_information(j, y, [0, 2])
    assert lhs == pytest.approx(joint_entropy(j, [1]))
    assert supermodularity_gap(j) == pytest.approx(0.0, abs=1e-12)


def test_supermodularity_gap_can_be_positive():
    # xor: f alone says nothing, f with S says everything
    j = _joint_with_y(np.random.default_rng(2), 2, lambda s, f, x: s ^ f ^ x)
    assert supermodularity_gap(j) > 0.1


def test_supermodularity_fails_without_independence():
    # X duplicates f: f adds nothing on top of (S, X) but a full bit on top of S
    t = np.zeros((2, 2, 2, 2))
    for b in range(2):
        t[0, b, b, b] = 0.5  # S constant, X = f, Y = f
    gap = supermodularity_gap(DiscreteJoint(t))
    assert gap < -0.5


def test_verify_supermodularity_small():
    assert verify_supermodularity(200, 2, SeedSpec(1)) == 0.0
    assert verify_supermodularity(100, 4, SeedSpec(2)) == 0.0
    with pytest.raises(ValueError):
        verify_supermodularity(10, 5)


def test_random_joint_is_independent_in_inputs():
    j = random_independent_joint(np.random.default_rng(3), 3)
    assert mutual_information(j, [0], [1, 2]) == pytest.approx(0.0, abs=1e-12)
    assert mutual_information(j, [1], [2]) == pytest.approx(0.0, abs=1e-12)


def test_mic_identity_and_monotone():
    x = np.random.default_rng(4).normal(size=500)
    assert mic_approx(x, x) >= 0.99
    assert mic_approx(x, x ** 3) >= 0.99
    assert mic_approx(x, np.exp(x)) == mic_approx(np.exp(x), x ** 3)


def test_mic_null():
    # Monte-Carlo null over 100 seeds at n=1000 had 99th percentile 0.045
    rng = np.random.default_rng(5)
    x, y = rng.uniform(size=(2, 1000))
    assert mic_approx(x, y) < 0.15


def test_mic_nonlinear_and_bounds():
    rng = np.random.default_rng(6)
    x = rng.uniform(-1, 1, 800)
    v = mic_approx(x, np.cos(4 * x) + 0.05 * rng.normal(size=800))
    assert 0.4 < v <= 1.0
    with pytest.raises(TooFewPoints):
        mic_approx(x[:10], x[:10])


def test_dependence_report_on_dependent_features():
    rng = np.random.default_rng(7)
    n = 400
    z = rng.normal(size=n)
    X = np.column_stack([z, z ** 2 + 0.3 * rng.normal(size=n), np.sin(2 * z) + 0.3 * rng.normal(size=n),
                         rng.normal(size=n)])
    d = Dataset(X, ["z", "a", "b", "c"], rng.normal(size=n), "reg")
    e = EvaluationFunction("reg", ForestConfig(n_trees=50), 1)
    (rep,) = dependence_removal_report(d, ["z"], ["ot", "lr"], e)
    assert rep.predictability_raw > 0.3
    assert rep.predictability_ot <= 0.05
    # linear residuals leave the quadratic dependence in place
    assert rep.predictability_lr > 0.3
    assert set(rep.distortion) == {"ot", "lr"}
    assert all(0 <= v <= 1 for m in rep.distortion.values() for v in m.values())
    assert rep.distortion["lr"]["c"] == 1.0 or rep.distortion["lr"]["c"] > 0.99
