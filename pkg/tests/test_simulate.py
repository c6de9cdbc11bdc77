import math

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from umfi.core import SeedSpec
from umfi.forest import ForestConfig
from umfi.simulate import BoxStats, Design, SimDesign, generate, run_study

FAST = ForestConfig(n_trees=15)


def test_design_validation():
    with pytest.raises(ValueError):
        SimDesign("corr", n=10)
    with pytest.raises(ValueError):
        SimDesign("corr", replications=0)
    with pytest.raises(ValueError):
        SimDesign("nope")


def test_correlated_interaction_moments():
    d = generate(SimDesign(Design.CORRELATED_INTERACTION, n=200_000), 0, 1)
    c = np.corrcoef(d.features.T)
    # shared latent terms give correlation 1/2 within each pair, 0 across
    assert c[0, 1] == pytest.approx(0.5, abs=0.01)
    assert c[2, 3] == pytest.approx(0.5, abs=0.01)
    assert abs(c[0, 2]) < 0.01 and abs(c[1, 3]) < 0.01
    assert d.features.var(axis=0) == pytest.approx([2, 2, 2, 2], rel=0.02)
    x1, x2, x3, x4 = d.features.T
    assert_array_equal(d.response, x1 + x2 + np.sign(x1 * x2) + x3 + x4)


def test_correlation_design():
    d = generate(SimDesign(Design.CORRELATION, n=100_000), 0, 2)
    x1, x2, x3, x4 = d.features.T
    assert np.std(x3 - x1) == pytest.approx(0.2, rel=0.02)
    assert_array_equal(d.response, x1 + x2)
    assert abs(np.corrcoef(x4, d.response)[0, 1]) < 0.01


def test_xor_design_noise_scale():
    d = generate(SimDesign(Design.NONLINEAR_XOR, n=200_000), 0, 3)
    x1, x2 = d.features[:, 0], d.features[:, 1]
    assert np.all(np.sign(d.response) == np.sign(x1 * x2))
    assert np.abs(d.response).mean() == pytest.approx(math.sqrt(2), rel=0.02)


def test_generate_deterministic_and_independent_across_replications():
    s = SimDesign(Design.CORRELATION)
    a, b = generate(s, 3, 7), generate(s, 3, 7)
    assert a == b
    assert not np.array_equal(generate(s, 4, 7).features, a.features)
    assert not np.array_equal(generate(s, 3, 8).features, a.features)
    assert generate(s, 3, SeedSpec(7)) == a


def test_box_stats_tukey():
    v = list(range(1, 10)) + [100]
    b = BoxStats.of(v)
    assert b.median == 5.5
    assert b.outliers == [100]
    assert BoxStats.of([1, 1, 1]).outliers == []


def test_study_shapes_counts_and_points():
    s = run_study(SimDesign("xor", replications=2), ["mci", "umfi-ot"], FAST, 5)
    assert s.shares["mci"].shape == (2, 4)
    assert s.trainings == {"mci": 2 * 15, "umfi-ot": 2 * 8}
    assert_array_equal(s.shares["mci"].sum(axis=1), [1.0, 1.0])
    pts = list(s.points())
    assert len(pts) == 2 * 2 * 4
    js = s.to_json()
    assert js["replications"] == 2 and set(js["summary"]) == {"mci", "umfi-ot"}


def test_study_prefix_stable():
    # replication r depends only on (seed, r), so a longer study extends a shorter one
    one = run_study(SimDesign("corr", replications=1), ["umfi-lr"], FAST, 9)
    two = run_study(SimDesign("corr", replications=2), ["umfi-lr"], FAST, 9)
    assert_array_equal(one.shares["umfi-lr"][0], two.shares["umfi-lr"][0])


def test_study_requires_methods():
    with pytest.raises(ValueError):
        run_study(SimDesign("corr", replications=1), [], FAST)
