import numpy as np
import pytest
from numpy.testing import assert_array_equal

from umfi.core import SeedSpec, TaskKind
from umfi.forest import (EmptyFeatureSet, EvaluationFunction, ForestConfig, NoOobRows, fit_forest,
                         oob_score)
from umfi.simulate import Design, SimDesign, generate


def _loo_1nn_r2(X, y):
    """Leave-one-out 1-nearest-neighbour R^2: independent check that y is learnable from X."""
    D = ((X[:, None, :] - X[None, :, :]) ** 2).sum(-1)
    np.fill_diagonal(D, np.inf)
    pred = y[D.argmin(axis=1)]
    return 1 - np.sum((y - pred) ** 2) / np.sum((y - y.mean()) ** 2)


def test_defaults():
    cfg = ForestConfig()
    assert cfg.n_trees == 100
    assert cfg.resolved_mtry(4, TaskKind.REGRESSION) == 2
    assert cfg.resolved_mtry(3, TaskKind.REGRESSION) == 1
    assert cfg.resolved_mtry(15, TaskKind.CLASSIFICATION) == 4
    assert cfg.resolved_mtry(1, TaskKind.CLASSIFICATION) == 1
    assert cfg.resolved_min_node_size(TaskKind.REGRESSION) == 5
    assert cfg.resolved_min_node_size(TaskKind.CLASSIFICATION) == 1
    assert ForestConfig(mtry=10).resolved_mtry(3, TaskKind.REGRESSION) == 3


@pytest.mark.parametrize("seed", range(10))
def test_copy_of_column_is_learnable(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(500, 3))
    y = X[:, 0].copy()
    assert _loo_1nn_r2(X, y) > 0.9
    f = fit_forest(X, y, "reg", ForestConfig(), SeedSpec(seed))
    assert oob_score(f, X, y) > 0.9


def test_constant_column_gives_root_only_trees():
    rng = np.random.default_rng(0)
    X = np.ones((100, 1))
    y = rng.normal(size=100)
    f = fit_forest(X, y, "reg", ForestConfig(n_trees=20), 1)
    assert np.all(f.n_nodes == 1)
    assert oob_score(f, X, y) <= 0


def test_constant_response():
    X = np.random.default_rng(1).normal(size=(50, 2))
    f = fit_forest(X, np.full(50, 3.0), "reg", ForestConfig(n_trees=5), 1)
    assert np.all(f.n_nodes == 1)
    assert_array_equal(f.predict(X), 3.0)


def test_empty_feature_set():
    with pytest.raises(EmptyFeatureSet):
        fit_forest(np.empty((10, 0)), np.zeros(10), "reg")


def test_classification_accuracy_and_count():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(400, 5))
    y = (X[:, 0] + X[:, 1] > 0).astype(int)
    f = fit_forest(X, y, "cls", ForestConfig(), 3)
    assert f.n_trees == 100
    acc = oob_score(f, X, y)
    assert 0.8 < acc <= 1.0
    assert np.mean(f.predict(X) == y) >= acc


def test_oob_rows_exclude_inbag():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(60, 2))
    y = X[:, 0]
    f = fit_forest(X, y, "reg", ForestConfig(n_trees=1), 5)
    pred = f.oob_predictions(X)
    assert_array_equal(np.isnan(pred), f.inbag[0] > 0)


def test_no_oob_rows():
    X = np.arange(4.0)[:, None]
    y = np.arange(4.0)
    # a single tree leaves roughly a third of the rows out of bag; find a seed where none are
    for s in range(2000):
        f = fit_forest(X, y, "reg", ForestConfig(n_trees=1), np.array([s], dtype=np.uint32))
        if np.all(f.inbag[0] > 0):
            with pytest.raises(NoOobRows):
                oob_score(f, X, y)
            return
    pytest.fail("no all-in-bag seed found")


def test_deterministic_and_seed_sensitive():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(200, 3))
    y = X[:, 0] * X[:, 1]
    a = fit_forest(X, y, "reg", ForestConfig(n_trees=10), 11)
    b = fit_forest(X, y, "reg", ForestConfig(n_trees=10), 11)
    c = fit_forest(X, y, "reg", ForestConfig(n_trees=10), 12)
    assert_array_equal(a.thr, b.thr)
    assert oob_score(a, X, y) == oob_score(b, X, y)
    assert not np.array_equal(a.thr, c.thr)


def test_nu_empty_is_free():
    e = EvaluationFunction("reg")
    assert e(None, np.zeros(10)) == 0.0
    assert e(np.empty((10, 0)), np.zeros(10)) == 0.0
    assert e.training_counter == 0


def test_nu_counts_and_clamps():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(300, 2))
    y = rng.normal(size=300)
    e = EvaluationFunction("reg", ForestConfig(n_trees=30), 1)
    assert e.raw(X, y) < 0.05
    assert e(X, y) == max(0.0, e.raw(X, y))
    assert e.training_counter == 3


def test_nu_column_order_invariance():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(300, 3))
    y = X[:, 0] + np.sin(X[:, 1])
    e = EvaluationFunction("reg", ForestConfig(n_trees=30), 9)
    a = e(X, y, ["a", "b", "c"])
    b = e(X[:, [2, 0, 1]], y, ["c", "a", "b"])
    assert a == b


@pytest.mark.parametrize("seed", range(10))
def test_xor_full_set_has_signal(seed):
    d = generate(SimDesign(Design.NONLINEAR_XOR), 0, seed)
    e = EvaluationFunction("reg", seed=seed)
    assert e(d.features, d.response, d.feature_names) > 0.2


def test_nu_bounds_classification():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(100, 2))
    y = rng.integers(0, 2, 100)
    v = EvaluationFunction("cls", ForestConfig(n_trees=20))(X, y)
    assert 0.0 <= v <= 1.0
