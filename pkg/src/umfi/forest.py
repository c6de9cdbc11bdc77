"""Random forest with out-of-bag scoring, used as the evaluation function.

Trees are CART-style: bootstrap sample of n rows, ``mtry`` candidate
features drawn per node, exhaustive midpoint split search maximizing
variance reduction (regression) or Gini decrease (classification).
Each tree seeds its own generator, so results do not depend on the
number of threads.
"""

from __future__ import annotations

import hashlib
import math
import threading
from dataclasses import dataclass, replace
from typing import Sequence

import numba
import numpy as np

from .core import SeedSpec, TaskKind, UmfiError


class EmptyFeatureSet(UmfiError):
    pass


class NoOobRows(UmfiError):
    pass


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    mtry: int | None = None
    min_node_size: int | None = None

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.mtry is not None and self.mtry < 1:
            raise ValueError("mtry must be >= 1")
        if self.min_node_size is not None and self.min_node_size < 1:
            raise ValueError("min_node_size must be >= 1")

    def resolved_mtry(self, m: int, task: TaskKind) -> int:
        if self.mtry is not None:
            return min(self.mtry, m)
        if task is TaskKind.CLASSIFICATION:
            return max(1, math.ceil(math.sqrt(m)))
        return max(1, math.ceil(m / 3))

    def resolved_min_node_size(self, task: TaskKind) -> int:
        if self.min_node_size is not None:
            return self.min_node_size
        return 1 if task is TaskKind.CLASSIFICATION else 5


@numba.njit(cache=True)
def _sort_pairs(keys, vals, size):
    """Sort keys[:size] ascending, carrying vals along."""
    if size <= 24:
        for i in range(1, size):
            k = keys[i]
            v = vals[i]
            j = i - 1
            while j >= 0 and keys[j] > k:
                keys[j + 1] = keys[j]
                vals[j + 1] = vals[j]
                j -= 1
            keys[j + 1] = k
            vals[j + 1] = v
        return
    order = np.argsort(keys[:size])
    k2 = keys[:size][order]
    v2 = vals[:size][order]
    keys[:size] = k2
    vals[:size] = v2


@numba.njit(cache=True)
def _grow_tree(X, yf, yi, n_classes, mtry, min_node_size, seed,
               feat, thr, left, right, value, inbag):
    n, m = X.shape
    np.random.seed(seed)
    samples = np.empty(n, dtype=np.int64)
    for i in range(n):
        r = np.random.randint(0, n)
        samples[i] = r
        inbag[r] += 1

    classification = n_classes > 0
    perm = np.arange(m)
    counts = np.zeros(max(n_classes, 1), dtype=np.float64)
    left_counts = np.zeros(max(n_classes, 1), dtype=np.float64)
    vals = np.empty(n, dtype=np.float64)
    ys = np.empty(n, dtype=np.float64)

    stack_node = np.empty(n + 1, dtype=np.int64)
    stack_start = np.empty(n + 1, dtype=np.int64)
    stack_end = np.empty(n + 1, dtype=np.int64)
    top = 0
    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = n
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = stack_node[top]
        start = stack_start[top]
        end = stack_end[top]
        size = end - start

        # node statistics
        total = 0.0
        pure = True
        if classification:
            counts[:] = 0.0
            for i in range(start, end):
                counts[yi[samples[i]]] += 1.0
            best_k = 0
            for k in range(n_classes):
                if counts[k] > counts[best_k]:
                    best_k = k
            leaf_value = float(best_k)
            pure = counts[best_k] == size
        else:
            first = yf[samples[start]]
            for i in range(start, end):
                v = yf[samples[i]]
                total += v
                if v != first:
                    pure = False
            leaf_value = total / size

        feat[node] = -1
        value[node] = leaf_value
        if pure or size <= min_node_size:
            continue

        # draw mtry candidate features without replacement
        for j in range(mtry):
            r = j + np.random.randint(0, m - j)
            tmp = perm[j]
            perm[j] = perm[r]
            perm[r] = tmp

        best_gain = -1.0
        best_f = -1
        best_t = 0.0
        for j in range(mtry):
            f = perm[j]
            for i in range(size):
                s_i = samples[start + i]
                vals[i] = X[s_i, f]
                ys[i] = yf[s_i]
            _sort_pairs(vals, ys, size)
            if vals[0] == vals[size - 1]:
                continue
            if classification:
                left_counts[:] = 0.0
                for i in range(size - 1):
                    left_counts[int(ys[i])] += 1.0
                    a = vals[i]
                    b = vals[i + 1]
                    if a == b:
                        continue
                    nl = i + 1.0
                    nr = size - nl
                    sl = 0.0
                    sr = 0.0
                    for k in range(n_classes):
                        cl = left_counts[k]
                        cr = counts[k] - cl
                        sl += cl * cl
                        sr += cr * cr
                    gain = sl / nl + sr / nr
                    if gain > best_gain:
                        best_gain = gain
                        best_f = f
                        best_t = 0.5 * (a + b)
            else:
                acc = 0.0
                for i in range(size - 1):
                    acc += ys[i]
                    a = vals[i]
                    b = vals[i + 1]
                    if a == b:
                        continue
                    nl = i + 1.0
                    nr = size - nl
                    rest = total - acc
                    gain = acc * acc / nl + rest * rest / nr
                    if gain > best_gain:
                        best_gain = gain
                        best_f = f
                        best_t = 0.5 * (a + b)

        if best_f < 0:
            continue
        # midpoint may round up to the upper value; keep the partition non-empty
        # partition samples[start:end] in place
        lo = start
        hi = end - 1
        while lo <= hi:
            if X[samples[lo], best_f] <= best_t:
                lo += 1
            else:
                tmp = samples[lo]
                samples[lo] = samples[hi]
                samples[hi] = tmp
                hi -= 1
        if lo == start or lo == end:
            continue
        feat[node] = best_f
        thr[node] = best_t
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack_node[top] = n_nodes + 1
        stack_start[top] = lo
        stack_end[top] = end
        top += 1
        stack_node[top] = n_nodes
        stack_start[top] = start
        stack_end[top] = lo
        top += 1
        n_nodes += 2
    return n_nodes


@numba.njit(parallel=True, cache=True)
def _grow_forest(X, yf, yi, n_classes, mtry, min_node_size, seeds,
                 feat, thr, left, right, value, inbag, n_nodes):
    for t in numba.prange(seeds.shape[0]):
        n_nodes[t] = _grow_tree(X, yf, yi, n_classes, mtry, min_node_size, seeds[t],
                                feat[t], thr[t], left[t], right[t], value[t], inbag[t])


@numba.njit(cache=True)
def _predict_tree(x, feat, thr, left, right, value):
    node = 0
    while feat[node] >= 0:
        if x[feat[node]] <= thr[node]:
            node = left[node]
        else:
            node = right[node]
    return value[node]


@numba.njit(cache=True)
def _oob_predictions(X, feat, thr, left, right, value, inbag):
    """Per-tree predictions for out-of-bag rows; NaN where the row was in-bag."""
    n_trees = feat.shape[0]
    n = X.shape[0]
    out = np.full((n_trees, n), np.nan)
    for t in range(n_trees):
        for i in range(n):
            if inbag[t, i] == 0:
                out[t, i] = _predict_tree(X[i], feat[t], thr[t], left[t], right[t], value[t])
    return out


@numba.njit(cache=True)
def _predict_all(X, feat, thr, left, right, value):
    n_trees = feat.shape[0]
    n = X.shape[0]
    out = np.empty((n_trees, n))
    for t in range(n_trees):
        for i in range(n):
            out[t, i] = _predict_tree(X[i], feat[t], thr[t], left[t], right[t], value[t])
    return out


@dataclass(frozen=True, eq=False)
class Forest:
    task: TaskKind
    n_classes: int
    feat: np.ndarray
    thr: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    inbag: np.ndarray
    n_nodes: np.ndarray

    @property
    def n_trees(self) -> int:
        return self.feat.shape[0]

    def _trees(self):
        return self.feat, self.thr, self.left, self.right, self.value

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        per_tree = _predict_all(X, *self._trees())
        if self.task is TaskKind.REGRESSION:
            return per_tree.mean(axis=0)
        return _majority(per_tree, self.n_classes)

    def oob_predictions(self, X: np.ndarray) -> np.ndarray:
        """Aggregated OOB prediction per row, NaN for rows never out of bag."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        per_tree = _oob_predictions(X, *self._trees(), self.inbag)
        seen = ~np.isnan(per_tree)
        covered = seen.any(axis=0)
        out = np.full(X.shape[0], np.nan)
        if self.task is TaskKind.REGRESSION:
            sums = np.where(seen, per_tree, 0.0).sum(axis=0)
            out[covered] = sums[covered] / seen.sum(axis=0)[covered]
        else:
            votes = _majority(per_tree, self.n_classes)
            out[covered] = votes[covered]
        return out


def _majority(per_tree: np.ndarray, n_classes: int) -> np.ndarray:
    votes = np.zeros((n_classes, per_tree.shape[1]))
    for k in range(n_classes):
        votes[k] = (per_tree == k).sum(axis=0)
    # argmax returns the first maximum: ties go to the smallest class index
    return votes.argmax(axis=0).astype(np.float64)


def fit_forest(X: np.ndarray, y: np.ndarray, task: TaskKind | str,
               cfg: ForestConfig | None = None,
               seeds: np.ndarray | SeedSpec | int = 0) -> Forest:
    """Grow ``cfg.n_trees`` trees; ``seeds`` is one uint32 per tree or a SeedSpec."""
    cfg = cfg or ForestConfig()
    task = TaskKind.parse(task)
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] == 0:
        raise EmptyFeatureSet("cannot fit a forest on zero features")
    n, m = X.shape
    if n < 2:
        raise ValueError("need at least 2 rows")
    y = np.asarray(y)
    if y.shape != (n,):
        raise ValueError(f"response must have length {n}")
    if isinstance(seeds, (int, np.integer)):
        seeds = SeedSpec(int(seeds))
    if isinstance(seeds, SeedSpec):
        seeds = seeds.words(cfg.n_trees, "trees")
    seeds = np.asarray(seeds, dtype=np.uint32)
    if seeds.shape != (cfg.n_trees,):
        raise ValueError("need exactly one seed per tree")

    if task is TaskKind.CLASSIFICATION:
        yi = np.ascontiguousarray(y, dtype=np.int64)
        n_classes = int(yi.max()) + 1
        yf = yi.astype(np.float64)
    else:
        yf = np.ascontiguousarray(y, dtype=np.float64)
        yi = np.zeros(n, dtype=np.int64)
        n_classes = 0

    cap = 2 * n + 1
    T = cfg.n_trees
    feat = np.full((T, cap), -1, dtype=np.int64)
    thr = np.zeros((T, cap))
    left = np.zeros((T, cap), dtype=np.int64)
    right = np.zeros((T, cap), dtype=np.int64)
    value = np.zeros((T, cap))
    inbag = np.zeros((T, n), dtype=np.int32)
    n_nodes = np.zeros(T, dtype=np.int64)
    _grow_forest(X, yf, yi, n_classes, cfg.resolved_mtry(m, task),
                 cfg.resolved_min_node_size(task), seeds,
                 feat, thr, left, right, value, inbag, n_nodes)
    return Forest(task, n_classes, feat, thr, left, right, value, inbag, n_nodes)


def oob_score(forest: Forest, X: np.ndarray, y: np.ndarray) -> float:
    """OOB R^2 (regression) or OOB accuracy (classification).

    Rows that were in-bag for every tree are skipped; if fewer than half
    the rows have an OOB prediction, :class:`NoOobRows` is raised.
    """
    pred = forest.oob_predictions(X)
    ok = ~np.isnan(pred)
    if ok.sum() < max(1, 0.5 * len(pred)):
        raise NoOobRows(f"only {int(ok.sum())} of {len(pred)} rows were out of bag")
    y = np.asarray(y, dtype=np.float64)[ok]
    pred = pred[ok]
    if forest.task is TaskKind.CLASSIFICATION:
        return float(np.mean(pred == y))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - pred) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot


def _names_key(names: Sequence[str]) -> str:
    return hashlib.blake2b("\x1f".join(names).encode(), digest_size=8).hexdigest()


class EvaluationFunction:
    """nu(S): clamped OOB skill of a forest trained on the columns of S.

    Columns are put in name order before fitting and the tree seeds are
    derived from the column names, so the same logical subset always gets
    the same forest regardless of how the caller orders its columns.
    """

    def __init__(self, task: TaskKind | str, config: ForestConfig | None = None,
                 seed: SeedSpec | int = 42):
        self.task = TaskKind.parse(task)
        self.config = config or ForestConfig()
        self.seed = seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))
        self._lock = threading.Lock()
        self._count = 0

    @property
    def training_counter(self) -> int:
        return self._count

    def with_config(self, **changes) -> EvaluationFunction:
        return EvaluationFunction(self.task, replace(self.config, **changes), self.seed)

    def raw(self, X: np.ndarray | None, y: np.ndarray,
            names: Sequence[str] | None = None) -> float:
        """Unclamped OOB score; ``None`` or zero columns gives 0 without fitting."""
        if X is None:
            return 0.0
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[1] == 0:
            return 0.0
        if names is None:
            names = [f"c{j}" for j in range(X.shape[1])]
        names = list(names)
        if len(names) != X.shape[1] or len(set(names)) != len(names):
            raise ValueError("need one unique name per column")
        order = sorted(range(len(names)), key=names.__getitem__)
        X = X[:, order]
        key = _names_key([names[j] for j in order])
        seeds = self.seed.words(self.config.n_trees, "nu", key)
        forest = fit_forest(X, y, self.task, self.config, seeds)
        with self._lock:
            self._count += 1
        return oob_score(forest, X, y)

    def __call__(self, X: np.ndarray | None, y: np.ndarray,
                 names: Sequence[str] | None = None) -> float:
        return min(1.0, max(0.0, self.raw(X, y, names)))

    nu = __call__
