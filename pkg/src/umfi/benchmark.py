"""Runtime scaling of exact MCI against UMFI-OT as the feature count grows."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, SeedSpec, TaskKind, UmfiError
from .forest import EvaluationFunction, ForestConfig
from .importance import MciConfig, MciMode, UmfiConfig, mci, umfi
from .removal import BackendKind, RemovalBackend


class RangeExceedsFeatures(UmfiError):
    pass


MCI_MAX_FEATURES = 15


@dataclass
class BenchmarkRow:
    p: int
    features: list[str]
    wall_time_umfi: float
    trainings_umfi: int
    wall_time_mci: float | None = None
    trainings_mci: int | None = None

    @property
    def ratio(self) -> float | None:
        if self.wall_time_mci is None:
            return None
        return self.wall_time_mci / self.wall_time_umfi


@dataclass
class BenchmarkResult:
    n: int
    rows: list[BenchmarkRow] = field(default_factory=list)

    def row(self, p: int) -> BenchmarkRow:
        return next(r for r in self.rows if r.p == p)

    def to_json(self) -> dict:
        return {"n": self.n,
                "rows": [dict(vars(r), ratio=r.ratio) for r in self.rows]}


def synthetic_dataset(n: int = 571, p: int = 50, seed: SeedSpec | int = 42) -> Dataset:
    """Gaussian features with shared latent factors and a binary response."""
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))
    rng = seed.rng("synthetic-benchmark", n, p)
    factors = rng.standard_normal((n, 5))
    loadings = rng.normal(0.0, 0.7, (5, p))
    X = factors @ loadings + rng.standard_normal((n, p))
    score = X[:, 0] + X[:, 1] * X[:, 2] + 0.5 * X[:, 3] + rng.standard_normal(n)
    y = (score > np.median(score)).astype(np.int64)
    return Dataset(X, [f"g{j + 1}" for j in range(p)], y, TaskKind.CLASSIFICATION)


def run_benchmark(d: Dataset, p_range, seed: SeedSpec | int = 42,
                  forest: ForestConfig | None = None,
                  mci_max: int = MCI_MAX_FEATURES, progress=None) -> BenchmarkResult:
    """Time MCI exact (p <= mci_max) and UMFI-OT on seeded random feature subsets."""
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))
    p_range = [int(p) for p in p_range]
    if not p_range or max(p_range) > d.p or min(p_range) < 1:
        raise RangeExceedsFeatures(f"p range {p_range} not within 1..{d.p}")
    result = BenchmarkResult(d.n)
    backend = UmfiConfig(RemovalBackend(BackendKind.OPTIMAL_TRANSPORT))
    for p in p_range:
        cols = np.sort(seed.rng("benchmark-subset", p).choice(d.p, size=p, replace=False))
        sub = d.select(cols)
        e = EvaluationFunction(d.task, forest, seed.child("benchmark", p))
        t0 = time.perf_counter()
        rep_u = umfi(sub, e, backend)
        row = BenchmarkRow(p, list(sub.feature_names), time.perf_counter() - t0, rep_u.trainings)
        if p <= mci_max:
            t0 = time.perf_counter()
            rep_m = mci(sub, e, MciConfig(MciMode.EXACT))
            row.wall_time_mci = time.perf_counter() - t0
            row.trainings_mci = rep_m.trainings
        result.rows.append(row)
        if progress is not None:
            progress(row)
    return result
