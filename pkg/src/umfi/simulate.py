"""Simulation studies comparing MCI and UMFI, with box-plot summaries."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import Dataset, SeedSpec, TaskKind
from .forest import EvaluationFunction, ForestConfig
from .importance import run_method


class Design(str, enum.Enum):
    CORRELATED_INTERACTION = "corr-int"
    CORRELATION = "corr"
    NONLINEAR_XOR = "xor"


@dataclass(frozen=True)
class SimDesign:
    kind: Design
    n: int = 500
    replications: int = 100
    # xor noise is Exp with this rate (mean 1/rate)
    xor_rate: float = 1 / math.sqrt(2)

    def __post_init__(self):
        object.__setattr__(self, "kind", Design(self.kind))
        if self.n < 50:
            raise ValueError("n must be >= 50")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")


def generate(design: SimDesign, replication_index: int, seed: SeedSpec | int = 42) -> Dataset:
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))
    rng = seed.rng("simulate", design.kind.value, int(replication_index))
    n = design.n
    if design.kind is Design.CORRELATED_INTERACTION:
        A, B, C, D, E, G = rng.standard_normal((6, n))
        x1, x2, x3, x4 = A + B, B + C, D + E, E + G
        y = x1 + x2 + np.sign(x1 * x2) + x3 + x4
    elif design.kind is Design.CORRELATION:
        x1, x2, x4 = rng.standard_normal((3, n))
        x3 = x1 + rng.normal(0.0, 0.2, n)
        y = x1 + x2
    else:
        x1, x2, x3, x4 = rng.standard_normal((4, n))
        eps = rng.exponential(1.0 / design.xor_rate, n)
        y = np.sign(x1 * x2) * eps
    return Dataset(np.column_stack([x1, x2, x3, x4]), ["x1", "x2", "x3", "x4"], y,
                   TaskKind.REGRESSION)


@dataclass
class BoxStats:
    median: float
    q1: float
    q3: float
    outliers: list[float]

    @classmethod
    def of(cls, values) -> BoxStats:
        v = np.asarray(values, dtype=float)
        q1, med, q3 = np.percentile(v, [25, 50, 75])
        iqr = q3 - q1
        out = v[(v < q1 - 1.5 * iqr) | (v > q3 + 1.5 * iqr)]
        return cls(float(med), float(q1), float(q3), sorted(out.tolist()))


@dataclass
class ReplicationSummary:
    design: Design
    methods: list[str]
    features: list[str]
    # shares[method] -> array (replications, features)
    shares: dict[str, np.ndarray]
    trainings: dict[str, int]

    def box(self, method: str, feature: str) -> BoxStats:
        return BoxStats.of(self.shares[method][:, self.features.index(feature)])

    def median(self, method: str, feature: str) -> float:
        return self.box(method, feature).median

    def to_json(self) -> dict:
        return {
            "design": self.design.value,
            "replications": int(next(iter(self.shares.values())).shape[0]),
            "trainings": self.trainings,
            "summary": {m: {f: vars(self.box(m, f)) for f in self.features}
                        for m in self.methods},
        }

    def points(self):
        """(replication, method, feature, share) rows for external plotting."""
        for m in self.methods:
            for r, row in enumerate(self.shares[m]):
                for f, s in zip(self.features, row):
                    yield r, m, f, float(s)


def run_study(design: SimDesign, methods=("mci", "umfi-lr", "umfi-ot"),
              forest: ForestConfig | None = None, seed: SeedSpec | int = 42,
              progress=None) -> ReplicationSummary:
    if not methods:
        raise ValueError("need at least one method")
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))
    methods = list(methods)
    features = ["x1", "x2", "x3", "x4"]
    shares = {m: np.zeros((design.replications, 4)) for m in methods}
    trainings = {m: 0 for m in methods}
    for r in range(design.replications):
        d = generate(design, r, seed)
        e = EvaluationFunction(TaskKind.REGRESSION, forest, seed.child("replication", r))
        for m in methods:
            rep = run_method(m, d, e)
            shares[m][r] = [rep.shares[f] for f in features]
            trainings[m] += rep.trainings
        if progress is not None:
            progress(r)
    return ReplicationSummary(design.kind, methods, features, shares, trainings)
