"""MCI and UMFI feature importance."""

from __future__ import annotations

import enum
import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, ImportanceReport, Method, UmfiError
from .forest import EvaluationFunction
from .removal import BackendKind, RemovalBackend, s_star_matrix, transformed_names


class SubsetBudgetExceeded(UmfiError):
    pass


MAX_EXACT_FEATURES = 20


class MciMode(str, enum.Enum):
    EXACT = "exact"
    SIZE_LIMITED = "k3"


@dataclass(frozen=True)
class MciConfig:
    mode: MciMode = MciMode.EXACT
    max_subset_size: int = 3

    def __post_init__(self):
        object.__setattr__(self, "mode", MciMode(self.mode))
        if self.max_subset_size < 1:
            raise ValueError("max_subset_size must be >= 1")


@dataclass(frozen=True)
class UmfiConfig:
    backend: RemovalBackend = field(default_factory=RemovalBackend)
    clamp_negative: bool = True


class SubsetCache:
    """nu evaluated at most once per feature subset (keyed by sorted indices)."""

    def __init__(self, d: Dataset, e: EvaluationFunction):
        self.d = d
        self.e = e
        self.values: dict[tuple[int, ...], float] = {(): 0.0}
        self.hits = 0

    def __call__(self, subset) -> float:
        key = tuple(sorted(subset))
        if key in self.values:
            self.hits += 1
            return self.values[key]
        names = [self.d.feature_names[i] for i in key]
        v = self.e(self.d.features[:, list(key)], self.d.response, names)
        self.values[key] = v
        return v


def _subsets(indices, max_size):
    for k in range(0, max_size + 1):
        yield from itertools.combinations(indices, k)


def mci(d: Dataset, e: EvaluationFunction, cfg: MciConfig | None = None,
        cache: SubsetCache | None = None) -> ImportanceReport:
    """I(f) = max over S of nu(S + f) - nu(S), exact or over subsets of bounded size."""
    cfg = cfg or MciConfig()
    p = d.p
    if cfg.mode is MciMode.EXACT:
        if p > MAX_EXACT_FEATURES:
            raise SubsetBudgetExceeded(f"exact MCI needs 2^{p} fits; limit is p <= {MAX_EXACT_FEATURES}")
        k = p
        method = Method.MCI_EXACT
    else:
        k = min(cfg.max_subset_size, p)
        method = Method.MCI_K3
    cache = cache or SubsetCache(d, e)
    start = time.perf_counter()
    before = e.training_counter
    for s in _subsets(range(p), k):
        cache(s)

    raw, best_subsets = {}, {}
    for f in range(p):
        others = [i for i in range(p) if i != f]
        best, arg = -math.inf, ()
        # smallest subsets first, lexicographic within a size
        for s in _subsets(others, k - 1):
            gain = cache(s + (f,)) - cache(s)
            if gain > best:
                best, arg = gain, s
        name = d.feature_names[f]
        raw[name] = float(best)
        best_subsets[name] = [d.feature_names[i] for i in arg]
    return ImportanceReport(
        method=method,
        scores={k_: max(v, 0.0) for k_, v in raw.items()},
        raw_scores=raw,
        trainings=e.training_counter - before,
        wall_time=time.perf_counter() - start,
        seed=e.seed.master_seed,
        metadata={"max_subset_size": k, "maximizing_subsets": best_subsets,
                  "nu_full": cache(tuple(range(p))) if k == p else None,
                  "scaling": "none"},
    )


def umfi(d: Dataset, e: EvaluationFunction, cfg: UmfiConfig | None = None) -> ImportanceReport:
    """U(f) = nu(S* + f) - nu(S*) with S* the other features made independent of f."""
    cfg = cfg or UmfiConfig()
    start = time.perf_counter()
    before = e.training_counter
    raw = {}
    for j, name in enumerate(d.feature_names):
        raw[name] = umfi_single(d, j, e, cfg)
    scores = {k: max(v, 0.0) for k, v in raw.items()} if cfg.clamp_negative else dict(raw)
    method = Method.UMFI_OT if cfg.backend.kind is BackendKind.OPTIMAL_TRANSPORT else Method.UMFI_LR
    return ImportanceReport(
        method=method,
        scores=scores,
        raw_scores=raw,
        trainings=e.training_counter - before,
        wall_time=time.perf_counter() - start,
        seed=e.seed.master_seed,
        metadata={"backend": cfg.backend.kind.value,
                  "bin_size": cfg.backend.ot_bin_target,
                  "alpha": cfg.backend.lr_alpha,
                  "clamped": cfg.clamp_negative,
                  "scaling": "none"},
    )


def umfi_single(d: Dataset, j: int, e: EvaluationFunction, cfg: UmfiConfig) -> float:
    """Unclamped UMFI of feature ``j``: two forest fits (one when p == 1)."""
    s_star = s_star_matrix(d.features, j, cfg.backend)
    names = transformed_names(d, j)
    base = e(s_star, d.response, names)
    with_f = e(np.column_stack([s_star, d.features[:, j]]), d.response,
               names + [d.feature_names[j]])
    return with_f - base


def expected_trainings(method: Method | str, p: int, max_subset_size: int = 3) -> int:
    method = Method(method)
    if method in (Method.UMFI_LR, Method.UMFI_OT):
        return 1 if p == 1 else 2 * p
    if method is Method.MCI_EXACT:
        return 2**p - 1
    return sum(math.comb(p, k) for k in range(1, min(max_subset_size, p) + 1))


def training_count_audit(report: ImportanceReport, p: int) -> bool:
    k = report.metadata.get("max_subset_size", 3) if report.method is Method.MCI_K3 else 3
    return report.trainings == expected_trainings(report.method, p, k)


def run_method(name: str, d: Dataset, e: EvaluationFunction,
               bin_size: int = 100, alpha: float = 0.01) -> ImportanceReport:
    """Dispatch by short method name: mci, mci-k3, umfi-lr, umfi-ot."""
    name = name.lower()
    if name in ("mci", "mci-exact"):
        return mci(d, e, MciConfig(MciMode.EXACT))
    if name == "mci-k3":
        return mci(d, e, MciConfig(MciMode.SIZE_LIMITED, 3))
    if name in ("umfi-lr", "umfi-ot"):
        kind = BackendKind.LINEAR_REGRESSION if name == "umfi-lr" else BackendKind.OPTIMAL_TRANSPORT
        return umfi(d, e, UmfiConfig(RemovalBackend(kind, bin_size, alpha)))
    raise ValueError(f"unknown method {name!r}")
