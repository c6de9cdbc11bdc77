"""Discrete information-theory oracles and dependence-removal diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Dataset, SeedSpec, TaskKind, UmfiError
from .forest import EvaluationFunction
from .removal import BackendKind, RemovalBackend, s_star_matrix


class OverlappingGroups(UmfiError):
    pass


class TooFewPoints(UmfiError):
    pass


@dataclass(frozen=True)
class DiscreteJoint:
    """Dense probability table over a product of finite alphabets."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=np.float64)
        if np.any(p < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "probabilities", p)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.probabilities.shape

    def marginal(self, keep: Sequence[int]) -> np.ndarray:
        keep = sorted(keep)
        drop = tuple(i for i in range(len(self.dims)) if i not in keep)
        return self.probabilities.sum(axis=drop)


def entropy(probs: np.ndarray) -> float:
    """Shannon entropy in bits of a probability table of any shape."""
    p = np.asarray(probs, dtype=np.float64).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def joint_entropy(j: DiscreteJoint, group: Sequence[int]) -> float:
    return entropy(j.marginal(group)) if len(group) else 0.0


def _check_groups(j, *groups):
    seen = set()
    for g in groups:
        if any(i < 0 or i >= len(j.dims) for i in g):
            raise IndexError(f"variable index out of range in {g}")
        if seen & set(g):
            raise OverlappingGroups(f"groups overlap: {groups}")
        seen |= set(g)


def mutual_information(j: DiscreteJoint, group_a: Sequence[int], group_b: Sequence[int]) -> float:
    """I(A;B) in bits, summed directly over the marginal table of A and B."""
    a, b = list(group_a), list(group_b)
    if not a or not b:
        raise ValueError("groups must be non-empty")
    _check_groups(j, a, b)
    keep = sorted(a + b)
    pab = j.marginal(keep)
    # move A's axes first, B's after, then flatten each side
    pos = {v: i for i, v in enumerate(keep)}
    pab = np.transpose(pab, [pos[v] for v in a] + [pos[v] for v in b])
    size_a = int(np.prod([j.dims[v] for v in a]))
    pab = pab.reshape(size_a, -1)
    pa = pab.sum(axis=1, keepdims=True)
    pb = pab.sum(axis=0, keepdims=True)
    mask = pab > 0
    ratio = pab[mask] / (pa @ pb)[mask]
    return float(max(0.0, np.sum(pab[mask] * np.log2(ratio))))


def conditional_mutual_information(j: DiscreteJoint, group_a, group_b, given) -> float:
    """I(A;B|C) in bits from the sum over p(a,b,c) log p(c)p(a,b,c) / (p(a,c)p(b,c))."""
    a, b, c = list(group_a), list(group_b), list(given)
    _check_groups(j, a, b, c)
    if not c:
        return mutual_information(j, a, b)
    keep = sorted(a + b + c)
    pos = {v: i for i, v in enumerate(keep)}
    pabc = np.transpose(j.marginal(keep), [pos[v] for v in a + b + c])
    sa = int(np.prod([j.dims[v] for v in a]))
    sb = int(np.prod([j.dims[v] for v in b]))
    pabc = pabc.reshape(sa, sb, -1)
    pac = pabc.sum(axis=1)
    pbc = pabc.sum(axis=0)
    pc = pac.sum(axis=0)
    total = 0.0
    for ia in range(sa):
        for ib in range(sb):
            for ic in range(pabc.shape[2]):
                v = pabc[ia, ib, ic]
                if v > 0:
                    total += v * np.log2(pc[ic] * v / (pac[ia, ic] * pbc[ib, ic]))
    return float(max(0.0, total))


def random_independent_joint(rng: np.random.Generator, alphabet: int,
                             y_alphabet: int | None = None) -> DiscreteJoint:
    """Joint of (S, f, X, Y): S, f, X mutually independent, Y | S,f,X arbitrary."""
    k = alphabet
    ky = y_alphabet or alphabet
    ps, pf, px = (rng.dirichlet(np.ones(k)) for _ in range(3))
    prior = np.einsum("i,j,l->ijl", ps, pf, px)
    cond = rng.dirichlet(np.ones(ky), size=(k, k, k))
    table = prior[..., None] * cond
    return DiscreteJoint(table / table.sum())


S_VAR, F_VAR, X_VAR, Y_VAR = 0, 1, 2, 3


def supermodularity_gap(j: DiscreteJoint) -> float:
    """[I(Y;S,f,X) - I(Y;S,X)] - [I(Y;S,f) - I(Y;S)], non-negative under independence."""
    y = [Y_VAR]
    lhs = (mutual_information(j, y, [S_VAR, F_VAR, X_VAR])
           - mutual_information(j, y, [S_VAR, X_VAR]))
    rhs = mutual_information(j, y, [S_VAR, F_VAR]) - mutual_information(j, y, [S_VAR])
    return lhs - rhs


def verify_supermodularity(trials: int, alphabet: int,
                           seed: SeedSpec | int = 0, tol: float = 1e-9) -> float:
    """Fraction of random independent joints violating the supermodularity inequality."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 2 <= alphabet <= 4:
        raise ValueError("alphabet must be in 2..4")
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))
    rng = seed.rng("supermodularity", alphabet)
    violations = 0
    for _ in range(trials):
        if supermodularity_gap(random_independent_joint(rng, alphabet)) < -tol:
            violations += 1
    return violations / trials


def _equal_frequency_bins(ranks: np.ndarray, k: int) -> np.ndarray:
    return (ranks * k) // len(ranks)


def mic_approx(x, y, grid_budget: int | None = None) -> float:
    """MIC-style dependence in [0, 1] using equal-frequency grids.

    Searches every grid a x b with a, b >= 2 and a * b <= grid_budget
    (default floor(n ** 0.6)) and returns the largest
    I(binned x; binned y) / log2(min(a, b)).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be equal-length vectors")
    n = len(x)
    if n < 20:
        raise TooFewPoints(f"need at least 20 points, got {n}")
    budget = grid_budget or int(np.floor(n ** 0.6))
    rx = np.argsort(np.argsort(x, kind="stable"), kind="stable")
    ry = np.argsort(np.argsort(y, kind="stable"), kind="stable")
    best = 0.0
    for a in range(2, budget // 2 + 1):
        bx = _equal_frequency_bins(rx, a)
        for b in range(2, budget // a + 1):
            by = _equal_frequency_bins(ry, b)
            table = np.zeros((a, b))
            np.add.at(table, (bx, by), 1.0)
            table /= n
            pa = table.sum(axis=1, keepdims=True)
            pb = table.sum(axis=0, keepdims=True)
            mask = table > 0
            mi = float(np.sum(table[mask] * np.log2(table[mask] / (pa @ pb)[mask])))
            best = max(best, mi / np.log2(min(a, b)))
    return float(min(1.0, max(0.0, best)))


@dataclass
class DependenceReport:
    protected: str
    predictability: dict[str, float]
    predictability_raw_scores: dict[str, float]
    distortion: dict[str, dict[str, float]] = field(default_factory=dict)

    @property
    def predictability_raw(self) -> float:
        return self.predictability["identity"]

    @property
    def predictability_lr(self) -> float | None:
        return self.predictability.get("lr")

    @property
    def predictability_ot(self) -> float | None:
        return self.predictability.get("ot")

    def to_json(self) -> dict:
        return {"protected": self.protected,
                "predictability": self.predictability,
                "predictability_unclamped": self.predictability_raw_scores,
                "distortion": self.distortion}


def dependence_removal_report(d: Dataset, features_to_audit: Sequence[str],
                              backends: Sequence[RemovalBackend | str],
                              e: EvaluationFunction) -> list[DependenceReport]:
    """How well each audited feature can be predicted from the others, per transform.

    The audited feature is the forest's response (regression); the other
    features are left as they are ("identity") or transformed with respect
    to it. Distortion is mic_approx between each original column and its
    transformed version.
    """
    reg = EvaluationFunction(TaskKind.REGRESSION, e.config, e.seed.child("diagnose"))
    backends = [b if isinstance(b, RemovalBackend) else RemovalBackend(BackendKind(b))
                for b in backends]
    out = []
    for name in features_to_audit:
        i = d.index_of(name)
        others = [n_ for j, n_ in enumerate(d.feature_names) if j != i]
        original = np.delete(d.features, i, axis=1)
        target = d.features[:, i]
        raw = {"identity": reg.raw(original, target, others)}
        distortion = {}
        for b in backends:
            s_star = s_star_matrix(d.features, i, b)
            raw[b.kind.value] = reg.raw(s_star, target, others)
            distortion[b.kind.value] = {
                others[j]: mic_approx(original[:, j], s_star[:, j]) for j in range(len(others))}
        out.append(DependenceReport(name, {k: max(0.0, v) for k, v in raw.items()}, raw,
                                    distortion))
    return out
