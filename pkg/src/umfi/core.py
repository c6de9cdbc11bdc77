"""Datasets, feature subsets, importance reports and seed streams."""

from __future__ import annotations

import csv
import enum
import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np


class UmfiError(Exception):
    """Base class for data and validation errors."""


class MissingColumn(UmfiError):
    pass


class NonNumeric(UmfiError):
    pass


class NonFinite(UmfiError):
    pass


class TooFewRows(UmfiError):
    pass


class IndexOutOfRange(UmfiError):
    pass


class TaskKind(str, enum.Enum):
    REGRESSION = "reg"
    CLASSIFICATION = "cls"

    @classmethod
    def parse(cls, value: str | TaskKind) -> TaskKind:
        if isinstance(value, TaskKind):
            return value
        aliases = {"reg": cls.REGRESSION, "regression": cls.REGRESSION,
                   "cls": cls.CLASSIFICATION, "classification": cls.CLASSIFICATION}
        try:
            return aliases[value.lower()]
        except KeyError:
            raise ValueError(f"unknown task kind {value!r}") from None


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable feature matrix plus response.

    Classification labels are re-encoded to ``0..k-1`` on construction;
    the original label values are kept in ``classes``.
    """

    features: np.ndarray
    feature_names: tuple[str, ...]
    response: np.ndarray
    task: TaskKind
    classes: tuple | None = None

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64, copy=True)
        if X.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        n, p = X.shape
        if n < 2:
            raise TooFewRows(f"need at least 2 rows, got {n}")
        if p < 1:
            raise ValueError("need at least one feature")
        if not np.all(np.isfinite(X)):
            raise NonFinite("feature matrix contains NaN or inf")
        names = tuple(str(s) for s in self.feature_names)
        if len(names) != p:
            raise ValueError(f"{len(names)} names for {p} columns")
        if len(set(names)) != p or any(not s for s in names):
            raise ValueError("feature names must be unique and non-empty")
        task = TaskKind.parse(self.task)
        y = np.asarray(self.response)
        if y.shape != (n,):
            raise ValueError(f"response must have length {n}")
        classes = self.classes
        if task is TaskKind.REGRESSION:
            y = np.array(y, dtype=np.float64, copy=True)
            if not np.all(np.isfinite(y)):
                raise NonFinite("response contains NaN or inf")
        else:
            if classes is None:
                uniq, y = np.unique(y, return_inverse=True)
                classes = tuple(uniq.tolist())
            y = np.asarray(y, dtype=np.int64).copy()
            k = int(y.max()) + 1
            if k < 2 or y.min() < 0 or len(np.unique(y)) != k:
                raise ValueError("classification labels must form 0..k-1 with k >= 2")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "response", y)
        object.__setattr__(self, "task", task)
        object.__setattr__(self, "classes", classes)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def index_of(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise MissingColumn(f"no feature named {name!r}") from None

    def column(self, name_or_index: str | int) -> np.ndarray:
        j = name_or_index if isinstance(name_or_index, int) else self.index_of(name_or_index)
        return self.features[:, j]

    def select(self, indices: Sequence[int]) -> Dataset:
        """Dataset restricted to the given feature columns (response kept)."""
        s = FeatureSubset.of(indices, self.p)
        return Dataset(self.features[:, list(s.indices)],
                       [self.feature_names[i] for i in s.indices],
                       self.response, self.task, self.classes)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.feature_names == other.feature_names
                and self.task == other.task
                and np.array_equal(self.features, other.features)
                and np.array_equal(self.response, other.response))

    __hash__ = None


@dataclass(frozen=True)
class FeatureSubset:
    indices: tuple[int, ...]

    @classmethod
    def of(cls, indices, p: int) -> FeatureSubset:
        idx = tuple(sorted({int(i) for i in indices}))
        if any(i < 0 or i >= p for i in idx):
            raise IndexOutOfRange(f"subset {idx} out of range for p={p}")
        return cls(idx)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


def subset_matrix(d: Dataset, s: FeatureSubset | Sequence[int]) -> np.ndarray:
    """Columns of ``d`` listed in ``s``, in index order; ``n x 0`` when empty."""
    if not isinstance(s, FeatureSubset):
        s = FeatureSubset.of(s, d.p)
    elif any(i < 0 or i >= d.p for i in s.indices):
        raise IndexOutOfRange(f"subset {s.indices} out of range for p={d.p}")
    return d.features[:, list(s.indices)] if s.indices else np.empty((d.n, 0))


def load_csv(path: str | os.PathLike, response_column: str,
             task: TaskKind | str) -> Dataset:
    task = TaskKind.parse(task)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise TooFewRows(f"{path}: empty file")
    header, body = rows[0], [r for r in rows[1:] if r]
    if response_column not in header:
        raise MissingColumn(f"{path}: no column named {response_column!r}")
    r = header.index(response_column)
    names = [h for j, h in enumerate(header) if j != r]
    if len(body) < 2:
        raise TooFewRows(f"{path}: need at least 2 data rows, got {len(body)}")
    X = np.empty((len(body), len(names)))
    labels = []
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise NonNumeric(f"{path}:{i}: expected {len(header)} cells, got {len(row)}")
        vals = [c for j, c in enumerate(row) if j != r]
        try:
            X[i - 2] = [float(v) for v in vals]
        except ValueError:
            raise NonNumeric(f"{path}:{i}: non-numeric feature cell") from None
        labels.append(row[r].strip())
    if not np.all(np.isfinite(X)):
        raise NonFinite(f"{path}: NaN or inf in feature columns")
    if task is TaskKind.REGRESSION:
        try:
            y = np.array([float(v) for v in labels])
        except ValueError:
            raise NonNumeric(f"{path}: non-numeric response") from None
        if not np.all(np.isfinite(y)):
            raise NonFinite(f"{path}: NaN or inf in response")
    else:
        if any(v == "" for v in labels):
            raise NonNumeric(f"{path}: blank class label")
        y = _parse_labels(labels)
    return Dataset(X, names, y, task)


def _parse_labels(labels: list[str]) -> np.ndarray:
    try:
        vals = np.array([float(v) for v in labels])
    except ValueError:
        return np.array(labels, dtype=object)
    if np.all(vals == np.round(vals)):
        return vals.astype(np.int64)
    return vals


def save_csv(d: Dataset, path: str | os.PathLike, response_column: str = "y") -> None:
    """Write ``d`` with the response as the last column (full float precision)."""
    y = d.response
    if d.task is TaskKind.CLASSIFICATION and d.classes is not None:
        y = np.array(d.classes, dtype=object)[y]
    header = list(d.feature_names) + [response_column]
    rows = [[repr(float(v)) for v in d.features[i]] + [_fmt(y[i])] for i in range(d.n)]
    write_csv_atomic(path, header, rows)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv_atomic(path, header: Sequence[str], rows) -> None:
    def dump(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    _atomic_write(path, dump, newline="")


def write_json_atomic(path, obj) -> None:
    _atomic_write(path, lambda fh: (json.dump(obj, fh, indent=2, sort_keys=True), fh.write("\n")))


def _atomic_write(path, dump, newline=None) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline=newline) as fh:
            dump(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _key_int(key) -> int:
    if isinstance(key, (int, np.integer)) and key >= 0:
        return int(key)
    digest = hashlib.blake2b(repr(key).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class SeedSpec:
    """Master seed from which every random stream is derived by key.

    A stream depends only on the master seed and its key path, never on the
    order in which streams are requested.
    """

    master_seed: int = 42
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    def child(self, *keys) -> SeedSpec:
        return SeedSpec(self.master_seed, self.path + tuple(_key_int(k) for k in keys))

    def seed_sequence(self, *keys) -> np.random.SeedSequence:
        return np.random.SeedSequence(int(self.master_seed),
                                      spawn_key=self.child(*keys).path)

    def rng(self, *keys) -> np.random.Generator:
        return np.random.default_rng(self.seed_sequence(*keys))

    def words(self, count: int, *keys) -> np.ndarray:
        """``count`` uint32 seeds, e.g. one per tree."""
        return self.seed_sequence(*keys).generate_state(count, dtype=np.uint32)


class Method(str, enum.Enum):
    MCI_EXACT = "MCI_EXACT"
    MCI_K3 = "MCI_K3"
    UMFI_LR = "UMFI_LR"
    UMFI_OT = "UMFI_OT"


def normalize_shares(scores: Mapping[str, float]) -> dict[str, float]:
    """Scores as fractions of their total; negatives count as zero."""
    clipped = {k: max(float(v), 0.0) for k, v in scores.items()}
    total = math.fsum(clipped.values())
    if total <= 0:
        return {k: 0.0 for k in clipped}
    return {k: v / total for k, v in clipped.items()}


@dataclass
class ImportanceReport:
    method: Method
    scores: dict[str, float]
    raw_scores: dict[str, float]
    trainings: int
    wall_time: float
    seed: int
    metadata: dict = field(default_factory=dict)

    @property
    def shares(self) -> dict[str, float]:
        return normalize_shares(self.scores)

    def ranking(self) -> list[str]:
        return sorted(self.scores, key=lambda k: (-self.scores[k], k))

    def to_json(self, include_timing: bool = True) -> dict:
        out = {
            "method": self.method.value,
            "scores": dict(self.scores),
            "raw_scores": dict(self.raw_scores),
            "shares": self.shares,
            "trainings": self.trainings,
            "seed": self.seed,
            "metadata": self.metadata,
        }
        out["wall_time_s"] = self.wall_time if include_timing else None
        return out
