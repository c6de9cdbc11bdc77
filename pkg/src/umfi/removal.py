"""Remove the dependence of features on a protected feature Z.

Two backends:

* optimal transport: each feature is pushed through its conditional CDF
  given Z's bin and then through the inverse marginal CDF, which makes it
  (approximately) independent of Z while keeping its marginal distribution;
* linear regression: each feature is replaced by its OLS residual on Z,
  but only when the slope is significant.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .core import Dataset, UmfiError


class LengthMismatch(UmfiError):
    pass


class BackendKind(str, enum.Enum):
    LINEAR_REGRESSION = "lr"
    OPTIMAL_TRANSPORT = "ot"


@dataclass(frozen=True)
class RemovalBackend:
    kind: BackendKind = BackendKind.OPTIMAL_TRANSPORT
    ot_bin_target: int = 100
    lr_alpha: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "kind", BackendKind(self.kind))
        if self.ot_bin_target < 2:
            raise ValueError("ot_bin_target must be >= 2")
        if not 0.0 < self.lr_alpha < 1.0:
            raise ValueError("lr_alpha must lie in (0, 1)")


@dataclass(frozen=True)
class ResidualModel:
    intercept: float
    slope: float
    slope_p_value: float
    applied: bool


def _check_pair(x, z):
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.ndim != 1 or x.shape != z.shape:
        raise LengthMismatch(f"X and Z must be equal-length vectors, got {x.shape} and {z.shape}")
    return x, z


def z_bins(z: np.ndarray, bin_target: int = 100) -> list[np.ndarray]:
    """Partition row indices into contiguous bins of Z-rank.

    Nominally ``max(1, n // bin_target)`` bins with the remainder spread over
    the leading ones. A boundary that would split a run of tied Z values is
    moved to the nearer edge of the run, so equal Z values always share a bin
    (constant Z gives a single bin).
    """
    n = len(z)
    order = np.argsort(z, kind="stable")
    zs = z[order]
    sizes = [len(b) for b in np.array_split(np.arange(n), max(1, n // bin_target))]
    cuts = []
    for b in np.cumsum(sizes)[:-1]:
        lo = int(np.searchsorted(zs, zs[b], side="left"))
        hi = int(np.searchsorted(zs, zs[b], side="right"))
        # snap to the nearer edge of the tie run containing row b
        for c in sorted((lo, hi), key=lambda c: abs(c - b)):
            if c - (cuts[-1] if cuts else 0) >= 2 and n - c >= 2:
                cuts.append(c)
                break
    return np.split(order, cuts)


def _midrank_positions(x: np.ndarray) -> np.ndarray:
    """(mid-rank - 0.5) / count for each entry: a CDF estimate strictly inside (0, 1)."""
    return (stats.rankdata(x, method="average") - 0.5) / len(x)


def marginal_quantile(x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse empirical CDF of ``x``, linear between order statistics, clamped to the range."""
    xs = np.sort(x)
    grid = (np.arange(len(xs)) + 0.5) / len(xs)
    return np.interp(u, grid, xs)


def ot_remove(x, z, cfg: RemovalBackend | None = None) -> np.ndarray:
    """Transport ``x`` to a version independent of ``z`` with the same marginal."""
    cfg = cfg or RemovalBackend(BackendKind.OPTIMAL_TRANSPORT)
    x, z = _check_pair(x, z)
    n = len(x)
    if n < 2:
        raise ValueError("need at least 2 rows")
    u = np.empty(n)
    for rows in z_bins(z, cfg.ot_bin_target):
        u[rows] = _midrank_positions(x[rows])
    return marginal_quantile(x, u)


def lr_remove(x, z, cfg: RemovalBackend | None = None) -> tuple[np.ndarray, ResidualModel]:
    """Residualize ``x`` on ``z`` when the OLS slope is significant at ``cfg.lr_alpha``."""
    cfg = cfg or RemovalBackend(BackendKind.LINEAR_REGRESSION)
    x, z = _check_pair(x, z)
    if len(x) < 3:
        raise ValueError("need at least 3 rows for the slope t-test")
    if np.ptp(z) == 0.0:
        return x.copy(), ResidualModel(float(x.mean()), 0.0, 1.0, False)
    fit = stats.linregress(z, x)
    p_value = float(fit.pvalue) if np.isfinite(fit.pvalue) else 1.0
    # recompute the coefficients from centred sums so residuals are orthogonal to z
    zc = z - z.mean()
    slope = float(np.dot(zc, x - x.mean()) / np.dot(zc, zc))
    intercept = float(x.mean() - slope * z.mean())
    if p_value < cfg.lr_alpha:
        resid = x - intercept - slope * z
        return resid, ResidualModel(intercept, slope, p_value, True)
    return x.copy(), ResidualModel(intercept, slope, p_value, False)


def transformed_names(d: Dataset, protected_index: int) -> list[str]:
    """Column names of S*: each remaining feature tagged with the protected one."""
    z = d.feature_names[protected_index]
    return [f"{name}|{z}" for j, name in enumerate(d.feature_names) if j != protected_index]


def build_s_star(d: Dataset, protected_index: int, backend: RemovalBackend) -> np.ndarray:
    """n x (p-1) matrix of the other features with Z's dependence removed.

    Only ``d.features`` is read; the response never enters the transform.
    """
    if not 0 <= protected_index < d.p:
        raise IndexError(f"protected index {protected_index} out of range")
    if d.p < 2:
        raise ValueError("need at least two features")
    return s_star_matrix(d.features, protected_index, backend)


def s_star_matrix(X: np.ndarray, protected_index: int, backend: RemovalBackend) -> np.ndarray:
    z = X[:, protected_index]
    cols = []
    for j in range(X.shape[1]):
        if j == protected_index:
            continue
        if backend.kind is BackendKind.OPTIMAL_TRANSPORT:
            cols.append(ot_remove(X[:, j], z, backend))
        else:
            cols.append(lr_remove(X[:, j], z, backend)[0])
    if not cols:
        return np.empty((X.shape[0], 0))
    return np.column_stack(cols)
