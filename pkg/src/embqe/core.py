"""Deterministic numerical kernels shared by scoring, training and evaluation.

Embedding matrices are plain 2-D numpy arrays (one row per token).  Every
accumulation here runs in float64 regardless of the input dtype, and cosine
entries are clamped to [-1, 1] after computation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimMismatchError,
    EmptyInputError,
    LengthMismatchError,
    ZeroRowError,
    ZeroVarianceError,
)

ZERO_NORM_FLOOR = 1e-12


@dataclass
class ScoreSeries:
    """An ordered list of scores with an optional parallel list of gold labels."""

    values: list[float]
    labels: list[float] | None = None

    def __post_init__(self):
        if self.labels is not None and len(self.labels) != len(self.values):
            raise LengthMismatchError(
                f"{len(self.values)} scores but {len(self.labels)} labels"
            )

    def __len__(self) -> int:
        return len(self.values)


def l2_normalize_rows(matrix) -> np.ndarray:
    """Scale every row of ``matrix`` to unit L2 norm.

    Raises ZeroRowError for any row with norm below 1e-12.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise EmptyInputError(f"expected a 2-D matrix, got shape {m.shape}")
    norms = np.linalg.norm(m, axis=1)
    bad = np.flatnonzero(norms < ZERO_NORM_FLOOR)
    if bad.size:
        raise ZeroRowError(int(bad[0]))
    return m / norms[:, None]


def cosine_similarity_matrix(x, y) -> np.ndarray:
    """Pairwise cosine similarities between the rows of ``x`` and ``y``.

    Returns an (x.rows, y.rows) float64 matrix with entries clamped to
    [-1, 1].  Both inputs must share the same dimensionality.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2:
        raise EmptyInputError("similarity needs 2-D matrices")
    if x.shape[1] != y.shape[1]:
        raise DimMismatchError(f"dim {x.shape[1]} vs {y.shape[1]}")
    sim = l2_normalize_rows(x) @ l2_normalize_rows(y).T
    return np.clip(sim, -1.0, 1.0)


def pearson(a, b) -> float:
    """Sample Pearson correlation coefficient of two equal-length series.

    Uses the two-pass (mean then covariance) formula for robustness on
    near-constant series.  Raises ZeroVarianceError if either series is
    constant.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size != b.size:
        raise LengthMismatchError(f"{a.size} vs {b.size} values")
    if a.size < 2:
        raise LengthMismatchError("need at least 2 paired values")
    da = a - a.mean()
    db = b - b.mean()
    var_a = float(np.dot(da, da))
    var_b = float(np.dot(db, db))
    if var_a == 0.0 or var_b == 0.0:
        raise ZeroVarianceError("constant series has no defined correlation")
    r = float(np.dot(da, db)) / np.sqrt(var_a * var_b)
    return float(min(1.0, max(-1.0, r)))


def logsumexp(values) -> float:
    """log(sum(exp(values))), computed with max-shifting so large inputs
    never overflow."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise EmptyInputError("logsumexp of an empty list")
    m = float(v.max())
    return m + float(np.log(np.exp(v - m).sum()))
