"""Evaluation harness: correlation reports, subset-size stability, histograms.

Everything here is deterministic: subset draws come from a hierarchical
seed (one stream per size and repeat index), and all writers format floats
via repr so rerunning a command reproduces its output files byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .core import ScoreSeries, pearson
from .errors import SizeTooLargeError, ZeroVarianceError


def config_digest(config: dict | None) -> str:
    """Stable hex digest of a configuration mapping."""
    payload = json.dumps(config or {}, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class EvalReport:
    pearson: float
    n: int
    method_tag: str
    config_digest: str

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("a correlation report needs n >= 2")


@dataclass
class StabilityCurve:
    sizes: list[int]
    mean_r: list[float]
    std_r: list[float]
    skipped: list[int]
    seeds: int

    def __post_init__(self):
        if not (len(self.sizes) == len(self.mean_r) == len(self.std_r) == len(self.skipped)):
            raise ValueError("curve columns must have equal length")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ValueError("sizes must be strictly increasing")


def evaluate(
    pred: ScoreSeries,
    gold: ScoreSeries,
    method_tag: str = "pearson",
    config: dict | None = None,
) -> EvalReport:
    """Signed Pearson correlation of predictions against gold labels.

    The sign is reported as computed — scores that track quality correlate
    positively with direct assessments and negatively with HTER, and the
    harness never flips it.
    """
    r = pearson(np.asarray(pred.values), np.asarray(gold.values))
    return EvalReport(
        pearson=r,
        n=len(pred.values),
        method_tag=method_tag,
        config_digest=config_digest(config),
    )


def size_stability(
    pred: ScoreSeries,
    gold: ScoreSeries,
    sizes: list[int],
    num_seeds: int = 50,
    seed: int = 0,
) -> StabilityCurve:
    """Pearson spread across random subsets of each requested size.

    For each size, ``num_seeds`` subsets are drawn uniformly without
    replacement, each from its own seed stream; zero-variance subsets are
    skipped and counted.  The full-dataset size has a single possible
    subset, so its std is exactly 0 and its mean the full-data Pearson.
    """
    x = np.asarray(pred.values, dtype=np.float64)
    y = np.asarray(gold.values, dtype=np.float64)
    n = len(x)
    if len(y) != n:
        raise ValueError("prediction and gold series differ in length")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be strictly increasing")
    if num_seeds < 1:
        raise ValueError("num_seeds must be >= 1")
    mean_r: list[float] = []
    std_r: list[float] = []
    skipped: list[int] = []
    for size in sizes:
        if size > n:
            raise SizeTooLargeError(f"subset size {size} exceeds dataset size {n}")
        if size < 2:
            raise ValueError("subset sizes below 2 cannot yield a correlation")
        if size == n:
            mean_r.append(pearson(x, y))
            std_r.append(0.0)
            skipped.append(0)
            continue
        values = []
        misses = 0
        for k in range(num_seeds):
            rng = np.random.default_rng(np.random.SeedSequence([seed, size, k]))
            idx = np.sort(rng.choice(n, size=size, replace=False))
            try:
                values.append(pearson(x[idx], y[idx]))
            except ZeroVarianceError:
                misses += 1
        mean_r.append(float(np.mean(values)) if values else float("nan"))
        std_r.append(float(np.std(values)) if values else float("nan"))
        skipped.append(misses)
    return StabilityCurve(
        sizes=list(sizes), mean_r=mean_r, std_r=std_r, skipped=skipped, seeds=num_seeds
    )


def score_distribution(scores, bins: int) -> np.ndarray:
    """Counts over equal-width bins spanning [0, 1]; values above 1 land in
    the top bin (and below 0 in the bottom one), so counts always sum to n."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    s = np.asarray(scores, dtype=np.float64)
    idx = np.clip(np.floor(s * bins).astype(int), 0, bins - 1)
    counts = np.bincount(idx, minlength=bins)
    return counts


# --- report writers --------------------------------------------------------

def report_to_csv(report: EvalReport) -> str:
    return (
        "pearson,n,method,config_digest\n"
        f"{report.pearson!r},{report.n},{report.method_tag},{report.config_digest}\n"
    )


def format_report(report: EvalReport) -> str:
    return (
        f"method:        {report.method_tag}\n"
        f"n:             {report.n}\n"
        f"pearson:       {report.pearson!r}\n"
        f"config digest: {report.config_digest}\n"
    )


def curve_to_csv(curve: StabilityCurve) -> str:
    lines = ["size,mean_r,std_r,skipped"]
    for size, mean, std, miss in zip(curve.sizes, curve.mean_r, curve.std_r, curve.skipped):
        lines.append(f"{size},{mean!r},{std!r},{miss}")
    return "\n".join(lines) + "\n"


def format_curve(curve: StabilityCurve) -> str:
    lines = [f"subsets per size: {curve.seeds}"]
    for size, mean, std, miss in zip(curve.sizes, curve.mean_r, curve.std_r, curve.skipped):
        note = f" ({miss} skipped)" if miss else ""
        lines.append(f"size {size:>7}: mean r {mean!r}, std {std!r}{note}")
    return "\n".join(lines) + "\n"


def histogram_to_csv(counts: np.ndarray, bins: int) -> str:
    lines = ["bin_low,bin_high,count"]
    for i, c in enumerate(counts):
        lines.append(f"{i / bins!r},{(i + 1) / bins!r},{int(c)}")
    return "\n".join(lines) + "\n"
