"""Episode sampling and the distance/accuracy analysis protocols."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ._validation import ValidationError, check_distinct, check_finite, check_positive_int
from .tad import TaskSpec

GENERATOR = "numpy.random.Philox"

__all__ = [
    "GENERATOR",
    "make_rng",
    "EpisodeConfig",
    "BinStat",
    "GammaFit",
    "RegressionFit",
    "ScenarioReport",
    "sample_tasks",
    "bin_accuracy_curve",
    "fit_linear",
    "fit_gamma_moments",
    "select_top_fraction",
    "class_frequency_ranking",
    "prune_classes",
    "scenario_compare",
]


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator keyed by ``seed`` and optional stream indices."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream)])))


@dataclass(frozen=True)
class EpisodeConfig:
    ways: int = 5
    shots: int = 1
    queries: int = 15
    seed: int = 0

    def __post_init__(self):
        check_positive_int(self.ways, "ways", 2)
        check_positive_int(self.shots, "shots", 1)
        check_positive_int(self.queries, "queries", 1)
        if not isinstance(self.seed, (int, np.integer)) or not (0 <= self.seed < 2 ** 64):
            raise ValidationError(f"seed must be a 64-bit non-negative integer, got {self.seed!r}")


def sample_tasks(class_pool: Sequence[str], config: EpisodeConfig, n: int, *, stream: int = 0,
                 pool_tag: str = "", id_prefix: str = "task") -> list[TaskSpec]:
    """Draw ``n`` tasks of ``config.ways`` distinct categories, uniformly without replacement.

    The draw is a function of ``(config.seed, stream)`` only; different
    ``stream`` values give independent draws under the same seed.
    """
    pool = check_distinct([str(c) for c in class_pool], "category in class pool")
    n = check_positive_int(n, "n")
    if len(pool) < config.ways:
        raise ValidationError(f"class pool has {len(pool)} categories, fewer than ways={config.ways}")
    rng = make_rng(config.seed, stream)
    keys = rng.random((n, len(pool)))
    picks = np.argpartition(keys, config.ways - 1, axis=1)[:, :config.ways] if config.ways < len(pool) \
        else np.tile(np.arange(len(pool)), (n, 1))
    # argpartition leaves the selected block unordered; order by key for a uniform random order
    order = np.argsort(np.take_along_axis(keys, picks, axis=1), axis=1)
    picks = np.take_along_axis(picks, order, axis=1)
    width = len(str(n - 1))
    return [TaskSpec(f"{id_prefix}{i:0{width}d}", tuple(pool[j] for j in row), pool_tag)
            for i, row in enumerate(picks.tolist())]


@dataclass(frozen=True)
class BinStat:
    lo: float
    hi: float
    count: int
    mean_accuracy: float
    ci95: float
    sparse: bool = False

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def to_dict(self) -> dict:
        return asdict(self)


def bin_accuracy_curve(records: Sequence[tuple[float, float]], bin_width: float = 0.01,
                       min_count: int = 5) -> list[BinStat]:
    """Group (distance, accuracy) records into half-open bins starting at the smallest distance.

    Only non-empty bins are returned.  ``ci95`` is 1.96 times the sample
    standard deviation over sqrt(count) (zero for single-record bins); bins
    holding fewer than ``min_count`` records are flagged ``sparse``.
    """
    bin_width = check_finite(bin_width, "bin_width")
    if bin_width <= 0:
        raise ValidationError("bin_width must be positive")
    if len(records) == 0:
        raise ValidationError("no records to bin")
    arr = np.asarray(records, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or not np.all(np.isfinite(arr)):
        raise ValidationError("records must be finite (distance, accuracy) pairs")
    d, acc = arr[:, 0], arr[:, 1]
    start = float(d.min())
    idx = np.floor((d - start) / bin_width).astype(np.int64)
    out = []
    for b in np.unique(idx):
        sel = acc[idx == b]
        n = sel.size
        sd = float(sel.std(ddof=1)) if n > 1 else 0.0
        out.append(BinStat(lo=start + b * bin_width, hi=start + (b + 1) * bin_width, count=int(n),
                           mean_accuracy=float(sel.mean()), ci95=1.96 * sd / math.sqrt(n),
                           sparse=n < min_count))
    return out


@dataclass(frozen=True)
class RegressionFit:
    slope: float
    intercept: float
    pearson_r: float

    def to_dict(self) -> dict:
        return asdict(self)


def fit_linear(bins: Sequence[BinStat]) -> RegressionFit:
    """Count-weighted least squares of bin mean accuracy on bin midpoint.

    ``pearson_r`` is the weighted correlation of the same pairs, defined as 0
    when the accuracies have zero variance.
    """
    if len(bins) < 2:
        raise ValidationError("need at least two bins")
    x = np.array([b.midpoint for b in bins])
    y = np.array([b.mean_accuracy for b in bins])
    w = np.array([b.count for b in bins], dtype=np.float64)
    if np.all(w == 0):
        raise ValidationError("all bins are empty")
    w = w / w.sum()
    mx, my = float(w @ x), float(w @ y)
    sxx = float(w @ (x - mx) ** 2)
    syy = float(w @ (y - my) ** 2)
    sxy = float(w @ ((x - mx) * (y - my)))
    if sxx <= 0:
        raise ValidationError("bin midpoints are all equal")
    slope = sxy / sxx
    r = 0.0 if syy <= 0 else max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))
    return RegressionFit(slope=slope, intercept=my - slope * mx, pearson_r=r)


@dataclass(frozen=True)
class GammaFit:
    shape: float
    scale: float
    sample_mean: float
    sample_var: float

    def to_dict(self) -> dict:
        return asdict(self)


def fit_gamma_moments(samples) -> GammaFit:
    """Method-of-moments Gamma fit with the population (1/n) variance."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 2:
        raise ValidationError("need at least two samples")
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise ValidationError("samples must be finite and positive")
    mean = float(x.mean())
    var = float(x.var())
    if var <= 0:
        raise ValidationError("samples are constant")
    return GammaFit(shape=mean * mean / var, scale=var / mean, sample_mean=mean, sample_var=var)


def select_top_fraction(records: Sequence[tuple[str, float]], fraction: float) -> list[str]:
    """Ids of the ceil(fraction * n) records with the largest distance; ties by id ascending."""
    if not records:
        raise ValidationError("no records to select from")
    fraction = check_finite(fraction, "fraction")
    if not (0 < fraction <= 1):
        raise ValidationError(f"fraction must lie in (0, 1], got {fraction}")
    n = len(records)
    # guard against 0.05 * 2400 = 120.00000000000001 style round-up
    k = min(n, math.ceil(round(fraction * n, 9)))
    ranked = sorted(records, key=lambda r: (-float(r[1]), str(r[0])))
    return [str(r[0]) for r in ranked[:k]]


def class_frequency_ranking(tasks: Sequence[TaskSpec], class_pool: Sequence[str] | None = None
                            ) -> list[tuple[str, int]]:
    """Category occurrence counts across ``tasks``, descending, ties by id ascending.

    Categories of ``class_pool`` that never occur are listed with count 0.
    """
    if not tasks:
        raise ValidationError("no tasks to count")
    counts = Counter(c for t in tasks for c in t.category_ids)
    if class_pool is not None:
        for c in class_pool:
            counts.setdefault(str(c), 0)
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def prune_classes(class_pool: Sequence[str], tasks: Sequence[TaskSpec], top_k: int) -> list[str]:
    """Drop the ``top_k`` most frequent categories; survivors keep pool order."""
    top_k = check_positive_int(top_k, "top_k", 0)
    pool = [str(c) for c in class_pool]
    ranking = class_frequency_ranking(tasks, pool)
    dropped = {c for c, _ in ranking[:top_k]}
    return [c for c in pool if c not in dropped]


@dataclass(frozen=True)
class ScenarioReport:
    within_mean: float
    cross_mean: float
    gap: float
    within_fit: GammaFit | None
    cross_fit: GammaFit | None
    pooled_se: float

    def to_dict(self) -> dict:
        d = asdict(self)
        return d


def scenario_compare(within, cross) -> ScenarioReport:
    """Means, moment fits and mean gap (cross minus within) of two distance samples.

    Fits are ``None`` when a sample is degenerate.  ``pooled_se`` is the
    standard error of the mean difference.
    """
    w = np.asarray(within, dtype=np.float64).ravel()
    c = np.asarray(cross, dtype=np.float64).ravel()
    if w.size == 0 or c.size == 0:
        raise ValidationError("both distance samples must be non-empty")

    def fit(x):
        try:
            return fit_gamma_moments(x)
        except ValidationError:
            return None

    def sem2(x):
        return float(x.var(ddof=1)) / x.size if x.size > 1 else 0.0

    return ScenarioReport(within_mean=float(w.mean()), cross_mean=float(c.mean()),
                          gap=float(c.mean() - w.mean()), within_fit=fit(w), cross_fit=fit(c),
                          pooled_se=math.sqrt(sem2(w) + sem2(c)))
