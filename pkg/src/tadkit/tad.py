"""Task Attribute Distance between few-shot tasks.

The exact form matches the two tasks' categories with a minimum-weight
maximum matching on category distances and averages the matched edges.  The
approximate form compares the category-summed attribute distributions of
the two tasks directly and needs no matching.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import InfeasibleError, ValidationError, check_distinct
from .attributes import AttributeTable
from .distance import category_distance_flat
from .matching import Matching, hungarian_min_weight

VARIANTS = ("orig", "approx")

__all__ = [
    "TaskSpec",
    "TadResult",
    "build_cost_matrix",
    "tad_orig",
    "tad_approx",
    "task_sums",
    "avg_distance_to_pool",
    "distance_matrix",
    "TaskAttributeDistance",
]


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    category_ids: tuple[str, ...]
    pool_tag: str = ""

    def __post_init__(self):
        cats = tuple(str(c) for c in self.category_ids)
        if not cats:
            raise ValidationError(f"task {self.task_id!r} has no categories")
        check_distinct(cats, f"category in task {self.task_id!r}")
        object.__setattr__(self, "category_ids", cats)

    @property
    def ways(self) -> int:
        return len(self.category_ids)

    def to_dict(self) -> dict:
        return {"id": self.task_id, "categories": list(self.category_ids), "pool": self.pool_tag}

    @classmethod
    def from_dict(cls, data) -> "TaskSpec":
        try:
            return cls(str(data["id"]), tuple(data["categories"]), str(data.get("pool", "")))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed task record: {exc}") from None


@dataclass(frozen=True)
class TadResult:
    orig: float | None = None
    approx: float | None = None
    matching: Matching | None = None
    per_edge: tuple[tuple[tuple[str, str], float], ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "orig": self.orig,
            "approx": self.approx,
            "matching": None if self.matching is None else self.matching.to_dict(),
            "per_edge": [{"a": a, "b": b, "d": d} for (a, b), d in self.per_edge],
        }


def _tables(table: AttributeTable, table_b: AttributeTable | None):
    table_b = table if table_b is None else table_b
    if table_b.schema != table.schema:
        raise ValidationError("task tables use different attribute schemas")
    return table, table_b


def build_cost_matrix(task_a: TaskSpec, task_b: TaskSpec, table: AttributeTable,
                      table_b: AttributeTable | None = None) -> np.ndarray:
    """Category distances, rows for ``task_a`` categories and columns for ``task_b``.

    ``table`` resolves ``task_a``'s categories and ``table_b`` (default:
    ``table``) resolves ``task_b``'s.
    """
    table, table_b = _tables(table, table_b)
    return category_distance_flat(table.stack(task_a.category_ids), table_b.stack(task_b.category_ids),
                                  table.schema.n_attributes)


def tad_orig(task_a: TaskSpec, task_b: TaskSpec, table: AttributeTable,
             table_b: AttributeTable | None = None) -> TadResult:
    """Mean category distance over a minimum-weight maximum matching (|M| = min ways)."""
    cost = build_cost_matrix(task_a, task_b, table, table_b)
    m = hungarian_min_weight(cost)
    per_edge = tuple(((task_a.category_ids[r], task_b.category_ids[c]), float(cost[r, c])) for r, c in m.pairs)
    value = math.fsum(d for _, d in per_edge) / len(per_edge)
    return TadResult(orig=value, matching=m, per_edge=per_edge)


def task_sums(tasks: Sequence[TaskSpec], table: AttributeTable) -> np.ndarray:
    """Category-summed flat profiles, one row per task."""
    if not tasks:
        return np.empty((0, table.schema.n_values))
    ways = {t.ways for t in tasks}
    if len(ways) == 1:
        idx = np.array([table.rows(t.category_ids) for t in tasks])
        return table.matrix[idx].sum(axis=1)
    return np.array([table.stack(t.category_ids).sum(axis=0) for t in tasks])


def _approx_block(sa: np.ndarray, sb: np.ndarray, scale: float) -> np.ndarray:
    return np.abs(sa[:, None, :] - sb[None, :, :]).sum(axis=-1) * scale


def _check_equal_ways(ways_a: int, ways_b: int):
    if ways_a != ways_b:
        raise InfeasibleError(f"approximate distance needs equal task sizes, got {ways_a} and {ways_b} ways")


def tad_approx(task_a: TaskSpec, task_b: TaskSpec, table: AttributeTable,
               table_b: AttributeTable | None = None) -> float:
    """(1/2LC) * sum over attributes and values of |sum_k P_a[v] - sum_t P_b[v]|."""
    table, table_b = _tables(table, table_b)
    _check_equal_ways(task_a.ways, task_b.ways)
    sa = table.stack(task_a.category_ids).sum(axis=0)
    sb = table_b.stack(task_b.category_ids).sum(axis=0)
    scale = 1.0 / (2.0 * table.schema.n_attributes * task_a.ways)
    return float(_approx_block(sa[None, :], sb[None, :], scale)[0, 0])


def _check_variant(variant: str):
    if variant not in VARIANTS:
        raise ValidationError(f"variant must be one of {VARIANTS}, got {variant!r}")


def avg_distance_to_pool(novel: TaskSpec, pool: Sequence[TaskSpec], table: AttributeTable,
                         table_b: AttributeTable | None = None, variant: str = "approx") -> float:
    """Mean distance from each pool task to ``novel``, summed in pool order.

    ``table`` resolves pool categories, ``table_b`` (default ``table``) the
    novel task's.
    """
    if not pool:
        raise ValidationError("pool is empty")
    return float(distance_matrix([novel], pool, table, table_b, variant, reduce="mean")[0])


_BLOCK_ELEMENTS = 1 << 22


def distance_matrix(novel_tasks: Sequence[TaskSpec], pool: Sequence[TaskSpec], table: AttributeTable,
                    table_b: AttributeTable | None = None, variant: str = "approx", *,
                    n_jobs: int | None = None, reduce: str | None = None) -> np.ndarray:
    """Distances with entry (j, i) = distance(pool[i], novel_tasks[j]).

    ``table`` resolves pool categories and ``table_b`` (default ``table``)
    novel ones.  Entries are computed independently, so the output does not
    depend on ``n_jobs``.  ``reduce="mean"`` returns per-novel-task means
    instead of the full matrix.
    """
    _check_variant(variant)
    if reduce not in (None, "mean"):
        raise ValidationError(f"reduce must be None or 'mean', got {reduce!r}")
    if not pool:
        raise ValidationError("pool is empty")
    table, table_b = _tables(table, table_b)
    novel_tasks = list(novel_tasks)
    n_novel, n_pool = len(novel_tasks), len(pool)

    if variant == "approx":
        ways = {t.ways for t in pool} | {t.ways for t in novel_tasks}
        if len(ways) > 1:
            raise InfeasibleError(f"approximate distance needs equal task sizes, got ways {sorted(ways)}")
        C = ways.pop()
        scale = 1.0 / (2.0 * table.schema.n_attributes * C)
        sp = task_sums(pool, table)
        sn = task_sums(novel_tasks, table_b)
        V = sp.shape[1]
        pool_chunk = max(1, min(n_pool, _BLOCK_ELEMENTS // max(V, 1)))
        row_chunk = max(1, _BLOCK_ELEMENTS // (pool_chunk * max(V, 1)))

        def rows(lo: int, hi: int) -> np.ndarray:
            out = np.empty((hi - lo, n_pool))
            for p0 in range(0, n_pool, pool_chunk):
                out[:, p0:p0 + pool_chunk] = _approx_block(sn[lo:hi], sp[p0:p0 + pool_chunk], scale)
            return out
    else:
        def rows(lo: int, hi: int) -> np.ndarray:
            out = np.empty((hi - lo, n_pool))
            for j in range(lo, hi):
                for i, t in enumerate(pool):
                    out[j - lo, i] = tad_orig(t, novel_tasks[j], table, table_b).orig
            return out
        row_chunk = max(1, 256 // max(1, n_pool))

    def block(lo: int):
        hi = min(lo + row_chunk, n_novel)
        m = rows(lo, hi)
        if reduce == "mean":
            # sequential sum in pool order, identical for every chunking
            acc = np.zeros(hi - lo)
            for i in range(n_pool):
                acc += m[:, i]
            return acc / n_pool
        return m

    starts = range(0, n_novel, row_chunk)
    if n_jobs is not None and n_jobs != 1 and n_novel > row_chunk:
        workers = None if n_jobs < 0 else n_jobs
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(block, starts))
    else:
        parts = [block(lo) for lo in starts]
    if not parts:
        return np.empty((0,) if reduce == "mean" else (0, n_pool))
    return np.concatenate(parts, axis=0)


class TaskAttributeDistance(TransformerMixin, BaseEstimator):
    """Distances from novel tasks to a fitted pool of training tasks.

    Parameters
    ----------
    table : AttributeTable
        Resolves the training-pool categories.
    novel_table : AttributeTable, optional
        Resolves novel-task categories; defaults to ``table``.
    variant : {"approx", "orig"}
    n_jobs : int, optional
        Threads for batch evaluation; results do not depend on it.

    ``fit(tasks)`` stores the pool; ``transform(tasks)`` returns the
    (n_novel, n_pool) distance matrix and ``average_distance(tasks)`` the
    per-task pool mean.
    """

    def __init__(self, table: AttributeTable | None = None, novel_table: AttributeTable | None = None,
                 variant: str = "approx", n_jobs: int | None = None):
        self.table = table
        self.novel_table = novel_table
        self.variant = variant
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        if self.table is None:
            raise ValidationError("TaskAttributeDistance needs an attribute table")
        _check_variant(self.variant)
        pool = [t if isinstance(t, TaskSpec) else TaskSpec.from_dict(t) for t in X]
        if not pool:
            raise ValidationError("pool is empty")
        for t in pool:
            self.table.rows(t.category_ids)
        self.pool_ = pool
        self.n_pool_ = len(pool)
        return self

    def _novel(self, X):
        return [t if isinstance(t, TaskSpec) else TaskSpec.from_dict(t) for t in X]

    def transform(self, X):
        check_is_fitted(self, "pool_")
        return distance_matrix(self._novel(X), self.pool_, self.table, self.novel_table, self.variant,
                               n_jobs=self.n_jobs)

    def average_distance(self, X) -> np.ndarray:
        check_is_fitted(self, "pool_")
        return distance_matrix(self._novel(X), self.pool_, self.table, self.novel_table, self.variant,
                               n_jobs=self.n_jobs, reduce="mean")
