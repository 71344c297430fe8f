"""Wall-clock scaling benchmark of the exact and approximate task distances."""

from __future__ import annotations

import statistics
import time
from dataclasses import asdict, dataclass
from typing import Sequence

from ._validation import ValidationError, check_positive_int
from .attributes import AttributeTable
from .episodes import EpisodeConfig, sample_tasks
from .tad import tad_approx, tad_orig

__all__ = ["BenchRecord", "run_bench"]


@dataclass(frozen=True)
class BenchRecord:
    variant: str
    ways: int
    repetitions: int
    seconds_per_call: float

    def to_dict(self) -> dict:
        return asdict(self)


def run_bench(table: AttributeTable, ways_list: Sequence[int] = (5, 10, 20), repetitions: int = 7,
              seed: int = 0, pairs: int = 20) -> list[BenchRecord]:
    """Median per-call time of ``tad_orig`` and ``tad_approx`` for each task size.

    For every size, ``pairs`` task pairs are sampled from the table's
    categories; each repetition times one pass over all pairs, serially.
    One warm-up pass is discarded.
    """
    repetitions = check_positive_int(repetitions, "repetitions", 5)
    pairs = check_positive_int(pairs, "pairs")
    cats = table.categories
    out = []
    for C in ways_list:
        C = check_positive_int(C, "ways", 2)
        if C > len(cats):
            raise ValidationError(f"table has {len(cats)} categories, cannot build {C}-way tasks")
        tasks = sample_tasks(cats, EpisodeConfig(ways=C, seed=seed), 2 * pairs, stream=C)
        task_pairs = list(zip(tasks[0::2], tasks[1::2]))
        for variant, fn in (("orig", tad_orig), ("approx", tad_approx)):
            for a, b in task_pairs:
                fn(a, b, table)
            times = []
            for _ in range(repetitions):
                t0 = time.perf_counter()
                for a, b in task_pairs:
                    fn(a, b, table)
                times.append((time.perf_counter() - t0) / len(task_pairs))
            out.append(BenchRecord(variant, C, repetitions, statistics.median(times)))
    return out
