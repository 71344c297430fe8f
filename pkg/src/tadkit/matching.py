"""Minimum-weight maximum matching on a dense bipartite cost matrix.

``hungarian_min_weight`` solves the assignment problem with the
shortest-augmenting-path Hungarian method (O(n^3)) on the matrix padded to
square with zero-cost dummies.  The optimal dual potentials identify the
"tight" edges (zero reduced cost); every optimal matching uses only tight
edges, so the lexicographically smallest optimal pair list is found by a
greedy search over the tight subgraph.  That search only runs when the
tight subgraph admits more than one perfect matching.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._validation import InfeasibleError, ValidationError

BRUTE_FORCE_CAP = 8

__all__ = ["Matching", "check_cost_matrix", "hungarian_min_weight", "brute_force_min_weight", "BRUTE_FORCE_CAP"]


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[int, int], ...]
    total_weight: float

    def to_dict(self) -> dict:
        return {"pairs": [list(p) for p in self.pairs], "total_weight": self.total_weight}


def check_cost_matrix(cost) -> np.ndarray:
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.size == 0:
        raise ValidationError(f"cost matrix must be a non-empty 2-D array, got shape {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise ValidationError("cost matrix has non-finite entries")
    if np.any(cost < 0):
        raise ValidationError("cost matrix has negative entries")
    return cost


def _weight(cost_rows: list, pairs) -> float:
    # row order, left to right: the same float sum the brute-force oracle computes
    total = 0.0
    for r, c in pairs:
        total += cost_rows[r][c]
    return total


def _assign(a: list[list[float]], n: int):
    """Hungarian method on an n x n list matrix.

    Returns (row_to_col, u, v) with u, v the dual potentials: reduced costs
    a[i][j] - u[i] - v[j] are >= 0 and zero on the returned matching.
    """
    inf = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)      # p[j]: row (1-based) matched to column j; column 0 is the virtual root
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            row = a[i0 - 1]
            ui0 = u[i0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = row[j - 1] - ui0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    row_to_col = [0] * n
    for j in range(1, n + 1):
        row_to_col[p[j] - 1] = j - 1
    return row_to_col, u[1:], v[1:]


def _has_perfect_matching(adj: list[list[int]], n: int, fixed_rows: int, used_cols: set) -> bool:
    """Kuhn's augmenting paths on rows ``fixed_rows..n-1`` avoiding ``used_cols``."""
    match_col = {}

    def augment(r, seen):
        for c in adj[r]:
            if c in used_cols or c in seen:
                continue
            seen.add(c)
            if c not in match_col or augment(match_col[c], seen):
                match_col[c] = r
                return True
        return False

    for r in range(fixed_rows, n):
        if not augment(r, set()):
            return False
    return True


def _lexicographic(adj: list[list[int]], n: int, rows: int, cols: int) -> list[int]:
    """Lexicographically smallest perfect matching of the tight graph, real rows first.

    Dummy columns (index >= cols) sort after every real column so that a
    real row is matched to a real column whenever an optimum allows it.
    """
    used: set = set()
    choice = []
    for r in range(n):
        for c in sorted(adj[r]):
            if c in used:
                continue
            used.add(c)
            if _has_perfect_matching(adj, n, r + 1, used):
                choice.append(c)
                break
            used.discard(c)
        else:  # pragma: no cover - a perfect matching always exists
            raise RuntimeError("tight graph lost its perfect matching")
    return choice


def hungarian_min_weight(cost, tie_tol: float = 1e-12) -> Matching:
    """Minimum-weight maximum matching of a rectangular cost matrix.

    Exactly ``min(rows, cols)`` pairs are returned, sorted by row.  Among
    optimal matchings the lexicographically smallest pair list wins; edges
    whose reduced cost is within ``tie_tol * max(1, max|cost|)`` of zero
    count as tight.
    """
    cost = check_cost_matrix(cost)
    rows, cols = cost.shape
    n = max(rows, cols)
    if rows != cols:
        padded = np.zeros((n, n))
        padded[:rows, :cols] = cost
    else:
        padded = cost
    a = padded.tolist()
    row_to_col, u, v = _assign(a, n)

    tol = tie_tol * max(1.0, float(np.max(cost)))
    reduced = padded - np.asarray(u)[:, None] - np.asarray(v)[None, :]
    tight = reduced <= tol
    if int(tight.sum()) > n:
        adj = [np.flatnonzero(tight[r]).tolist() for r in range(n)]
        row_to_col = _lexicographic(adj, n, rows, cols)

    pairs = tuple((r, c) for r, c in enumerate(row_to_col) if r < rows and c < cols)
    return Matching(pairs, _weight(cost.tolist(), pairs))


@functools.lru_cache(maxsize=64)
def _injections(k: int, n: int) -> np.ndarray:
    """All k-permutations of range(n), in lexicographic order, as a read-only array."""
    arr = np.array(list(itertools.permutations(range(n), k)), dtype=np.intp).reshape(-1, k)
    arr.setflags(write=False)
    return arr


def brute_force_min_weight(cost, tie_tol: float = 1e-12) -> Matching:
    """Exhaustive search over all injections of the smaller side (test oracle).

    Totals within ``tie_tol * max(1, max cost)`` of the minimum count as tied
    (equal real sums may round differently); among those the lexicographically
    smallest sorted pair list wins.
    """
    cost = check_cost_matrix(cost)
    rows, cols = cost.shape
    k = min(rows, cols)
    if k > BRUTE_FORCE_CAP:
        raise InfeasibleError(f"brute force is capped at min side {BRUTE_FORCE_CAP}, got {k}")
    wide = rows <= cols
    perms = _injections(k, cols if wide else rows)
    # accumulate in row order so totals match _weight bit for bit
    totals = np.zeros(perms.shape[0])
    if wide:
        for r in range(rows):
            totals += cost[r, perms[:, r]]
    else:
        order = np.argsort(perms, axis=1, kind="stable")
        for j in range(k):
            c = order[:, j]
            totals += cost[perms[np.arange(perms.shape[0]), c], c]
    cutoff = totals.min() + tie_tol * max(1.0, float(cost.max()))
    tied = np.flatnonzero(totals <= cutoff)
    if wide:
        # permutations are generated in lexicographic order, which is pair-list order here
        best = tuple(zip(range(rows), perms[tied[0]].tolist()))
    else:
        best = min(tuple(sorted(zip(perms[i].tolist(), range(cols)))) for i in tied)
    return Matching(best, _weight(cost.tolist(), best))
