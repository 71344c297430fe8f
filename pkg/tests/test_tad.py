import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from tadkit import (
    InfeasibleError,
    TaskAttributeDistance,
    TaskSpec,
    ValidationError,
    avg_distance_to_pool,
    build_cost_matrix,
    distance_matrix,
    tad_approx,
    tad_orig,
)
from tadkit.episodes import EpisodeConfig, sample_tasks

from conftest import binary_table, random_table


def T(tid, *cats):
    return TaskSpec(tid, cats)


def orig_oracle(a, b, table, table_b=None):
    """Minimum mean category distance over all injections, by enumeration."""
    table_b = table_b or table
    L = table.schema.n_attributes

    def d(x, y):
        return np.abs(table.stack([x])[0] - table_b.stack([y])[0]).sum() / (2 * L)

    small, large, flip = (a, b, False) if a.ways <= b.ways else (b, a, True)
    best = np.inf
    for perm in itertools.permutations(large.category_ids, small.ways):
        w = sum(d(y, x) if flip else d(x, y) for x, y in zip(small.category_ids, perm))
        best = min(best, w / small.ways)
    return best


def approx_oracle(a, b, table):
    """Loop form: per attribute and value, compare category sums."""
    L = table.schema.n_attributes
    total = 0.0
    for l in range(L):
        for v in range(table.schema.sizes[l]):
            sa = sum(table[c].distributions[l][v] for c in a.category_ids)
            sb = sum(table[c].distributions[l][v] for c in b.category_ids)
            total += abs(sa - sb)
    return total / (2 * L * a.ways)


# ------------------------------------------------------------------ worked examples

def test_cost_matrix_examples():
    table = binary_table([[0.9, 0.1], [0.6, 0.3]], ids=["k", "t"])
    a = T("a", "k", "t")
    M = build_cost_matrix(a, a, table)
    np.testing.assert_allclose(M, [[0, 0.25], [0.25, 0]], atol=1e-15)
    assert np.all(np.diag(M) == 0)
    assert build_cost_matrix(T("x", "k"), T("y", "t"), table).shape == (1, 1)


def test_unknown_category_is_named():
    table = binary_table([[0.5]], ids=["k"])
    with pytest.raises(ValidationError, match="nope"):
        build_cost_matrix(T("a", "k"), T("b", "nope"), table)


def test_crossing_example():
    table = binary_table([[1.0], [0.0], [0.0], [1.0]], ids=["a1", "a2", "b1", "b2"])
    a, b = T("A", "a1", "a2"), T("B", "b1", "b2")
    r = tad_orig(a, b, table)
    assert r.orig == 0
    assert set(r.per_edge) == {(("a1", "b2"), 0.0), (("a2", "b1"), 0.0)}
    assert tad_approx(a, b, table) == 0


def test_approx_strictly_below_orig():
    table = binary_table([[1.0], [0.0], [0.5], [0.5]], ids=["a1", "a2", "b1", "b2"])
    a, b = T("A", "a1", "a2"), T("B", "b1", "b2")
    assert tad_approx(a, b, table) == 0
    assert tad_orig(a, b, table).orig == 0.5


def test_identity_and_permutation(rng):
    table = random_table(rng, 6, [2, 3, 2])
    a = T("a", "k000", "k003", "k005")
    assert tad_orig(a, a, table).orig == 0
    assert tad_approx(a, a, table) == 0
    b = T("b", "k001", "k002", "k004")
    b_perm = T("b2", "k004", "k001", "k002")
    assert tad_orig(a, b, table).orig == pytest.approx(tad_orig(a, b_perm, table).orig, abs=1e-12)
    assert tad_approx(a, b, table) == pytest.approx(tad_approx(a, b_perm, table), abs=1e-12)


def test_unequal_ways():
    table = binary_table([[0.1], [0.5], [0.9]], ids=["x", "y", "z"])
    a, b = T("a", "x", "y"), T("b", "z")
    assert tad_orig(a, b, table).orig == pytest.approx(min(0.8, 0.4))
    with pytest.raises(InfeasibleError):
        tad_approx(a, b, table)
    with pytest.raises(InfeasibleError):
        distance_matrix([a], [b], table)


def test_pool_means():
    table = binary_table([[0.0], [0.1], [0.3]], ids=["n", "p1", "p2"])
    novel = T("novel", "n")
    assert avg_distance_to_pool(novel, [T("p", "p1")], table) == pytest.approx(0.1)
    assert avg_distance_to_pool(novel, [novel, novel], table) == 0
    pool = [T("p", "p1"), T("q", "p2")]
    for variant in ("orig", "approx"):
        assert avg_distance_to_pool(novel, pool, table, variant=variant) == pytest.approx(0.2, abs=1e-15)


def test_empty_pool_and_bad_variant():
    table = binary_table([[0.0]], ids=["n"])
    with pytest.raises(ValidationError):
        avg_distance_to_pool(T("a", "n"), [], table)
    with pytest.raises(ValidationError):
        distance_matrix([T("a", "n")], [T("a", "n")], table, variant="exact")


def test_separate_novel_table(rng):
    train = random_table(rng, 5, [2, 2], prefix="tr")
    novel = random_table(rng, 5, [2, 2], prefix="nv")
    a, b = T("a", "tr000", "tr001"), T("b", "nv003", "nv004")
    assert tad_orig(a, b, train, novel).orig == pytest.approx(orig_oracle(a, b, train, novel), abs=1e-12)
    D = distance_matrix([b], [a], train, novel, "orig")
    assert D[0, 0] == tad_orig(a, b, train, novel).orig


# --------------------------------------------------------------------- properties

def _random_pair(seed, max_ways=5):
    rng = np.random.default_rng(seed)
    table = random_table(rng, 10, list(rng.integers(2, 4, size=int(rng.integers(1, 4)))))
    ways = int(rng.integers(1, max_ways + 1))
    a = T("a", *rng.choice(table.categories, ways, replace=False))
    b = T("b", *rng.choice(table.categories, ways, replace=False))
    return table, a, b


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_orig_matches_enumeration(seed):
    table, a, b = _random_pair(seed)
    assert tad_orig(a, b, table).orig == pytest.approx(orig_oracle(a, b, table), abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_approx_matches_loop_form(seed):
    table, a, b = _random_pair(seed)
    assert tad_approx(a, b, table) == pytest.approx(approx_oracle(a, b, table), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_metric_properties(seed):
    table, a, b = _random_pair(seed)
    o_ab, o_ba = tad_orig(a, b, table).orig, tad_orig(b, a, table).orig
    x_ab, x_ba = tad_approx(a, b, table), tad_approx(b, a, table)
    assert abs(o_ab - o_ba) <= 1e-12 and abs(x_ab - x_ba) <= 1e-12
    assert 0 <= x_ab <= o_ab + 1e-12 <= 1 + 1e-12
    assert tad_orig(a, a, table).orig == 0


def test_distance_matrix_matches_pairwise(rng):
    table = random_table(rng, 12, [2, 3])
    pool = sample_tasks(table.categories, EpisodeConfig(ways=3, seed=1), 17)
    novel = sample_tasks(table.categories, EpisodeConfig(ways=3, seed=2), 5)
    for variant, fn in (("approx", tad_approx), ("orig", lambda a, b, t: tad_orig(a, b, t).orig)):
        D = distance_matrix(novel, pool, table, variant=variant)
        assert D.shape == (5, 17)
        for j, i in itertools.product(range(5), range(17)):
            assert D[j, i] == pytest.approx(fn(pool[i], novel[j], table), abs=1e-15)
        means = distance_matrix(novel, pool, table, variant=variant, reduce="mean")
        np.testing.assert_allclose(means, D.mean(axis=1), rtol=0, atol=1e-12)
        for j in range(5):
            assert means[j] == avg_distance_to_pool(novel[j], pool, table, variant=variant)


def test_parallel_equals_serial(monkeypatch, rng):
    import tadkit.tad as tad_mod

    # small blocks force many chunks through the thread pool
    monkeypatch.setattr(tad_mod, "_BLOCK_ELEMENTS", 64)
    table = random_table(rng, 20, [2] * 6)
    pool = sample_tasks(table.categories, EpisodeConfig(ways=5, seed=3), 300)
    novel = sample_tasks(table.categories, EpisodeConfig(ways=5, seed=4), 40)
    for variant in ("approx", "orig"):
        for reduce in (None, "mean"):
            serial = distance_matrix(novel, pool[:60], table, variant=variant, reduce=reduce)
            parallel = distance_matrix(novel, pool[:60], table, variant=variant, reduce=reduce, n_jobs=4)
            np.testing.assert_array_equal(serial, parallel)


def test_estimator(rng):
    table = random_table(rng, 10, [2, 2])
    pool = sample_tasks(table.categories, EpisodeConfig(ways=2, seed=0), 8)
    novel = sample_tasks(table.categories, EpisodeConfig(ways=2, seed=1), 3)
    est = TaskAttributeDistance(table=table, variant="orig")
    assert est.get_params()["variant"] == "orig"
    D = est.fit(pool).transform(novel)
    np.testing.assert_array_equal(D, distance_matrix(novel, pool, table, variant="orig"))
    np.testing.assert_array_equal(est.average_distance(novel),
                                  distance_matrix(novel, pool, table, variant="orig", reduce="mean"))
    assert est.fit([t.to_dict() for t in pool]).n_pool_ == 8
    assert clone(est).set_params(variant="approx").variant == "approx"
    with pytest.raises(ValidationError):
        TaskAttributeDistance().fit(pool)


def test_task_spec_roundtrip():
    t = TaskSpec("t1", ("a", "b"), "train")
    assert TaskSpec.from_dict(t.to_dict()) == t
    assert t.to_dict() == {"id": "t1", "categories": ["a", "b"], "pool": "train"}
    with pytest.raises(ValidationError):
        TaskSpec("t", ("a", "a"))
    with pytest.raises(ValidationError):
        TaskSpec.from_dict({"categories": ["a"]})
