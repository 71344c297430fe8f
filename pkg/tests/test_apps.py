import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from tadkit import AttributeSchema, FeatureRecord, TaskSpec, ValidationError, induce_profiles, tad_approx, tad_orig
from tadkit.apps import (
    AttributePrototypeClassifier,
    InterventionConfig,
    SynthWorldConfig,
    attribute_bce_loss,
    calibrate_support,
    combined_loss,
    episode_loss,
    generate_synth_world,
    intervention_from_accuracies,
    make_episodes,
    prototype_classifier_eval,
    run_intervention,
    worst_k_accuracy,
)
from tadkit.episodes import EpisodeConfig, sample_tasks

from conftest import binary_table


@pytest.fixture(scope="module")
def world():
    return generate_synth_world(SynthWorldConfig(num_classes=20, n_attributes=12, noise_sigma=0.2,
                                                 samples_per_class=60, seed=3, num_train_classes=10,
                                                 transfer_gain=4))


# ------------------------------------------------------------------- synthetic world

def test_world_is_deterministic():
    cfg = SynthWorldConfig(num_classes=6, n_attributes=5, samples_per_class=4, seed=9)
    a, b = generate_synth_world(cfg), generate_synth_world(cfg)
    np.testing.assert_array_equal(a.X, b.X)
    assert a.table.allclose(b.table, atol=0)
    assert not np.array_equal(a.X, generate_synth_world(SynthWorldConfig(
        num_classes=6, n_attributes=5, samples_per_class=4, seed=10)).X)


def test_noiseless_world_recovers_table():
    w = generate_synth_world(SynthWorldConfig(num_classes=8, n_attributes=6, noise_sigma=0.0,
                                              samples_per_class=1000, seed=2))
    for c in w.classes:
        inst = w.X[w.instances_of(c)]
        np.testing.assert_array_equal(inst, np.tile(w.table[c].flat[1::2], (inst.shape[0], 1)))
    induced = induce_profiles(w.features, AttributeSchema.binary(6))
    assert induced.allclose(w.table, atol=0)


def test_world_split_and_domains():
    w = generate_synth_world(SynthWorldConfig(num_classes=10, n_attributes=4, samples_per_class=2,
                                              num_train_classes=6, domains=2, domain_bias=0.5))
    assert len(w.train_classes) == 6 and len(w.novel_classes) == 4
    assert w.classes_in_domain(0) == w.classes[:5]
    assert np.all((w.X >= 0) & (w.X <= 1))


@pytest.mark.parametrize("bad", [dict(profile_sparsity=0.0), dict(noise_sigma=-1), dict(domains=0),
                                 dict(num_train_classes=50), dict(domain_bias=2.0)])
def test_world_config_validation(bad):
    with pytest.raises(ValidationError):
        SynthWorldConfig(**bad)


# ------------------------------------------------------------------------ classifier

def test_hand_cosine_case():
    r = prototype_classifier_eval([[1, 0], [0, 1]], ["a", "b"], [[0.9, 0.1]], ["a"])
    assert list(r.predictions) == ["a"] and r.accuracy == 1.0
    cos = np.array([0.9, 0.1]) / math.sqrt(0.82)
    np.testing.assert_allclose(r.probabilities[0], np.exp(cos) / np.exp(cos).sum())


def test_orthogonal_prototypes():
    P = np.eye(4)
    r = prototype_classifier_eval(P, list("abcd"), P[[2]], ["c"], temperature=0.1)
    assert r.predictions[0] == "c"
    assert np.argmax(r.probabilities[0]) == 2


def test_classifier_errors():
    with pytest.raises(ValidationError):
        prototype_classifier_eval([[0, 0], [0, 1]], ["a", "b"], [[1, 0]], ["a"])
    with pytest.raises(ValidationError):
        prototype_classifier_eval([[1, 0]], ["a"], [[1, 0]], ["a"], categories=["a", "b"])
    with pytest.raises(ValidationError):
        prototype_classifier_eval([[1, 0]], ["a"], [[1, 0]], ["a"], temperature=0)


def test_feature_records_accepted():
    s = [FeatureRecord("s1", "a", (1.0, 0.0)), FeatureRecord("s2", "b", (0.0, 1.0))]
    q = [FeatureRecord("q1", "b", (0.2, 0.7))]
    assert prototype_classifier_eval(s, None, q, None).accuracy == 1.0


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 100), st.floats(0.01, 100))
def test_argmax_invariances(seed, temperature, scale):
    rng = np.random.default_rng(seed)
    sX = rng.random((10, 6)) + 0.01
    sy = np.repeat(list("abcde"), 2)
    qX = rng.random((15, 6)) + 0.01
    qy = rng.choice(list("abcde"), 15)
    base = prototype_classifier_eval(sX, sy, qX, qy)
    other = prototype_classifier_eval(sX, sy, qX * scale, qy, temperature=temperature)
    np.testing.assert_array_equal(base.predictions, other.predictions)


def test_estimator_matches_function(rng):
    X = rng.random((20, 5))
    y = np.repeat(["a", "b", "c", "d"], 5)
    Q = rng.random((7, 5))
    est = AttributePrototypeClassifier(temperature=0.5).fit(X, y)
    ref = prototype_classifier_eval(X, y, Q, ["a"] * 7, temperature=0.5, categories=["a", "b", "c", "d"])
    np.testing.assert_array_equal(est.predict(Q), ref.predictions.astype(str))
    np.testing.assert_allclose(est.predict_proba(Q), ref.probabilities)
    assert est.score(X, y) == prototype_classifier_eval(X, y, X, y).accuracy
    assert clone(est).get_params() == {"temperature": 0.5}


# ---------------------------------------------------------------------------- losses

def test_bce_half_is_ln2():
    assert abs(attribute_bce_loss(np.full((7, 5), 0.5), np.random.default_rng(0).integers(0, 2, (7, 5)))
               - math.log(2)) < 1e-12


def test_bce_perfect_prediction():
    a = np.random.default_rng(1).integers(0, 2, (6, 4)).astype(float)
    assert attribute_bce_loss(a, a) <= 1e-6 * abs(math.log(1e-7))


def test_bce_shape_mismatch():
    with pytest.raises(ValidationError):
        attribute_bce_loss(np.zeros((2, 3)), np.zeros((3, 2)))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_bce_properties(seed):
    rng = np.random.default_rng(seed)
    z = rng.random((5, 4))
    a = rng.integers(0, 2, (5, 4)).astype(float)
    loss = attribute_bce_loss(z, a)
    assert loss >= 0
    perm = rng.permutation(5)
    assert attribute_bce_loss(z[perm], a[perm]) == pytest.approx(loss, rel=1e-12)
    i, j = rng.integers(0, 5), rng.integers(0, 4)
    z2 = z.copy()
    z2[i, j] = z[i, j] + 0.5 * (a[i, j] - z[i, j])
    assert attribute_bce_loss(z2, a) <= loss
    # direct formula
    zc = np.clip(z, 1e-7, 1 - 1e-7)
    manual = -np.mean([np.mean([a[k, l] * math.log(zc[k, l]) + (1 - a[k, l]) * math.log(1 - zc[k, l])
                                for l in range(4)]) for k in range(5)])
    assert loss == pytest.approx(manual, rel=1e-12)


def test_combined_loss():
    assert combined_loss(3.0, [1.0, 2.0], beta=0) == 1.5
    assert combined_loss(0.0, [1.0, 2.0], beta=1) == 1.5
    assert combined_loss(1.0, [1.0]) == pytest.approx(1.6)
    with pytest.raises(ValidationError):
        combined_loss(1.0, [])


def test_episode_loss_is_cross_entropy():
    sX, sy = [[1, 0], [0, 1]], ["a", "b"]
    qX, qy = [[0.9, 0.1], [0.2, 0.8]], ["a", "b"]
    r = prototype_classifier_eval(sX, sy, qX, qy, temperature=0.3)
    want = -np.mean([math.log(r.probabilities[0, 0]), math.log(r.probabilities[1, 1])])
    assert episode_loss(sX, sy, qX, qy, temperature=0.3) == pytest.approx(want)


# ----------------------------------------------------------------------- calibration

def _calib_setup():
    table = binary_table([[1, 0], [0, 1], [1, 1], [0, 0], [0.9, 0.1], [0.1, 0.9]],
                         ids=["t0", "t1", "t2", "t3", "n0", "n1"])
    pool = [TaskSpec(f"p{i}", pair) for i, pair in enumerate([("t0", "t1"), ("t2", "t3"), ("t0", "t3"),
                                                               ("t1", "t2")])]
    protos = {"t0": np.array([1.0, 0.0]), "t1": np.array([0.0, 1.0]),
              "t2": np.array([1.0, 1.0]), "t3": np.array([0.0, 0.0])}
    task = TaskSpec("novel", ("n0", "n1"))
    sX = np.array([[0.8, 0.2], [0.3, 0.9]])
    return table, pool, protos, task, sX, np.array(["n0", "n1"])


def test_calibrate_alpha_one_is_identity():
    table, pool, protos, task, sX, sy = _calib_setup()
    r = calibrate_support(task, sX, sy, pool, table, protos, alpha=1.0)
    np.testing.assert_array_equal(r.X, sX)


def test_calibrate_alpha_zero_and_matching():
    table, pool, protos, task, sX, sy = _calib_setup()
    r = calibrate_support(task, sX, sy, pool, table, protos, k_related=1, retain=5, alpha=0.0)
    # closest pool task is (t0, t1); n0 matches t0 and n1 matches t1
    assert r.related_tasks == ("p0",)
    assert r.retained == {"n0": ("t0",), "n1": ("t1",)}
    np.testing.assert_array_equal(r.X, [[1.0, 0.0], [0.0, 1.0]])


def test_calibrate_hand_mix():
    table, pool, protos, task, _, sy = _calib_setup()
    protos = dict(protos, t0=np.array([0.0, 1.0]))
    r = calibrate_support(task, np.array([[1.0, 0.0], [0.0, 1.0]]), sy, pool, table, protos, k_related=1)
    np.testing.assert_allclose(r.X[0], [0.5, 0.5])


def test_calibrate_retain_counts():
    table, pool, protos, task, sX, sy = _calib_setup()
    r = calibrate_support(task, sX, sy, pool, table, protos, k_related=4, retain=1)
    counts = {}
    for t in pool:
        for (train, novel), _ in tad_orig(t, task, table).per_edge:
            counts.setdefault(novel, {}).setdefault(train, 0)
            counts[novel][train] += 1
    for c, chosen in r.retained.items():
        best = sorted(counts[c].items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
        assert chosen == (best,)


def test_calibrate_errors():
    table, pool, protos, task, sX, sy = _calib_setup()
    with pytest.raises(ValidationError):
        calibrate_support(task, sX, sy, [], table, protos)
    with pytest.raises(ValidationError):
        calibrate_support(task, sX, sy, pool, table, {"t0": np.zeros(2)}, alpha=0.5)


# ---------------------------------------------------------------------- intervention

def test_worst_k_examples():
    assert worst_k_accuracy([0.2, 0.4, 0.9], 2) == pytest.approx(0.3)
    assert worst_k_accuracy([0.2, 0.4, 0.9], 1) == 0.2
    assert worst_k_accuracy([0.2, 0.4, 0.9], 3) == pytest.approx(0.5)
    with pytest.raises(ValidationError):
        worst_k_accuracy([0.2], 2)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=60))
def test_worst_k_monotone(acc):
    vals = [worst_k_accuracy(acc, k) for k in range(1, len(acc) + 1)]
    assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))


def _episodes(world, n=30, shots=5, seed=0):
    tasks = sample_tasks(world.novel_classes, EpisodeConfig(ways=5, seed=seed), n)
    return tasks, make_episodes(world, tasks, shots, 10, seed)


def test_episodes_are_disjoint(world):
    _, eps = _episodes(world, n=3)
    ep = eps[0]
    assert ep.support_X.shape == (25, 12) and ep.query_X.shape == (50, 12)
    assert ep.pool_X.shape[0] == 5 * (60 - 15)
    rows = {tuple(x) for x in ep.support_X} | {tuple(x) for x in ep.query_X}
    assert len(rows) == 75


def test_intervention_controls(world):
    tasks, eps = _episodes(world)
    d = [tad_approx(t, t, world.table) + 0.01 * i for i, t in enumerate(tasks)]
    none = run_intervention(eps, d, InterventionConfig(threshold_r=10.0, ks=(5, 10)))
    assert none.intervened_fraction == 0 and none.acc_k_after == none.acc_k_before
    zero = run_intervention(eps, d, InterventionConfig(threshold_r=-1.0, budget=0, ks=(5, 10)))
    assert zero.intervened_fraction == 1 and zero.acc_k_after == zero.acc_k_before


def test_intervention_helps_and_is_seeded(world):
    tasks, eps = _episodes(world)
    d = list(np.linspace(0, 1, len(tasks)))
    cfg = InterventionConfig(threshold_r=-1.0, budget=25, seeds=(0, 1), ks=(5, 10))
    r1 = run_intervention(eps, d, cfg)
    r2 = run_intervention(eps, d, cfg)
    assert r1.to_dict() == r2.to_dict()
    assert r1.acc_k_after[10] > r1.acc_k_before[10]
    imb = run_intervention(eps, d, InterventionConfig(threshold_r=-1.0, strategy="imbalanced", ks=(5,)))
    assert imb.intervened_fraction == 1


def test_intervention_errors(world):
    tasks, eps = _episodes(world, n=5)
    with pytest.raises(ValidationError):
        run_intervention(eps, [1.0] * 5, InterventionConfig(threshold_r=0.0, budget=7))
    with pytest.raises(ValidationError):
        run_intervention(eps, [1.0] * 4, InterventionConfig())
    with pytest.raises(ValidationError):
        InterventionConfig(strategy="greedy")


def test_custom_evaluator(world):
    tasks, eps = _episodes(world, n=6)
    calls = []

    def evaluator(ep, sX, sy):
        calls.append(len(sy))
        return len(sy) / 100

    r = run_intervention(eps, [0.0, 1.0] * 3, InterventionConfig(threshold_r=0.5, ks=(6,)), evaluator)
    assert sorted(set(calls)) == [25, 50]
    assert r.acc_k_after[6] == pytest.approx((3 * 0.25 + 3 * 0.5) / 6)


def test_intervention_from_accuracies():
    before = {"a": 0.2, "b": 0.4, "c": 0.9}
    dist = {"a": 0.3, "b": 0.1, "c": 0.5}
    r = intervention_from_accuracies(before, dist, 0.25, after={"a": 0.6, "b": 1.0}, ks=(1, 2))
    assert r.intervened_fraction == pytest.approx(2 / 3)
    assert r.acc_k_before == {1: 0.2, 2: pytest.approx(0.3)}
    assert r.acc_k_after == {1: 0.4, 2: pytest.approx(0.5)}
    with pytest.raises(ValidationError):
        intervention_from_accuracies(before, {"a": 0.1}, 0.25)
