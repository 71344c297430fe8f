"""Few-shot applications built on the task distance.

Contents: a synthetic attribute world whose embedding noise stands in for a
learned attribute predictor, the attribute-prototype (cosine) classifier and
its loss evaluators, prototype calibration of novel support sets, and
test-time intervention with worst-K accuracy reporting.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import ValidationError, check_finite, check_positive_int, check_unit_interval
from .attributes import AttributeSchema, AttributeTable, FeatureRecord, InstanceAnnotation
from .episodes import make_rng
from .tad import TaskSpec, distance_matrix, tad_orig

BCE_EPS = 1e-7
DEFAULT_KS = (5, 10, 20, 60, 120)

__all__ = [
    "SynthWorldConfig",
    "SynthWorld",
    "generate_synth_world",
    "cosine_scores",
    "softmax",
    "prototype_classifier_eval",
    "AttributePrototypeClassifier",
    "attribute_bce_loss",
    "episode_loss",
    "combined_loss",
    "CalibrationResult",
    "calibrate_support",
    "Episode",
    "make_episodes",
    "InterventionConfig",
    "InterventionReport",
    "run_intervention",
    "intervention_from_accuracies",
    "worst_k_accuracy",
]


# ------------------------------------------------------------------ synthetic world

@dataclass(frozen=True)
class SynthWorldConfig:
    """Parameters of the synthetic attribute world.

    Each class gets a binary attribute profile; attribute ``l`` is on with
    probability ``(1 - domain_bias) * profile_sparsity + domain_bias * z[d, l]``
    where ``z[d, l]`` is a per-domain Bernoulli(``profile_sparsity``) draw.
    Instance scores are the profile plus Gaussian noise, clamped to [0, 1].
    The noise scale of class ``c`` on attribute ``l`` is
    ``noise_sigma * (1 + transfer_gain * rarity)`` with ``rarity`` one minus
    the share of training classes (the first ``num_train_classes``) that
    have the same value, so the predictor is worse on attribute values it
    rarely saw during training.
    """

    num_classes: int = 40
    n_attributes: int = 32
    profile_sparsity: float = 0.5
    noise_sigma: float = 0.1
    samples_per_class: int = 100
    seed: int = 0
    domains: int = 1
    domain_bias: float = 0.0
    num_train_classes: int | None = None
    transfer_gain: float = 0.0

    def __post_init__(self):
        check_positive_int(self.num_classes, "num_classes")
        check_positive_int(self.n_attributes, "n_attributes")
        check_unit_interval(self.profile_sparsity, "profile_sparsity", open_low=True, open_high=True)
        if check_finite(self.noise_sigma, "noise_sigma") < 0:
            raise ValidationError("noise_sigma must be >= 0")
        check_positive_int(self.samples_per_class, "samples_per_class")
        check_positive_int(self.domains, "domains")
        check_unit_interval(self.domain_bias, "domain_bias")
        if check_finite(self.transfer_gain, "transfer_gain") < 0:
            raise ValidationError("transfer_gain must be >= 0")
        if self.num_train_classes is not None:
            check_positive_int(self.num_train_classes, "num_train_classes")
            if self.num_train_classes > self.num_classes:
                raise ValidationError("num_train_classes exceeds num_classes")
        if self.domains > self.num_classes:
            raise ValidationError("more domains than classes")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SynthWorld:
    config: SynthWorldConfig
    table: AttributeTable
    X: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    domains: dict[str, int] = field(repr=False)
    noise_scale: np.ndarray = field(repr=False)

    @property
    def classes(self) -> list[str]:
        return self.table.categories

    @property
    def train_classes(self) -> list[str]:
        n = self.config.num_train_classes
        return self.classes if n is None else self.classes[:n]

    @property
    def novel_classes(self) -> list[str]:
        n = self.config.num_train_classes
        return [] if n is None else self.classes[n:]

    def classes_in_domain(self, d: int) -> list[str]:
        return [c for c in self.classes if self.domains[c] == d]

    def instances_of(self, category: str) -> np.ndarray:
        return np.flatnonzero(self.y == category)

    @property
    def features(self) -> list[FeatureRecord]:
        return [FeatureRecord(f"i{i:07d}", str(c), tuple(x)) for i, (x, c) in enumerate(zip(self.X.tolist(), self.y))]


def generate_synth_world(config: SynthWorldConfig) -> SynthWorld:
    """Draw a world: class profiles, domain assignment and noisy instance scores."""
    rng = make_rng(config.seed, 0)
    C, L, s = config.num_classes, config.n_attributes, config.profile_sparsity
    dom = np.arange(C) * config.domains // C
    z = (rng.random((config.domains, L)) < s).astype(np.float64)
    p_on = (1 - config.domain_bias) * s + config.domain_bias * z
    profiles = (rng.random((C, L)) < p_on[dom]).astype(np.float64)

    n_train = C if config.num_train_classes is None else config.num_train_classes
    share_on = profiles[:n_train].mean(axis=0)
    share_same = np.where(profiles == 1.0, share_on[None, :], 1.0 - share_on[None, :])
    noise_scale = config.noise_sigma * (1.0 + config.transfer_gain * (1.0 - share_same))

    width = len(str(C - 1))
    ids = [f"c{i:0{width}d}" for i in range(C)]
    schema = AttributeSchema.binary(L)
    flat = np.empty((C, 2 * L))
    flat[:, 0::2] = 1.0 - profiles
    flat[:, 1::2] = profiles
    table = AttributeTable.from_matrix(schema, ids, flat, pool_tag="synth")

    m = config.samples_per_class
    noise_rng = make_rng(config.seed, 1)
    X = np.repeat(profiles, m, axis=0)
    if config.noise_sigma > 0:
        X = X + noise_rng.standard_normal(X.shape) * np.repeat(noise_scale, m, axis=0)
        np.clip(X, 0.0, 1.0, out=X)
    y = np.repeat(np.array(ids, dtype=object), m)
    return SynthWorld(config, table, X, y, {c: int(d) for c, d in zip(ids, dom)}, noise_scale)


# -------------------------------------------------------------- prototype classifier

def _check_nonzero(X: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0):
        raise ValidationError(f"{what} contains a zero-norm vector; cosine similarity is undefined")
    return norms


def cosine_scores(Q: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Cosine similarity of every row of ``Q`` with every row of ``P``."""
    qn = _check_nonzero(Q, "query")
    pn = _check_nonzero(P, "prototypes")
    return (Q @ P.T) / qn[:, None] / pn[None, :]


def softmax(z: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64) / temperature
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _prototypes(X: np.ndarray, y: np.ndarray, categories: Sequence[str]) -> np.ndarray:
    protos = np.empty((len(categories), X.shape[1]))
    for k, c in enumerate(categories):
        sel = y == c
        if not np.any(sel):
            raise ValidationError(f"no support records for category {c!r}")
        protos[k] = X[sel].mean(axis=0)
    return protos


def _as_arrays(records_or_X, y=None):
    if y is None:
        recs = list(records_or_X)
        if not recs:
            raise ValidationError("no feature records")
        return np.array([r.scores for r in recs], dtype=np.float64), np.array([r.category_id for r in recs],
                                                                               dtype=object)
    X = np.asarray(records_or_X, dtype=np.float64)
    y = np.asarray(y, dtype=object)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValidationError(f"features {X.shape} and labels {y.shape} do not line up")
    return X, y


@dataclass(frozen=True)
class EvalResult:
    categories: tuple[str, ...]
    predictions: np.ndarray = field(repr=False)
    probabilities: np.ndarray = field(repr=False)
    accuracy: float


def prototype_classifier_eval(support_X, support_y, query_X, query_y, temperature: float = 1.0,
                              categories: Sequence[str] | None = None) -> EvalResult:
    """Classify queries by cosine similarity to per-category support means.

    Predictions are argmax cosine (first category on exact ties); the
    reported probabilities are softmax(cosine / temperature).
    """
    temperature = check_finite(temperature, "temperature")
    if temperature <= 0:
        raise ValidationError("temperature must be > 0")
    sX, sy = _as_arrays(support_X, support_y)
    qX, qy = _as_arrays(query_X, query_y)
    if sX.shape[1] != qX.shape[1]:
        raise ValidationError("support and query vectors differ in length")
    cats = tuple(sorted(set(sy.tolist()))) if categories is None else tuple(categories)
    protos = _prototypes(sX, sy, cats)
    sims = cosine_scores(qX, protos)
    pred = np.array(cats, dtype=object)[np.argmax(sims, axis=1)]
    acc = float(np.mean(pred == qy)) if qy.size else math.nan
    return EvalResult(cats, pred, softmax(sims, temperature), acc)


class AttributePrototypeClassifier(ClassifierMixin, BaseEstimator):
    """Nearest-prototype classifier on attribute score vectors with cosine similarity.

    Parameters
    ----------
    temperature : float
        Softmax temperature for ``predict_proba``; never changes ``predict``.
    """

    def __init__(self, temperature: float = 1.0):
        self.temperature = temperature

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y)
        if y.shape[0] != X.shape[0]:
            raise ValidationError("X and y differ in length")
        self.classes_ = np.unique(y)
        self.prototypes_ = _prototypes(X, y, self.classes_)
        _check_nonzero(self.prototypes_, "prototypes")
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "prototypes_")
        X = check_array(X, dtype=np.float64)
        return cosine_scores(X, self.prototypes_)

    def predict_proba(self, X):
        if self.temperature <= 0:
            raise ValidationError("temperature must be > 0")
        return softmax(self.decision_function(X), self.temperature)

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]


def _labels_array(labels) -> np.ndarray:
    if len(labels) and isinstance(labels[0], InstanceAnnotation):
        return np.array([[float(v) for v in a.values] for a in labels])
    return np.asarray(labels, dtype=np.float64)


def attribute_bce_loss(scores, labels, eps: float = BCE_EPS) -> float:
    """Mean binary cross-entropy over samples and attributes.

    ``scores`` (m, L) are clamped into [eps, 1 - eps]; ``labels`` are 0/1 of
    the same shape.  Feature and annotation records are accepted as well.
    """
    if len(scores) and isinstance(scores[0], FeatureRecord):
        scores = [r.scores for r in scores]
    z = np.asarray(scores, dtype=np.float64)
    a = _labels_array(labels)
    if z.shape != a.shape or z.ndim != 2:
        raise ValidationError(f"scores {z.shape} and labels {a.shape} must share a 2-D shape")
    if not np.all((a == 0) | (a == 1)):
        raise ValidationError("labels must be binary")
    z = np.clip(z, eps, 1.0 - eps)
    ll = a * np.log(z) + (1.0 - a) * np.log1p(-z)
    return float(-ll.mean(axis=1).mean())


def episode_loss(support_X, support_y, query_X, query_y, temperature: float = 1.0) -> float:
    """Cross-entropy of softmax(cosine / temperature) against the query labels."""
    res = prototype_classifier_eval(support_X, support_y, query_X, query_y, temperature)
    _, qy = _as_arrays(query_X, query_y)
    col = {c: k for k, c in enumerate(res.categories)}
    try:
        idx = np.array([col[c] for c in qy])
    except KeyError as exc:
        raise ValidationError(f"query label {exc.args[0]!r} has no support") from None
    p = res.probabilities[np.arange(idx.size), idx]
    return float(-np.mean(np.log(p)))


def combined_loss(bce: float, episode_losses: Sequence[float], beta: float = 0.6) -> float:
    """beta * attribute loss + mean episode loss."""
    if len(episode_losses) == 0:
        raise ValidationError("need at least one episode loss")
    if check_finite(beta, "beta") < 0:
        raise ValidationError("beta must be >= 0")
    return beta * float(bce) + math.fsum(episode_losses) / len(episode_losses)


# ------------------------------------------------------------ prototype calibration

@dataclass(frozen=True)
class CalibrationResult:
    X: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    calibration: dict[str, np.ndarray] = field(repr=False)
    related_tasks: tuple[str, ...] = ()
    retained: dict[str, tuple[str, ...]] = field(default_factory=dict)


def calibrate_support(task: TaskSpec, support_X, support_y, pool: Sequence[TaskSpec], table: AttributeTable,
                      prototypes: Mapping[str, np.ndarray], k_related: int = 200, retain: int = 5,
                      alpha: float = 0.5, novel_table: AttributeTable | None = None,
                      variant: str = "approx") -> CalibrationResult:
    """Mix averaged prototypes of matched training categories into a novel support set.

    The ``k_related`` pool tasks closest to ``task`` are kept (ties in pool
    order).  Each kept task is matched to ``task`` category by category; per
    novel category the ``retain`` most often matched training categories
    (ties by id) are averaged into a calibration vector ``p``, and each
    support feature ``x`` of that category becomes ``alpha * x + (1 - alpha) * p``.
    ``table`` resolves pool categories, ``novel_table`` the novel ones.
    """
    if not pool:
        raise ValidationError("related pool is empty")
    k_related = check_positive_int(k_related, "k_related")
    retain = check_positive_int(retain, "retain")
    alpha = check_unit_interval(alpha, "alpha")
    X, y = _as_arrays(support_X, support_y)

    d = distance_matrix([task], pool, table, novel_table, variant)[0]
    keep = np.argsort(d, kind="stable")[:k_related]
    counts: dict[str, Counter] = {c: Counter() for c in task.category_ids}
    for i in keep:
        res = tad_orig(pool[i], task, table, novel_table)
        for (train_cat, novel_cat), _ in res.per_edge:
            counts[novel_cat][train_cat] += 1

    out = X.copy()
    calib: dict[str, np.ndarray] = {}
    retained: dict[str, tuple[str, ...]] = {}
    for c in task.category_ids:
        ranked = sorted(counts[c].items(), key=lambda kv: (-kv[1], kv[0]))[:retain]
        if not ranked:
            continue
        chosen = tuple(t for t, _ in ranked)
        try:
            vecs = np.array([np.asarray(prototypes[t], dtype=np.float64) for t in chosen])
        except KeyError as exc:
            raise ValidationError(f"no prototype for training category {exc.args[0]!r}") from None
        p = vecs.mean(axis=0)
        calib[c] = p
        retained[c] = chosen
        sel = y == c
        if alpha != 1.0:
            out[sel] = alpha * X[sel] + (1.0 - alpha) * p
    return CalibrationResult(out, y, calib, tuple(pool[i].task_id for i in keep), retained)


# ---------------------------------------------------------------- intervention

@dataclass(frozen=True)
class Episode:
    """A novel task with its support, query and unlabeled candidate pool.

    ``pool_y`` holds the oracle labels; strategies that draw blindly only
    look at them after the draw.
    """

    task: TaskSpec
    support_X: np.ndarray = field(repr=False)
    support_y: np.ndarray = field(repr=False)
    query_X: np.ndarray = field(repr=False)
    query_y: np.ndarray = field(repr=False)
    pool_X: np.ndarray = field(repr=False)
    pool_y: np.ndarray = field(repr=False)


def make_episodes(world: SynthWorld, tasks: Sequence[TaskSpec], shots: int, queries: int, seed: int,
                  stream: int = 0) -> list[Episode]:
    """Split each task's class instances into disjoint support, query and pool sets."""
    shots = check_positive_int(shots, "shots")
    queries = check_positive_int(queries, "queries")
    by_class = {c: world.instances_of(c) for c in world.classes}
    out = []
    for j, t in enumerate(tasks):
        rng = make_rng(seed, stream, j)
        s_idx, q_idx, p_idx = [], [], []
        for c in t.category_ids:
            inst = by_class.get(c)
            if inst is None:
                raise ValidationError(f"category {c!r} is not in the world")
            if inst.size < shots + queries:
                raise ValidationError(f"category {c!r} has {inst.size} instances, need {shots + queries}")
            perm = rng.permutation(inst)
            s_idx.append(perm[:shots])
            q_idx.append(perm[shots:shots + queries])
            p_idx.append(perm[shots + queries:])
        s, q, p = (np.concatenate(a) for a in (s_idx, q_idx, p_idx))
        out.append(Episode(t, world.X[s], world.y[s], world.X[q], world.y[q], world.X[p], world.y[p]))
    return out


@dataclass(frozen=True)
class InterventionConfig:
    threshold_r: float = 0.18
    budget: int = 25
    strategy: str = "balanced"
    seeds: tuple[int, ...] = (0,)
    ks: tuple[int, ...] = DEFAULT_KS

    def __post_init__(self):
        check_finite(self.threshold_r, "threshold_r")
        check_positive_int(self.budget, "budget", 0)
        if self.strategy not in ("balanced", "imbalanced"):
            raise ValidationError(f"strategy must be 'balanced' or 'imbalanced', got {self.strategy!r}")
        if not self.seeds:
            raise ValidationError("need at least one seed")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "ks", tuple(check_positive_int(k, "K") for k in self.ks))


@dataclass(frozen=True)
class InterventionReport:
    acc_k_before: dict[int, float]
    acc_k_after: dict[int, float]
    intervened_fraction: float
    per_task_delta: dict[str, float]
    per_seed: tuple[dict, ...] = ()

    def to_dict(self) -> dict:
        return {
            "acc_k_before": {str(k): v for k, v in self.acc_k_before.items()},
            "acc_k_after": {str(k): v for k, v in self.acc_k_after.items()},
            "intervened_fraction": self.intervened_fraction,
            "per_task_delta": self.per_task_delta,
            "per_seed": list(self.per_seed),
        }


def worst_k_accuracy(accuracies: Sequence[float], k: int, task_ids: Sequence[str] | None = None) -> float:
    """Mean of the ``k`` smallest accuracies; equal accuracies admit the lowest task ids first."""
    n = len(accuracies)
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or not (1 <= k <= n):
        raise ValidationError(f"k must lie in [1, {n}], got {k!r}")
    ids = list(range(n)) if task_ids is None else list(task_ids)
    order = sorted(range(n), key=lambda i: (float(accuracies[i]), ids[i]))
    return math.fsum(float(accuracies[i]) for i in order[:k]) / k


def _default_evaluator(ep: Episode, sX, sy) -> float:
    return prototype_classifier_eval(sX, sy, ep.query_X, ep.query_y, categories=ep.task.category_ids).accuracy


def _extra_samples(ep: Episode, budget: int, strategy: str, rng: np.random.Generator):
    C = ep.task.ways
    if budget == 0:
        return np.empty((0,), dtype=np.intp)
    if strategy == "balanced":
        if budget % C:
            raise ValidationError(f"balanced intervention needs budget divisible by ways ({budget} % {C} != 0)")
        per = budget // C
        picks = []
        for c in ep.task.category_ids:
            avail = np.flatnonzero(ep.pool_y == c)
            if avail.size < per:
                raise ValidationError(f"task {ep.task.task_id!r}: pool has {avail.size} samples of {c!r}, "
                                      f"need {per}")
            picks.append(rng.choice(avail, size=per, replace=False))
        return np.concatenate(picks)
    if ep.pool_y.size < budget:
        raise ValidationError(f"task {ep.task.task_id!r}: pool has {ep.pool_y.size} samples, need {budget}")
    return rng.choice(ep.pool_y.size, size=budget, replace=False)


def _ks_for(ks, n):
    return tuple(k for k in ks if k <= n)


def run_intervention(episodes: Sequence[Episode], distances: Sequence[float], config: InterventionConfig,
                     evaluator: Callable | None = None) -> InterventionReport:
    """Give tasks with distance above ``threshold_r`` extra labeled support and re-evaluate.

    ``evaluator(episode, support_X, support_y) -> accuracy`` defaults to the
    prototype classifier on the episode's queries.  Extra samples are drawn
    per seed from each intervened episode's pool: ``balanced`` takes
    budget/ways per category, ``imbalanced`` draws uniformly and reveals the
    labels afterwards.  Acc_K values are averaged over seeds.
    """
    if not episodes:
        raise ValidationError("no episodes")
    if len(distances) != len(episodes):
        raise ValidationError("distances and episodes differ in length")
    evaluator = evaluator or _default_evaluator
    ids = [ep.task.task_id for ep in episodes]
    flagged = [float(d) > config.threshold_r for d in distances]
    if config.budget > 0 and any(flagged):
        for ep, f in zip(episodes, flagged):
            if not f:
                continue
            if ep.pool_y.size == 0:
                raise ValidationError(f"task {ep.task.task_id!r}: empty sample pool")
            if config.strategy == "balanced" and config.budget % ep.task.ways:
                raise ValidationError(f"balanced intervention needs budget divisible by ways "
                                      f"({config.budget} % {ep.task.ways} != 0)")
    ks = _ks_for(config.ks, len(episodes))
    before = [evaluator(ep, ep.support_X, ep.support_y) for ep in episodes]

    per_seed = []
    deltas = np.zeros(len(episodes))
    for seed in config.seeds:
        after = list(before)
        for j, (ep, f) in enumerate(zip(episodes, flagged)):
            if not f or config.budget == 0:
                continue
            extra = _extra_samples(ep, config.budget, config.strategy, make_rng(seed, 7, j))
            sX = np.concatenate([ep.support_X, ep.pool_X[extra]])
            sy = np.concatenate([ep.support_y, ep.pool_y[extra]])
            after[j] = evaluator(ep, sX, sy)
        deltas += np.subtract(after, before)
        per_seed.append({
            "seed": seed,
            "acc_k_before": {k: worst_k_accuracy(before, k, ids) for k in ks},
            "acc_k_after": {k: worst_k_accuracy(after, k, ids) for k in ks},
            "intervened": int(sum(flagged)),
        })
    n_seeds = len(config.seeds)
    return InterventionReport(
        acc_k_before={k: math.fsum(s["acc_k_before"][k] for s in per_seed) / n_seeds for k in ks},
        acc_k_after={k: math.fsum(s["acc_k_after"][k] for s in per_seed) / n_seeds for k in ks},
        intervened_fraction=sum(flagged) / len(episodes),
        per_task_delta={i: float(d / n_seeds) for i, d in zip(ids, deltas)},
        per_seed=tuple(per_seed),
    )


def intervention_from_accuracies(before: Mapping[str, float], distances: Mapping[str, float],
                                 threshold_r: float, after: Mapping[str, float] | None = None,
                                 ks: Sequence[int] = DEFAULT_KS) -> InterventionReport:
    """Worst-K report from externally produced per-task accuracies.

    Tasks above ``threshold_r`` take their accuracy from ``after`` when given;
    every other task keeps its ``before`` accuracy.
    """
    ids = sorted(before)
    if not ids:
        raise ValidationError("no accuracies")
    missing = [i for i in ids if i not in distances]
    if missing:
        raise ValidationError(f"no distance for task {missing[0]!r}")
    flagged = {i for i in ids if float(distances[i]) > threshold_r}
    after = after or {}
    b = [float(before[i]) for i in ids]
    a = [float(after[i]) if (i in flagged and i in after) else float(before[i]) for i in ids]
    ks = _ks_for(ks, len(ids))
    return InterventionReport(
        acc_k_before={k: worst_k_accuracy(b, k, ids) for k in ks},
        acc_k_after={k: worst_k_accuracy(a, k, ids) for k in ks},
        intervened_fraction=len(flagged) / len(ids),
        per_task_delta={i: y - x for i, x, y in zip(ids, b, a)},
        per_seed=(),
    )
