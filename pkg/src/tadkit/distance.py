"""Distance kernels between attribute distributions.

All sums run in value-index order, then attribute order, so results are
reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._validation import InfeasibleError, ValidationError, check_positive_int
from .attributes import AttributeSchema, CategoryProfile

JOINT_SPACE_CAP = 2 ** 16

__all__ = [
    "JOINT_SPACE_CAP",
    "Lemma1Report",
    "tv_distance",
    "category_distance",
    "category_distance_flat",
    "delta_term",
    "lemma1_check",
    "vc_complexity_term",
]


def tv_distance(p, q) -> float:
    """Total variation distance, half the L1 distance between two discrete distributions."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.ndim != 1 or p.shape != q.shape:
        raise ValidationError(f"distributions differ in size: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


def _check_pair(pk: CategoryProfile, pt: CategoryProfile, schema: AttributeSchema | None):
    if len(pk.distributions) != len(pt.distributions):
        raise ValidationError(f"profiles {pk.category_id!r} and {pt.category_id!r} have different attribute counts")
    for l, (a, b) in enumerate(zip(pk.distributions, pt.distributions)):
        if a.shape != b.shape:
            raise ValidationError(f"attribute {l}: value sets differ in size ({a.size} vs {b.size})")
    if schema is not None and [d.size for d in pk.distributions] != schema.sizes:
        raise ValidationError("profiles do not conform to the schema")


def category_distance(pk: CategoryProfile, pt: CategoryProfile, schema: AttributeSchema | None = None) -> float:
    """Mean over attributes of the per-attribute TV distance."""
    _check_pair(pk, pt, schema)
    L = len(pk.distributions)
    return math.fsum(tv_distance(a, b) for a, b in zip(pk.distributions, pt.distributions)) / L


def category_distance_flat(A: np.ndarray, B: np.ndarray, n_attributes: int) -> np.ndarray:
    """Pairwise category distances between stacked flat profiles.

    ``A`` has shape (m, V), ``B`` shape (n, V); returns an (m, n) matrix
    equal to ``category_distance`` entrywise (up to float summation order).
    """
    diff = np.abs(A[:, None, :] - B[None, :, :])
    return diff.sum(axis=-1) / (2.0 * n_attributes)


@dataclass(frozen=True)
class Lemma1Report:
    lhs: float
    d_A: float
    delta: float
    holds: bool
    slack: float

    def to_dict(self) -> dict:
        return asdict(self)


def _joint(dists) -> np.ndarray:
    """Joint distribution under conditional independence, as an L-dimensional array."""
    out = np.ones(())
    for d in dists:
        out = np.multiply.outer(out, d)
    return out


def _check_joint(pk: CategoryProfile) -> int:
    size = math.prod(d.size for d in pk.distributions)
    if size > JOINT_SPACE_CAP:
        raise InfeasibleError(f"joint attribute space has {size} outcomes, above the enumeration cap "
                              f"{JOINT_SPACE_CAP}; use fewer attributes")
    return size


def delta_term(pk: CategoryProfile, pt: CategoryProfile) -> float:
    """Sum over the joint attribute space of (1/2L) * sum_l (p_k(a^l) + p_t(a^l)).

    A value of attribute ``l`` occurs in ``N / |V^l|`` of the ``N`` joint
    outcomes, so the enumeration collapses to a weighted sum of marginal
    masses.  Each mass is summed with ``math.fsum``, which makes the result
    exactly ``2**(L-1)`` for binary schemas whose rows sum to one.
    """
    _check_pair(pk, pt, None)
    n_joint = _check_joint(pk)
    L = len(pk.distributions)
    parts = []
    for a, b in zip(pk.distributions, pt.distributions):
        mass = math.fsum(np.concatenate([a, b]).tolist())
        parts.append(mass * (n_joint // a.size))
    return math.fsum(parts) / (2 * L)


def lemma1_check(pk: CategoryProfile, pt: CategoryProfile, tol: float = 1e-9) -> Lemma1Report:
    """Compare the joint-space L1 distance with ``category_distance + delta_term``.

    The joint distributions are built from the marginals assuming attributes
    are conditionally independent given the category.
    """
    _check_pair(pk, pt, None)
    _check_joint(pk)
    lhs = math.fsum(np.abs(_joint(pk.distributions) - _joint(pt.distributions)).ravel())
    d = category_distance(pk, pt)
    delta = delta_term(pk, pt)
    slack = d + delta - lhs
    return Lemma1Report(lhs=lhs, d_A=d, delta=delta, holds=slack >= -tol, slack=slack)


def vc_complexity_term(m: int, d: int, delta: float) -> float:
    """sqrt((4/m) * (d * ln(2em/d) + ln(4/delta))), natural logarithms."""
    m = check_positive_int(m, "m")
    d = check_positive_int(d, "d")
    delta = float(delta)
    if not (0.0 < delta < 1.0):
        raise ValidationError(f"delta must lie in (0, 1), got {delta}")
    bracket = d * math.log(2.0 * math.e * m / d) + math.log(4.0 / delta)
    if bracket < 0:
        raise ValidationError(f"complexity bracket is negative ({bracket}) for m={m}, d={d}")
    return math.sqrt(4.0 / m * bracket)
