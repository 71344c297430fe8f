"""Attribute schemas, per-category attribute distributions and their sources.

A category is described by one discrete distribution per attribute,
``p(a^l | y)`` over the attribute's finite value set.  Tables of such
profiles come from files, from instance-level annotations (majority vote or
empirical frequency) or from predicted attribute scores (``induce_profiles``).
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import ParseError, ValidationError, check_distinct

LOAD_RENORM_TOL = 1e-6
NORM_TOL = 1e-9

__all__ = [
    "Attribute",
    "AttributeSchema",
    "CategoryProfile",
    "AttributeTable",
    "InstanceAnnotation",
    "FeatureRecord",
    "Violation",
    "load_schema",
    "save_schema",
    "load_attribute_table",
    "save_attribute_table",
    "load_annotations",
    "load_features",
    "save_features",
    "aggregate_majority",
    "aggregate_frequency",
    "induce_profiles",
    "induce_profiles_array",
    "validate_table",
    "AttributeProfileInducer",
]


@dataclass(frozen=True)
class Attribute:
    id: str
    values: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(str(v) for v in self.values))
        if not self.values:
            raise ValidationError(f"attribute {self.id!r} has an empty value set")
        check_distinct(self.values, f"value in attribute {self.id!r}")

    @property
    def size(self) -> int:
        return len(self.values)


class AttributeSchema:
    """Ordered attributes, each with an ordered finite value set."""

    def __init__(self, attributes: Iterable[Attribute | tuple[str, Sequence]]):
        attrs = []
        for a in attributes:
            if not isinstance(a, Attribute):
                a = Attribute(str(a[0]), tuple(a[1]))
            attrs.append(a)
        if not attrs:
            raise ValidationError("schema needs at least one attribute")
        check_distinct([a.id for a in attrs], "attribute id")
        self.attributes: tuple[Attribute, ...] = tuple(attrs)
        sizes = np.array([a.size for a in attrs], dtype=np.intp)
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.intp)
        self._index = {a.id: i for i, a in enumerate(attrs)}

    @classmethod
    def binary(cls, n_attributes: int, prefix: str = "a_") -> "AttributeSchema":
        return cls(Attribute(f"{prefix}{i + 1}", ("0", "1")) for i in range(n_attributes))

    @property
    def n_attributes(self) -> int:
        return len(self.attributes)

    @property
    def ids(self) -> list[str]:
        return [a.id for a in self.attributes]

    @property
    def sizes(self) -> list[int]:
        return [a.size for a in self.attributes]

    @property
    def n_values(self) -> int:
        """Total number of (attribute, value) cells, i.e. the flat profile length."""
        return int(self.offsets[-1])

    @property
    def is_binary(self) -> bool:
        return all(a.size == 2 for a in self.attributes)

    @property
    def joint_size(self) -> int:
        return math.prod(self.sizes)

    def index(self, attribute_id: str) -> int:
        try:
            return self._index[attribute_id]
        except KeyError:
            raise ValidationError(f"unknown attribute {attribute_id!r}") from None

    def __eq__(self, other):
        return isinstance(other, AttributeSchema) and self.attributes == other.attributes

    def __hash__(self):
        return hash(self.attributes)

    def __repr__(self):
        return f"AttributeSchema(L={self.n_attributes}, sizes={self.sizes})"

    def to_dict(self) -> dict:
        return {"attributes": [{"id": a.id, "values": list(a.values)} for a in self.attributes]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "AttributeSchema":
        try:
            return cls(Attribute(str(a["id"]), tuple(a["values"])) for a in data["attributes"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed schema document: {exc}") from None


@dataclass(frozen=True)
class CategoryProfile:
    """Per-attribute value distributions for one category.

    No normalization checks happen here; ``AttributeTable`` validates
    profiles against its schema.
    """

    category_id: str
    distributions: tuple[np.ndarray, ...]

    def __post_init__(self):
        arrays = []
        for d in self.distributions:
            a = np.array(d, dtype=np.float64)
            a.setflags(write=False)
            arrays.append(a)
        object.__setattr__(self, "distributions", tuple(arrays))

    @property
    def flat(self) -> np.ndarray:
        return np.concatenate(self.distributions) if self.distributions else np.empty(0)

    @classmethod
    def from_flat(cls, category_id: str, flat, schema: AttributeSchema) -> "CategoryProfile":
        flat = np.asarray(flat, dtype=np.float64)
        o = schema.offsets
        return cls(category_id, tuple(flat[o[i]:o[i + 1]] for i in range(schema.n_attributes)))


@dataclass(frozen=True)
class Violation:
    category_id: str
    attribute_id: str | None
    message: str

    def __str__(self):
        where = self.category_id if self.attribute_id is None else f"{self.category_id}/{self.attribute_id}"
        return f"{where}: {self.message}"


def validate_table(table: "AttributeTable") -> list[Violation]:
    """List every invariant violation in ``table``; an empty list means valid."""
    schema = table.schema
    out: list[Violation] = []
    for cid, prof in table.profiles.items():
        if prof.category_id != cid:
            out.append(Violation(cid, None, f"profile is keyed as {cid!r} but names {prof.category_id!r}"))
        if len(prof.distributions) != schema.n_attributes:
            out.append(Violation(
                cid, None,
                f"has {len(prof.distributions)} attribute distributions, schema has {schema.n_attributes}"))
            continue
        for attr, dist in zip(schema.attributes, prof.distributions):
            if dist.shape != (attr.size,):
                out.append(Violation(cid, attr.id, f"{dist.size} weights for {attr.size} values"))
                continue
            if not np.all(np.isfinite(dist)) or np.any(dist < 0) or np.any(dist > 1):
                out.append(Violation(cid, attr.id, "weights must lie in [0, 1]"))
                continue
            total = float(dist.sum())
            if abs(total - 1.0) > NORM_TOL:
                out.append(Violation(cid, attr.id, f"weights sum to {total!r}, not 1"))
    return out


class AttributeTable:
    """Immutable lookup from category id to ``CategoryProfile``.

    Parameters
    ----------
    schema : AttributeSchema
    profiles : iterable of CategoryProfile or mapping id -> profile
        Category order is preserved.
    pool_tag : str
        Free-form tag naming the category pool (e.g. ``"train"``).
    check : bool
        Raise ``ValidationError`` on the first invariant violation.
    """

    def __init__(self, schema: AttributeSchema, profiles, pool_tag: str = "", *, check: bool = True):
        if isinstance(profiles, Mapping):
            profiles = list(profiles.values())
        profiles = list(profiles)
        check_distinct([p.category_id for p in profiles], "category")
        self.schema = schema
        self.profiles: dict[str, CategoryProfile] = {p.category_id: p for p in profiles}
        self.pool_tag = pool_tag
        self._matrix = None
        self._row = None
        if check:
            problems = validate_table(self)
            if problems:
                raise ValidationError(f"invalid attribute table: {problems[0]}"
                                      + (f" (+{len(problems) - 1} more)" if len(problems) > 1 else ""))

    @property
    def categories(self) -> list[str]:
        return list(self.profiles)

    def __len__(self):
        return len(self.profiles)

    def __contains__(self, category_id):
        return category_id in self.profiles

    def __getitem__(self, category_id) -> CategoryProfile:
        try:
            return self.profiles[category_id]
        except KeyError:
            raise ValidationError(f"unknown category {category_id!r} in table {self.pool_tag!r}") from None

    def __repr__(self):
        return f"AttributeTable(pool_tag={self.pool_tag!r}, categories={len(self)}, schema={self.schema!r})"

    @property
    def matrix(self) -> np.ndarray:
        """Flat profiles stacked in category order, shape (n_categories, n_values)."""
        if self._matrix is None:
            m = np.array([p.flat for p in self.profiles.values()], dtype=np.float64)
            m = m.reshape(len(self.profiles), self.schema.n_values)
            m.setflags(write=False)
            self._matrix = m
            self._row = {c: i for i, c in enumerate(self.profiles)}
        return self._matrix

    def rows(self, category_ids: Sequence[str]) -> np.ndarray:
        """Row indices into ``matrix`` for ``category_ids``."""
        self.matrix
        try:
            return np.fromiter((self._row[c] for c in category_ids), dtype=np.intp, count=len(category_ids))
        except KeyError as exc:
            raise ValidationError(
                f"unknown category {exc.args[0]!r} in table {self.pool_tag!r}") from None

    def stack(self, category_ids: Sequence[str]) -> np.ndarray:
        return self.matrix[self.rows(category_ids)]

    def subset(self, category_ids: Iterable[str], pool_tag: str | None = None) -> "AttributeTable":
        return AttributeTable(self.schema, [self[c] for c in category_ids],
                              self.pool_tag if pool_tag is None else pool_tag, check=False)

    def merge(self, other: "AttributeTable", pool_tag: str | None = None) -> "AttributeTable":
        if other.schema != self.schema:
            raise ValidationError("cannot merge tables with different schemas")
        return AttributeTable(self.schema, list(self.profiles.values()) + list(other.profiles.values()),
                              pool_tag or self.pool_tag, check=False)

    @classmethod
    def from_matrix(cls, schema: AttributeSchema, category_ids: Sequence[str], matrix,
                    pool_tag: str = "", *, check: bool = True) -> "AttributeTable":
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.shape != (len(category_ids), schema.n_values):
            raise ValidationError(
                f"matrix shape {matrix.shape} does not match ({len(category_ids)}, {schema.n_values})")
        return cls(schema, [CategoryProfile.from_flat(c, row, schema) for c, row in zip(category_ids, matrix)],
                   pool_tag, check=check)

    def allclose(self, other: "AttributeTable", atol: float = 1e-12) -> bool:
        return (self.schema == other.schema and self.categories == other.categories
                and bool(np.allclose(self.matrix, other.matrix, rtol=0, atol=atol)))


@dataclass(frozen=True)
class InstanceAnnotation:
    instance_id: str
    category_id: str
    values: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(str(v) for v in self.values))


@dataclass(frozen=True)
class FeatureRecord:
    instance_id: str
    category_id: str
    scores: tuple[float, ...] = field(repr=False)

    def __post_init__(self):
        scores = tuple(float(s) for s in self.scores)
        for s in scores:
            if not (0.0 <= s <= 1.0):
                raise ValidationError(f"instance {self.instance_id!r}: score {s!r} outside [0, 1]")
        object.__setattr__(self, "scores", scores)


# --------------------------------------------------------------------------- files

def load_schema(path) -> AttributeSchema:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(str(exc), exc.lineno, str(path)) from None
    return AttributeSchema.from_dict(data)


def save_schema(schema: AttributeSchema, path) -> None:
    with open(path, "w") as fh:
        json.dump(schema.to_dict(), fh, indent=2)
        fh.write("\n")


def _read_csv(path, required_prefix: Sequence[str]):
    fh = open(path, newline="")
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        fh.close()
        raise ParseError("empty file", 1, str(path)) from None
    header = [h.strip() for h in header]
    if header[:len(required_prefix)] != list(required_prefix):
        fh.close()
        raise ParseError(f"expected header starting with {','.join(required_prefix)}, got {','.join(header)}",
                         1, str(path))
    return fh, reader, header


def _renormalize(weights: np.ndarray, where: str, line: int | None, path) -> np.ndarray:
    total = float(weights.sum())
    if abs(total - 1.0) > LOAD_RENORM_TOL:
        raise ValidationError(f"{path}: {where}: weights sum to {total!r} (tolerance {LOAD_RENORM_TOL})")
    # leave rows that already sum to one up to rounding untouched so saved tables reload bit-exactly
    return weights / total if abs(total - 1.0) > 1e-12 else weights


def load_attribute_table(path, format: str = "distribution-csv", schema: AttributeSchema | None = None,
                         pool_tag: str | None = None) -> AttributeTable:
    """Read an attribute table.

    ``distribution-csv`` has header ``category,attribute,value,probability``
    with one row per cell; cells missing from the file have weight 0.
    ``binary-label-csv`` has header ``category,a_1,...,a_L`` with 0/1 cells
    and yields degenerate distributions.  Without an explicit schema the
    schema is inferred in first-appearance order (distribution-csv) or as
    binary ``("0", "1")`` attributes named by the header (binary-label-csv).
    Row sums within 1e-6 of one are renormalized; larger deviations raise.
    """
    tag = pool_tag if pool_tag is not None else os.path.splitext(os.path.basename(str(path)))[0]
    if format == "distribution-csv":
        return _load_distribution_csv(path, schema, tag)
    if format == "binary-label-csv":
        return _load_binary_csv(path, schema, tag)
    raise ValidationError(f"unknown table format {format!r}")


def _load_distribution_csv(path, schema, tag) -> AttributeTable:
    fh, reader, _ = _read_csv(path, ["category", "attribute", "value", "probability"])
    cells: dict[str, dict[str, dict[str, float]]] = {}
    first_line: dict[str, int] = {}
    attr_order: dict[str, list[str]] = {}
    with fh:
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 fields, got {len(row)}", line, str(path))
            cat, attr, value, prob = (c.strip() for c in row)
            try:
                p = float(prob)
            except ValueError:
                raise ParseError(f"probability {prob!r} is not a number", line, str(path)) from None
            if not math.isfinite(p) or p < 0 or p > 1:
                raise ParseError(f"probability {prob!r} outside [0, 1]", line, str(path))
            per_attr = cells.setdefault(cat, {}).setdefault(attr, {})
            first_line.setdefault(cat, line)
            if value in per_attr:
                raise ValidationError(f"{path}:{line}: duplicate row for ({cat}, {attr}, {value})")
            per_attr[value] = p
            vals = attr_order.setdefault(attr, [])
            if value not in vals:
                vals.append(value)
    if schema is None:
        schema = AttributeSchema(Attribute(a, tuple(v)) for a, v in attr_order.items())
    profiles = []
    for cat, per_attr in cells.items():
        dists = []
        for attr in schema.attributes:
            got = per_attr.get(attr.id, {})
            unknown = set(got) - set(attr.values)
            if unknown:
                raise ValidationError(f"{path}: category {cat!r}: values {sorted(unknown)} not in {attr.id!r}")
            w = np.array([got.get(v, 0.0) for v in attr.values])
            dists.append(_renormalize(w, f"category {cat!r}, attribute {attr.id!r}", first_line[cat], path))
        extra = set(per_attr) - set(schema.ids)
        if extra:
            raise ValidationError(f"{path}: category {cat!r}: unknown attributes {sorted(extra)}")
        profiles.append(CategoryProfile(cat, tuple(dists)))
    return AttributeTable(schema, profiles, tag)


def _load_binary_csv(path, schema, tag) -> AttributeTable:
    fh, reader, header = _read_csv(path, ["category"])
    attr_ids = header[1:]
    if not attr_ids:
        raise ParseError("no attribute columns", 1, str(path))
    if schema is None:
        schema = AttributeSchema(Attribute(a, ("0", "1")) for a in attr_ids)
    elif schema.ids != attr_ids or not schema.is_binary:
        raise ValidationError(f"{path}: header does not match the supplied binary schema")
    profiles = []
    seen = set()
    with fh:
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line, str(path))
            cat = row[0].strip()
            if cat in seen:
                raise ValidationError(f"{path}:{line}: duplicate category {cat!r}")
            seen.add(cat)
            dists = []
            for attr, cell in zip(schema.attributes, row[1:]):
                cell = cell.strip()
                if cell not in attr.values:
                    raise ParseError(f"cell {cell!r} for {attr.id} is not one of {attr.values}", line, str(path))
                w = np.zeros(attr.size)
                w[attr.values.index(cell)] = 1.0
                dists.append(w)
            profiles.append(CategoryProfile(cat, tuple(dists)))
    return AttributeTable(schema, profiles, tag)


def save_attribute_table(table: AttributeTable, path, format: str = "distribution-csv") -> None:
    """Write ``table``; floats use ``repr`` so a reload is exact."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if format == "distribution-csv":
            w.writerow(["category", "attribute", "value", "probability"])
            for cid, prof in table.profiles.items():
                for attr, dist in zip(table.schema.attributes, prof.distributions):
                    for v, p in zip(attr.values, dist):
                        w.writerow([cid, attr.id, v, repr(float(p))])
        elif format == "binary-label-csv":
            if not table.schema.is_binary:
                raise ValidationError("binary-label-csv needs an all-binary schema")
            w.writerow(["category", *table.schema.ids])
            for cid, prof in table.profiles.items():
                row = [cid]
                for attr, dist in zip(table.schema.attributes, prof.distributions):
                    if sorted(dist.tolist()) != [0.0, 1.0]:
                        raise ValidationError(f"category {cid!r}: {attr.id} is not degenerate")
                    row.append(attr.values[int(np.argmax(dist))])
                w.writerow(row)
        else:
            raise ValidationError(f"unknown table format {format!r}")


def _load_instances(path, kind: str):
    fh, reader, header = _read_csv(path, ["instance", "category"])
    cols = header[2:]
    if not cols:
        raise ParseError(f"no {kind} columns", 1, str(path))
    rows = []
    with fh:
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line, str(path))
            rows.append((line, [c.strip() for c in row]))
    return cols, rows


def load_annotations(path, schema: AttributeSchema | None = None) -> tuple[list[InstanceAnnotation], AttributeSchema]:
    """Read ``instance,category,a_1,...,a_L``; infers sorted value sets when no schema is given."""
    cols, rows = _load_instances(path, "attribute")
    if schema is None:
        value_sets = [sorted({r[2 + i] for _, r in rows}) or ["0", "1"] for i in range(len(cols))]
        schema = AttributeSchema(Attribute(c, tuple(v)) for c, v in zip(cols, value_sets))
    elif schema.ids != cols:
        raise ValidationError(f"{path}: header attributes do not match the schema")
    out = []
    for line, r in rows:
        for attr, v in zip(schema.attributes, r[2:]):
            if v not in attr.values:
                raise ParseError(f"value {v!r} not in {attr.id} value set {attr.values}", line, str(path))
        out.append(InstanceAnnotation(r[0], r[1], tuple(r[2:])))
    return out, schema


def load_features(path) -> list[FeatureRecord]:
    """Read ``instance,category,f_1,...,f_L`` with scores in [0, 1]."""
    _, rows = _load_instances(path, "feature")
    out = []
    for line, r in rows:
        try:
            scores = [float(x) for x in r[2:]]
        except ValueError:
            raise ParseError("non-numeric score", line, str(path)) from None
        try:
            out.append(FeatureRecord(r[0], r[1], tuple(scores)))
        except ValidationError as exc:
            raise ParseError(str(exc), line, str(path)) from None
    return out


def save_features(records: Sequence[FeatureRecord], path, prefix: str = "f_") -> None:
    if not records:
        raise ValidationError("no feature records to write")
    L = len(records[0].scores)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["instance", "category", *[f"{prefix}{i + 1}" for i in range(L)]])
        for r in records:
            w.writerow([r.instance_id, r.category_id, *[repr(s) for s in r.scores]])


# ----------------------------------------------------------------------- aggregation

def _value_counts(annotations: Sequence[InstanceAnnotation], schema: AttributeSchema):
    if not annotations:
        raise ValidationError("no annotations to aggregate")
    lookup = [{v: j for j, v in enumerate(a.values)} for a in schema.attributes]
    offsets = schema.offsets
    counts: dict[str, np.ndarray] = {}
    for ann in annotations:
        if len(ann.values) != schema.n_attributes:
            raise ValidationError(f"instance {ann.instance_id!r}: {len(ann.values)} values for "
                                  f"{schema.n_attributes} attributes")
        row = counts.get(ann.category_id)
        if row is None:
            row = counts[ann.category_id] = np.zeros(schema.n_values, dtype=np.int64)
        for l, v in enumerate(ann.values):
            try:
                row[offsets[l] + lookup[l][v]] += 1
            except KeyError:
                raise ValidationError(f"instance {ann.instance_id!r}: value {v!r} not in "
                                      f"{schema.attributes[l].id!r}") from None
    return counts


def _frequency_matrix(counts: np.ndarray, schema: AttributeSchema) -> np.ndarray:
    """Normalize each attribute block of integer ``counts`` (rows = categories)."""
    out = np.empty(counts.shape, dtype=np.float64)
    o = schema.offsets
    for l in range(schema.n_attributes):
        block = counts[:, o[l]:o[l + 1]]
        out[:, o[l]:o[l + 1]] = block / block.sum(axis=1, keepdims=True)
    return out


def _majority_matrix(counts: np.ndarray, schema: AttributeSchema) -> np.ndarray:
    # argmax returns the first maximum, i.e. ties go to the smaller value index
    out = np.zeros(counts.shape, dtype=np.float64)
    o = schema.offsets
    rows = np.arange(counts.shape[0])
    for l in range(schema.n_attributes):
        winner = np.argmax(counts[:, o[l]:o[l + 1]], axis=1)
        out[rows, o[l] + winner] = 1.0
    return out


def aggregate_frequency(annotations: Sequence[InstanceAnnotation], schema: AttributeSchema,
                        pool_tag: str = "") -> AttributeTable:
    """Empirical value frequencies per (category, attribute)."""
    counts = _value_counts(annotations, schema)
    cats = list(counts)
    return AttributeTable.from_matrix(schema, cats, _frequency_matrix(np.array([counts[c] for c in cats]), schema),
                                      pool_tag)


def aggregate_majority(annotations: Sequence[InstanceAnnotation], schema: AttributeSchema,
                       pool_tag: str = "") -> AttributeTable:
    """Degenerate distribution on the most frequent value; ties go to the smaller value index."""
    counts = _value_counts(annotations, schema)
    cats = list(counts)
    return AttributeTable.from_matrix(schema, cats, _majority_matrix(np.array([counts[c] for c in cats]), schema),
                                      pool_tag)


def _discretize(X: np.ndarray, schema: AttributeSchema, binning: str, threshold: float,
                n_bins: int | None) -> np.ndarray:
    if binning == "threshold":
        if not schema.is_binary:
            raise ValidationError("binary-threshold binning needs an all-binary schema")
        return (X >= threshold).astype(np.intp)
    if binning == "equal-width":
        if n_bins is None or any(s != n_bins for s in schema.sizes):
            raise ValidationError(f"equal-width binning with k={n_bins} needs every value set to have k values "
                                  f"(schema sizes {sorted(set(schema.sizes))})")
        return np.minimum(np.floor(X * n_bins).astype(np.intp), n_bins - 1)
    raise ValidationError(f"unknown binning {binning!r}")


def induce_profiles_array(X, categories: Sequence[str], schema: AttributeSchema, binning: str = "threshold",
                          threshold: float = 0.5, n_bins: int | None = None, pool_tag: str = "induced"
                          ) -> AttributeTable:
    """Array form of ``induce_profiles``; ``X`` has shape (n_instances, L)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != schema.n_attributes:
        raise ValidationError(f"scores must have shape (n, {schema.n_attributes}), got {X.shape}")
    if X.shape[0] == 0:
        raise ValidationError("no feature records")
    if X.shape[0] != len(categories):
        raise ValidationError("scores and categories differ in length")
    if np.any(~np.isfinite(X)) or np.any(X < 0) or np.any(X > 1):
        raise ValidationError("scores must lie in [0, 1]")
    codes = _discretize(X, schema, binning, threshold, n_bins)
    cats, inverse = np.unique(np.asarray(categories, dtype=object), return_inverse=True)
    # keep first-appearance category order
    _, first = np.unique(inverse, return_index=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    inverse = rank[inverse]
    cats = [str(cats[i]) for i in order]
    counts = np.zeros((len(cats), schema.n_values), dtype=np.int64)
    cols = codes + schema.offsets[:-1][None, :]
    np.add.at(counts, (np.repeat(inverse, schema.n_attributes), cols.ravel()), 1)
    return AttributeTable.from_matrix(schema, cats, _frequency_matrix(counts, schema), pool_tag)


def induce_profiles(features: Sequence[FeatureRecord], schema: AttributeSchema, binning: str = "threshold",
                    threshold: float = 0.5, n_bins: int | None = None, pool_tag: str = "induced"
                    ) -> AttributeTable:
    """Discretize predicted attribute scores, then take per-category value frequencies.

    ``binning="threshold"`` maps score >= ``threshold`` to value index 1 and
    anything lower to index 0.  ``binning="equal-width"`` splits [0, 1] into
    ``n_bins`` bins mapped onto the value sets in order (1.0 falls in the last
    bin); every value set must have exactly ``n_bins`` values.
    """
    if not features:
        raise ValidationError("no feature records")
    X = np.array([f.scores for f in features], dtype=np.float64)
    return induce_profiles_array(X, [f.category_id for f in features], schema, binning, threshold, n_bins,
                                 pool_tag)


class AttributeProfileInducer(TransformerMixin, BaseEstimator):
    """Estimator wrapper around ``induce_profiles_array``.

    ``fit(X, y)`` learns ``table_`` from score matrix ``X`` and category
    labels ``y``; ``transform(X)`` returns the discretized value indices.
    """

    def __init__(self, schema: AttributeSchema | None = None, binning: str = "threshold",
                 threshold: float = 0.5, n_bins: int | None = None):
        self.schema = schema
        self.binning = binning
        self.threshold = threshold
        self.n_bins = n_bins

    def _schema(self, n_features):
        if self.schema is not None:
            return self.schema
        if self.binning == "equal-width" and self.n_bins:
            return AttributeSchema(Attribute(f"a_{i + 1}", tuple(str(v) for v in range(self.n_bins)))
                                   for i in range(n_features))
        return AttributeSchema.binary(n_features)

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64)
        self.schema_ = self._schema(X.shape[1])
        self.table_ = induce_profiles_array(X, [str(c) for c in y], self.schema_, self.binning,
                                            self.threshold, self.n_bins)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "table_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return _discretize(X, self.schema_, self.binning, self.threshold, self.n_bins)
