"""Task Attribute Distance toolkit for few-shot learning tasks."""

from ._validation import InfeasibleError, ParseError, TadError, ValidationError
from .attributes import (
    Attribute,
    AttributeProfileInducer,
    AttributeSchema,
    AttributeTable,
    CategoryProfile,
    FeatureRecord,
    InstanceAnnotation,
    aggregate_frequency,
    aggregate_majority,
    induce_profiles,
    induce_profiles_array,
    load_annotations,
    load_attribute_table,
    load_features,
    load_schema,
    save_attribute_table,
    save_features,
    save_schema,
    validate_table,
)
from .distance import category_distance, delta_term, lemma1_check, tv_distance, vc_complexity_term
from .matching import Matching, brute_force_min_weight, hungarian_min_weight
from .tad import (
    TadResult,
    TaskAttributeDistance,
    TaskSpec,
    avg_distance_to_pool,
    build_cost_matrix,
    distance_matrix,
    tad_approx,
    tad_orig,
)

__version__ = "0.1.0"

__all__ = [
    "Attribute",
    "AttributeProfileInducer",
    "AttributeSchema",
    "AttributeTable",
    "CategoryProfile",
    "FeatureRecord",
    "InfeasibleError",
    "InstanceAnnotation",
    "Matching",
    "ParseError",
    "TadError",
    "TadResult",
    "TaskAttributeDistance",
    "TaskSpec",
    "ValidationError",
    "aggregate_frequency",
    "aggregate_majority",
    "avg_distance_to_pool",
    "brute_force_min_weight",
    "build_cost_matrix",
    "category_distance",
    "delta_term",
    "distance_matrix",
    "hungarian_min_weight",
    "induce_profiles",
    "induce_profiles_array",
    "lemma1_check",
    "load_annotations",
    "load_attribute_table",
    "load_features",
    "load_schema",
    "save_attribute_table",
    "save_features",
    "save_schema",
    "tad_approx",
    "tad_orig",
    "tv_distance",
    "validate_table",
    "vc_complexity_term",
    "__version__",
]
