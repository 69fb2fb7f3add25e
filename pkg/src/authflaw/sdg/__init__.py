"""System dependence graph, dependence facts and OAuth tags."""

from .dependence import DEPENDENCE_RULES, base_db, derive_dependence_facts
from .graph import SDG, ControlEdge, DataEdge, ScopeError, build_sdg
from .pointsto import PointsTo, compute_points_to
from .tags import (
    STRUCTURAL_TAGS,
    VALUE_TAGS,
    VOCABULARY,
    TagConfig,
    TagConfigError,
    TagFact,
    compute_oauth_tags,
    seed_tags,
    tag_database,
)

__all__ = [
    "DEPENDENCE_RULES",
    "SDG",
    "STRUCTURAL_TAGS",
    "VALUE_TAGS",
    "VOCABULARY",
    "ControlEdge",
    "DataEdge",
    "PointsTo",
    "ScopeError",
    "TagConfig",
    "TagConfigError",
    "TagFact",
    "base_db",
    "build_sdg",
    "compute_oauth_tags",
    "compute_points_to",
    "derive_dependence_facts",
    "seed_tags",
    "tag_database",
]
