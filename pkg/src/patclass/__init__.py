"""Weakly supervised hierarchical multi-label patent classification.

Builds a labeled dataset from a raw patent corpus with per-class
proximity keyword queries, trains flat or hierarchy-wired neural
classifiers from scratch, evaluates them with hierarchical metrics, and
explains predictions with integrated gradients.
"""

__version__ = "0.1.0"

from patclass.errors import (
    CheckpointError,
    ConfigError,
    CorpusError,
    DatasetError,
    NumericError,
    PatclassError,
    QueryParseError,
    TaxonomyError,
)
from patclass.taxonomy import (
    Taxonomy,
    default_taxonomy,
    load_taxonomy,
    load_taxonomy_file,
    propagate,
)

__all__ = [
    "CheckpointError",
    "ConfigError",
    "CorpusError",
    "DatasetError",
    "NumericError",
    "PatclassError",
    "QueryParseError",
    "Taxonomy",
    "TaxonomyError",
    "default_taxonomy",
    "load_taxonomy",
    "load_taxonomy_file",
    "propagate",
    "__version__",
]
