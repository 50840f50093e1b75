"""Exception hierarchy shared by all modules.

Every error carries a category and an exit code so the CLI can map
failures onto its documented exit codes (2 config, 3 data, 4 numeric).
"""


class PatclassError(Exception):
    category = "data"
    exit_code = 3


class ConfigError(PatclassError):
    category = "config"
    exit_code = 2


class TaxonomyError(ConfigError):
    """Invalid classification-scheme definition."""


class QueryParseError(ConfigError):
    """Malformed keyword query text."""


class CorpusError(PatclassError):
    """Unreadable or empty raw corpus."""


class DatasetError(PatclassError):
    """Invalid labeled dataset, or one that cannot be built."""


class CheckpointError(PatclassError):
    """Checkpoint file missing, corrupt, or incompatible."""


class NumericError(PatclassError):
    category = "numeric"
    exit_code = 4
