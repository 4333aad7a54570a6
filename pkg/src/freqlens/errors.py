"""Exception types shared across the toolkit."""


class FreqlensError(Exception):
    """Base class for all toolkit errors."""


class DictionaryError(FreqlensError):
    """Invalid term dictionary (duplicate patterns, bad ids, empty patterns)."""


class CorpusIntegrityError(FreqlensError):
    """Corpus bytes on disk do not agree with the manifest."""


class InfeasiblePlanError(FreqlensError):
    """Requested planted counts cannot fit in the corpus shape."""


class ConfigError(FreqlensError):
    """Experiment config failed to parse or validate."""


class StageError(FreqlensError):
    """A pipeline stage failed; the run manifest records partial completion."""
