"""Exception types shared across the toolkit.

ValidationError covers bad inputs and bad configuration; the CLI maps it to
exit code 1. Anything else escaping a verb maps to exit code 2.
"""


class ValidationError(ValueError):
    """Input, parameter, or configuration rejected before any work ran."""


class CorpusError(ValidationError):
    """Corpus file malformed; message names the offending dialogue/turn."""


class EmbeddingFormatError(ValidationError):
    """Embedding interchange file rejected."""


class MagicMismatchError(EmbeddingFormatError):
    pass


class TruncatedPayloadError(EmbeddingFormatError):
    pass


class KeyCountMismatchError(EmbeddingFormatError):
    pass


class NonFiniteValueError(EmbeddingFormatError):
    pass


class UndefinedSimilarityError(ValidationError):
    """Cosine similarity requested against a zero-norm vector."""


class ParameterError(ValidationError):
    """Algorithm parameters violate a precondition."""


class UndefinedScoreError(ValidationError):
    """A score has no defined value for this input (e.g. all points noise)."""


class MissingAssignmentError(ValidationError):
    """A corpus utterance has no cluster assignment."""


class GazetteerError(ValidationError):
    """Gazetteer source rejected or an invariant violated at build time."""


class ConfigError(ValidationError):
    """Pipeline configuration file rejected."""
