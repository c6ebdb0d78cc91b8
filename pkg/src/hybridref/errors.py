"""Exception hierarchy shared by all hybridref modules.

The CLI maps these onto exit codes: configuration problems exit 2, data
problems exit 1, everything else is a bug and propagates.
"""


class HybridrefError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(HybridrefError):
    """Tensor shapes violate an operation's contract."""


class ParameterError(HybridrefError):
    """A numeric argument is outside its legal range (eps <= 0, stddev <= 0, ...)."""


class DomainError(HybridrefError):
    """A value is outside the mathematical domain of an operation (log of <= 0, ...)."""


class VocabError(HybridrefError):
    """Token id out of range or a malformed vocabulary."""


class ConfigError(HybridrefError):
    """Invalid or inconsistent run configuration."""


class DataError(HybridrefError):
    """Malformed instances, corpora, or prediction records."""


class ConversionError(DataError):
    """NLI pair could not be converted (no pronoun found, ...)."""


class AlignmentError(DataError):
    """LCS matches in the hypothesis overlap or are out of order."""


class TrainingError(HybridrefError):
    """Optimization failed in a way that must stop the run (NaN gradients, ...)."""
