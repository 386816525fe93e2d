"""Exception hierarchy shared across the toolkit."""


class MoodFusionError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(MoodFusionError):
    """Tensor or parameter shapes are inconsistent with the operation."""


class SequenceTooShortError(DimensionError):
    """Sequence is shorter than the convolution kernel requires."""


class AlignmentError(DimensionError):
    """Modality sequences disagree on their time dimension."""


class DegenerateBatchError(MoodFusionError):
    """Too few samples to compute batch statistics."""


class EmptySequenceError(MoodFusionError):
    """An operation received a zero-length sequence."""


class ConfigurationError(MoodFusionError):
    """Invalid hyperparameter, option, or config document."""


class ContractError(MoodFusionError):
    """An API precondition was violated (e.g. backward on a non-scalar)."""


class ValidationError(MoodFusionError):
    """A data record violates its invariants."""


class SplitError(MoodFusionError):
    """Cohort cannot be partitioned as requested."""


class MetricError(MoodFusionError):
    """Metric is undefined for the given inputs."""


class TrainingError(MoodFusionError):
    """A training run or experiment repeat failed."""
