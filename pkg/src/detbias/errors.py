"""Exception hierarchy shared by all detbias modules."""


class DetbiasError(Exception):
    """Base class for all errors raised by this package."""


class MalformedStream(DetbiasError):
    """Byte stream violates its container format (truncated, bad magic, ...)."""


class UnsupportedStream(DetbiasError):
    """Stream is valid but uses a feature we do not handle (arithmetic coding,
    12-bit precision, progressive decode, interlaced PNG, ...)."""


class DomainError(DetbiasError):
    """Argument outside its documented domain."""


class IoError(DetbiasError):
    """Filesystem-level failure (unreadable root, unwritable output)."""


class EmptyDistribution(DetbiasError):
    """Histogram or grid with zero total where a distribution is required."""


class ShapeMismatch(DetbiasError):
    """Two histograms/grids/matrices do not share binning or labels."""


class InsufficientData(DetbiasError):
    """A split constraint left one side empty."""


class ConstraintViolation(DetbiasError):
    """Input data violates a split constraint (e.g. generator size outside
    the allowed interval)."""


class DegenerateData(DetbiasError):
    """Training data with a single class."""


class EmptyEval(DetbiasError):
    """Evaluation requested over zero records."""


class ParseError(DetbiasError):
    """Fatal error reading a structured input file (bad header, bad JSON)."""


class MissingCell(DetbiasError):
    """A train/eval grid is not rectangular; carries the absent pairs."""

    def __init__(self, pairs):
        self.pairs = list(pairs)
        super().__init__(f"missing cells: {self.pairs}")


class JoinError(DetbiasError):
    """Prediction paths that could not be resolved to scanned metadata."""

    def __init__(self, paths):
        self.paths = list(paths)
        super().__init__(f"unresolvable paths: {self.paths[:5]}"
                         + ("..." if len(self.paths) > 5 else ""))
