"""Exception types shared across the package."""


class TnfactError(Exception):
    """Base class for all package errors."""


class ShapeError(TnfactError, ValueError):
    """Tensor shapes or index pairs are inconsistent."""


class DenseCapExceeded(TnfactError):
    """A dense materialization would exceed the configured entry cap."""

    def __init__(self, entries, cap):
        self.entries = entries
        self.cap = cap
        super().__init__(
            f"dense tensor would hold {entries} entries, exceeding the cap of {cap}"
        )


class ZeroNormalizationError(TnfactError):
    """The model's normalization constant is zero (or negative), so no
    probability distribution is defined."""


class ZeroProbabilitySample(TnfactError):
    """A data sample has zero model probability; carries the sample index."""

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"sample {index} has zero probability")


class NumericalError(TnfactError):
    """A numerical routine failed in a way that retrying cannot fix."""


class DataFormatError(TnfactError, ValueError):
    """A dataset file violates the CSV contract; carries the 1-based line."""

    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")
