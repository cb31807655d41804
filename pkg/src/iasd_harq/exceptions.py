"""Exception types raised across the package."""


class IasdError(ValueError):
    """Base class for all package errors."""


class NonHermitian(IasdError):
    pass


class NonFinite(IasdError):
    pass


class LengthMismatch(IasdError):
    pass


class DimensionMismatch(IasdError):
    pass


class ShapeMismatch(IasdError):
    pass


class HypothesisCapExceeded(IasdError):
    """Raised when exhaustive detection would enumerate too many hypotheses.

    This is the expected failure mode of stacking combining once the
    number of stacked interference blocks grows.
    """

    def __init__(self, count, cap):
        super().__init__(f"{count} joint hypotheses exceed the cap of {cap}")
        self.count = count
        self.cap = cap


class UnknownScheme(IasdError):
    pass


class ConfigError(IasdError):
    pass
