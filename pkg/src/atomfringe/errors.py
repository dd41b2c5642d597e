"""Exception hierarchy shared by all modules."""


class AtomfringeError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(AtomfringeError, ValueError):
    """An input lies outside the validity domain of a formula."""


class CoverageError(AtomfringeError, ValueError):
    """A sampled profile or grid does not cover the requested coordinates."""


class ConfigError(AtomfringeError, ValueError):
    """A scenario configuration is invalid; message carries the field path."""


class NumericalError(AtomfringeError, RuntimeError):
    """A numerical procedure failed (non-convergence, degeneracy, ...)."""


class IdentifiabilityError(NumericalError):
    """Fit data cannot constrain all model parameters.

    ``parameters`` lists the names of the unconstrained parameters.
    """

    def __init__(self, message: str, parameters: tuple[str, ...] = ()):
        super().__init__(message)
        self.parameters = parameters


class TuningWarning(UserWarning):
    """The two capacitor phases are not balanced well enough for the
    shared-mean first-order defect decomposition to be accurate."""
