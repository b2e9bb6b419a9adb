"""Exception hierarchy shared by all modules."""


class SecrecyError(Exception):
    """Base class for library errors."""


class SpecError(SecrecyError, ValueError):
    """Invalid channel description or model parameters."""


class UnsupportedFamilyError(SpecError):
    """Requested representation does not exist for this fading family."""


class PoleError(SecrecyError, ValueError):
    """Gamma function evaluated at a non-positive integer."""


class DivergenceError(SecrecyError):
    """Fox H parameters for which the Mellin-Barnes integral does not converge."""


class AccuracyError(SecrecyError):
    """A numerical routine could not reach its tolerance.

    ``estimate`` holds the best value obtained and ``bound`` the error bound
    that failed the check.
    """

    def __init__(self, message, estimate=None, bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.bound = bound
