"""Exception hierarchy shared by all modules."""


class DualHelmError(Exception):
    """Base class for every error raised by the package."""


class ParameterError(DualHelmError, ValueError):
    pass


class InvalidRegime(ParameterError):
    """(alpha, beta) outside the three supported coefficient regimes."""


class DoubleRoot(InvalidRegime):
    """beta**2 - 4*alpha vanishes (up to tolerance): the factorization degenerates."""


class UnsupportedDimension(ParameterError):
    pass


class ExponentOutOfRange(ParameterError):
    pass


class OrderOverflow(ParameterError):
    pass


class ZeroArgument(ParameterError):
    pass


class LaplaceDimension(ParameterError):
    pass


class FitFailure(DualHelmError):
    pass


class SingularShell(DualHelmError):
    """A lattice frequency sits on a singular shell |xi|^2 = a_j with no absorption."""


class ShapeMismatch(DualHelmError, ValueError):
    pass


class NonConvergent(DualHelmError):
    pass


class NotInUPlus(DualHelmError):
    """The quadratic form is not positive, so no Nehari rescaling exists."""


class StalledLineSearch(DualHelmError):
    """Backtracking could not find an acceptable step.

    The last iterate and the partial report are attached so callers can still
    inspect or persist them.
    """

    def __init__(self, message, state=None, report=None):
        super().__init__(message)
        self.state = state
        self.report = report


class ZeroField(DualHelmError, ValueError):
    pass


class PreconditionError(DualHelmError, ValueError):
    pass


class ConfigError(DualHelmError):
    pass


class ParseError(ConfigError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(ConfigError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
