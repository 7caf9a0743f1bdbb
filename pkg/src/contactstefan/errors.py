"""Exception types raised by the solver."""


class StefanError(Exception):
    """Base class for every error raised by this package."""


class RangeError(StefanError, ValueError):
    """A coefficient was evaluated outside its declared temperature range."""


class DomainError(StefanError, ValueError):
    """An argument lies outside the domain of a model function."""


class ModelDomainError(StefanError):
    """The physical parameters do not admit the model (e.g. no ignition)."""


class QuadratureError(StefanError):
    """Adaptive quadrature hit its depth limit before meeting the tolerance."""

    def __init__(self, message, partial, error_estimate):
        super().__init__(message)
        self.partial = partial
        self.error_estimate = error_estimate


class ConvergenceError(StefanError):
    """Picard iteration did not reach the requested tolerance."""

    def __init__(self, message, ratios=(), update_norms=()):
        super().__init__(message)
        self.ratios = list(ratios)
        self.update_norms = list(update_norms)


class HypothesisError(StefanError):
    """An iterate violated one of the per-iterate coefficient hypotheses."""

    def __init__(self, message, tag, worst_point=None):
        super().__init__(message)
        self.tag = tag
        self.worst_point = worst_point


class WindowError(StefanError):
    """No bracket for a contraction window could be found."""


class NoRootError(StefanError):
    """The interface equation showed no sign change on the scan grid."""

    def __init__(self, message, scan_xi=(), scan_values=()):
        super().__init__(message)
        self.scan_xi = list(scan_xi)
        self.scan_values = list(scan_values)


class OracleError(StefanError):
    """The shooting oracle failed to converge."""


class ConfigError(StefanError):
    """Configuration could not be parsed or validated."""

    def __init__(self, message, field=None, line=None):
        where = []
        if field:
            where.append(field)
        if line is not None:
            where.append(f"line {line}")
        full = f"{' @ '.join(where)}: {message}" if where else message
        super().__init__(full)
        self.field = field
        self.line = line
