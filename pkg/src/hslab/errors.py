"""Exception types shared across the package."""


class HslabError(Exception):
    """Base class for all package-specific errors."""


class ZeroDifferential(HslabError):
    """The zero quadratic differential was passed where a nonzero one is required."""


class RootFindFailure(HslabError):
    """Simultaneous root iteration failed to converge."""


class NoZeros(HslabError):
    """The differential has no zeros in the chart."""


class ChartMismatch(HslabError):
    """Operands live in different coordinate charts."""


class DegenerateChart(HslabError):
    """The normalized single-zero chart P = c*z requires c != 0."""


class RegionOutOfBounds(HslabError):
    """A quadrature region (or circle) exceeds the grid interior."""


class SampleOutOfBounds(HslabError):
    """An interpolation point lies outside the grid hull."""


class Overflow(HslabError):
    """Argument too large for a non-scaled special function."""


class DomainError(HslabError):
    """Argument outside the mathematical domain of the operation."""


class ValidationError(HslabError):
    """Problem data violates a documented precondition."""


class ConvergenceFailure(HslabError):
    """An iterative solver did not reach its tolerance.

    For the Newton solver the partially converged field and its report are
    attached as ``.u`` and ``.report`` so callers can still inspect them.
    """

    def __init__(self, message, u=None, report=None):
        super().__init__(message)
        self.u = u
        self.report = report


class FitError(HslabError):
    """Envelope fit had insufficient usable data."""


class ConfigError(HslabError):
    """Config text is malformed or violates an invariant.

    ``line`` is the 1-based line number of the offending entry, or None for
    whole-file problems.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
