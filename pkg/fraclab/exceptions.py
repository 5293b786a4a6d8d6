"""
Exceptions that are shared between modules
"""


class FraclabError(Exception):
    """
    Base class for all errors raised by the laboratory.
    """


class ConfigurationError(FraclabError, ValueError):
    """
    An exception to be raised when a configuration or a parameter set is
    invalid: unknown keys, values outside their admissible range, conflicting
    options.
    """


class CalibrationMissingError(ConfigurationError):
    """
    No calibrated Riesz constant is available for the requested discretization.
    """

    def __init__(self, key):
        """
        Set the message from the cache key.

        :key: Calibration cache key that was not found
        """
        super().__init__(f"No calibration found for {key}. Run the "
                         "`calibrate` command for this configuration first.")
        self.key = key


class NumericalFailure(FraclabError):
    """
    A computation could not produce a trustworthy result, e.g. NaN values
    appeared or an iteration did not converge where convergence is required.
    """

    def __init__(self, message, report=None):
        """
        Set the message and an optional diagnostic object.

        :message: Description of the failure
        :report: Object carrying diagnostics (e.g. a SolveReport)
        """
        super().__init__(message)
        self.report = report


class CalibrationFailure(NumericalFailure):
    """
    The Riesz constant could not be calibrated reliably on the given grid.
    """


class BoxTooSmallError(NumericalFailure):
    """
    The coincidence set reaches the boundary of the truncated domain.
    """


class FitError(NumericalFailure):
    """
    A least-squares polynomial fit could not be performed.
    """


class RankDeficientFitError(FitError):
    """
    The sample set does not determine the fitted coefficients.
    """


class SymmetryViolationError(FraclabError, ValueError):
    """
    A polynomial that has to be even in the last variable is not.
    """


class SupportProximityError(FraclabError, ValueError):
    """
    A potential was requested too close to the support of its density.
    """


class MembershipError(FraclabError, ValueError):
    """
    A polynomial could not be certified to belong to the asymptotics class.
    """
