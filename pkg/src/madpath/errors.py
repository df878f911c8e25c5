"""Exception types shared across the toolkit."""


class MadpathError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(MadpathError):
    """CSV does not match the declared schema (missing column, bad label...)."""


class ParseError(MadpathError):
    """CSV cell could not be parsed; message carries the row index."""


class DegenerateColumnError(MadpathError):
    """A continuous column has zero variance on the fit rows."""


class TooFewRowsError(MadpathError):
    """Not enough rows to produce a train/valid/test split."""


class UndefinedMetricError(MadpathError):
    """Metric undefined for the given inputs (e.g. AUC with one class)."""


class DimensionMismatchError(MadpathError):
    """Vector/matrix dimensions disagree."""


class NumericError(MadpathError):
    """A numeric quantity became NaN/inf; message names the offending term."""


class InfeasibleCellCountError(MadpathError):
    """Requested more cells than training points."""


class ConvergenceError(MadpathError):
    """An iterative fit failed to converge."""


class DomainError(MadpathError):
    """Function argument outside its mathematical domain (e.g. logit(0))."""


class UnreachableTargetError(MadpathError):
    """Requested probability drop leaves the classifier's range."""


class NoControlError(MadpathError):
    """Accessible features cannot move the classifier score."""


class UnsupportedError(MadpathError):
    """Operation not available for this model/geometry."""
