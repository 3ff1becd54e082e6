"""Exception hierarchy shared by every module."""


class AdvGPError(Exception):
    """Base class for all package errors."""


class ValidationError(AdvGPError, ValueError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NoiseShapeMismatch(ValidationError):
    pass


class NonFiniteValue(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class MissingHyperparameter(AdvGPError, KeyError):
    pass


class UnsupportedNu(ValidationError):
    pass


class EmptyChildList(ValidationError):
    pass


class AxisOutOfRange(ValidationError):
    pass


class EmptyTransformList(ValidationError):
    pass


class NonPositivePeriod(ValidationError):
    pass


class SingularAverageMatrix(AdvGPError, ArithmeticError):
    pass


class NonSPDField(ValidationError):
    pass


class NumericalError(AdvGPError, ArithmeticError):
    """Base for failures that map to the CLI's numerical exit code."""


class NotFactorizable(NumericalError):
    pass


class AllRestartsFailed(NumericalError):
    pass


class InconsistentPosterior(NumericalError):
    """Posterior variance came out more negative than round-off allows."""


class EmptyGrid(ValidationError):
    pass


class ConfigError(AdvGPError):
    pass


class ParseError(AdvGPError, ValueError):
    def __init__(self, message, line=None, column=None):
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)
        self.line = line
        self.column = column


class SchemaError(AdvGPError, ValueError):
    pass
