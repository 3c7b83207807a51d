"""Exception hierarchy.

Each family maps to one CLI exit code: parse errors exit 2, validation errors
exit 3, size/cutoff guards exit 4.
"""


class OpMPSError(Exception):
    exit_code = 1


class ParseError(OpMPSError):
    exit_code = 2


class ValidationError(OpMPSError, ValueError):
    exit_code = 3


class GuardError(OpMPSError):
    exit_code = 4


class NonSquare(ValidationError):
    pass


class NotUnitary(ValidationError):
    def __init__(self, residual: float, tol: float):
        super().__init__(f"matrix is not unitary: residual {residual:.3e} > tol {tol:.1e}")
        self.residual = residual
        self.tol = tol


class DimensionMismatch(ValidationError):
    pass


class PatternMismatch(ValidationError):
    pass


class IndexOutOfRange(ValidationError, IndexError):
    pass


class EtaOutOfRange(ValidationError):
    pass


class InvalidWeights(ValidationError):
    pass


class WeightOverflow(ValidationError):
    pass


class TooLarge(GuardError):
    pass


class SizeLimit(GuardError):
    pass


class CutoffTooSmall(GuardError):
    pass
