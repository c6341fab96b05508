"""Exception types shared across the toolkit."""


class CorrError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgument(CorrError, ValueError):
    pass


class IncompatibleOperands(CorrError, ValueError):
    pass


class NotAHomomorphism(CorrError):
    pass


class NotPositiveSemidefinite(CorrError):
    def __init__(self, message: str, min_eigenvalue: float = float("nan")):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class NotCompletelyPositive(CorrError):
    pass


class NotLinear(CorrError):
    pass


class PreconditionViolated(CorrError):
    pass


class IdealNotRespected(CorrError):
    pass


class NotAMorphism(CorrError):
    pass


class NotBiHilbertian(CorrError):
    def __init__(self, message: str, axiom: str = ""):
        super().__init__(message)
        self.axiom = axiom


class IndexNotInvertible(CorrError):
    pass


class NotACover(CorrError):
    pass


class InconsistentSubproduct(CorrError):
    pass


class ParseError(CorrError):
    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class EqualityUndecidable(CorrError):
    pass
