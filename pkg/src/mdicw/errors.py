"""Exception hierarchy shared by every module."""


class MdicwError(ValueError):
    """Base class for all errors raised by the package."""


class InvalidState(MdicwError):
    pass


class InvalidEffect(MdicwError):
    pass


class InvalidBasis(MdicwError):
    pass


class DegeneratePovm(MdicwError):
    pass


class InfeasibleProbabilities(MdicwError):
    """The four test-state probabilities are not realizable by a qubit POVM."""


class EmptyRecord(MdicwError):
    pass


class InvalidIntensities(MdicwError):
    pass


class InfeasibleIntervals(MdicwError):
    """Decoy estimation produced a lower yield bound above the upper one."""


class InfeasibleRegion(MdicwError):
    """No POVM in the yield box satisfies the positivity constraints."""


class UnknownState(MdicwError):
    pass


class OptimizationFailed(MdicwError):
    pass


class SeedLengthError(MdicwError):
    pass


class DataError(MdicwError):
    """Input data is malformed or incomplete (CLI exit code 65)."""


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UsageError(MdicwError):
    """Bad command-line usage or configuration (CLI exit code 64)."""
