"""Exception hierarchy for the chfsi package.

Every error raised by the library derives from ChfsiError so callers can
catch broadly; the CLI maps subclasses onto exit codes.
"""


class ChfsiError(Exception):
    """Base class for all chfsi errors."""


class ContractViolation(ChfsiError):
    """An operation was called with arguments violating its preconditions."""


class DimensionMismatch(ContractViolation):
    """Operand shapes are incompatible."""


class NotPositiveDefinite(ChfsiError):
    """Cholesky factorization hit a non-positive pivot.

    Attributes
    ----------
    pivot : int
        1-based index of the failing pivot.
    """

    def __init__(self, pivot):
        self.pivot = int(pivot)
        super().__init__(f"matrix not positive definite: pivot {self.pivot} <= 0")


class RankDeficient(ChfsiError):
    """A QR panel lost a column to numerical rank collapse.

    Attributes
    ----------
    column : int
        0-based index of the collapsed column.
    """

    def __init__(self, column):
        self.column = int(column)
        super().__init__(f"rank collapse in column {self.column}")


class OracleNoConvergence(ChfsiError):
    """The Jacobi oracle exhausted its sweep budget."""


class FilterDegenerate(ChfsiError):
    """Filter interval placement is ill-posed (wanted/unwanted overlap).

    Usually means the lambda_ref estimate fell inside [a, b]; a larger
    buffer column count gives a better-separated lambda_{nev+1} estimate.
    """


class NotConverged(ChfsiError):
    """The solver exceeded max_outer_iters.

    Carries whatever converged so far plus the full report.

    Attributes
    ----------
    eigenvalues : ndarray
        Locked eigenvalues (may be fewer than nev).
    eigenvectors : ndarray
        Locked eigenvectors, one column per locked value.
    report : SolveReport
    """

    def __init__(self, message, eigenvalues, eigenvectors, report):
        self.eigenvalues = eigenvalues
        self.eigenvectors = eigenvectors
        self.report = report
        super().__init__(message)


class MatrixFileError(ChfsiError):
    """Base class for matrix-file format errors."""


class BadMagic(MatrixFileError):
    """File does not start with the expected magic string (offset 0)."""

    offset = 0


class TruncatedPayload(MatrixFileError):
    """Payload shorter (or longer) than the header promises.

    Attributes
    ----------
    expected : int
        Expected payload byte count.
    actual : int
        Byte count actually present.
    offset : int
        Byte offset where the payload starts.
    """

    def __init__(self, expected, actual, offset):
        self.expected = int(expected)
        self.actual = int(actual)
        self.offset = int(offset)
        super().__init__(
            f"truncated payload: expected {self.expected} bytes from offset "
            f"{self.offset}, found {self.actual}"
        )


class SymmetryViolation(MatrixFileError):
    """Matrix stored under kind 'hermitian' deviates too far from Hermitian."""


class ConfigError(ChfsiError):
    """Run-configuration file could not be parsed or contains unknown keys."""
