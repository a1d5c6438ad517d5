"""Exception hierarchy shared by all modules."""


class QlaError(Exception):
    """Base class for every error raised by this package."""


class InvalidConfig(QlaError, ValueError):
    """Model, distribution or simulation parameters are invalid."""


class DomainError(QlaError, ValueError):
    """A transform was evaluated at or beyond its abscissa of convergence."""


class TruncationError(QlaError):
    """Arrival-count sequence was truncated with too much missing mass."""


class DegenerateVacation(QlaError, ValueError):
    """nu_0 == 1: the boundary sequence b_j is undefined."""


class KernelTooShort(QlaError, ValueError):
    """The count kernel does not reach the indices a matrix needs."""


class PrecisionLoss(QlaError, ArithmeticError):
    """Forward recursion produced a negative measure entry (cancellation)."""


class NoRootError(QlaError):
    """The fixed-point equation has no root in the mandated interval."""


class UnclassifiableError(QlaError):
    """The model falls outside every asymptotic regime that has a formula."""


# errors the CLI maps to exit code 3
NUMERIC_ERRORS = (PrecisionLoss, NoRootError, UnclassifiableError, DomainError,
                  TruncationError)
