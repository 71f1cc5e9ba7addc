"""Exception hierarchy shared by the numerical modules."""


class CknError(Exception):
    """Base class for all library errors."""


class DomainError(CknError, ValueError):
    """Parameters outside the domain where a formula is defined."""


class GridMismatch(CknError, ValueError):
    """Two functions live on different grids or angular modes."""


class ModeError(CknError, ValueError):
    """A radial-only functional was called on a non-radial mode."""


class GridTooNarrow(CknError, ValueError):
    """A bubble tail is not negligible at the truncation boundary."""


class NumericalFailure(CknError, RuntimeError):
    """An iterative method failed; the CLI maps these to exit code 2."""


class ConvergenceError(NumericalFailure):
    """Eigensolver failure."""


class BracketError(NumericalFailure):
    """No sign change was found inside the search interval."""


class NonConvergence(NumericalFailure):
    """Newton iteration hit its iteration budget."""


class SingularBordered(NumericalFailure):
    """The constraint block of a bordered system is degenerate."""


class NoDescent(NumericalFailure):
    """Every start of a distance minimization failed."""
