"""Exception types shared across the package."""


class EigendesignError(Exception):
    """Base class for all errors raised by this package."""


class PastPrincipalBranchError(EigendesignError):
    """Trial eigenvalue lies beyond the first interior zero of the profile."""


class BracketingError(EigendesignError):
    """A root bracketing scan failed; the message carries the scanned interval."""


class CrossCheckError(EigendesignError):
    """Two independent realizations of the same quantity disagree."""


class QuadratureError(EigendesignError):
    """Adaptive quadrature could not reach the requested accuracy."""


class MeshFormatError(EigendesignError):
    """Mesh text is malformed; carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MeshConformityError(EigendesignError):
    """Mesh topology is inconsistent (shared edges, degenerate elements)."""


class EigenSolveError(EigendesignError):
    """Inner eigenvalue iteration failed or produced an invalid eigenvector."""


class NonNegativeAverageWeightError(EigendesignError):
    """The weight has nonnegative average, so no positive principal eigenvalue exists."""
