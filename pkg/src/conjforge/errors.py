"""Exception taxonomy shared across the library.

Every condition the library can certify but not resolve gets its own class so
callers (and the CLI exit-code mapping) can tell them apart.
"""


class ForgeError(Exception):
    """Base class for all library-specific errors."""


class OutOfDomainError(ForgeError):
    """An input was certified to lie outside the function's domain."""


class NotInCantorSetError(ForgeError):
    """A real was certified to lie outside the shrunken middle-thirds set."""


class PrecisionExhaustedError(ForgeError):
    """The configured precision ceiling was reached before a certificate."""


class BudgetExhaustedError(ForgeError):
    """An iteration or search budget ran out before the answer was certified."""


class MalformedOrderError(ForgeError):
    """A linear-order specification violated totality or transitivity."""


class SpecParseError(ForgeError):
    """A spec file failed to parse; carries a line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedTreeOperationError(ForgeError):
    """The tree does not expose the structural capability that was asked for."""


class OrderIsoValidationError(ForgeError):
    """A claimed path-order isomorphism failed a consistency check."""


class OracleInconsistencyError(ForgeError):
    """A zero-oracle verdict was contradicted by inspected bits."""


class LabelNotFoundError(ForgeError):
    """A terminal bit prefix did not match any label of the target tree."""
