"""Exception types shared across the package.

InputError covers missing or unparseable inputs (CLI exit code 1),
ValidationError covers well-formed inputs that violate a contract
(CLI exit code 2).  ValidationError subclasses ValueError so that
library-level `raise ValueError` and file-level validation failures
can be handled uniformly by callers that do not care about exit codes.
"""


class VapEvalError(Exception):
    pass


class InputError(VapEvalError):
    """A required input is missing, unreadable, or unparseable."""


class ValidationError(VapEvalError, ValueError):
    """An input parsed fine but violates an invariant of its format."""
