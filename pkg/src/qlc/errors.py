"""Exception types shared across the package.

Each error class carries a distinct process exit code so the command line
front end can report failures without string matching.
"""

from __future__ import annotations


class QlcError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ContractViolation(QlcError, ValueError):
    """An input broke a documented precondition (shape, norm, distance...)."""

    exit_code = 2


class CapacityError(QlcError):
    """The requested instance exceeds the dense-simulation size cap."""

    exit_code = 3


class AdmissibilityError(QlcError, ValueError):
    """Protocol parameters fall outside the admissible window."""

    exit_code = 4


class InsufficientCutoffError(QlcError):
    """A Fock or occupation cutoff is too small for the requested accuracy."""

    exit_code = 5


class NotSmallRotationError(QlcError, ValueError):
    """A unitary is too far from the identity for a principal-branch log."""

    exit_code = 6
