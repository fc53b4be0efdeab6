"""Exception hierarchy with stable machine-readable codes.

Every error carries a ``code`` string and an ``exit_status`` used by the CLI:
2 input, 3 validation, 4 non-convergence, 5 degenerate, 6 panel.
"""

from __future__ import annotations

from typing import Any


class VxcError(Exception):
    code = "error"
    exit_status = 1

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> dict[str, Any]:
        return {"error": self.code, "message": self.message, "details": self.details}


class InputNotFoundError(VxcError):
    code = "input_not_found"
    exit_status = 2


class ParseError(VxcError):
    code = "parse_error"
    exit_status = 2


class ValidationError(VxcError):
    code = "validation"
    exit_status = 3


class DimensionMismatchError(ValidationError):
    code = "dimension_mismatch"


class AccountingIdentityError(ValidationError):
    code = "accounting_identity"


class NegativeEntryError(ValidationError):
    code = "negative_entry"


class UnknownCountryError(ValidationError):
    code = "unknown_country"


class NonPositiveValueError(ValidationError):
    code = "non_positive_value"


class SingularSystemError(ValidationError):
    code = "singular_leontief"


class EmptyMatrixError(ValidationError):
    code = "empty_matrix"


class NonFiniteError(ValidationError):
    code = "non_finite"


class ReducibleMatrixError(ValidationError):
    code = "reducible_matrix"


class CollinearityError(ValidationError):
    code = "collinearity"


class InputMismatchError(ValidationError):
    code = "input_mismatch"


class ConvergenceError(VxcError):
    code = "not_converged"
    exit_status = 4


class DegenerateError(VxcError):
    code = "eci_degenerate"
    exit_status = 5


class WeightedEciError(DegenerateError):
    code = "eci_degenerate_weighted"


class IncompletePanelError(VxcError):
    code = "incomplete_panel"
    exit_status = 6
