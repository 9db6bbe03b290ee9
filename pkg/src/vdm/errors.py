"""Exception hierarchy for the kernel."""
from __future__ import annotations


class VdmError(Exception):
    """Base class for all kernel errors."""


class StructuralError(VdmError):
    """Unresolvable references or broken topology records (distinct from
    geometric invalidity, which is reported via ValidityReport)."""


class DocumentError(VdmError):
    """Malformed model document; carries the offending JSON path."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


class ValidationError(VdmError):
    """Document parsed but violates a model invariant."""


class InvalidSolidError(VdmError):
    """Operation refused because the solid fails validity; carries the report."""

    def __init__(self, report):
        super().__init__(f"invalid solid: {report.summary()}")
        self.report = report


class BooleanDegeneracyError(VdmError):
    """Coplanar-overlap or near-coincidence configuration the regularized
    Boolean cannot resolve at the current tolerance."""


class UnsupportedGeometryError(VdmError):
    """Requested construction is outside planar-sweep scope."""


class EditRejectedError(VdmError):
    """Direct edit could not be completed; reports the last valid motion value."""

    def __init__(self, message: str, last_valid_t: float):
        super().__init__(f"{message} (last valid t = {last_valid_t:.9g})")
        self.last_valid_t = last_valid_t


class IllPosedConstraintError(VdmError):
    """Constraint residual is undefined at the witness (e.g. distance between
    non-parallel planes)."""


class SolveError(VdmError):
    """Parametric re-solve failed; carries the residual history."""

    def __init__(self, message: str, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


class StaleOptionsError(VdmError):
    """Resolution option no longer matches the current constraint system."""


class StaleRevisionError(VdmError):
    """Session mutation raced another writer; client must refresh."""
