"""Tolerance policy shared by geometric predicates and the edit pipeline."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ToleranceContext:
    """Scale-aware tolerances.

    linear_eps    -- absolute length tolerance for coincidence/on-plane tests
    angular_eps   -- radians, for parallelism / normal comparisons
    parameter_eps -- motion-parameter resolution in normalized t
    """

    linear_eps: float
    angular_eps: float = 1e-9
    parameter_eps: float = 1e-9

    def __post_init__(self):
        for name in ("linear_eps", "angular_eps", "parameter_eps"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")

    def scaled(self, factor: float) -> "ToleranceContext":
        return ToleranceContext(self.linear_eps * factor, self.angular_eps,
                                self.parameter_eps)


#: Relative factor applied to the model bounding-box diagonal.
LINEAR_EPS_FACTOR = 1e-7


def default_tolerance(bbox_diag: float) -> ToleranceContext:
    """Tolerances derived from model size, so unit changes are harmless."""
    diag = max(float(bbox_diag), 1e-6)
    return ToleranceContext(linear_eps=LINEAR_EPS_FACTOR * diag)
