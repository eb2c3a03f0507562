"""Integral Curve Coordinates for cage-based 2D deformation."""

from ._pyicc import (
    Cage,
    CageMismatch,
    Deformer,
    Field,
    IccError,
    InvalidCage,
    SolverDiverged,
)

__all__ = [
    "Cage",
    "CageMismatch",
    "Deformer",
    "Field",
    "IccError",
    "InvalidCage",
    "SolverDiverged",
]
