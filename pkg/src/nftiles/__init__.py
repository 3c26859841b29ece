"""Non-flat lattice deformations built from tiles of rigid unit cells."""

from .errors import AttachError, ConstraintError, ConvergenceError, DegenerateError, DomainError, NftError
from .geom_core import CellConstants, cell_constants

__all__ = [
    "AttachError",
    "CellConstants",
    "ConstraintError",
    "ConvergenceError",
    "DegenerateError",
    "DomainError",
    "NftError",
    "cell_constants",
]
__version__ = "0.1.0"
