"""Incompressible viscoplastic flow with implicitly constituted rheology.

Three-field (stress / velocity / pressure) finite elements on triangles,
graph-regularised Bingham and Herschel-Bulkley models, and a semismooth
Newton solver with regularisation-parameter continuation.
"""

__version__ = "0.1.0"

from .constitutive import (
    BinghamMax,
    BinghamProduct,
    BinghamProjection,
    HerschelBulkley,
    Newtonian,
    PowerLaw,
    RegularizedModel,
)
from .mesh import BoundaryTag, Mesh, build_channel, build_rectangle, refine_uniform

__all__ = [
    "BinghamMax",
    "BinghamProduct",
    "BinghamProjection",
    "BoundaryTag",
    "HerschelBulkley",
    "Mesh",
    "Newtonian",
    "PowerLaw",
    "RegularizedModel",
    "build_channel",
    "build_rectangle",
    "refine_uniform",
    "__version__",
]
