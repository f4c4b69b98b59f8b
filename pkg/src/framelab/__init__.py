"""Numerical lab for autonomous diffeomorphisms of framed 2- and 3-manifolds.

Submodules: ``geometry`` (model manifolds and deck groups), ``fields`` (vector
fields, framings, brackets), ``cocycle`` (derivative cocycles, Lyapunov
spectra), ``classify`` (matrix and algebra classes, 3D branch routing),
``models`` (ready-made framed systems), ``splitting`` (graph transform for
circle extensions), ``circle`` (rotation numbers and fiber profiles) and
``cli`` (experiment runner).
"""

from . import circle, classify, cocycle, fields, geometry, io, kernels, models, splitting
from .classify import classify_2d, classify_algebra, model_tensor, theorem3d_branch
from .cocycle import (
    Diffeo,
    autonomy_check,
    derivative_cocycle,
    lyapunov_exponents,
    verify_partial_hyperbolicity,
)
from .errors import FramelabError
from .fields import Framing, StructureTensor, VectorField, lie_bracket, structure_constants
from .geometry import HeisQuotient, MappingTorus, ProductT2xS1, SolQuotient, Torus
from .models import FramedSystem

__version__ = "0.1.0"

__all__ = [
    "Diffeo",
    "FramedSystem",
    "FramelabError",
    "Framing",
    "HeisQuotient",
    "MappingTorus",
    "ProductT2xS1",
    "SolQuotient",
    "StructureTensor",
    "Torus",
    "VectorField",
    "autonomy_check",
    "circle",
    "classify",
    "classify_2d",
    "classify_algebra",
    "cocycle",
    "derivative_cocycle",
    "fields",
    "geometry",
    "io",
    "kernels",
    "lie_bracket",
    "lyapunov_exponents",
    "model_tensor",
    "models",
    "splitting",
    "structure_constants",
    "theorem3d_branch",
    "verify_partial_hyperbolicity",
]
