"""Multivariate space-time covariance models on the sphere.

Gneiting, modified Gneiting and latent-dimension covariance families with
Schoenberg-expansion validity checks, exact Gaussian simulation, pairwise
composite-likelihood fitting and cokriging cross-validation.
"""

__version__ = "0.1.0"

from .geometry import EARTH_RADIUS_KM, SpaceTimeLocation, SpherePoint, geodesic_angle, geodesic_km
from .models import (
    GneitingUnivariate,
    LatentKernel,
    ModelA,
    ModelB,
    ModelC,
    ModelD,
    ModifiedGneitingMulti,
    ModifiedGneitingUni,
    assemble_covariance,
    check_validity_constraint,
    model_from_dict,
)
from .specfun import BernsteinSpec, CompletelyMonotoneSpec

__all__ = [
    "EARTH_RADIUS_KM",
    "SpaceTimeLocation",
    "SpherePoint",
    "geodesic_angle",
    "geodesic_km",
    "GneitingUnivariate",
    "LatentKernel",
    "ModelA",
    "ModelB",
    "ModelC",
    "ModelD",
    "ModifiedGneitingMulti",
    "ModifiedGneitingUni",
    "assemble_covariance",
    "check_validity_constraint",
    "model_from_dict",
    "BernsteinSpec",
    "CompletelyMonotoneSpec",
]
