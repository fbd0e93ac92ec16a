"""Equivariant gradient degree computations for finite orthogonal group actions."""

from . import errors
from .domains import (
    MapDomain,
    annulus,
    ball,
    full_space,
    intersection,
    punctured_space,
    union,
)
from .groups import (
    CircleRep,
    FiniteGroupRep,
    OrthogonalTransform,
    antipodal,
    close_group,
    cyclic,
    dihedral,
    fixed_subspace,
    from_generators,
    isotropy,
    orbit,
    subgroup_lattice,
    symmetric,
    trivial,
)
from .maps import (
    LocalGradientMap,
    disjoint_union,
    empty_map,
    evaluate,
    make_map,
    restrict_to_stratum,
)
from .params import Numerics
from .potentials import OrbitWellPotential, PolynomialPotential
from .strata import build_stratum, iso_types, locate
from .theta import RecursionTrace, ThetaVector, theta, theta_add, theta_radial_s1

__version__ = "0.1.0"

__all__ = [
    "errors",
    "MapDomain", "annulus", "ball", "full_space", "intersection",
    "punctured_space", "union",
    "CircleRep", "FiniteGroupRep", "OrthogonalTransform", "antipodal",
    "close_group", "cyclic", "dihedral", "fixed_subspace", "from_generators",
    "isotropy", "orbit", "subgroup_lattice", "symmetric", "trivial",
    "LocalGradientMap", "disjoint_union", "empty_map", "evaluate", "make_map",
    "restrict_to_stratum",
    "Numerics",
    "OrbitWellPotential", "PolynomialPotential",
    "build_stratum", "iso_types", "locate",
    "RecursionTrace", "ThetaVector", "theta", "theta_add", "theta_radial_s1",
]
