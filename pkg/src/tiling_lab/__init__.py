"""Random lozenge tilings: exact samplers, limit shapes, concentration."""

__version__ = "0.1.0"

from .lattice import (
    BoundaryHeight,
    Domain,
    StripSpec,
    build_hexagon,
    build_strip,
    is_admissible_boundary,
)
from .rng import Rng
from .sampler import (
    CouplingPair,
    ParticleConfig,
    cftp_sample,
    coupled_sweep,
    ensemble,
    glauber_sweep,
    trapezoid_step,
    trapezoid_trajectory,
)
from .tiling import (
    HeightFunction,
    Tiling,
    WalkEnsemble,
    bridge_count,
    enumerate_tilings,
    height_from_tiling,
    height_from_walks,
    tiling_from_height,
    walks_from_height,
)

__all__ = [
    "BoundaryHeight",
    "Domain",
    "StripSpec",
    "build_hexagon",
    "build_strip",
    "is_admissible_boundary",
    "Rng",
    "CouplingPair",
    "ParticleConfig",
    "cftp_sample",
    "coupled_sweep",
    "ensemble",
    "glauber_sweep",
    "trapezoid_step",
    "trapezoid_trajectory",
    "HeightFunction",
    "Tiling",
    "WalkEnsemble",
    "bridge_count",
    "enumerate_tilings",
    "height_from_tiling",
    "height_from_walks",
    "tiling_from_height",
    "walks_from_height",
]
