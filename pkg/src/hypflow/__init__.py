"""Geodesic flow on compact hyperbolic surfaces.

Closed-geodesic enumeration, configuration-space self-crossing detection,
and construction plus verification of partner orbits arising from
2-antiparallel encounters.
"""

from .moebius import (
    ElementClass,
    HALF_TURN,
    IDENTITY,
    NSATriple,
    PSLElement,
    axis_frame,
    classify,
    compose,
    geodesic_flow,
    local_distance,
    nsa_decompose,
    one_param,
    reversal_conjugate,
    rotation,
    rotation_decompose,
    stable_shear,
    translation_length,
    unstable_shear,
)

__version__ = "0.1.0"
