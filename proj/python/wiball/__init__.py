"""Python access to the wiball channel, TRRS and tracking routines."""

from ._wiball import (
    SPEED_OF_LIGHT,
    Cir,
    ConfigError,
    DataError,
    DegenerateInputError,
    ParameterError,
    Scene,
    bessel_j0,
    bessel_reference,
    dead_reckon,
    estimate_distance,
    generate_scene,
    heading_delta,
    synthesize_cir,
    synthesize_trajectory,
    trrs,
)

__all__ = [
    "SPEED_OF_LIGHT",
    "Cir",
    "ConfigError",
    "DataError",
    "DegenerateInputError",
    "ParameterError",
    "Scene",
    "bessel_j0",
    "bessel_reference",
    "dead_reckon",
    "estimate_distance",
    "generate_scene",
    "heading_delta",
    "synthesize_cir",
    "synthesize_trajectory",
    "trrs",
]
