"""Repeated 3-player invest dilemma: threshold strategies, mean dynamics,
and numerical verification of their equilibrium properties."""

from .stage_game import (
    GameParams,
    example_game,
    payoff,
    validate_params,
    vertices,
)

__all__ = [
    "GameParams",
    "example_game",
    "payoff",
    "validate_params",
    "vertices",
]

__version__ = "0.1.0"
