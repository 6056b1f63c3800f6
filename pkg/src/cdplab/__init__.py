"""Simulation and exact verification of constrained-degree percolation on Z^d."""

__version__ = "0.1.0"

from .dynamics import ClockField, Configuration, evolve, sample_clock, trajectory
from .events import modified_one_arm, standard_one_arm
from .lattice import BoxRegion, DomainError, box

__all__ = [
    "BoxRegion",
    "ClockField",
    "Configuration",
    "DomainError",
    "box",
    "evolve",
    "modified_one_arm",
    "sample_clock",
    "standard_one_arm",
    "trajectory",
]
