"""Permanents and Fock amplitudes of linear-optical circuits from merged bitmask lines."""

from .errors import *  # noqa: F401,F403
from .lines import Line, MergeStats, fock_amplitude, make_line, merge, permanent_via_lines, predicted_cost
from .linalg import (
    OccupationPattern,
    UnitaryMatrix,
    compose_channels,
    haar_random_unitary,
    submatrix,
    validate_unitary,
)
from .oracles import dense_fock_evolution, naive_permanent, ryser_permanent

__version__ = "0.1.0"
