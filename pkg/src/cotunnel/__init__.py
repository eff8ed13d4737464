"""Exact fourth-order co-tunneling amplitudes through a single-level quantum dot."""

from cotunnel.fock import FockState, Mode, ModeRegistry, Site, Spin
from cotunnel.model import (
    FinalChannel,
    Ket,
    ModelParams,
    Occupancy,
    Scenario,
    catalog,
)
from cotunnel.tmatrix import (
    SingularDenominator,
    enumerate_paths,
    fourth_order_amplitude,
    path_sum_amplitude,
)

__version__ = "0.1.0"

__all__ = [
    "FinalChannel",
    "FockState",
    "Ket",
    "Mode",
    "ModeRegistry",
    "ModelParams",
    "Occupancy",
    "Scenario",
    "SingularDenominator",
    "Site",
    "Spin",
    "catalog",
    "enumerate_paths",
    "fourth_order_amplitude",
    "path_sum_amplitude",
]
