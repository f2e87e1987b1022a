"""qnz: fixed-mapping compilation and error-aware training for C^nZ weight circuits."""

__version__ = "0.1.0"

from .ir import Circuit, Gate, GateKind, expand_to_basis, parse_circuit, format_circuit
from .topology import CouplingGraph, Mapping, coupling_graph, linear_chain, find_chain
from .mapper import MappedCircuit, compile, naive_route, initial_interleaved_mapping
from .noise import NoiseModel, BoundNoise, bind, load_calibration
from .simulator import run_ideal, run_density, run_trajectories, born_distribution, ShotCounts

__all__ = [
    "__version__",
    "Circuit",
    "Gate",
    "GateKind",
    "expand_to_basis",
    "parse_circuit",
    "format_circuit",
    "CouplingGraph",
    "Mapping",
    "coupling_graph",
    "linear_chain",
    "find_chain",
    "MappedCircuit",
    "compile",
    "naive_route",
    "initial_interleaved_mapping",
    "NoiseModel",
    "BoundNoise",
    "bind",
    "load_calibration",
    "run_ideal",
    "run_density",
    "run_trajectories",
    "born_distribution",
    "ShotCounts",
]
