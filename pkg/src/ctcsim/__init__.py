"""Simulation of quantum circuits with Deutsch closed-timelike-curve qubits."""

from .circuits import CtcCircuit, Gate, PaperExample, QubitRegister, circuit_unitary, paper_example, parse_circuit
from .config import Tolerances
from .engine import (
    CtcResult,
    FixedPointSet,
    Policy,
    SBackend,
    Superoperator,
    apply_s,
    ctc_evolve,
    fixed_point_set,
    induced_map,
    select_fixed_point,
    temporal_origin_check,
)
from .sat import CnfFormula, Mode, SatRunResult, count_satisfying, parse_dimacs, run_sat

__all__ = [
    "CnfFormula",
    "CtcCircuit",
    "CtcResult",
    "FixedPointSet",
    "Gate",
    "Mode",
    "PaperExample",
    "Policy",
    "QubitRegister",
    "SBackend",
    "SatRunResult",
    "Superoperator",
    "Tolerances",
    "apply_s",
    "circuit_unitary",
    "count_satisfying",
    "ctc_evolve",
    "fixed_point_set",
    "induced_map",
    "paper_example",
    "parse_circuit",
    "parse_dimacs",
    "run_sat",
    "select_fixed_point",
    "temporal_origin_check",
]

__version__ = "0.1.0"
