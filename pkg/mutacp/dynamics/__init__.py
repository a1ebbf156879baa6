"""The process state, the two simulation engines and type genealogy."""
from mutacp.dynamics.configuration import Configuration, IndexedSet, ProcessKind
from mutacp.dynamics.coupling import CoupledResult, Violation, simulate_coupled
from mutacp.dynamics.engine import SimulationEngine, default_init, simulate
from mutacp.dynamics.genealogy import TypeTree, extract_type_tree, weight
from mutacp.dynamics.randomness import RandomnessSource, make_rng
from mutacp.dynamics.trajectory import (
    CENSORED,
    EXTINCT,
    Event,
    EventKind,
    StopRule,
    Termination,
    Trajectory,
    read_trajectory,
    write_trajectory,
)

__all__ = [
    "CENSORED",
    "EXTINCT",
    "Configuration",
    "CoupledResult",
    "Event",
    "EventKind",
    "IndexedSet",
    "ProcessKind",
    "RandomnessSource",
    "SimulationEngine",
    "StopRule",
    "Termination",
    "Trajectory",
    "TypeTree",
    "Violation",
    "default_init",
    "extract_type_tree",
    "make_rng",
    "read_trajectory",
    "simulate",
    "simulate_coupled",
    "weight",
    "write_trajectory",
]
