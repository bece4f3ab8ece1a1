"""Dynamic lattice-surgery scheduling with repeat-until-success rotations."""
from .circuit import Circuit, Gate, GateKind, build_dag, generate_benchmark, load_circuit, parse_qasm
from .fabric import EdgeOrientation, Fabric, build_star_grid, compress
from .stochastic import RusModel, SimRng, TimingConfig

__version__ = "0.1.0"
