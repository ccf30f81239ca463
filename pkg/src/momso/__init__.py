"""momso: series impedance of buried cable systems.

Computes the frequency-dependent per-unit-length resistance and inductance
matrices of round solid/tubular conductors buried in lossy ground, either in
direct contact with the soil or inside lossless holes/tunnels, by a
surface-admittance method of moments, and cross-validates the result against
classical cable-constant formulas.
"""

from .model import (
    CableSystem,
    GroundModel,
    Hole,
    Material,
    SolidConductor,
    TubularConductor,
    parse_config,
    serialize_config,
    validate_geometry,
)
from .report import (
    reduce_grounded,
    reduce_open,
    run_sweep,
    sequence_impedances,
)
from .solver import ImpedanceResult, extract_RL, solve_frequency

__version__ = "0.1.0"

__all__ = [
    "CableSystem",
    "GroundModel",
    "Hole",
    "Material",
    "SolidConductor",
    "TubularConductor",
    "parse_config",
    "serialize_config",
    "validate_geometry",
    "solve_frequency",
    "extract_RL",
    "ImpedanceResult",
    "run_sweep",
    "reduce_grounded",
    "reduce_open",
    "sequence_impedances",
    "__version__",
]
