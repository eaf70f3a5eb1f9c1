"""Selection-and-influence dynamics on type graphs: simulation, equilibria,
stability verdicts and convergence monitoring."""
from .model import (
    FlowField,
    ModelParams,
    StopRule,
    Trajectory,
    TypeGraph,
    ValidationError,
    interaction_mass,
    interaction_masses,
    mass_vector,
    net_flow,
    simulate,
    step_direct,
    step_flows,
)
from .stability import (
    NotAnEquilibrium,
    classify_stability,
    classify_universal_stability,
    empirical_stability_probe,
    equilibrium_check,
)

__version__ = "0.1.0"

__all__ = [
    "FlowField",
    "ModelParams",
    "NotAnEquilibrium",
    "StopRule",
    "Trajectory",
    "TypeGraph",
    "ValidationError",
    "classify_stability",
    "classify_universal_stability",
    "empirical_stability_probe",
    "equilibrium_check",
    "interaction_mass",
    "interaction_masses",
    "mass_vector",
    "net_flow",
    "simulate",
    "step_direct",
    "step_flows",
]
