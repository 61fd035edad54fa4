"""Structural robustness analysis and simulation for nonlinear consensus networks."""
from .arcp import ArcpConfig, arcp_rhs
from .dynamics import Aggregator, InteractionRule, NetworkDynamics, assemble_rhs
from .errors import (
    EvaluationError,
    IntegrationDiverged,
    InvalidArgument,
    ParseError,
    RobconsError,
    ScenarioError,
    UnsupportedSize,
)
from .networks import builtin_network
from .petri import (
    PetriNet,
    Transition,
    check_robust_consensuability,
    enumerate_minimal_controlled_siphons,
    is_controlled_siphon,
    is_siphon,
    minimal_siphons,
)
from .scenario import Scenario, builtin_scenario, load_scenario, save_scenario
from .simulate import FaultSignal, integrate

__version__ = "0.1.0"
