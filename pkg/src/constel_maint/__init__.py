"""Evaluate, simulate and optimise on-orbit-servicing-integrated maintenance of satellite constellations."""
from .errors import (
    AltitudeOrderError,
    ConstelMaintError,
    DomainError,
    IllPosedScenarioError,
    NoFeasibleSolution,
    NumericalIntegrationError,
    ParseError,
    SamplingExhausted,
    SchemaError,
    UnitError,
    ZeroDriftError,
)
from .model import Bounds, DecisionVector, NSGAConfig, Scenario, SystemEvaluation, evaluate_decision
from .scenario_file import ScenarioFile, bundled_scenarios, load_scenario, parse_scenario

__version__ = "0.1.0"

__all__ = [
    "AltitudeOrderError", "Bounds", "ConstelMaintError", "DecisionVector", "DomainError",
    "IllPosedScenarioError", "NSGAConfig", "NoFeasibleSolution", "NumericalIntegrationError",
    "ParseError", "SamplingExhausted", "Scenario", "ScenarioFile", "SchemaError", "SystemEvaluation",
    "UnitError", "ZeroDriftError", "__version__", "bundled_scenarios", "evaluate_decision",
    "load_scenario", "parse_scenario",
]
