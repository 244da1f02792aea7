"""Coalition structure generation: DP, LP branch-and-bound and sparse solvers
with anytime instrumentation, on planted sparse-synergy instances."""

from .core import (
    CoalitionStructure, CountingOracle, GuardViolation, InvalidStructure, TableOracle,
    canonicalize, coalition, members, structure_value, validate_structure,
)
from .genmodel import GeneratorParams, SynergyModel, generate, margin_report, quality_thresholds

__all__ = [
    "CoalitionStructure", "CountingOracle", "GuardViolation", "InvalidStructure", "TableOracle",
    "canonicalize", "coalition", "members", "structure_value", "validate_structure",
    "GeneratorParams", "SynergyModel", "generate", "margin_report", "quality_thresholds",
]

__version__ = "0.1.0"
