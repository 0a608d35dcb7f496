"""Finite-domain structural causal models."""
from __future__ import annotations

from .inference import (
    ValidationReport,
    Violation,
    apply_intervention,
    check_cells,
    condition,
    conditional_independence_gap,
    descendants,
    interventional_distribution,
    joint_distribution,
    marginal,
    topological_order,
    validate_scm,
)
from .models import Assignment, Cpt, Domain, DomainValue, Intervention, JointTable, Scm, Variable

__all__ = [
    "Assignment",
    "Cpt",
    "Domain",
    "DomainValue",
    "Intervention",
    "JointTable",
    "Scm",
    "ValidationReport",
    "Variable",
    "Violation",
    "apply_intervention",
    "check_cells",
    "condition",
    "conditional_independence_gap",
    "descendants",
    "interventional_distribution",
    "joint_distribution",
    "marginal",
    "topological_order",
    "validate_scm",
]
