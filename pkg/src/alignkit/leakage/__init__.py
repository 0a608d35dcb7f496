from __future__ import annotations

from .information import conditional_entropy, entropy, mutual_information, to_bits
from .models import ClassifierFit, InterventionalJoint, LeakageResult, LeakageScenario
from .optimizer import duality_gap, optimize_classifier, restart_classifier
from .service import (
    build_interventional_joint,
    concept_leakage,
    coordinate_leakage,
    interventional_factor_distribution,
    leakage_vs_content_style,
)

__all__ = [
    "ClassifierFit",
    "InterventionalJoint",
    "LeakageResult",
    "LeakageScenario",
    "build_interventional_joint",
    "concept_leakage",
    "conditional_entropy",
    "coordinate_leakage",
    "duality_gap",
    "entropy",
    "interventional_factor_distribution",
    "leakage_vs_content_style",
    "mutual_information",
    "optimize_classifier",
    "restart_classifier",
    "to_bits",
]
