from __future__ import annotations

from .models import (
    AbstractionCase,
    AbstractionReport,
    CommutationRecord,
    IsolationCheck,
    IsolationReport,
    MappedIntervention,
)
from .service import (
    check_abstraction,
    check_commutes,
    check_intervention_isolation,
    count_interventions,
    enumerate_interventions,
    map_intervention,
    map_intervention_distribution,
)

__all__ = [
    "AbstractionCase",
    "AbstractionReport",
    "CommutationRecord",
    "IsolationCheck",
    "IsolationReport",
    "MappedIntervention",
    "check_abstraction",
    "check_commutes",
    "check_intervention_isolation",
    "count_interventions",
    "enumerate_interventions",
    "map_intervention",
    "map_intervention_distribution",
]
