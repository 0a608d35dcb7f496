from __future__ import annotations

from .builtins import BUILTINS, builtin_scenario, list_scenarios
from .models import (
    BlockSpec,
    ChannelSpec,
    Diagnostic,
    DistributionSpec,
    DomainSpec,
    PortSpec,
    ScenarioSpec,
    ScmSpec,
    VariableSpec,
    WorldSpec,
)
from .parser import World, build_world, emit_spec, input_digest, load_world, parse_spec
from .report import Report, render, render_csv, render_json

__all__ = [
    "BUILTINS",
    "BlockSpec",
    "ChannelSpec",
    "Diagnostic",
    "DistributionSpec",
    "DomainSpec",
    "PortSpec",
    "Report",
    "ScenarioSpec",
    "ScmSpec",
    "VariableSpec",
    "World",
    "WorldSpec",
    "build_world",
    "builtin_scenario",
    "emit_spec",
    "input_digest",
    "list_scenarios",
    "load_world",
    "parse_spec",
    "render",
    "render_csv",
    "render_json",
]
