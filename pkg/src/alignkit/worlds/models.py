"""Declarative world spec: named domains, SCMs, channels, blocks and a scenario binding."""

from __future__ import annotations

from typing import Literal, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

Label = Union[int, float, str]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DomainSpec(_Strict):
    values: list[Label]
    levels: list[float] | None = None
    ordered: bool = True


DomainRef = Union[str, DomainSpec]


class VariableSpec(_Strict):
    name: str
    domain: DomainRef
    parents: list[str] = Field(default_factory=list)
    cpt: list[list[float]]


class ScmSpec(_Strict):
    variables: list[VariableSpec]


class PortSpec(_Strict):
    name: str
    domain: DomainRef


class ChannelSpec(_Strict):
    """Either a dense ``table`` or a deterministic ``map`` (target labels per source row)."""

    sources: list[PortSpec] = Field(default_factory=list)
    targets: list[PortSpec]
    table: list[list[float]] | None = None
    map: list[list[Label]] | None = None

    @model_validator(mode="after")
    def check_body(self) -> "ChannelSpec":
        if (self.table is None) == (self.map is None):
            raise ValueError("exactly one of 'table' or 'map' is required")
        return self


class BlockSpec(_Strict):
    source_partition: list[list[int]]
    target_partition: list[list[int]]
    pi: list[int]


class DistributionSpec(_Strict):
    scope: list[PortSpec]
    probs: list[float]


class ScenarioSpec(_Strict):
    """Role bindings; every string refers to a named entry elsewhere in the spec."""

    description: str | None = None
    factor_scm: str | None = None
    alpha: str | None = None
    x_channel: str | None = None
    m_channel: str | None = None
    interpretable: list[str] | None = None
    label_channel: str | None = None
    intervention_dist: str | None = None
    keep: list[str] | None = None
    scm_h: str | None = None
    scm_m: str | None = None
    beta: str | None = None
    blocks: str | None = None
    max_blocks: int | None = Field(default=None, ge=1)
    divergence: Literal["tv", "kl", "mad"] | None = None
    eps: float | None = Field(default=None, ge=0)
    tol: float | None = Field(default=None, gt=0)
    max_iter: int | None = Field(default=None, ge=1)


class WorldSpec(_Strict):
    version: Literal[1] = 1
    name: str | None = None
    domains: dict[str, DomainSpec] = Field(default_factory=dict)
    scms: dict[str, ScmSpec] = Field(default_factory=dict)
    channels: dict[str, ChannelSpec] = Field(default_factory=dict)
    blocks: dict[str, BlockSpec] = Field(default_factory=dict)
    distributions: dict[str, DistributionSpec] = Field(default_factory=dict)
    scenario: ScenarioSpec = Field(default_factory=ScenarioSpec)


class Diagnostic(BaseModel):
    kind: Literal["syntax", "schema", "reference", "invariant", "binding"]
    location: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind} at {self.location}: {self.message}"
