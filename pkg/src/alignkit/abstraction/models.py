"""Aligned causal abstraction: cases and reports."""

from __future__ import annotations

from dataclasses import dataclass

from pydantic import BaseModel, Field

from ..channel import BlockStructure, Channel
from ..errors import ScopeMismatchError
from ..scm.models import Scm


@dataclass(frozen=True, slots=True)
class AbstractionCase:
    """Human SCM, machine SCM and the block-aligned map between them."""

    scm_h: Scm
    scm_m: Scm
    beta: Channel
    blocks: BlockStructure

    def __post_init__(self) -> None:
        if self.beta.sources != self.scm_h.names:
            raise ScopeMismatchError(self.scm_h.names, self.beta.sources)
        if self.beta.targets != self.scm_m.names:
            raise ScopeMismatchError(self.scm_m.names, self.beta.targets)
        self.blocks.check_against(len(self.scm_h.names), len(self.scm_m.names))


class MappedIntervention(BaseModel):
    intervention: str
    weight: float = 1.0


class CommutationRecord(BaseModel):
    intervention: str
    mapped: list[MappedIntervention] = Field(default_factory=list)
    tv_discrepancy: float
    commutes: bool
    approximate: bool = False


class AbstractionReport(BaseModel):
    records: list[CommutationRecord] = Field(default_factory=list)
    overall: bool
    worst: CommutationRecord | None = None
    approximate: bool = False
    eps: float


class IsolationCheck(BaseModel):
    target_block: int
    source_block: int
    post_intervention_empida: float
    min_gap: float | None = None
    isolated: bool
    distinguishable: bool


class IsolationReport(BaseModel):
    blocks: list[IsolationCheck] = Field(default_factory=list)
    ok: bool
