"""Pydantic models for alignment reports."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

Direction = Literal["increasing", "decreasing", "n/a"]


class PiMap(BaseModel):
    pi: list[int]
    valid: bool
    surjective: bool
    unmatched: list[int] = Field(default_factory=list)
    unhit: list[int] = Field(default_factory=list)


class D2Check(BaseModel):
    target: int
    factor: int
    monotone: bool | None
    direction: Direction = "n/a"
    injective: bool = True
    spearman: float | None = None
    embeddings: list[float] = Field(default_factory=list)
    contexts_checked: int = 1

    @property
    def ok(self) -> bool:
        if self.monotone is None:
            return self.injective
        return self.monotone


class DciResult(BaseModel):
    B: list[list[float]]
    disentanglement_score: float
    informativeness: float
    row_scores: list[float] = Field(default_factory=list)
    row_weights: list[float] = Field(default_factory=list)
    nrmse: list[float] = Field(default_factory=list)
    l1_lambda: float = 0.0
    sweeps: int = 0


class AlignmentReport(BaseModel):
    d1_ok: bool
    pi: list[int]
    surjective: bool
    d2_per_target: list[D2Check] = Field(default_factory=list)
    aligned: bool
    dci: DciResult | None = None
    interpretable: list[int] = Field(default_factory=list)
    empida: list[list[float]] = Field(default_factory=list)
    strict: bool = False
    restricted: bool = False


class BlockCheck(BaseModel):
    target_block: int
    source_block: int
    empida: float
    d1_ok: bool
    min_gap: float | None = None
    d2_ok: bool


class BlockAlignmentReport(BaseModel):
    d1_ok: bool
    d2_ok: list[bool]
    aligned: bool
    blocks: list[BlockCheck] = Field(default_factory=list)
