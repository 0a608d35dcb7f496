"""Leakage scenarios and results."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..channel import Channel, restrict_channel
from ..errors import (
    DomainMismatchError,
    EmptyRepresentationError,
    InputError,
    ScopeMismatchError,
    UnknownVariableError,
)
from ..scm.inference import marginal
from ..scm.models import Domain, JointTable, Scm


def _same_domain(name: str, expected: Domain, actual: Domain) -> None:
    if expected != actual:
        raise DomainMismatchError(name, expected.labels, actual.labels)


@dataclass(frozen=True, slots=True)
class LeakageScenario:
    """G -> X -> M with a label driven by the style factors only.

    ``label_channel.sources`` are the factors G_-I the label depends on; the
    remaining sources of ``x_channel`` form the interpretable block G_I.
    """

    factor_scm: Scm
    x_channel: Channel
    label_channel: Channel
    m_channel: Channel
    intervention_dist: JointTable

    def __post_init__(self) -> None:
        names = self.factor_scm.names
        for name, dom in zip(self.x_channel.sources, self.x_channel.source_domains):
            if name not in names:
                raise UnknownVariableError(name, names)
            _same_domain(name, self.factor_scm.domain(name), dom)
        missing = [n for n in self.label_channel.sources if n not in self.x_channel.sources]
        if missing:
            raise ScopeMismatchError(self.x_channel.sources, self.label_channel.sources)
        for name, dom in zip(self.label_channel.sources, self.label_channel.source_domains):
            _same_domain(name, self.factor_scm.domain(name), dom)
        if self.m_channel.sources != self.x_channel.targets:
            raise ScopeMismatchError(self.x_channel.targets, self.m_channel.sources)
        for name, want, got in zip(self.x_channel.targets, self.x_channel.target_domains, self.m_channel.source_domains):
            _same_domain(name, want, got)
        if set(self.intervention_dist.scope) != set(self.label_channel.sources):
            raise ScopeMismatchError(self.label_channel.sources, self.intervention_dist.scope)
        for name, dom in zip(self.intervention_dist.scope, self.intervention_dist.domains):
            _same_domain(name, self.factor_scm.domain(name), dom)
        if self.intervention_dist.scope != self.label_channel.sources:
            object.__setattr__(
                self, "intervention_dist", marginal(self.intervention_dist, self.label_channel.sources)
            )
        clash = set(self.label_channel.targets) & (set(self.x_channel.targets) | set(self.m_channel.targets))
        if clash:
            raise InputError("name collision", f"label variables collide with observations: {sorted(clash)}")

    @property
    def style(self) -> tuple[str, ...]:
        return self.label_channel.sources

    @property
    def content(self) -> tuple[str, ...]:
        return tuple(n for n in self.x_channel.sources if n not in self.style)

    @property
    def label(self) -> tuple[str, ...]:
        return self.label_channel.targets

    def restricted(self, keep: Sequence[int | str]) -> "LeakageScenario":
        """Same scenario observed only through the kept representation coordinates."""
        if not keep:
            raise EmptyRepresentationError()
        return LeakageScenario(
            factor_scm=self.factor_scm,
            x_channel=self.x_channel,
            label_channel=self.label_channel,
            m_channel=restrict_channel(self.m_channel, None, keep),
            intervention_dist=self.intervention_dist,
        )


@dataclass(frozen=True, slots=True)
class InterventionalJoint:
    p_g: JointTable
    p_xy: JointTable
    p_m_given_x: Channel
    p_my: JointTable
    p_gy: JointTable


@dataclass(slots=True)
class ClassifierFit:
    """Optimum of E_{x,y} log sum_m p(m|x) q(y|m) over row-stochastic q."""

    q_star: np.ndarray = field(repr=False)
    l_cl_star: float
    iterations: int
    converged: bool
    duality_gap: float
    unreachable: list[int] = field(default_factory=list)
    trace: list[float] = field(default_factory=list, repr=False)


class LeakageResult(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lambda_: float = Field(alias="lambda")
    lower_bound: float
    upper_bound: float
    l_cl_star: float
    l_r_star: float
    jensen_bound: float
    entropy_y: float
    iterations: int
    converged: bool
    duality_gap: float
    numerically_zero: bool
    unreachable_m: int = 0
    lambda_bits: float
    lower_bound_bits: float
    upper_bound_bits: float
    keep: list[str] | None = None
