"""Finite-domain SCM data models.

Enumeration order everywhere is lexicographic in declaration order: the first
declared variable varies slowest, each domain is walked in its declared value
order. CPT rows follow the same rule over the declared parent list.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config import settings
from ..errors import DomainValueError, UnknownVariableError


class DomainValue(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    level: float


class Domain(BaseModel):
    """Ordered list of values; ``level`` is the numeric embedding of each value."""

    model_config = ConfigDict(frozen=True)

    values: tuple[DomainValue, ...]
    ordered: bool = True

    @model_validator(mode="after")
    def check_values(self) -> "Domain":
        if not self.values:
            raise ValueError("domain must have at least one value")
        labels = [v.label for v in self.values]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate labels in domain: {labels}")
        if self.ordered:
            levels = [v.level for v in self.values]
            if any(b <= a for a, b in zip(levels, levels[1:])):
                raise ValueError(f"ordered domain levels must strictly increase: {levels}")
        return self

    @classmethod
    def of(
        cls,
        labels: Sequence[str | int | float],
        levels: Sequence[float] | None = None,
        *,
        ordered: bool = True,
    ) -> "Domain":
        """Build a domain from labels; numeric labels double as levels by default."""
        if levels is None:
            levels = [_default_level(label, idx) for idx, label in enumerate(labels)]
        return cls(
            values=tuple(
                DomainValue(label=_label(label), level=float(level))
                for label, level in zip(labels, levels, strict=True)
            ),
            ordered=ordered,
        )

    @classmethod
    def binary(cls) -> "Domain":
        return cls.of([0, 1])

    @property
    def size(self) -> int:
        return len(self.values)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(v.label for v in self.values)

    @property
    def levels(self) -> np.ndarray:
        return np.array([v.level for v in self.values], dtype=float)

    def index_of(self, label: str | int | float) -> int:
        key = _label(label)
        for idx, value in enumerate(self.values):
            if value.label == key:
                return idx
        raise KeyError(key)

    def level_order(self) -> list[int]:
        """Value indices sorted by level (stable)."""
        return sorted(range(self.size), key=lambda k: self.values[k].level)


def _label(label: str | int | float) -> str:
    if isinstance(label, float) and label.is_integer():
        return str(int(label))
    return str(label)


def _default_level(label: str | int | float, index: int) -> float:
    try:
        return float(label)
    except (TypeError, ValueError):
        return float(index)


class Variable(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    domain: Domain
    parents: tuple[str, ...] = ()


class Cpt(BaseModel):
    """Rows indexed by parent assignment, each a distribution over the variable's domain."""

    model_config = ConfigDict(frozen=True)

    variable: str
    rows: tuple[tuple[float, ...], ...]


class Scm(BaseModel):
    """Acyclic finite-domain causal model with one CPT per variable."""

    model_config = ConfigDict(frozen=True)

    variables: tuple[Variable, ...]
    cpts: tuple[Cpt, ...] = Field(default_factory=tuple)

    @classmethod
    def build(
        cls,
        entries: Sequence[tuple[str, Domain, Sequence[str], Sequence[Sequence[float]] | np.ndarray]],
    ) -> "Scm":
        """Build from ``(name, domain, parents, rows)`` tuples."""
        variables: list[Variable] = []
        cpts: list[Cpt] = []
        for name, domain, parents, rows in entries:
            variables.append(Variable(name=name, domain=domain, parents=tuple(parents)))
            table = np.asarray(rows, dtype=float).reshape(-1, domain.size)
            cpts.append(Cpt(variable=name, rows=tuple(tuple(r) for r in table.tolist())))
        return cls(variables=tuple(variables), cpts=tuple(cpts))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def variable(self, name: str) -> Variable:
        for var in self.variables:
            if var.name == name:
                return var
        raise UnknownVariableError(name, self.names)

    def domain(self, name: str) -> Domain:
        return self.variable(name).domain

    def cpt(self, name: str) -> Cpt:
        for cpt in self.cpts:
            if cpt.variable == name:
                return cpt
        raise UnknownVariableError(name, [c.variable for c in self.cpts])

    def cpt_array(self, name: str) -> np.ndarray:
        """CPT as an array shaped ``(*parent sizes, own size)``."""
        var = self.variable(name)
        shape = [self.domain(p).size for p in var.parents] + [var.domain.size]
        return np.asarray(self.cpt(name).rows, dtype=float).reshape(shape)

    def replace(self, variable: Variable, rows: Sequence[Sequence[float]]) -> "Scm":
        """Copy with one variable's declaration and CPT swapped out."""
        variables = tuple(variable if v.name == variable.name else v for v in self.variables)
        cpts = tuple(
            Cpt(variable=variable.name, rows=tuple(tuple(r) for r in rows))
            if c.variable == variable.name
            else c
            for c in self.cpts
        )
        return self.model_copy(update={"variables": variables, "cpts": cpts})


class Assignment(BaseModel):
    """Ordered ``(variable, label)`` pairs."""

    model_config = ConfigDict(frozen=True)

    items: tuple[tuple[str, str], ...] = ()

    @model_validator(mode="after")
    def check_distinct(self) -> "Assignment":
        names = [name for name, _ in self.items]
        if len(set(names)) != len(names):
            raise ValueError(f"assignment repeats a variable: {names}")
        return self

    @classmethod
    def of(cls, mapping: Mapping[str, Any] | None = None, **values: Any) -> "Assignment":
        merged = dict(mapping or {})
        merged.update(values)
        return cls(items=tuple((name, _label(label)) for name, label in merged.items()))

    @classmethod
    def parse(cls, text: str) -> "Assignment":
        """Parse ``"A=1,B=0"``."""
        pairs: list[tuple[str, str]] = []
        for chunk in filter(None, (c.strip() for c in text.split(","))):
            name, sep, label = chunk.partition("=")
            if not sep or not name.strip():
                raise ValueError(f"expected NAME=VALUE, got {chunk!r}")
            pairs.append((name.strip(), label.strip()))
        return cls(items=tuple(pairs))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.items)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for _, label in self.items)

    def as_dict(self) -> dict[str, str]:
        return dict(self.items)

    def merge(self, other: "Assignment") -> "Assignment":
        return Assignment(items=self.items + other.items)

    def __len__(self) -> int:
        return len(self.items)

    def __str__(self) -> str:
        return ",".join(f"{name}={label}" for name, label in self.items)


class Intervention(BaseModel):
    """do(X_I <- x_I)."""

    model_config = ConfigDict(frozen=True)

    targets: Assignment

    @model_validator(mode="after")
    def check_targets(self) -> "Intervention":
        if not self.targets.items:
            raise ValueError("an intervention needs at least one target")
        return self

    @classmethod
    def do(cls, mapping: Mapping[str, Any] | None = None, **values: Any) -> "Intervention":
        return cls(targets=Assignment.of(mapping, **values))

    def __str__(self) -> str:
        return f"do({self.targets})"


@dataclass(frozen=True, slots=True)
class JointTable:
    """Exact probability table over an ordered scope (dense, C order)."""

    scope: tuple[str, ...]
    domains: tuple[Domain, ...]
    probs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if len(self.scope) != len(self.domains):
            raise ValueError("scope and domains differ in length")
        if len(set(self.scope)) != len(self.scope):
            raise ValueError(f"duplicate variables in scope {self.scope}")
        probs = np.array(self.probs, dtype=float).reshape([d.size for d in self.domains])
        tol = settings.tolerances.normalization
        if probs.size and probs.min() < -tol:
            raise ValueError("joint table has negative entries")
        total = float(probs.sum())
        if not math.isclose(total, 1.0, abs_tol=tol):
            raise ValueError(f"joint table mass {total!r} is not 1")
        probs = np.clip(probs, 0.0, None)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_variables(cls, variables: Sequence[Variable], probs: Any) -> "JointTable":
        return cls(
            scope=tuple(v.name for v in variables),
            domains=tuple(v.domain for v in variables),
            probs=np.asarray(probs, dtype=float),
        )

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(d.size for d in self.domains)

    def axis(self, name: str) -> int:
        try:
            return self.scope.index(name)
        except ValueError:
            raise UnknownVariableError(name, self.scope) from None

    def domain(self, name: str) -> Domain:
        return self.domains[self.axis(name)]

    def index_of(self, assignment: Assignment) -> tuple[int, ...]:
        """Array index of a complete assignment over the scope."""
        values = assignment.as_dict()
        index = []
        for name, domain in zip(self.scope, self.domains):
            if name not in values:
                raise UnknownVariableError(name, assignment.names)
            try:
                index.append(domain.index_of(values[name]))
            except KeyError:
                raise DomainValueError(name, values[name]) from None
        return tuple(index)

    def prob(self, assignment: Assignment | Mapping[str, Any]) -> float:
        if not isinstance(assignment, Assignment):
            assignment = Assignment.of(assignment)
        return float(self.probs[self.index_of(assignment)])

    def flat(self) -> np.ndarray:
        return self.probs.reshape(-1)

    def assignments(self) -> Iterator[tuple[str, ...]]:
        """Label tuples in table order."""
        return itertools.product(*(d.labels for d in self.domains))

    def items(self) -> Iterator[tuple[tuple[str, ...], float]]:
        return zip(self.assignments(), (float(p) for p in self.flat()))

    def as_dict(self) -> dict[tuple[str, ...], float]:
        return dict(self.items())
