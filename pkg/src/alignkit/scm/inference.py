"""Exact inference on finite-domain SCMs by dense enumeration."""

from __future__ import annotations

import math
from typing import Literal, Sequence

import networkx as nx
import numpy as np
from pydantic import BaseModel, Field

from ..config import settings
from ..errors import (
    DomainValueError,
    InputError,
    InvalidScmError,
    StateSpaceOverflowError,
    UnknownVariableError,
    ZeroMassEvidenceError,
)
from ..instrumentation import get_logger
from .models import Assignment, Intervention, JointTable, Scm, Variable

logger = get_logger()

ViolationKind = Literal[
    "duplicate-variable",
    "dangling-parent",
    "self-parent",
    "duplicate-parent",
    "cycle",
    "missing-cpt",
    "duplicate-cpt",
    "orphan-cpt",
    "row-count",
    "row-width",
    "row-range",
    "row-mass",
]


class Violation(BaseModel):
    kind: ViolationKind
    location: str
    detail: str
    variables: tuple[str, ...] = ()
    row: int | None = None

    def __str__(self) -> str:
        return f"{self.kind} at {self.location}: {self.detail}"


class ValidationReport(BaseModel):
    violations: list[Violation] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _parent_graph(scm: Scm) -> nx.DiGraph:
    graph = nx.DiGraph()
    names = set(scm.names)
    graph.add_nodes_from(scm.names)
    for var in scm.variables:
        for parent in var.parents:
            if parent in names and parent != var.name:
                graph.add_edge(parent, var.name)
    return graph


def validate_scm(scm: Scm) -> ValidationReport:
    """List every violated SCM invariant; an empty report means the model is valid."""
    report = ValidationReport()
    add = report.violations.append
    order = {name: idx for idx, name in reversed(list(enumerate(scm.names)))}

    seen: set[str] = set()
    for var in scm.variables:
        if var.name in seen:
            add(Violation(kind="duplicate-variable", location=f"variables.{var.name}",
                          detail="declared more than once", variables=(var.name,)))
        seen.add(var.name)

    for var in scm.variables:
        if len(set(var.parents)) != len(var.parents):
            add(Violation(kind="duplicate-parent", location=f"variables.{var.name}.parents",
                          detail=f"parents repeat: {list(var.parents)}", variables=(var.name,)))
        for parent in var.parents:
            if parent == var.name:
                add(Violation(kind="self-parent", location=f"variables.{var.name}.parents",
                              detail="variable lists itself as a parent", variables=(var.name,)))
            elif parent not in order:
                add(Violation(kind="dangling-parent", location=f"variables.{var.name}.parents",
                              detail=f"parent {parent!r} is not declared",
                              variables=(var.name, parent)))

    for component in nx.strongly_connected_components(_parent_graph(scm)):
        if len(component) > 1:
            members = tuple(sorted(component, key=order.__getitem__))
            add(Violation(kind="cycle", location="variables",
                          detail=f"cycle through {', '.join(members)}", variables=members))

    cpt_counts: dict[str, int] = {}
    for cpt in scm.cpts:
        cpt_counts[cpt.variable] = cpt_counts.get(cpt.variable, 0) + 1
        if cpt.variable not in order:
            add(Violation(kind="orphan-cpt", location=f"cpts.{cpt.variable}",
                          detail="cpt for an undeclared variable", variables=(cpt.variable,)))

    tol = settings.tolerances.normalization
    for var in scm.variables:
        count = cpt_counts.get(var.name, 0)
        if count == 0:
            add(Violation(kind="missing-cpt", location=f"cpts.{var.name}",
                          detail="no cpt declared", variables=(var.name,)))
            continue
        if count > 1:
            add(Violation(kind="duplicate-cpt", location=f"cpts.{var.name}",
                          detail=f"{count} cpts declared", variables=(var.name,)))
        rows = next(c for c in scm.cpts if c.variable == var.name).rows
        if all(p in order for p in var.parents):
            expected = math.prod(_first(scm, p).domain.size for p in var.parents)
            if len(rows) != expected:
                add(Violation(kind="row-count", location=f"cpts.{var.name}",
                              detail=f"{len(rows)} rows, expected {expected}",
                              variables=(var.name,)))
        for idx, row in enumerate(rows):
            where = f"cpts.{var.name}.rows[{idx}]"
            if len(row) != var.domain.size:
                add(Violation(kind="row-width", location=where, row=idx, variables=(var.name,),
                              detail=f"{len(row)} entries, domain has {var.domain.size}"))
                continue
            if any(not (0.0 <= p <= 1.0) for p in row):
                add(Violation(kind="row-range", location=where, row=idx, variables=(var.name,),
                              detail="entries must lie in [0, 1]"))
            total = math.fsum(row)
            if abs(total - 1.0) > tol:
                add(Violation(kind="row-mass", location=where, row=idx, variables=(var.name,),
                              detail=f"row {idx} sums to {total!r}"))
    return report


def _first(scm: Scm, name: str) -> Variable:
    return next(v for v in scm.variables if v.name == name)


def topological_order(scm: Scm) -> list[str]:
    """Parents-before-children order, ties broken by declaration order."""
    position = {name: idx for idx, name in enumerate(scm.names)}
    return list(nx.lexicographical_topological_sort(_parent_graph(scm), key=position.__getitem__))


def descendants(scm: Scm, name: str) -> set[str]:
    scm.variable(name)
    return set(nx.descendants(_parent_graph(scm), name))


def _require_valid(scm: Scm) -> None:
    report = validate_scm(scm)
    if not report.ok:
        raise InvalidScmError(report.violations)


def check_cells(cells: int, max_cells: int | None = None) -> None:
    cap = max_cells if max_cells is not None else settings.max_cells
    if cells > cap:
        raise StateSpaceOverflowError(cells, cap)


def joint_distribution(scm: Scm, *, max_cells: int | None = None) -> JointTable:
    """p(X) = prod_i p(X_i | Pa_i), enumerated over the full product space."""
    _require_valid(scm)
    names = scm.names
    sizes = [v.domain.size for v in scm.variables]
    check_cells(math.prod(sizes), max_cells)

    axis = {name: idx for idx, name in enumerate(names)}
    probs = np.ones(sizes, dtype=float)
    for var in scm.variables:
        axes = [axis[p] for p in var.parents] + [axis[var.name]]
        table = scm.cpt_array(var.name).transpose(np.argsort(axes))
        shape = [sizes[k] if k in axes else 1 for k in range(len(names))]
        probs = probs * table.reshape(shape)
    return JointTable.from_variables(scm.variables, probs)


def apply_intervention(scm: Scm, iv: Intervention) -> Scm:
    """Manipulated SCM: targets lose their parents and become point masses."""
    result = scm
    for name, label in iv.targets.items:
        var = scm.variable(name)
        try:
            idx = var.domain.index_of(label)
        except KeyError:
            raise DomainValueError(name, label) from None
        row = [0.0] * var.domain.size
        row[idx] = 1.0
        result = result.replace(var.model_copy(update={"parents": ()}), [row])
    return result


def marginal(jt: JointTable, names: Sequence[str]) -> JointTable:
    """Sum out every variable not in ``names``; the result follows the order of ``names``."""
    keep = [jt.axis(name) for name in names]
    if len(set(keep)) != len(keep):
        raise InputError("repeated variables", f"{list(names)}")
    drop = tuple(k for k in range(len(jt.scope)) if k not in keep)
    summed = jt.probs.sum(axis=drop) if drop else jt.probs
    remaining = sorted(keep)
    summed = np.transpose(summed, [remaining.index(k) for k in keep])
    return JointTable(
        scope=tuple(jt.scope[k] for k in keep),
        domains=tuple(jt.domains[k] for k in keep),
        probs=summed,
    )


def condition(jt: JointTable, evidence: Assignment) -> JointTable:
    """Slice on the evidence and renormalize over the remaining variables."""
    index: list[int | slice] = [slice(None)] * len(jt.scope)
    for name, label in evidence.items:
        axis = jt.axis(name)
        try:
            index[axis] = jt.domains[axis].index_of(label)
        except KeyError:
            raise DomainValueError(name, label) from None
    sliced = jt.probs[tuple(index)]
    mass = float(sliced.sum())
    if mass <= settings.tolerances.zero_mass:
        raise ZeroMassEvidenceError(str(evidence), mass)
    rest = [k for k in range(len(jt.scope)) if isinstance(index[k], slice)]
    return JointTable(
        scope=tuple(jt.scope[k] for k in rest),
        domains=tuple(jt.domains[k] for k in rest),
        probs=sliced / mass,
    )


def interventional_distribution(
    scm: Scm,
    iv: Intervention | None,
    query: Sequence[str] | None = None,
    *,
    max_cells: int | None = None,
) -> JointTable:
    """p(query | do(iv)); ``iv=None`` gives the observational marginal."""
    for name in query or ():
        if name not in scm.names:
            raise UnknownVariableError(name, scm.names)
    model = apply_intervention(scm, iv) if iv is not None else scm
    joint = joint_distribution(model, max_cells=max_cells)
    return marginal(joint, list(query) if query is not None else list(scm.names))


def conditional_independence_gap(
    jt: JointTable,
    left: Sequence[str],
    right: Sequence[str],
    given: Sequence[str] = (),
) -> float:
    """E_c[TV(p(a,b|c), p(a|c) p(b|c))]; zero iff left is independent of right given c."""
    if not left or not right:
        return 0.0
    sub = marginal(jt, [*left, *right, *given])
    n_left = math.prod(sub.shape[: len(left)])
    n_right = math.prod(sub.shape[len(left): len(left) + len(right)])
    table = sub.probs.reshape(n_left, n_right, -1)
    gap = 0.0
    for k in range(table.shape[2]):
        block = table[:, :, k]
        mass = float(block.sum())
        if mass <= settings.tolerances.zero_mass:
            continue
        cond = block / mass
        product = np.outer(cond.sum(axis=1), cond.sum(axis=0))
        gap += mass * 0.5 * float(np.abs(cond - product).sum())
    return gap
