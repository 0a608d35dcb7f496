"""Parse, validate and resolve world specs.

``parse_spec`` accepts raw bytes, a :class:`~pathlib.Path` or the document text
itself, and either returns a fully resolved :class:`WorldSpec` or raises
:class:`~alignkit.errors.SpecError` carrying every diagnostic it found.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
from pydantic import ValidationError

from ..abstraction.models import AbstractionCase
from ..channel import BlockStructure, Channel
from ..disentangle import GmSystem
from ..errors import AlignkitError, InputError, SpecError
from ..leakage.models import LeakageScenario
from ..scm.inference import validate_scm
from ..scm.models import Cpt, Domain, JointTable, Scm, Variable
from .models import ChannelSpec, Diagnostic, DomainRef, PortSpec, WorldSpec


@dataclass(frozen=True)
class World:
    """A resolved spec: runtime SCMs, channels, block structures and distributions."""

    spec: WorldSpec
    scms: dict[str, Scm] = field(default_factory=dict)
    channels: dict[str, Channel] = field(default_factory=dict)
    blocks: dict[str, BlockStructure] = field(default_factory=dict)
    distributions: dict[str, JointTable] = field(default_factory=dict)

    def _role(self, role: str) -> str:
        name = getattr(self.spec.scenario, role)
        if name is None:
            raise InputError("missing role", f"scenario does not bind {role!r}")
        return name

    def scm(self, name: str | None = None) -> Scm:
        """Named SCM, else the scenario's factor SCM, else the only SCM declared."""
        if name is None:
            scenario = self.spec.scenario
            name = scenario.factor_scm or scenario.scm_h
            if name is None and len(self.scms) == 1:
                name = next(iter(self.scms))
            if name is None:
                raise InputError("missing role", "name an SCM; the spec declares several")
        if name not in self.scms:
            raise InputError("unresolved reference", f"no SCM named {name!r}")
        return self.scms[name]

    def gm_system(self) -> GmSystem:
        scenario = self.spec.scenario
        factor_scm = self.scms[self._role("factor_scm")]
        if scenario.alpha is not None:
            return GmSystem(factor_scm=factor_scm, alpha=self.channels[scenario.alpha])
        if scenario.x_channel is not None and scenario.m_channel is not None:
            return GmSystem.from_observation(
                factor_scm, self.channels[scenario.x_channel], self.channels[scenario.m_channel]
            )
        raise InputError("missing role", "scenario binds neither 'alpha' nor 'x_channel' with 'm_channel'")

    def leakage_scenario(self) -> LeakageScenario:
        return LeakageScenario(
            factor_scm=self.scms[self._role("factor_scm")],
            x_channel=self.channels[self._role("x_channel")],
            label_channel=self.channels[self._role("label_channel")],
            m_channel=self.channels[self._role("m_channel")],
            intervention_dist=self.distributions[self._role("intervention_dist")],
        )

    def block_structure(self) -> BlockStructure | None:
        name = self.spec.scenario.blocks
        return None if name is None else self.blocks[name]

    def abstraction_case(self) -> AbstractionCase:
        scm_h = self.scms[self._role("scm_h")]
        scm_m = self.scms[self._role("scm_m")]
        blocks = self.block_structure() or BlockStructure.singletons(len(scm_h.names))
        return AbstractionCase(scm_h=scm_h, scm_m=scm_m, beta=self.channels[self._role("beta")], blocks=blocks)


class _Resolver:
    def __init__(self, spec: WorldSpec) -> None:
        self.spec = spec
        self.diagnostics: list[Diagnostic] = []

    def report(self, kind: str, location: str, message: str) -> None:
        self.diagnostics.append(Diagnostic(kind=kind, location=location, message=message))  # type: ignore[arg-type]

    def domain(self, ref: DomainRef, where: str) -> Domain | None:
        if isinstance(ref, str):
            if ref not in self.spec.domains:
                self.report("reference", where, f"unknown domain {ref!r}")
                return None
            ref = self.spec.domains[ref]
        try:
            return Domain.of(ref.values, ref.levels, ordered=ref.ordered)
        except ValueError as exc:
            self.report("invariant", where, _first_line(exc))
            return None

    def ports(self, ports: list[PortSpec], where: str) -> list[tuple[str, Domain]] | None:
        out = []
        for k, port in enumerate(ports):
            dom = self.domain(port.domain, f"{where}[{k}].domain")
            if dom is None:
                return None
            out.append((port.name, dom))
        return out

    def scm(self, name: str) -> Scm | None:
        where = f"scms.{name}"
        variables, cpts = [], []
        for k, var in enumerate(self.spec.scms[name].variables):
            dom = self.domain(var.domain, f"{where}.variables[{k}].domain")
            if dom is None:
                return None
            variables.append(Variable(name=var.name, domain=dom, parents=tuple(var.parents)))
            cpts.append(Cpt(variable=var.name, rows=tuple(tuple(row) for row in var.cpt)))
        scm = Scm(variables=tuple(variables), cpts=tuple(cpts))
        report = validate_scm(scm)
        for violation in report.violations:
            owner = f"{violation.variables[0]}: " if violation.variables else ""
            self.report("invariant", f"{where}.{violation.location}", f"{owner}{violation.detail}")
        return scm if report.ok else None

    def channel(self, name: str) -> Channel | None:
        where = f"channels.{name}"
        body: ChannelSpec = self.spec.channels[name]
        sources = self.ports(body.sources, f"{where}.sources")
        targets = self.ports(body.targets, f"{where}.targets")
        if sources is None or targets is None:
            return None
        try:
            if body.table is not None:
                return Channel.from_rows(sources, targets, _table(body.table, sources, targets))
            return Channel.from_rows(sources, targets, _map_table(body.map or [], sources, targets))
        except (ValueError, AlignkitError) as exc:
            self.report("invariant", where, _first_line(exc))
            return None

    def distribution(self, name: str) -> JointTable | None:
        where = f"distributions.{name}"
        body = self.spec.distributions[name]
        scope = self.ports(body.scope, f"{where}.scope")
        if scope is None:
            return None
        try:
            cells = math.prod(dom.size for _, dom in scope)
            if len(body.probs) != cells:
                raise ValueError(f"{len(body.probs)} probabilities for {cells} cells")
            return JointTable(
                scope=tuple(n for n, _ in scope),
                domains=tuple(d for _, d in scope),
                probs=np.asarray(body.probs, dtype=float),
            )
        except ValueError as exc:
            self.report("invariant", where, _first_line(exc))
            return None

    def block(self, name: str) -> BlockStructure | None:
        try:
            return BlockStructure.model_validate(self.spec.blocks[name].model_dump())
        except ValidationError as exc:
            for err in exc.errors():
                self.report("invariant", f"blocks.{name}", err["msg"])
            return None

    def resolve(self) -> World:
        world = World(spec=self.spec)
        for name in self.spec.scms:
            if (scm := self.scm(name)) is not None:
                world.scms[name] = scm
        for name in self.spec.channels:
            if (channel := self.channel(name)) is not None:
                world.channels[name] = channel
        for name in self.spec.distributions:
            if (dist := self.distribution(name)) is not None:
                world.distributions[name] = dist
        for name in self.spec.blocks:
            if (blocks := self.block(name)) is not None:
                world.blocks[name] = blocks
        if not self.diagnostics:
            self.bind(world)
        return world

    def bind(self, world: World) -> None:
        scenario = self.spec.scenario
        refs = {
            "factor_scm": world.scms, "scm_h": world.scms, "scm_m": world.scms,
            "alpha": world.channels, "beta": world.channels, "x_channel": world.channels,
            "m_channel": world.channels, "label_channel": world.channels,
            "intervention_dist": world.distributions, "blocks": world.blocks,
        }
        for role, table in refs.items():
            name = getattr(scenario, role)
            if name is not None and name not in table:
                self.report("reference", f"scenario.{role}", f"unknown name {name!r}")
        if self.diagnostics:
            return

        checks: list[tuple[str, Callable[[], Any]]] = []
        if scenario.factor_scm and (scenario.alpha or (scenario.x_channel and scenario.m_channel)):
            checks.append(("scenario.alpha", world.gm_system))
        if scenario.label_channel:
            checks.append(("scenario.label_channel", world.leakage_scenario))
        if scenario.scm_h or scenario.scm_m or scenario.beta:
            checks.append(("scenario.beta", world.abstraction_case))
        for where, check in checks:
            try:
                result = check()
            except (ValueError, AlignkitError) as exc:
                self.report("binding", where, _first_line(exc))
                continue
            if isinstance(result, GmSystem):
                self.bind_names(where, "interpretable", scenario.interpretable, result.factors)
                self.bind_names(where, "keep", scenario.keep, result.targets)
                blocks = world.block_structure()
                if blocks is not None:
                    try:
                        blocks.check_against(len(result.factors), len(result.targets))
                    except AlignkitError as exc:
                        self.report("binding", "scenario.blocks", _first_line(exc))

    def bind_names(self, where: str, role: str, names: list[str] | None, scope: tuple[str, ...]) -> None:
        for name in names or []:
            if name not in scope:
                self.report("binding", f"scenario.{role}", f"{name!r} is not one of {', '.join(scope)}")


def _first_line(exc: Exception) -> str:
    if isinstance(exc, AlignkitError):
        return f"{exc.reason}: {exc.detail}" if exc.detail else exc.reason
    if isinstance(exc, ValidationError):
        return "; ".join(err["msg"] for err in exc.errors())
    return str(exc).splitlines()[0] if str(exc) else type(exc).__name__


def _table(rows: list[list[float]], sources: list[tuple[str, Domain]], targets: list[tuple[str, Domain]]) -> np.ndarray:
    n_rows = math.prod(d.size for _, d in sources)
    n_cols = math.prod(d.size for _, d in targets)
    if len(rows) != n_rows:
        raise ValueError(f"{len(rows)} rows, expected {n_rows}")
    for k, row in enumerate(rows):
        if len(row) != n_cols:
            raise ValueError(f"row {k} has {len(row)} entries, expected {n_cols}")
    return np.asarray(rows, dtype=float)


def _map_table(
    images: list[list[Any]], sources: list[tuple[str, Domain]], targets: list[tuple[str, Domain]]
) -> np.ndarray:
    n_rows = math.prod(d.size for _, d in sources)
    shape = tuple(d.size for _, d in targets)
    if len(images) != n_rows:
        raise ValueError(f"{len(images)} map entries, expected {n_rows}")
    table = np.zeros((n_rows, math.prod(shape)))
    for k, image in enumerate(images):
        if len(image) != len(targets):
            raise ValueError(f"map entry {k} has {len(image)} labels, expected {len(targets)}")
        index = []
        for (name, dom), label in zip(targets, image):
            try:
                index.append(dom.index_of(label))
            except KeyError:
                raise ValueError(f"map entry {k}: {label!r} is not a value of {name}") from None
        table[k, np.ravel_multi_index(index, shape)] = 1.0
    return table


def _decode(source: bytes | str | Path) -> str:
    if isinstance(source, Path):
        try:
            source = source.read_bytes()
        except OSError as exc:
            raise InputError("unreadable spec", f"{source}: {exc.strerror}") from None
    if isinstance(source, bytes):
        try:
            return source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SpecError([Diagnostic(kind="syntax", location=f"byte {exc.start}", message="not UTF-8")]) from None
    return source


def _validate(text: str) -> WorldSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(
            [Diagnostic(kind="syntax", location=f"line {exc.lineno}, column {exc.colno}", message=exc.msg)]
        ) from None
    try:
        return WorldSpec.model_validate(data)
    except ValidationError as exc:
        raise SpecError(
            [
                Diagnostic(
                    kind="schema",
                    location=".".join(str(part) for part in err["loc"]) or "<root>",
                    message=err["msg"],
                )
                for err in exc.errors()
            ]
        ) from None


def build_world(spec: WorldSpec) -> World:
    """Resolve every named entry; raise :class:`SpecError` listing all problems."""
    resolver = _Resolver(spec)
    world = resolver.resolve()
    if resolver.diagnostics:
        raise SpecError(resolver.diagnostics)
    return world


def parse_spec(source: bytes | str | Path) -> WorldSpec:
    spec = _validate(_decode(source))
    build_world(spec)
    return spec


def load_world(source: bytes | str | Path) -> World:
    return build_world(_validate(_decode(source)))


def emit_spec(spec: WorldSpec) -> str:
    """Canonical JSON text: declaration order, two-space indent, unset fields omitted."""
    return json.dumps(spec.model_dump(mode="json", exclude_none=True), indent=2, ensure_ascii=False) + "\n"


def input_digest(spec: WorldSpec) -> str:
    return hashlib.sha256(emit_spec(spec).encode("utf-8")).hexdigest()
