"""Stochastic maps between assignment spaces.

A :class:`Channel` is a dense row-stochastic table: one row per source assignment
(lexicographic in source order), one column per target assignment. It carries
the representation map G -> M as well as the human-to-machine map H -> M.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Mapping, Sequence

import numpy as np
from pydantic import BaseModel, model_validator

from .config import settings
from .errors import (
    DomainMismatchError,
    DomainValueError,
    EmptyRepresentationError,
    InputError,
    ScopeMismatchError,
    UnknownVariableError,
)
from .scm.inference import interventional_distribution, marginal
from .scm.models import Assignment, Domain, Intervention, JointTable, Scm, _label

Port = tuple[str, Domain]


def _sizes(domains: Sequence[Domain]) -> tuple[int, ...]:
    return tuple(d.size for d in domains)


def _grid(domains: Sequence[Domain]) -> Iterator[tuple[str, ...]]:
    return itertools.product(*(d.labels for d in domains))


@dataclass(frozen=True, slots=True)
class Channel:
    sources: tuple[str, ...]
    source_domains: tuple[Domain, ...]
    targets: tuple[str, ...]
    target_domains: tuple[Domain, ...]
    table: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if len(self.sources) != len(self.source_domains):
            raise ValueError("sources and source domains differ in length")
        if len(self.targets) != len(self.target_domains):
            raise ValueError("targets and target domains differ in length")
        if not self.targets:
            raise ValueError("a channel needs at least one target")
        overlap = set(self.sources) & set(self.targets)
        if overlap:
            raise ValueError(f"sources and targets overlap: {sorted(overlap)}")
        if len(set(self.sources)) != len(self.sources) or len(set(self.targets)) != len(self.targets):
            raise ValueError("channel ports repeat a variable")
        rows = math.prod(_sizes(self.source_domains))
        cols = math.prod(_sizes(self.target_domains))
        table = np.array(self.table, dtype=float).reshape(rows, cols)
        tol = settings.tolerances.normalization
        if table.min() < -tol or table.max() > 1 + tol:
            raise ValueError("channel entries must lie in [0, 1]")
        sums = table.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
        if bad.size:
            raise ValueError(f"channel row {int(bad[0])} sums to {float(sums[bad[0]])!r}")
        table = np.clip(table, 0.0, 1.0)
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    # -- construction -------------------------------------------------

    @classmethod
    def from_rows(cls, sources: Sequence[Port], targets: Sequence[Port], rows: Any) -> "Channel":
        return cls(
            sources=tuple(name for name, _ in sources),
            source_domains=tuple(dom for _, dom in sources),
            targets=tuple(name for name, _ in targets),
            target_domains=tuple(dom for _, dom in targets),
            table=np.asarray(rows, dtype=float),
        )

    @classmethod
    def deterministic(
        cls,
        sources: Sequence[Port],
        targets: Sequence[Port],
        fn: Callable[[dict[str, str]], Mapping[str, Any] | Sequence[Any]],
    ) -> "Channel":
        """Channel whose row at ``g`` is the point mass on ``fn(g)``."""
        src_domains = [dom for _, dom in sources]
        tgt_domains = [dom for _, dom in targets]
        tgt_names = [name for name, _ in targets]
        table = np.zeros((math.prod(_sizes(src_domains)), math.prod(_sizes(tgt_domains))))
        for row, labels in enumerate(_grid(src_domains)):
            image = fn(dict(zip((name for name, _ in sources), labels)))
            values = [image[n] for n in tgt_names] if isinstance(image, Mapping) else list(image)
            index = []
            for name, dom, value in zip(tgt_names, tgt_domains, values, strict=True):
                try:
                    index.append(dom.index_of(value))
                except KeyError:
                    raise DomainValueError(name, _label(value)) from None
            table[row, np.ravel_multi_index(index, _sizes(tgt_domains))] = 1.0
        return cls.from_rows(sources, targets, table)

    @classmethod
    def identity_like(cls, sources: Sequence[Port], target_names: Sequence[str]) -> "Channel":
        """Copy each source into the correspondingly named target."""
        if len(target_names) != len(sources):
            raise ScopeMismatchError([n for n, _ in sources], target_names)
        targets = [(name, dom) for name, (_, dom) in zip(target_names, sources)]
        return cls.deterministic(sources, targets, lambda g: list(g.values()))

    @classmethod
    def from_scm(cls, scm: Scm, sources: Sequence[str], targets: Sequence[str]) -> "Channel":
        """p(targets | do(sources)) read off the SCM, one intervention per row."""
        src = [(name, scm.domain(name)) for name in sources]
        tgt = [(name, scm.domain(name)) for name in targets]
        if not sources:
            dist = interventional_distribution(scm, None, list(targets))
            return cls.from_rows(src, tgt, dist.flat()[None, :])
        rows = []
        for labels in _grid([dom for _, dom in src]):
            iv = Intervention(targets=Assignment(items=tuple(zip(sources, labels))))
            rows.append(interventional_distribution(scm, iv, list(targets)).flat())
        return cls.from_rows(src, tgt, np.vstack(rows))

    # -- access -------------------------------------------------------

    @property
    def source_shape(self) -> tuple[int, ...]:
        return _sizes(self.source_domains)

    @property
    def target_shape(self) -> tuple[int, ...]:
        return _sizes(self.target_domains)

    @property
    def source_ports(self) -> list[Port]:
        return list(zip(self.sources, self.source_domains))

    @property
    def target_ports(self) -> list[Port]:
        return list(zip(self.targets, self.target_domains))

    def source_labels(self) -> list[tuple[str, ...]]:
        return list(_grid(self.source_domains))

    def target_labels(self) -> list[tuple[str, ...]]:
        return list(_grid(self.target_domains))

    def source_index(self, source: Assignment | Mapping[str, Any]) -> int:
        if not isinstance(source, Assignment):
            source = Assignment.of(source)
        values = source.as_dict()
        extra = set(values) - set(self.sources)
        if extra:
            raise UnknownVariableError(sorted(extra)[0], self.sources)
        index = []
        for name, dom in zip(self.sources, self.source_domains):
            if name not in values:
                raise ScopeMismatchError(self.sources, source.names)
            try:
                index.append(dom.index_of(values[name]))
            except KeyError:
                raise DomainValueError(name, values[name]) from None
        if not index:
            return 0
        return int(np.ravel_multi_index(index, self.source_shape))

    def row(self, source: Assignment | Mapping[str, Any]) -> JointTable:
        """Distribution over the targets at one source assignment."""
        return JointTable(
            scope=self.targets,
            domains=self.target_domains,
            probs=self.table[self.source_index(source)],
        )

    def level_matrix(self) -> np.ndarray:
        """Levels of every target coordinate per target assignment, shape ``(cols, |targets|)``."""
        grids = np.meshgrid(*(d.levels for d in self.target_domains), indexing="ij")
        return np.stack([g.reshape(-1) for g in grids], axis=1)

    def moments(self) -> np.ndarray:
        """Expected target levels for every source row, shape ``(rows, |targets|)``."""
        return self.table @ self.level_matrix()

    def target_axes(self, subset: Sequence[int | str] | None) -> list[int]:
        return resolve_axes(self.targets, subset)


def resolve_axes(scope: Sequence[str], subset: Sequence[int | str] | None) -> list[int]:
    """Turn indices or names into positions within ``scope``; ``None`` selects everything."""
    if subset is None:
        return list(range(len(scope)))
    axes = []
    for item in subset:
        if isinstance(item, str):
            if item not in scope:
                raise UnknownVariableError(item, scope)
            axes.append(list(scope).index(item))
        else:
            if not 0 <= int(item) < len(scope):
                raise UnknownVariableError(f"#{item}", scope)
            axes.append(int(item))
    if len(set(axes)) != len(axes):
        raise InputError("repeated coordinates", f"{list(subset)}")
    return axes


def compose_through(
    inner: Channel | Scm,
    outer: Channel,
    sources: Sequence[str] | None = None,
) -> Channel:
    """p(m | g) = sum_x p(x | g) p(m | x).

    ``inner`` may be an SCM, in which case it is sliced into p(outer.sources | do(sources)).
    """
    if isinstance(inner, Scm):
        if sources is None:
            raise InputError("missing sources", "composing through an SCM needs explicit sources")
        inner = Channel.from_scm(inner, sources, outer.sources)
    if inner.targets != outer.sources:
        raise ScopeMismatchError(outer.sources, inner.targets)
    for name, want, got in zip(outer.sources, outer.source_domains, inner.target_domains):
        if want != got:
            raise DomainMismatchError(name, want.labels, got.labels)
    table = inner.table @ outer.table
    table = table / table.sum(axis=1, keepdims=True)
    return Channel(
        sources=inner.sources,
        source_domains=inner.source_domains,
        targets=outer.targets,
        target_domains=outer.target_domains,
        table=table,
    )


def push_forward(dist: JointTable, ch: Channel) -> JointTable:
    """Image distribution of ``dist`` through ``ch``."""
    if set(dist.scope) != set(ch.sources) or len(dist.scope) != len(ch.sources):
        raise ScopeMismatchError(ch.sources, dist.scope)
    if dist.scope != ch.sources:
        dist = marginal(dist, ch.sources)
    for name, want, got in zip(ch.sources, ch.source_domains, dist.domains):
        if want != got:
            raise DomainMismatchError(name, want.labels, got.labels)
    probs = dist.flat() @ ch.table
    return JointTable(scope=ch.targets, domains=ch.target_domains, probs=probs)


def expected_levels(dist: JointTable) -> np.ndarray:
    """First moment of every variable in the scope."""
    out = np.empty(len(dist.scope))
    for axis, dom in enumerate(dist.domains):
        others = tuple(k for k in range(len(dist.scope)) if k != axis)
        out[axis] = float(dist.probs.sum(axis=others) @ dom.levels)
    return out


def expected_embedding(
    ch: Channel,
    source: Assignment | Mapping[str, Any],
    target_subset: Sequence[int | str] | None = None,
) -> np.ndarray:
    """E[level(m_t) | source] for each selected target coordinate."""
    axes = ch.target_axes(target_subset)
    row = ch.table[ch.source_index(source)]
    return (row @ ch.level_matrix())[axes]


def restrict_channel(
    ch: Channel,
    source_fixed: Assignment | Mapping[str, Any] | None = None,
    target_subset: Sequence[int | str] | None = None,
) -> Channel:
    """Slice on fixed sources and marginalize to the chosen targets."""
    if source_fixed is None:
        source_fixed = Assignment()
    elif not isinstance(source_fixed, Assignment):
        source_fixed = Assignment.of(source_fixed)
    keep = ch.target_axes(target_subset)
    if not keep:
        raise EmptyRepresentationError()
    fixed = source_fixed.as_dict()
    for name in fixed:
        if name not in ch.sources:
            raise UnknownVariableError(name, ch.sources)

    cube = ch.table.reshape(*ch.source_shape, *ch.target_shape)
    index: list[int | slice] = []
    free: list[int] = []
    for axis, (name, dom) in enumerate(zip(ch.sources, ch.source_domains)):
        if name in fixed:
            try:
                index.append(dom.index_of(fixed[name]))
            except KeyError:
                raise DomainValueError(name, fixed[name]) from None
        else:
            index.append(slice(None))
            free.append(axis)
    cube = cube[tuple(index)]

    n_free = len(free)
    drop = tuple(n_free + k for k in range(len(ch.targets)) if k not in keep)
    if drop:
        cube = cube.sum(axis=drop)
    remaining = sorted(keep)
    perm = list(range(n_free)) + [n_free + remaining.index(k) for k in keep]
    cube = np.transpose(cube, perm)

    rows = math.prod(ch.source_shape[a] for a in free)
    return Channel(
        sources=tuple(ch.sources[a] for a in free),
        source_domains=tuple(ch.source_domains[a] for a in free),
        targets=tuple(ch.targets[k] for k in keep),
        target_domains=tuple(ch.target_domains[k] for k in keep),
        table=cube.reshape(rows, -1),
    )


def channel_image(
    ch: Channel,
    source: Assignment | Mapping[str, Any],
    target_subset: Sequence[int | str] | None = None,
    *,
    tol: float | None = None,
) -> Assignment | None:
    """The single atom of the row restricted to ``target_subset``, or ``None`` if it is spread out."""
    tol = settings.tolerances.verdict_eps if tol is None else tol
    sub = restrict_channel(ch, source, target_subset)
    row = sub.table[0]
    best = int(np.argmax(row))
    if row[best] < 1.0 - tol:
        return None
    labels = sub.target_labels()[best]
    return Assignment(items=tuple(zip(sub.targets, labels)))


def is_deterministic_on(
    ch: Channel, target_subset: Sequence[int | str] | None = None, *, tol: float | None = None
) -> bool:
    tol = settings.tolerances.verdict_eps if tol is None else tol
    sub = restrict_channel(ch, None, target_subset)
    return bool(np.all(sub.table.max(axis=1) >= 1.0 - tol))


class BlockStructure(BaseModel):
    """Source/target partitions and the block map ``pi`` (target block -> source block)."""

    source_partition: list[list[int]]
    target_partition: list[list[int]]
    pi: list[int]

    @model_validator(mode="after")
    def check_blocks(self) -> "BlockStructure":
        for label, partition in (("source", self.source_partition), ("target", self.target_partition)):
            if not partition:
                raise ValueError(f"{label} partition is empty")
            flat = [idx for block in partition for idx in block]
            if any(not block for block in partition):
                raise ValueError(f"{label} partition has an empty block")
            if any(idx < 0 for idx in flat):
                raise ValueError(f"{label} partition has a negative index")
            if len(set(flat)) != len(flat):
                raise ValueError(f"{label} blocks overlap")
        if len(self.pi) != len(self.target_partition):
            raise ValueError("pi must map every target block")
        if any(not 0 <= b < len(self.source_partition) for b in self.pi):
            raise ValueError("pi refers to an unknown source block")
        if set(self.pi) != set(range(len(self.source_partition))):
            raise ValueError("pi must be surjective onto the source blocks")
        return self

    @classmethod
    def singletons(cls, n: int) -> "BlockStructure":
        return cls(
            source_partition=[[k] for k in range(n)],
            target_partition=[[k] for k in range(n)],
            pi=list(range(n)),
        )

    def preimage(self, source_blocks: Sequence[int]) -> list[int]:
        """Target blocks mapped into ``source_blocks``."""
        wanted = set(source_blocks)
        return [t for t, s in enumerate(self.pi) if s in wanted]

    def source_block_of(self, index: int) -> int | None:
        for b, block in enumerate(self.source_partition):
            if index in block:
                return b
        return None

    def target_indices(self, target_blocks: Sequence[int]) -> list[int]:
        return [idx for t in target_blocks for idx in self.target_partition[t]]

    def source_indices(self, source_blocks: Sequence[int]) -> list[int]:
        return [idx for s in source_blocks for idx in self.source_partition[s]]

    def check_against(self, n_sources: int, n_targets: int) -> None:
        """Raise when block indices fall outside the given arities."""
        if any(idx >= n_sources for block in self.source_partition for idx in block):
            raise ScopeMismatchError([f"#{k}" for k in range(n_sources)], [str(self.source_partition)])
        if any(idx >= n_targets for block in self.target_partition for idx in block):
            raise ScopeMismatchError([f"#{k}" for k in range(n_targets)], [str(self.target_partition)])
