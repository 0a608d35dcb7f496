"""PIDA / EMPIDA and the verdicts built on them.

Every quantity is computed by exhaustive enumeration: for a content set ``I`` and
a target set ``J`` we tabulate, for each content value ``g_I`` and each style
value ``g_-I``, the divergence between

* p(M_J | do(G_I = g_I)), i.e. the representation map averaged over
  p(G_-I | do(G_I = g_I)) taken from the factor SCM, and
* p(M_J | do(G_I = g_I, G_-I = g_-I)), the map's row at the full assignment.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Literal, Mapping, Sequence

import numpy as np
from pydantic import BaseModel, Field
from scipy.special import rel_entr

from .channel import Channel, compose_through, resolve_axes, restrict_channel
from .config import settings
from .errors import (
    DivergenceSupportError,
    DomainMismatchError,
    DomainValueError,
    InputError,
    UnknownVariableError,
)
from .instrumentation import get_logger
from .scm.inference import interventional_distribution, joint_distribution, marginal
from .scm.models import Assignment, Domain, Intervention, Scm, _label

logger = get_logger()

Expectation = Literal["observational", "uniform"]
Support = Mapping[str, Sequence[Any]]


class DivergenceKind(str, Enum):
    TOTAL_VARIATION = "tv"
    KULLBACK_LEIBLER = "kl"
    MEAN_ABSOLUTE_DIFFERENCE = "mad"

    @classmethod
    def parse(cls, value: "DivergenceKind | str | None") -> "DivergenceKind":
        if value is None:
            return cls(settings.divergence)
        if isinstance(value, cls):
            return value
        aliases = {"totalvariation": "tv", "kullbackleibler": "kl", "meanabsolutedifference": "mad"}
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        return cls(aliases.get(key, key))


def divergence_rows(
    first: np.ndarray,
    rows: np.ndarray,
    kind: DivergenceKind,
    levels: np.ndarray | None = None,
) -> np.ndarray:
    """d(first, row) for every row of ``rows``."""
    rows = np.atleast_2d(rows)
    if kind is DivergenceKind.TOTAL_VARIATION:
        return 0.5 * np.abs(rows - first).sum(axis=1)
    if kind is DivergenceKind.KULLBACK_LEIBLER:
        terms = rel_entr(np.broadcast_to(first, rows.shape), rows)
        if np.isinf(terms).any():
            raise DivergenceSupportError()
        return np.maximum(terms.sum(axis=1), 0.0)
    if levels is None:
        raise InputError("missing levels", "mean absolute difference needs target levels")
    return np.abs(rows @ levels - first @ levels).sum(axis=1)


def divergence(
    p: np.ndarray,
    q: np.ndarray,
    kind: DivergenceKind | str | None = None,
    levels: np.ndarray | None = None,
) -> float:
    return float(divergence_rows(np.asarray(p, float), np.asarray(q, float), DivergenceKind.parse(kind), levels)[0])


@dataclass(frozen=True, slots=True)
class GmSystem:
    """Factor SCM plus the stochastic map from its factors to the representation."""

    factor_scm: Scm
    alpha: Channel

    def __post_init__(self) -> None:
        names = self.factor_scm.names
        for name, dom in zip(self.alpha.sources, self.alpha.source_domains):
            if name not in names:
                raise UnknownVariableError(name, names)
            if self.factor_scm.domain(name) != dom:
                raise DomainMismatchError(name, self.factor_scm.domain(name).labels, dom.labels)
        for name in self.alpha.targets:
            if name in names:
                raise InputError("name collision", f"representation {name!r} is also a factor SCM variable")

    @classmethod
    def from_observation(cls, factor_scm: Scm, x_channel: Channel, m_channel: Channel) -> "GmSystem":
        """Precompose p(M | G) = E_{x ~ p(X | G)} p(M | x)."""
        return cls(factor_scm=factor_scm, alpha=compose_through(x_channel, m_channel))

    @property
    def factors(self) -> tuple[str, ...]:
        return self.alpha.sources

    @property
    def targets(self) -> tuple[str, ...]:
        return self.alpha.targets

    @property
    def context(self) -> tuple[str, ...]:
        return tuple(n for n in self.factor_scm.names if n not in self.factors)

    def factor_domain(self, index: int) -> Domain:
        return self.alpha.source_domains[index]

    def factor_indices(self, items: Sequence[int | str] | None) -> list[int]:
        return resolve_axes(self.factors, items)

    def target_indices(self, items: Sequence[int | str] | None) -> list[int]:
        return resolve_axes(self.targets, items)

    def factor_marginal(self, names: Sequence[str]) -> np.ndarray:
        """Observational p(names) as a flat vector."""
        return marginal(joint_distribution(self.factor_scm), names).flat()


@dataclass(slots=True)
class PidaTable:
    """PIDA for every (content value, style value) pair of one content/target choice."""

    content: list[int]
    targets: list[int]
    content_labels: list[tuple[str, ...]]
    style_labels: list[tuple[str, ...]]
    values: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def worst(self) -> np.ndarray:
        return self.values.max(axis=1)

    @property
    def empida(self) -> float:
        return float(self.weights @ self.worst)


def _support_mask(domains: Sequence[Domain], names: Sequence[str], support: Support | None) -> np.ndarray:
    masks = []
    for name, dom in zip(names, domains):
        mask = np.ones(dom.size, dtype=bool)
        if support and name in support:
            mask[:] = False
            for label in support[name]:
                try:
                    mask[dom.index_of(label)] = True
                except KeyError:
                    raise DomainValueError(name, _label(label)) from None
        masks.append(mask)
    if not masks:
        return np.ones(1, dtype=bool)
    return np.array([all(c) for c in itertools.product(*masks)], dtype=bool)


def pida_table(
    sys: GmSystem,
    content: Sequence[int | str],
    targets: Sequence[int | str] | None = None,
    d: DivergenceKind | str | None = None,
    *,
    expectation: Expectation | None = None,
    support: Support | None = None,
    skip_unweighted: bool = True,
    cell: tuple[int, int] | None = None,
) -> PidaTable:
    """Tabulate PIDA over content x style values; ``cell`` limits the sweep to one pair."""
    kind = DivergenceKind.parse(d)
    expectation = expectation or settings.expectation
    content_idx = sys.factor_indices(content)
    if not content_idx:
        raise InputError("empty content set", "name at least one content factor")
    target_idx = sys.target_indices(targets)
    style_idx = [k for k in range(len(sys.factors)) if k not in content_idx]

    names = sys.factors
    domains = sys.alpha.source_domains
    alpha_j = restrict_channel(sys.alpha, None, target_idx)
    levels = alpha_j.level_matrix() if kind is DivergenceKind.MEAN_ABSOLUTE_DIFFERENCE else None

    cube = alpha_j.table.reshape(*sys.alpha.source_shape, -1)
    cube = np.transpose(cube, [*content_idx, *style_idx, len(names)])
    content_names = [names[k] for k in content_idx]
    style_names = [names[k] for k in style_idx]
    content_domains = [domains[k] for k in content_idx]
    style_domains = [domains[k] for k in style_idx]
    n_content = int(np.prod([dom.size for dom in content_domains]))
    n_style = int(np.prod([dom.size for dom in style_domains])) if style_idx else 1
    cube = cube.reshape(n_content, n_style, -1)

    content_mask = _support_mask(content_domains, content_names, support)
    style_mask = _support_mask(style_domains, style_names, support)

    if expectation == "observational":
        weights = sys.factor_marginal(content_names)
    else:
        weights = np.ones(n_content)
    weights = np.where(content_mask, weights, 0.0)

    content_labels = list(itertools.product(*(dom.labels for dom in content_domains)))
    style_labels = list(itertools.product(*(dom.labels for dom in style_domains)))
    values = np.zeros((n_content, n_style))
    zero = settings.tolerances.zero_mass
    for a, labels in enumerate(content_labels):
        if cell is not None and a != cell[0]:
            continue
        if not content_mask[a] or (skip_unweighted and weights[a] <= zero):
            weights[a] = 0.0
            continue
        if style_idx:
            iv = Intervention(targets=Assignment(items=tuple(zip(content_names, labels))))
            mix = interventional_distribution(sys.factor_scm, iv, style_names).flat()
            mix = np.where(style_mask, mix, 0.0)
            mass = mix.sum()
            if mass <= zero:
                weights[a] = 0.0
                continue
            mix = mix / mass
        else:
            mix = np.ones(1)
        first = mix @ cube[a]
        rows = np.flatnonzero(style_mask) if cell is None else np.array([cell[1]])
        values[a, rows] = divergence_rows(first, cube[a, rows], kind, levels)

    total = weights.sum()
    weights = weights / total if total > 0 else weights
    return PidaTable(
        content=content_idx,
        targets=target_idx,
        content_labels=content_labels,
        style_labels=style_labels,
        values=values,
        weights=weights,
    )


def _labels_for(names: Sequence[str], assignment: Assignment | Mapping[str, Any]) -> tuple[str, ...]:
    values = assignment.as_dict() if isinstance(assignment, Assignment) else {
        k: _label(v) for k, v in assignment.items()
    }
    missing = [n for n in names if n not in values]
    if missing:
        raise UnknownVariableError(missing[0], list(values))
    return tuple(values[n] for n in names)


def block_pida(
    sys: GmSystem,
    content: Sequence[int | str],
    targets: Sequence[int | str],
    g_content: Assignment | Mapping[str, Any],
    g_style: Assignment | Mapping[str, Any],
    d: DivergenceKind | str | None = None,
) -> float:
    """PIDA(G_I, M_J | g_I, g_-I, d) for index sets."""
    names = sys.factors
    content_idx = sys.factor_indices(content)
    style_idx = [k for k in range(len(names)) if k not in content_idx]
    a = _grid_position(sys, content_idx, g_content)
    b = _grid_position(sys, style_idx, g_style)
    table = pida_table(
        sys, content_idx, targets, d, expectation="uniform", skip_unweighted=False, cell=(a, b)
    )
    return float(table.values[a, b])


def _grid_position(sys: GmSystem, axes: Sequence[int], assignment: Assignment | Mapping[str, Any]) -> int:
    names = [sys.factors[k] for k in axes]
    if not names:
        return 0
    labels = _labels_for(names, assignment)
    index = []
    for k, name, label in zip(axes, names, labels):
        try:
            index.append(sys.factor_domain(k).index_of(label))
        except KeyError:
            raise DomainValueError(name, label) from None
    return int(np.ravel_multi_index(index, [sys.factor_domain(k).size for k in axes]))


def pida(
    sys: GmSystem,
    i: int | str,
    j: int | str,
    g_i: Any,
    g_minus_i: Assignment | Mapping[str, Any],
    d: DivergenceKind | str | None = None,
) -> float:
    name = sys.factors[sys.factor_indices([i])[0]]
    return block_pida(sys, [i], [j], {name: g_i}, g_minus_i, d)


def block_empida(
    sys: GmSystem,
    content: Sequence[int | str],
    targets: Sequence[int | str] | None = None,
    d: DivergenceKind | str | None = None,
    *,
    expectation: Expectation | None = None,
    support: Support | None = None,
) -> float:
    """E_{g_I}[max_{g_-I} PIDA]; the empty style set contributes zero."""
    return pida_table(sys, content, targets, d, expectation=expectation, support=support).empida


def empida(
    sys: GmSystem,
    i: int | str,
    j: int | str,
    d: DivergenceKind | str | None = None,
    *,
    expectation: Expectation | None = None,
    support: Support | None = None,
) -> float:
    return block_empida(sys, [i], [j], d, expectation=expectation, support=support)


def empida_matrix(
    sys: GmSystem,
    d: DivergenceKind | str | None = None,
    *,
    expectation: Expectation | None = None,
    support: Support | None = None,
) -> np.ndarray:
    """EMPIDA(G_i, M_j) indexed ``[i, j]``."""
    matrix = np.zeros((len(sys.factors), len(sys.targets)))
    for i in range(len(sys.factors)):
        for j in range(len(sys.targets)):
            matrix[i, j] = empida(sys, i, j, d, expectation=expectation, support=support)
    logger.debug("empida matrix %s", matrix.tolist())
    return matrix


class DisentanglementVerdict(BaseModel):
    verdict: bool
    witness: list[int] = Field(default_factory=list)
    score: float = 0.0
    column_minima: list[float] = Field(default_factory=list)


def disentanglement_verdict(matrix: np.ndarray | Sequence[Sequence[float]], eps: float | None = None) -> DisentanglementVerdict:
    """max_j min_i EMPIDA(G_i, M_j) <= eps; ties in the witness go to the lowest factor."""
    eps = settings.tolerances.verdict_eps if eps is None else eps
    if eps < 0:
        raise InputError("negative eps", f"eps must be non-negative, got {eps}")
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return DisentanglementVerdict(verdict=True)
    minima = matrix.min(axis=0)
    score = float(minima.max())
    return DisentanglementVerdict(
        verdict=score <= eps,
        witness=[int(k) for k in matrix.argmin(axis=0)],
        score=score,
        column_minima=[float(v) for v in minima],
    )


def content_style_check(
    sys: GmSystem,
    content: Sequence[int | str],
    target: Sequence[int | str],
    d: DivergenceKind | str | None = None,
    eps: float | None = None,
    *,
    expectation: Expectation | None = None,
) -> bool:
    """G_content separates content from style in M_target (one-sided)."""
    eps = settings.tolerances.verdict_eps if eps is None else eps
    return block_empida(sys, content, target, d, expectation=expectation) <= eps
