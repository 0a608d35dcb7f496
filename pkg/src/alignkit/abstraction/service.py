"""Checks that intervening then mapping equals mapping then intervening."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np

from ..alignment.service import block_embeddings
from ..channel import BlockStructure, Channel, push_forward, restrict_channel
from ..config import settings
from ..disentangle import DivergenceKind, GmSystem, block_empida
from ..errors import (
    CombinatorialCapError,
    InputError,
    PartialBlockInterventionError,
    ScopeMismatchError,
    StochasticBlockError,
    UnknownVariableError,
)
from ..instrumentation import TelemetryEvent, emit_event, get_logger
from ..scm.inference import apply_intervention, interventional_distribution
from ..scm.models import Assignment, Intervention, Scm
from .models import (
    AbstractionCase,
    AbstractionReport,
    CommutationRecord,
    IsolationCheck,
    IsolationReport,
    MappedIntervention,
)

logger = get_logger()


def _hit_blocks(beta: Channel, blocks: BlockStructure, iv_h: Intervention) -> list[int]:
    positions = []
    for name in iv_h.targets.names:
        if name not in beta.sources:
            raise UnknownVariableError(name, beta.sources)
        positions.append(beta.sources.index(name))
    hit = set()
    for idx in positions:
        block = blocks.source_block_of(idx)
        if block is None:
            raise PartialBlockInterventionError(
                "partial block intervention", f"{beta.sources[idx]!r} belongs to no source block"
            )
        hit.add(block)
    for block in sorted(hit):
        missing = [beta.sources[k] for k in blocks.source_partition[block] if k not in positions]
        if missing:
            raise PartialBlockInterventionError(
                "partial block intervention", f"{iv_h} leaves {', '.join(missing)} of block {block} free"
            )
    return sorted(hit)


def _block_rows(beta: Channel, blocks: BlockStructure, iv_h: Intervention) -> Channel:
    """beta restricted to the pre-image coordinates, one row per completion of the untouched H."""
    hit = _hit_blocks(beta, blocks, iv_h)
    targets = sorted(blocks.target_indices(blocks.preimage(hit)))
    return restrict_channel(beta, iv_h.targets, targets)


def map_intervention(beta: Channel, blocks: BlockStructure, iv_h: Intervention) -> Intervention:
    """do(H_I = h_I) -> do(M_J = beta_J(h_I)) with J the pre-image of the hit blocks."""
    rows = _block_rows(beta, blocks, iv_h)
    tol = settings.tolerances.verdict_eps
    atoms = set()
    for row in rows.table:
        best = int(np.argmax(row))
        if row[best] < 1.0 - tol:
            raise StochasticBlockError(
                "stochastic block", f"beta spreads {iv_h} over several values of {', '.join(rows.targets)}"
            )
        atoms.add(best)
    if len(atoms) > 1:
        raise StochasticBlockError(
            "stochastic block", f"the image of {iv_h} depends on variables outside the intervened blocks"
        )
    labels = rows.target_labels()[atoms.pop()]
    return Intervention(targets=Assignment(items=tuple(zip(rows.targets, labels))))


def map_intervention_distribution(case: AbstractionCase, iv_h: Intervention) -> list[tuple[Intervention, float]]:
    """Distribution over mapped interventions, averaging beta over p(H_-I | do(H_I))."""
    rows = _block_rows(case.beta, case.blocks, iv_h)
    if rows.sources:
        weights = interventional_distribution(case.scm_h, iv_h, list(rows.sources)).flat()
    else:
        weights = np.ones(1)
    mixture = weights @ rows.table
    labels = rows.target_labels()
    out = []
    for col in np.flatnonzero(mixture > settings.tolerances.zero_mass):
        iv = Intervention(targets=Assignment(items=tuple(zip(rows.targets, labels[col]))))
        out.append((iv, float(mixture[col])))
    total = sum(w for _, w in out)
    return [(iv, w / total) for iv, w in out]


def check_commutes(
    case: AbstractionCase,
    iv_h: Intervention,
    eps: float | None = None,
    *,
    approximate: bool = False,
) -> CommutationRecord:
    """TV between beta_* p(H | do(iv_h)) and p(M | do(mapped iv))."""
    eps = settings.tolerances.verdict_eps if eps is None else eps
    lhs = push_forward(interventional_distribution(case.scm_h, iv_h), case.beta)
    if approximate:
        mapped = map_intervention_distribution(case, iv_h)
    else:
        mapped = [(map_intervention(case.beta, case.blocks, iv_h), 1.0)]
    rhs = np.zeros_like(lhs.flat())
    for iv_m, weight in mapped:
        rhs += weight * interventional_distribution(case.scm_m, iv_m, list(case.beta.targets)).flat()
    tv = 0.5 * float(np.abs(lhs.flat() - rhs).sum())
    return CommutationRecord(
        intervention=str(iv_h),
        mapped=[MappedIntervention(intervention=str(iv), weight=w) for iv, w in mapped],
        tv_discrepancy=tv,
        commutes=tv <= eps,
        approximate=approximate,
    )


def count_interventions(scm_h: Scm, blocks: BlockStructure, max_blocks: int) -> int:
    sizes = [
        math.prod(scm_h.variables[k].domain.size for k in block) for block in blocks.source_partition
    ]
    return sum(
        math.prod(sizes[b] for b in combo)
        for k in range(1, min(max_blocks, len(sizes)) + 1)
        for combo in itertools.combinations(range(len(sizes)), k)
    )


def enumerate_interventions(
    scm_h: Scm,
    blocks: BlockStructure,
    max_blocks: int | None = None,
    *,
    cap: int | None = None,
) -> list[Intervention]:
    """Whole-block interventions on up to ``max_blocks`` blocks, smallest block sets first."""
    max_blocks = len(blocks.source_partition) if max_blocks is None else max_blocks
    if max_blocks < 1:
        raise InputError("invalid max_blocks", "max_blocks must be at least 1")
    if any(idx >= len(scm_h.names) for block in blocks.source_partition for idx in block):
        raise ScopeMismatchError(scm_h.names, [str(b) for b in blocks.source_partition])
    cap = settings.max_interventions if cap is None else cap
    count = count_interventions(scm_h, blocks, max_blocks)
    if count > cap:
        raise CombinatorialCapError(count, cap)

    out = []
    n_blocks = len(blocks.source_partition)
    for k in range(1, min(max_blocks, n_blocks) + 1):
        for combo in itertools.combinations(range(n_blocks), k):
            indices = sorted(blocks.source_indices(combo))
            variables = [scm_h.variables[i] for i in indices]
            for labels in itertools.product(*(v.domain.labels for v in variables)):
                out.append(Intervention(targets=Assignment(items=tuple(zip((v.name for v in variables), labels)))))
    return out


def check_abstraction(
    case: AbstractionCase,
    max_blocks: int | None = None,
    eps: float | None = None,
    *,
    approximate: bool = False,
    workers: int | None = None,
) -> AbstractionReport:
    """Fold :func:`check_commutes` over every enumerated whole-block intervention."""
    eps = settings.tolerances.verdict_eps if eps is None else eps
    workers = settings.workers if workers is None else workers
    interventions = enumerate_interventions(case.scm_h, case.blocks, max_blocks)

    def run(iv: Intervention) -> CommutationRecord:
        return check_commutes(case, iv, eps, approximate=approximate)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run, interventions))
    else:
        records = [run(iv) for iv in interventions]

    worst = max(records, key=lambda r: r.tv_discrepancy) if records else None
    overall = all(r.commutes for r in records)
    emit_event(
        TelemetryEvent(
            name="abstraction",
            attributes={"interventions": len(records), "overall": overall,
                        "worst_tv": worst.tv_discrepancy if worst else 0.0},
        )
    )
    return AbstractionReport(records=records, overall=overall, worst=worst, approximate=approximate, eps=eps)


def _post_intervention_empida(
    sys: GmSystem,
    source_block: Sequence[int],
    target_block: Sequence[int],
    d: DivergenceKind | str | None,
) -> float:
    """Worst block-EMPIDA over the SCMs manipulated by do(G_block = g), one per block value g."""
    names = [sys.factors[k] for k in source_block]
    domains = [sys.alpha.source_domains[k] for k in source_block]
    worst = 0.0
    for labels in itertools.product(*(dom.labels for dom in domains)):
        iv = Intervention(targets=Assignment(items=tuple(zip(names, labels))))
        manipulated = GmSystem(factor_scm=apply_intervention(sys.factor_scm, iv), alpha=sys.alpha)
        worst = max(worst, block_empida(manipulated, source_block, target_block, d, expectation="observational"))
    return worst


def check_intervention_isolation(
    sys: GmSystem,
    blocks: BlockStructure,
    d: DivergenceKind | str | None = None,
    eps: float | None = None,
) -> IsolationReport:
    """After do(G_block = g), the target block ignores interventions on every other block.

    The isolation value is computed in each manipulated model separately; the
    block's values must also stay separated in the target block.
    """
    eps = settings.tolerances.verdict_eps if eps is None else eps
    blocks.check_against(len(sys.factors), len(sys.targets))
    checks = []
    for t, target_block in enumerate(blocks.target_partition):
        s = blocks.pi[t]
        source_block: Sequence[int] = blocks.source_partition[s]
        value = _post_intervention_empida(sys, source_block, target_block, d)
        values = block_embeddings(sys, source_block, target_block)
        gap = None
        if len(values) > 1:
            gap = min(
                float(np.max(np.abs(values[a] - values[b])))
                for a, b in itertools.combinations(range(len(values)), 2)
            )
        checks.append(
            IsolationCheck(
                target_block=t,
                source_block=s,
                post_intervention_empida=value,
                min_gap=gap,
                isolated=value < eps,
                distinguishable=gap is None or gap > settings.tolerances.injectivity_gap,
            )
        )
    return IsolationReport(blocks=checks, ok=all(c.isolated and c.distinguishable for c in checks))
