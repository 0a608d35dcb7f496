"""Alignment checks: index map discovery, D2 traversals, block alignment."""

from __future__ import annotations

import itertools
from typing import Any, Literal, Mapping, Sequence

import numpy as np
from scipy.stats import spearmanr

from ..channel import BlockStructure
from ..config import settings
from ..disentangle import (
    DivergenceKind,
    Expectation,
    GmSystem,
    Support,
    block_empida,
    empida_matrix,
)
from ..errors import DegenerateTraversalError, DomainValueError, InputError, UnknownVariableError
from ..instrumentation import TelemetryEvent, emit_event, get_logger
from ..scm.models import _label
from .dci import linear_dci
from .models import AlignmentReport, BlockAlignmentReport, BlockCheck, D2Check, PiMap

logger = get_logger()

ReferenceMode = Literal["mode", "first"]


def discover_pi(
    matrix: np.ndarray | Sequence[Sequence[float]],
    interpretable: Sequence[int] | None = None,
    eps: float | None = None,
) -> PiMap:
    """pi(j) = argmin_{i in I} matrix[i, j], lowest index on ties."""
    eps = settings.tolerances.verdict_eps if eps is None else eps
    matrix = np.asarray(matrix, dtype=float)
    candidates = sorted(set(interpretable)) if interpretable is not None else list(range(matrix.shape[0]))
    if not candidates:
        raise InputError("empty interpretable set", "name at least one interpretable factor")
    sub = matrix[candidates]
    pi = [candidates[int(k)] for k in sub.argmin(axis=0)]
    unmatched = [j for j, i in enumerate(pi) if matrix[i, j] > eps]
    unhit = [i for i in candidates if i not in pi]
    return PiMap(pi=pi, valid=not unmatched, surjective=not unhit, unmatched=unmatched, unhit=unhit)


def _allowed(sys: GmSystem, k: int, support: Support | None) -> list[int]:
    dom = sys.factor_domain(k)
    name = sys.factors[k]
    if not support or name not in support:
        return list(range(dom.size))
    allowed = []
    for label in support[name]:
        try:
            allowed.append(dom.index_of(label))
        except KeyError:
            raise DomainValueError(name, _label(label)) from None
    return sorted(set(allowed))


def reference_context(
    sys: GmSystem,
    free: Sequence[int],
    mode: ReferenceMode | None = None,
    override: Mapping[str, Any] | None = None,
    support: Support | None = None,
) -> dict[str, str]:
    """Values held fixed for the factors outside ``free`` during a traversal."""
    mode = mode or settings.reference
    held = [k for k in range(len(sys.factors)) if k not in free]
    if not held:
        return {}
    names = [sys.factors[k] for k in held]
    if override:
        missing = [n for n in names if n not in override]
        if missing:
            raise UnknownVariableError(missing[0], list(override))
        return {n: _label(override[n]) for n in names}
    allowed = [_allowed(sys, k, support) for k in held]
    if mode == "first":
        index = [a[0] for a in allowed]
    else:
        probs = sys.factor_marginal(names).reshape([sys.factor_domain(k).size for k in held])
        best, index = -1.0, [a[0] for a in allowed]
        for combo in itertools.product(*allowed):
            if probs[combo] > best:
                best, index = float(probs[combo]), list(combo)
    return {n: sys.factor_domain(k).labels[idx] for n, k, idx in zip(names, held, index)}


def _contexts(sys: GmSystem, free: Sequence[int], support: Support | None) -> list[dict[str, str]]:
    held = [k for k in range(len(sys.factors)) if k not in free]
    allowed = [_allowed(sys, k, support) for k in held]
    return [
        {sys.factors[k]: sys.factor_domain(k).labels[idx] for k, idx in zip(held, combo)}
        for combo in itertools.product(*allowed)
    ]


def _traverse(
    sys: GmSystem,
    free: Sequence[int],
    targets: Sequence[int],
    context: Mapping[str, str],
    support: Support | None,
) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """Expected embeddings of ``targets`` for every value of the ``free`` factors (level order)."""
    moments = sys.alpha.moments()
    axes = []
    for k in free:
        order = sys.factor_domain(k).level_order()
        allowed = set(_allowed(sys, k, support))
        axes.append([idx for idx in order if idx in allowed])
    rows, values = [], []
    for combo in itertools.product(*axes):
        index = []
        lookup = dict(zip(free, combo))
        for k, name in enumerate(sys.factors):
            idx = lookup[k] if k in lookup else sys.factor_domain(k).index_of(context[name])
            index.append(idx)
        row = int(np.ravel_multi_index(index, sys.alpha.source_shape))
        rows.append(combo)
        values.append(moments[row, list(targets)])
    return rows, np.array(values).reshape(len(rows), len(targets))


def _direction(values: np.ndarray) -> Literal["increasing", "decreasing"] | None:
    gap = settings.tolerances.monotone_gap
    steps = np.diff(values)
    if np.all(steps > gap):
        return "increasing"
    if np.all(steps < -gap):
        return "decreasing"
    return None


def _min_gap(values: np.ndarray) -> float | None:
    if len(values) < 2:
        return None
    return min(
        float(np.max(np.abs(values[a] - values[b])))
        for a, b in itertools.combinations(range(len(values)), 2)
    )


def check_d2_monotone(
    sys: GmSystem,
    pi: Sequence[int],
    *,
    strict: bool = False,
    reference: ReferenceMode | None = None,
    context: Mapping[str, Any] | None = None,
    support: Support | None = None,
) -> list[D2Check]:
    """Per target j: is g_{pi(j)} -> E[M_j] monotone (ordered domains) or injective (unordered)?"""
    checks = []
    for j, i in enumerate(pi):
        dom = sys.factor_domain(i)
        ref = reference_context(sys, [i], reference, context, support)
        contexts = _contexts(sys, [i], support) if strict else [ref]
        _, ref_values = _traverse(sys, [i], [j], ref, support)
        embeddings = ref_values[:, 0]
        gap = _min_gap(ref_values)
        injective = gap is None or gap > settings.tolerances.injectivity_gap

        if not dom.ordered:
            if strict:
                injective = all(
                    (g := _min_gap(_traverse(sys, [i], [j], ctx, support)[1])) is None
                    or g > settings.tolerances.injectivity_gap
                    for ctx in contexts
                )
            checks.append(D2Check(target=j, factor=i, monotone=None, direction="n/a", injective=injective,
                                  embeddings=embeddings.tolist(), contexts_checked=len(contexts)))
            continue
        if len(embeddings) < 2:
            checks.append(D2Check(target=j, factor=i, monotone=True, direction="n/a",
                                  embeddings=embeddings.tolist(), contexts_checked=len(contexts)))
            continue

        directions = {_direction(_traverse(sys, [i], [j], ctx, support)[1][:, 0]) for ctx in contexts}
        monotone = None not in directions and len(directions) == 1
        direction = directions.pop() if monotone else "n/a"
        checks.append(D2Check(target=j, factor=i, monotone=monotone, direction=direction or "n/a",
                              injective=injective, embeddings=embeddings.tolist(),
                              contexts_checked=len(contexts)))
    return checks


def spearman_d2_score(
    sys: GmSystem,
    pi: Sequence[int],
    i: int | str,
    *,
    reference: ReferenceMode | None = None,
    context: Mapping[str, Any] | None = None,
    support: Support | None = None,
) -> float:
    """Rank correlation between squared level distances and squared embedding distances."""
    i = sys.factor_indices([i])[0]
    targets = [j for j, k in enumerate(pi) if k == i]
    name = sys.factors[i]
    if not targets:
        raise DegenerateTraversalError("degenerate traversal", f"no representation maps to {name!r}")
    ref = reference_context(sys, [i], reference, context, support)
    rows, values = _traverse(sys, [i], targets, ref, support)
    if len(rows) < 3:
        raise DegenerateTraversalError("degenerate traversal", f"{name!r} has fewer than 3 values")
    levels = sys.factor_domain(i).levels[[r[0] for r in rows]]
    pairs = list(itertools.combinations(range(len(rows)), 2))
    level_d = np.array([(levels[a] - levels[b]) ** 2 for a, b in pairs])
    embed_d = np.array([float(np.sum((values[a] - values[b]) ** 2)) for a, b in pairs])
    if np.ptp(embed_d) <= settings.tolerances.monotone_gap:
        raise DegenerateTraversalError("degenerate traversal", f"embedding distances for {name!r} are all equal")
    return float(spearmanr(level_d, embed_d).statistic)


def alignment_report(
    sys: GmSystem,
    interpretable: Sequence[int | str] | None = None,
    eps: float | None = None,
    d: DivergenceKind | str | None = None,
    *,
    strict: bool = False,
    require_surjective: bool = False,
    reference: ReferenceMode | None = None,
    context: Mapping[str, Any] | None = None,
    dci_lambda: float | None = None,
    expectation: Expectation | None = None,
    support: Support | None = None,
) -> AlignmentReport:
    """EMPIDA matrix, pi discovery, D2 per target and (optionally) linear DCI."""
    eps = settings.tolerances.verdict_eps if eps is None else eps
    chosen = sys.factor_indices(interpretable)
    matrix = empida_matrix(sys, d, expectation=expectation, support=support)
    pi_map = discover_pi(matrix, chosen, eps)
    d1_ok = pi_map.valid and (pi_map.surjective or not require_surjective)

    checks = check_d2_monotone(
        sys, pi_map.pi, strict=strict, reference=reference, context=context, support=support
    )
    scores: dict[int, float | None] = {}
    for check in checks:
        if check.factor not in scores:
            try:
                scores[check.factor] = spearman_d2_score(
                    sys, pi_map.pi, check.factor, reference=reference, context=context, support=support
                )
            except DegenerateTraversalError as exc:
                logger.debug("spearman skipped for factor %s: %s", check.factor, exc.detail)
                scores[check.factor] = None
        check.spearman = scores[check.factor]

    dci = linear_dci(sys, dci_lambda, factors=chosen) if dci_lambda is not None else None
    aligned = d1_ok and all(c.ok for c in checks)
    emit_event(TelemetryEvent(name="alignment", attributes={"aligned": aligned, "d1_ok": d1_ok}))
    return AlignmentReport(
        d1_ok=d1_ok,
        pi=pi_map.pi,
        surjective=pi_map.surjective,
        d2_per_target=checks,
        aligned=aligned,
        dci=dci,
        interpretable=chosen,
        empida=matrix.tolist(),
        strict=strict,
        restricted=bool(support),
    )


def restricted_alignment(sys: GmSystem, support: Support, **kwargs: Any) -> AlignmentReport:
    """Alignment judged only on the given subset of factor values."""
    return alignment_report(sys, support=support, **kwargs)


def block_embeddings(
    sys: GmSystem,
    source_block: Sequence[int],
    target_block: Sequence[int],
    *,
    reference: ReferenceMode | None = None,
    context: Mapping[str, Any] | None = None,
) -> np.ndarray:
    """First-moment map g_block -> E[M_block] at the reference context, one row per block value."""
    ref = reference_context(sys, source_block, reference, context)
    return _traverse(sys, source_block, target_block, ref, None)[1]


def check_block_alignment(
    sys: GmSystem,
    blocks: BlockStructure,
    d: DivergenceKind | str | None = None,
    eps: float | None = None,
    *,
    reference: ReferenceMode | None = None,
    context: Mapping[str, Any] | None = None,
    expectation: Expectation | None = None,
) -> BlockAlignmentReport:
    """Block-wise D1 (block EMPIDA) and D2 (injective first moments) per target block."""
    eps = settings.tolerances.verdict_eps if eps is None else eps
    blocks.check_against(len(sys.factors), len(sys.targets))
    checks = []
    for t, target_block in enumerate(blocks.target_partition):
        s = blocks.pi[t]
        source_block = blocks.source_partition[s]
        value = block_empida(sys, source_block, target_block, d, expectation=expectation)
        embeddings = block_embeddings(sys, source_block, target_block, reference=reference, context=context)
        gap = _min_gap(embeddings)
        checks.append(
            BlockCheck(
                target_block=t,
                source_block=s,
                empida=value,
                d1_ok=value <= eps,
                min_gap=gap,
                d2_ok=gap is None or gap > settings.tolerances.injectivity_gap,
            )
        )
    d1_ok = all(c.d1_ok for c in checks)
    d2 = [c.d2_ok for c in checks]
    return BlockAlignmentReport(d1_ok=d1_ok, d2_ok=d2, aligned=d1_ok and all(d2), blocks=checks)
