"""Concept leakage under the interventional data distribution."""

from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

from ..channel import compose_through
from ..config import settings
from ..errors import EmptyRepresentationError
from ..instrumentation import TelemetryEvent, emit_event, get_logger
from ..scm.inference import check_cells, interventional_distribution
from ..scm.models import Assignment, Intervention, JointTable
from .information import entropy, mutual_information, to_bits
from .models import InterventionalJoint, LeakageResult, LeakageScenario
from .optimizer import optimize_classifier, restart_classifier

logger = get_logger()


def interventional_factor_distribution(sc: LeakageScenario) -> JointTable:
    """p'(g) = q(g_-I) p(g_I | do(G_-I = g_-I)), laid out in ``x_channel.sources`` order."""
    names = sc.x_channel.sources
    domains = sc.x_channel.source_domains
    style, content = sc.style, sc.content
    probs = np.zeros([d.size for d in domains])
    q = sc.intervention_dist.probs
    style_axes = [names.index(n) for n in style]
    style_domains = [domains[k] for k in style_axes]

    for style_index in itertools.product(*(range(d.size) for d in style_domains)):
        weight = float(q[style_index])
        if weight <= 0.0:
            continue
        labels = tuple(d.labels[k] for d, k in zip(style_domains, style_index))
        if content:
            iv = Intervention(targets=Assignment(items=tuple(zip(style, labels))))
            inner = interventional_distribution(sc.factor_scm, iv, list(content)).probs
        else:
            inner = np.ones(())
        index: list[int | slice] = [slice(None)] * len(names)
        for axis, k in zip(style_axes, style_index):
            index[axis] = k
        probs[tuple(index)] = weight * inner
    return JointTable(scope=names, domains=domains, probs=probs)


def build_interventional_joint(sc: LeakageScenario, *, max_cells: int | None = None) -> InterventionalJoint:
    """Exact p(X, Y), p(M, Y) and p(G_-I, Y) under the interventional distribution."""
    x_ch, label_ch, m_ch = sc.x_channel, sc.label_channel, sc.m_channel
    n_g, n_x = x_ch.table.shape
    n_y = label_ch.table.shape[1]
    check_cells(n_g * n_x * n_y, max_cells)
    check_cells(n_x * m_ch.table.shape[1], max_cells)

    p_g = interventional_factor_distribution(sc)
    # label row of every factor assignment, via its style coordinates
    style_axes = [x_ch.sources.index(n) for n in sc.style]
    label_rows = np.empty((n_g, n_y))
    for row, index in enumerate(np.ndindex(*x_ch.source_shape)):
        style_index = [index[a] for a in style_axes]
        src = int(np.ravel_multi_index(style_index, label_ch.source_shape)) if style_index else 0
        label_rows[row] = label_ch.table[src]

    weighted = p_g.flat()[:, None] * x_ch.table
    p_xy = weighted.T @ label_rows
    p_my = m_ch.table.T @ p_xy
    p_gy = sc.intervention_dist.flat()[:, None] * label_ch.table

    return InterventionalJoint(
        p_g=p_g,
        p_xy=JointTable(
            scope=(*x_ch.targets, *label_ch.targets),
            domains=(*x_ch.target_domains, *label_ch.target_domains),
            probs=p_xy,
        ),
        p_m_given_x=m_ch,
        p_my=JointTable(
            scope=(*m_ch.targets, *label_ch.targets),
            domains=(*m_ch.target_domains, *label_ch.target_domains),
            probs=p_my,
        ),
        p_gy=JointTable(
            scope=(*label_ch.sources, *label_ch.targets),
            domains=(*label_ch.source_domains, *label_ch.target_domains),
            probs=p_gy,
        ),
    )


def concept_leakage(
    sc: LeakageScenario,
    tol: float | None = None,
    max_iter: int | None = None,
    *,
    restarts: int = 1,
    seed: int = 0,
) -> LeakageResult:
    """Lambda = max L_CL - max L_r, with max L_r = -H(Y), and its information bounds."""
    joint = build_interventional_joint(sc)
    if restarts > 1:
        fits = restart_classifier(joint.p_xy, joint.p_m_given_x, restarts, seed, tol=tol, max_iter=max_iter)
        fit = max(fits, key=lambda f: f.l_cl_star)
    else:
        fit = optimize_classifier(joint.p_xy, joint.p_m_given_x, tol, max_iter)

    label = list(sc.label)
    p_y = joint.p_my.probs.reshape(-1, math.prod(d.size for d in sc.label_channel.target_domains)).sum(axis=0)
    h_y = entropy(p_y)
    lower = mutual_information(joint.p_my, list(sc.m_channel.targets))
    upper = mutual_information(joint.p_gy, list(sc.style))
    value = fit.l_cl_star + h_y
    zero = settings.tolerances.leakage_zero

    if fit.converged and not (lower - zero <= value <= upper + zero):
        logger.warning("leakage %.3e escapes its bounds [%.3e, %.3e]", value, lower, upper)
    result = LeakageResult(
        lambda_=value,
        lower_bound=lower,
        upper_bound=upper,
        l_cl_star=fit.l_cl_star,
        l_r_star=-h_y,
        jensen_bound=lower - h_y,
        entropy_y=h_y,
        iterations=fit.iterations,
        converged=fit.converged,
        duality_gap=fit.duality_gap,
        numerically_zero=abs(value) <= zero,
        unreachable_m=len(fit.unreachable),
        lambda_bits=to_bits(value),
        lower_bound_bits=to_bits(lower),
        upper_bound_bits=to_bits(upper),
    )
    emit_event(TelemetryEvent(name="leakage", attributes={"lambda": value, "label": ",".join(label)}))
    return result


def coordinate_leakage(
    sc: LeakageScenario,
    keep: Sequence[int | str],
    tol: float | None = None,
    max_iter: int | None = None,
    **kwargs: object,
) -> LeakageResult:
    """Leakage seen through the kept representation coordinates only."""
    if not keep:
        raise EmptyRepresentationError()
    restricted = sc.restricted(keep)
    result = concept_leakage(restricted, tol, max_iter, **kwargs)  # type: ignore[arg-type]
    return result.model_copy(update={"keep": list(restricted.m_channel.targets)})


def leakage_vs_content_style(sc: LeakageScenario) -> float:
    """I(M; G_-I) under the interventional distribution."""
    p_g = interventional_factor_distribution(sc)
    alpha = compose_through(sc.x_channel, sc.m_channel)
    names = sc.x_channel.sources
    style_axes = [names.index(n) for n in sc.style]
    style_shape = sc.label_channel.source_shape
    p_sm = np.zeros((math.prod(style_shape), alpha.table.shape[1]))
    for row, index in enumerate(np.ndindex(*sc.x_channel.source_shape)):
        style_index = [index[a] for a in style_axes]
        s = int(np.ravel_multi_index(style_index, style_shape)) if style_index else 0
        p_sm[s] += p_g.flat()[row] * alpha.table[row]
    joint = JointTable(
        scope=(*sc.style, *alpha.targets),
        domains=(*sc.label_channel.source_domains, *alpha.target_domains),
        probs=p_sm,
    )
    return mutual_information(joint, list(sc.style))
