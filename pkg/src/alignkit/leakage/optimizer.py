"""Bayes-optimal concept classifier by multiplicative fixed-point ascent.

Maximizes L(q) = sum_{x,y} p(x, y) log sum_m p(m|x) q(y|m) over row-stochastic q.
Each update is the EM step for the latent m:

    q(y|m) <- q(y|m) * sum_x p(m|x) p(x, y) / (A q)(x, y),  then renormalize over y.

L is concave in q, so the ascent reaches the global maximum; monotonicity is
asserted every iteration.
"""

from __future__ import annotations

import numpy as np

from ..channel import Channel
from ..config import settings
from ..errors import ObjectiveDecreaseError, ScopeMismatchError
from ..instrumentation import TelemetryEvent, emit_event, get_logger
from ..scm.inference import marginal
from ..scm.models import JointTable
from .models import ClassifierFit

logger = get_logger()


def _problem(p_xy: JointTable, p_m_given_x: Channel) -> tuple[np.ndarray, np.ndarray]:
    xs = list(p_m_given_x.sources)
    if any(name not in p_xy.scope for name in xs):
        raise ScopeMismatchError(xs, p_xy.scope)
    ys = [name for name in p_xy.scope if name not in xs]
    if not ys:
        raise ScopeMismatchError([*xs, "<label>"], p_xy.scope)
    table = marginal(p_xy, [*xs, *ys]).probs.reshape(p_m_given_x.table.shape[0], -1)
    keep = table.sum(axis=1) > 0
    return table[keep], np.asarray(p_m_given_x.table)[keep]


def _objective(P: np.ndarray, mix: np.ndarray) -> float:
    mask = P > 0
    return float((P[mask] * np.log(mix[mask])).sum())


def _gradient(P: np.ndarray, A: np.ndarray, mix: np.ndarray) -> np.ndarray:
    ratio = np.divide(P, mix, out=np.zeros_like(P), where=P > 0)
    return A.T @ ratio


def duality_gap(P: np.ndarray, A: np.ndarray, q: np.ndarray, reachable: np.ndarray) -> float:
    """Frank-Wolfe gap sum_m (max_y grad - <q_m, grad_m>); bounds the distance to the optimum."""
    grad = _gradient(P, A, A @ q)
    gaps = grad.max(axis=1) - (q * grad).sum(axis=1)
    return max(float(gaps[reachable].sum()), 0.0)


def posterior_start(P: np.ndarray, A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """q(y|m) = p(y|m); unreachable m rows are uniform."""
    joint = A.T @ P
    mass = joint.sum(axis=1)
    reachable = mass > settings.tolerances.zero_mass
    q = np.full_like(joint, 1.0 / joint.shape[1])
    q[reachable] = joint[reachable] / mass[reachable, None]
    return q, reachable


def optimize_classifier(
    p_xy: JointTable,
    p_m_given_x: Channel,
    tol: float | None = None,
    max_iter: int | None = None,
    *,
    init: np.ndarray | None = None,
    record_trace: bool = False,
) -> ClassifierFit:
    """Maximize the marginalized log-likelihood of a label-from-representation classifier.

    Returns the best iterate even when ``max_iter`` runs out (``converged=False``).
    Raises :class:`ObjectiveDecreaseError` if an update loses more than the configured slack.
    """
    cfg = settings.optimizer
    tol = cfg.tol if tol is None else tol
    max_iter = cfg.max_iter if max_iter is None else max_iter
    P, A = _problem(p_xy, p_m_given_x)

    q, reachable = posterior_start(P, A)
    if init is not None:
        q = np.array(init, dtype=float)
        q = q / q.sum(axis=1, keepdims=True)
        q[~reachable] = 1.0 / q.shape[1]

    value = _objective(P, A @ q)
    trace = [value] if record_trace else []
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        mix = A @ q
        update = q * _gradient(P, A, mix)
        norms = update.sum(axis=1)
        rows = reachable & (norms > 0)
        q = q.copy()
        q[rows] = update[rows] / norms[rows, None]
        new = _objective(P, A @ q)
        if new < value - cfg.monotonic_slack:
            raise ObjectiveDecreaseError(iterations, value - new)
        if record_trace:
            trace.append(new)
        change, value = abs(new - value), new
        if change < tol and duality_gap(P, A, q, reachable) <= cfg.gap_tol:
            converged = True
            break

    gap = duality_gap(P, A, q, reachable)
    if not converged:
        logger.warning("classifier ascent stopped after %d iterations (gap %.3e)", iterations, gap)
    emit_event(
        TelemetryEvent(
            name="optimizer",
            attributes={"iterations": iterations, "converged": converged, "objective": value, "gap": gap},
        )
    )
    return ClassifierFit(
        q_star=q,
        l_cl_star=value,
        iterations=iterations,
        converged=converged,
        duality_gap=gap,
        unreachable=[int(m) for m in np.flatnonzero(~reachable)],
        trace=trace,
    )


def restart_classifier(
    p_xy: JointTable,
    p_m_given_x: Channel,
    restarts: int | None = None,
    seed: int = 0,
    **kwargs: object,
) -> list[ClassifierFit]:
    """The posterior start followed by ``restarts - 1`` Dirichlet-random starts."""
    restarts = settings.optimizer.restarts if restarts is None else restarts
    rng = np.random.default_rng(seed)
    n_m = p_m_given_x.table.shape[1]
    n_y = int(np.prod(p_xy.shape)) // p_m_given_x.table.shape[0]
    fits = [optimize_classifier(p_xy, p_m_given_x, **kwargs)]  # type: ignore[arg-type]
    for _ in range(max(restarts - 1, 0)):
        start = rng.dirichlet(np.ones(n_y), size=n_m)
        fits.append(optimize_classifier(p_xy, p_m_given_x, init=start, **kwargs))  # type: ignore[arg-type]
    return fits
