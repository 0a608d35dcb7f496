"""Linear DCI: L1-penalized regression from representation levels to factor levels."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..config import settings
from ..disentangle import GmSystem
from ..errors import InputError, NotConvergedError
from ..instrumentation import TelemetryEvent, emit_event, get_logger
from .models import DciResult

logger = get_logger()


def soft_threshold(x: float, t: float) -> float:
    return math.copysign(max(abs(x) - t, 0.0), x)


def weighted_lasso(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    l1_lambda: float,
    *,
    tol: float | None = None,
    max_sweeps: int | None = None,
) -> tuple[np.ndarray, float, int]:
    """Minimize 1/2 sum_n w_n (y_n - b0 - x_n.b)^2 + lambda |b|_1 by cyclic coordinate descent.

    ``w`` sums to one. Returns ``(b, b0, sweeps)``.
    """
    tol = settings.lasso.tol if tol is None else tol
    max_sweeps = settings.lasso.max_sweeps if max_sweeps is None else max_sweeps
    x_mean = w @ X
    y_mean = float(w @ y)
    Xc = X - x_mean
    yc = y - y_mean
    z = w @ (Xc * Xc)
    b = np.zeros(X.shape[1])
    residual = yc.copy()
    for sweep in range(1, max_sweeps + 1):
        largest = 0.0
        for j in range(X.shape[1]):
            if z[j] <= 0.0:
                continue
            old = b[j]
            rho = float(w @ (Xc[:, j] * residual)) + z[j] * old
            new = soft_threshold(rho, l1_lambda) / z[j]
            if new != old:
                residual -= Xc[:, j] * (new - old)
                b[j] = new
                largest = max(largest, abs(new - old))
        if largest < tol:
            return b, y_mean - float(x_mean @ b), sweep
    raise NotConvergedError(f"lasso did not settle within {max_sweeps} sweeps", last_iterate=b.copy())


def _rescale(values: np.ndarray, low: np.ndarray, high: np.ndarray) -> np.ndarray:
    span = high - low
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (values - low) / safe, 0.0)


def _system_support(sys: GmSystem, factors: Sequence[int]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact (m, g, weight) support of p_obs(g) alpha(m | g), rescaled to [0, 1]."""
    alpha = sys.alpha
    p_g = sys.factor_marginal(alpha.sources)
    weights = p_g[:, None] * alpha.table
    g_rows, m_cols = np.nonzero(weights > settings.tolerances.zero_mass)

    grids = np.meshgrid(*(d.levels for d in alpha.source_domains), indexing="ij")
    g_levels = np.stack([g.reshape(-1) for g in grids], axis=1)[:, factors]
    m_levels = alpha.level_matrix()
    g_low = np.array([alpha.source_domains[k].levels.min() for k in factors])
    g_high = np.array([alpha.source_domains[k].levels.max() for k in factors])
    m_low = np.array([d.levels.min() for d in alpha.target_domains])
    m_high = np.array([d.levels.max() for d in alpha.target_domains])

    w = weights[g_rows, m_cols]
    return (
        _rescale(m_levels[m_cols], m_low, m_high),
        _rescale(g_levels[g_rows], g_low, g_high),
        w / w.sum(),
    )


def _sample_support(samples: Sequence[tuple[Sequence[float], Sequence[float]]]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    M = np.array([m for m, _ in samples], dtype=float)
    G = np.array([g for _, g in samples], dtype=float)
    if M.ndim != 2 or G.ndim != 2 or len(np.unique(np.hstack([M, G]), axis=0)) < 2:
        raise InputError("insufficient samples", "need at least two distinct (m, g) pairs")
    w = np.full(len(M), 1.0 / len(M))
    return (
        _rescale(M, M.min(axis=0), M.max(axis=0)),
        _rescale(G, G.min(axis=0), G.max(axis=0)),
        w,
    )


def _row_score(row: np.ndarray) -> float:
    total = row.sum()
    if total <= 0:
        return 0.0
    if row.size == 1:
        return 1.0
    p = row / total
    nz = p[p > 0]
    return float(1.0 + (nz * np.log(nz)).sum() / math.log(row.size))


def linear_dci(
    source: GmSystem | Sequence[tuple[Sequence[float], Sequence[float]]],
    l1_lambda: float = 0.0,
    *,
    factors: Sequence[int | str] | None = None,
    tol: float | None = None,
    max_sweeps: int | None = None,
) -> DciResult:
    """Fit g_i ~ m with an L1 penalty per factor and score the coefficient matrix.

    ``B`` is indexed ``[j, i]`` (representation row, factor column).
    """
    if l1_lambda < 0:
        raise InputError("invalid lambda", "l1_lambda must be non-negative")
    if isinstance(source, GmSystem):
        axes = source.factor_indices(factors)
        M, G, w = _system_support(source, axes)
    else:
        M, G, w = _sample_support(source)

    B = np.zeros((M.shape[1], G.shape[1]))
    nrmse = []
    sweeps = 0
    for i in range(G.shape[1]):
        y = G[:, i]
        b, b0, used = weighted_lasso(M, y, w, l1_lambda, tol=tol, max_sweeps=max_sweeps)
        sweeps = max(sweeps, used)
        B[:, i] = b
        pred = b0 + M @ b
        rmse = math.sqrt(float(w @ (y - pred) ** 2))
        spread = math.sqrt(float(w @ (y - float(w @ y)) ** 2))
        nrmse.append(rmse / spread if spread > 0 else 0.0)

    magnitude = np.abs(B)
    scores = [_row_score(row) for row in magnitude]
    mass = magnitude.sum()
    rho = magnitude.sum(axis=1) / mass if mass > 0 else np.zeros(len(scores))
    result = DciResult(
        B=B.tolist(),
        disentanglement_score=float(rho @ np.array(scores)) if scores else 0.0,
        informativeness=float(np.mean([max(0.0, 1.0 - e) for e in nrmse])) if nrmse else 0.0,
        row_scores=scores,
        row_weights=[float(r) for r in rho],
        nrmse=nrmse,
        l1_lambda=l1_lambda,
        sweeps=sweeps,
    )
    emit_event(TelemetryEvent(name="dci", attributes={"lambda": l1_lambda, "sweeps": sweeps}))
    return result
