"""Entropy and mutual information on exact tables (nats)."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.special import entr, rel_entr

from ..errors import InputError
from ..scm.inference import marginal
from ..scm.models import JointTable

NATS_PER_BIT = math.log(2.0)


def entropy(dist: JointTable | np.ndarray) -> float:
    """-sum p log p with 0 log 0 = 0."""
    probs = dist.flat() if isinstance(dist, JointTable) else np.asarray(dist, dtype=float).reshape(-1)
    return max(float(entr(probs).sum()), 0.0)


def mutual_information(joint: JointTable, left: Sequence[str] | None = None) -> float:
    """I(left; rest) by the direct formula; ``left`` defaults to the first variable."""
    left = list(left) if left is not None else [joint.scope[0]]
    right = [name for name in joint.scope if name not in left]
    if not right:
        raise InputError("empty side", "mutual information needs variables on both sides")
    table = marginal(joint, [*left, *right]).probs
    n_left = int(np.prod(table.shape[: len(left)]))
    table = table.reshape(n_left, -1)
    product = np.outer(table.sum(axis=1), table.sum(axis=0))
    return max(float(rel_entr(table, product).sum()), 0.0)


def conditional_entropy(joint: JointTable, target: Sequence[str]) -> float:
    """H(target | rest) = H(all) - H(rest)."""
    rest = [name for name in joint.scope if name not in target]
    if not rest:
        return entropy(marginal(joint, list(target)))
    return max(entropy(joint) - entropy(marginal(joint, rest)), 0.0)


def to_bits(nats: float) -> float:
    return nats / NATS_PER_BIT
