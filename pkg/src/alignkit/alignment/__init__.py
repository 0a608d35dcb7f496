from __future__ import annotations

from .dci import linear_dci, soft_threshold, weighted_lasso
from .models import AlignmentReport, BlockAlignmentReport, BlockCheck, D2Check, DciResult, PiMap
from .service import (
    alignment_report,
    block_embeddings,
    check_block_alignment,
    check_d2_monotone,
    discover_pi,
    reference_context,
    restricted_alignment,
    spearman_d2_score,
)

__all__ = [
    "AlignmentReport",
    "BlockAlignmentReport",
    "BlockCheck",
    "D2Check",
    "DciResult",
    "PiMap",
    "alignment_report",
    "block_embeddings",
    "check_block_alignment",
    "check_d2_monotone",
    "discover_pi",
    "linear_dci",
    "reference_context",
    "restricted_alignment",
    "soft_threshold",
    "spearman_d2_score",
    "weighted_lasso",
]
