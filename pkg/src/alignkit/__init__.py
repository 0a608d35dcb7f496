"""Exact toolkit for alignment, concept leakage and causal abstraction on finite SCMs."""
from __future__ import annotations

__all__ = [
    "__version__",
]

__version__ = "0.1.0"
