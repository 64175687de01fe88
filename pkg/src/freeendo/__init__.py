"""Injective endomorphisms of free groups: folding, train tracks and certificates."""

from .errors import (
    CapExceededError,
    DegenerateEdgeImage,
    FreeEndoError,
    NonInjective,
    ParseError,
    PreconditionError,
    TrivialCore,
)
from .words import Basis, Endomorphism, Word

__version__ = "0.1.0"

__all__ = [
    "Basis",
    "Endomorphism",
    "Word",
    "FreeEndoError",
    "ParseError",
    "NonInjective",
    "TrivialCore",
    "DegenerateEdgeImage",
    "PreconditionError",
    "CapExceededError",
]
