"""Toolkit for star-free language recognizers in four interchangeable forms:
Boolean-vector programs, temporal formulas, cascades of identity-reset
automata, and exact-arithmetic masked hard-attention transformers, together
with exhaustive differential testing between them.
"""

from . import automata, boolexpr, brasp, exact, ltl, normalform, predicates, testkit

__all__ = [
    "automata",
    "boolexpr",
    "brasp",
    "exact",
    "ltl",
    "normalform",
    "predicates",
    "testkit",
]

__version__ = "0.1.0"
