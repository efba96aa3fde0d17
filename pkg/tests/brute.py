"""Deliberately naive reference evaluator for programs.

Recomputes every vector value recursively from the definition, scanning all
candidate positions one by one, with no bitmask tricks and no sharing with
the production interpreter. Slow on purpose; used only as a test oracle.
"""

from __future__ import annotations

from starfree import boolexpr as bx
from starfree import predicates as predmod
from starfree.brasp import (
    Attention,
    BraspProgram,
    LEFTMOST,
    MaskKind,
    Positionwise,
    qname,
)


def _mask_ok(mask: MaskKind, i: int, j: int) -> bool:
    if mask is MaskKind.NONE:
        return True
    if mask is MaskKind.FUTURE:
        return j < i
    if mask is MaskKind.PAST:
        return j > i
    if mask is MaskKind.FUTURE_EQ:
        return j <= i
    return j >= i


def brute_value(prog: BraspProgram, tokens, name: str, i: int, preds=None) -> bool:
    """Value of vector `name` at position i, straight from the definitions."""
    preds = preds or {}

    def family(fam):
        return preds.get(fam) or predmod.lookup(fam)

    def atom_value(a, i_pos, j_pos):
        pos = i_pos if a.pos == "i" else j_pos
        if isinstance(a, bx.Pred):
            return family(a.family)(len(tokens), pos)
        return vector(a.name, pos)

    def expr_value(expr, i_pos, j_pos=None):
        return bx.eval_bool(expr, lambda a: atom_value(a, i_pos, j_pos))

    def vector(name: str, pos: int) -> bool:
        for sym in prog.alphabet.symbols:
            if name == qname(sym):
                return tokens[pos - 1] == sym
        op = prog.op(name)
        body = op.body
        if isinstance(body, Positionwise):
            return expr_value(body.expr, pos)
        candidates = [
            j
            for j in range(1, len(tokens) + 1)
            if _mask_ok(body.mask, pos, j) and expr_value(body.score, pos, j)
        ]
        if not candidates:
            return expr_value(body.default, pos)
        j = min(candidates) if body.direction == LEFTMOST else max(candidates)
        return expr_value(body.value, pos, j)

    return vector(name, i)


def brute_accepts(prog: BraspProgram, w, preds=None) -> bool:
    tokens = prog.alphabet.tokenize(w)
    return brute_value(prog, tokens, prog.output.vector, len(tokens), preds)
