"""Translations between Boolean-vector programs and hard-attention
transformers, in both directions.

Program to transformer comes in two flavors. The naive construction spends
one layer per position-wise operation and two layers per attention
operation: the first layer's feed-forward net prepares query/key bits for a
disjoint-conjunct score decomposition, a not-attended flag pair, and a
folded value bit; the second layer attends with the bilinear score and
resolves the flag. The depth-preserving construction instead builds one
transformer per operation by parallel-composing the transformers of its
dependencies, fusing position-wise work into the top feed-forward network,
and adding a single attention layer per nesting level, so layer depth
equals attention depth.

Transformer to program rests on the finite-image property: without position
embeddings (or with finite-image ones), all scores and activation
components live in a finite set that can be enumerated layer by layer and
bit-encoded order-preservingly. Attention is then simulated either with one
max-detector per possible score (shallower) or with a per-bit argmax chain
(smaller).

Both compilers first rewrite the program so scores and values read only the
attended position and defaults are constants; the attended position cannot
see the query position's vectors, so this is what makes a linear value
function sufficient.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from . import boolexpr as bx
from . import brasp as bm
from . import exact, normalform
from .boolexpr import Const, Expr, Pred, Var
from .brasp import (
    Accept,
    Alphabet,
    Attention,
    BraspOp,
    BraspProgram,
    MaskKind,
    Positionwise,
    Transduce,
    qname,
)
from .predicates import family_tuple_pe, pe_bit_coding
from .transformer import (
    AttentionHead,
    FeedForward,
    OutputLayer,
    Transformer,
    TransformerLayer,
    TransformerError,
    identity_layer,
    zero_matrix,
)

SCORE_ATOM_CAP = 16
FFN_SUPPORT_CAP = 20

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)


class CompileError(Exception):
    pass


# ---------------------------------------------------------------------------
# Score decomposition


@dataclass(frozen=True)
class ScoreDecomposition:
    """S(i,j) as a disjoint disjunction of query-part and key-part conjuncts.

    Built from the full disjunctive normal form over the score's atoms, so
    at most one conjunct holds under any assignment and the bilinear sum of
    alpha_l(i) * beta_l(j) equals the score exactly.
    """

    query_atoms: tuple
    key_atoms: tuple
    conjuncts: tuple  # pairs (alpha expr over query atoms, beta expr over key atoms)

    def recombined(self) -> Expr:
        return bx.disj(bx.conj([a, b]) for a, b in self.conjuncts)

    def evaluate(self, assignment: Callable) -> bool:
        hits = [
            bx.eval_bool(a, assignment) and bx.eval_bool(b, assignment)
            for a, b in self.conjuncts
        ]
        if sum(hits) > 1:
            raise CompileError("score conjuncts are not disjoint")
        return any(hits)


def decompose_score(score: Expr) -> ScoreDecomposition:
    query_atoms = tuple(bx.atoms_at(score, "i"))
    key_atoms = tuple(bx.atoms_at(score, "j"))
    all_atoms = query_atoms + key_atoms
    if len(all_atoms) > SCORE_ATOM_CAP:
        raise CompileError(
            f"score has {len(all_atoms)} atoms; cap is {SCORE_ATOM_CAP}"
        )
    conjuncts = []
    for bits in range(1 << len(all_atoms)):
        assign = {a: bool(bits >> k & 1) for k, a in enumerate(all_atoms)}
        if not bx.eval_bool(score, lambda a: assign[a]):
            continue
        alpha = bx.conj(a if assign[a] else bx.neg(a) for a in query_atoms)
        beta = bx.conj(a if assign[a] else bx.neg(a) for a in key_atoms)
        conjuncts.append((alpha, beta))
    return ScoreDecomposition(query_atoms, key_atoms, tuple(conjuncts))


# ---------------------------------------------------------------------------
# Feed-forward nets from Boolean coordinate updates


def catom(coord: int, pos: str = "i") -> Var:
    return Var(f"x{coord}", pos)


def _coord_of_atom(a) -> int:
    return int(a.name[1:])


def expr_support(expr: Expr) -> set:
    return {_coord_of_atom(a) for a in bx.atoms(expr)}


def eval_coord_expr(expr: Expr, vec) -> bool:
    return bx.eval_bool(expr, lambda a: vec[_coord_of_atom(a)] != 0)


def ffn_from_writes(width: int, writes: dict) -> FeedForward:
    """Lower `coord -> Boolean value as expr over coordinate atoms` to a
    two-layer ReLU net computing the residual deltas.

    Contract: inputs are Boolean on every support coordinate and every
    written coordinate is still zero when the net runs (all compiled
    coordinates are written exactly once), so the delta equals the target
    value. One exact indicator unit per satisfying support assignment.
    """
    units = []  # (row dict, bias, coord)
    for c in sorted(writes):
        expr = writes[c]
        supp = sorted(expr_support(expr))
        if len(supp) > FFN_SUPPORT_CAP:
            raise CompileError(
                f"feed-forward support for coordinate {c} has {len(supp)} inputs; "
                f"cap is {FFN_SUPPORT_CAP}"
            )
        for bits in range(1 << len(supp)):
            assign = {supp[k]: bool(bits >> k & 1) for k in range(len(supp))}
            if not bx.eval_bool(expr, lambda a: assign[_coord_of_atom(a)]):
                continue
            row = {}
            ones = 0
            for k in supp:
                row[k] = ONE if assign[k] else -ONE
                ones += int(assign[k])
            units.append((row, Fraction(1 - ones), c))
    w1 = []
    b1 = []
    for row, bias, _c in units:
        full_row = [ZERO] * width
        for k, v in row.items():
            full_row[k] = v
        w1.append(tuple(full_row))
        b1.append(bias)
    w2 = []
    for c in range(width):
        row = [ZERO] * len(units)
        for u, (_, _, uc) in enumerate(units):
            if uc == c:
                row[u] = ONE
        w2.append(tuple(row))
    return FeedForward(tuple(w1), tuple(b1), tuple(w2), tuple(ZERO for _ in range(width)))


# ---------------------------------------------------------------------------
# Shared compilation plumbing


def _pipeline(prog: BraspProgram) -> BraspProgram:
    return normalform.flatten_defaults(
        normalform.normalize_unary_score(normalform.normalize_unary_value(prog))
    )


def _program_pe(prog: BraspProgram, preds=None):
    if not prog.predicate_families:
        return None
    families = bm.resolve_families(prog, preds)
    ordered = [families[name] for name in prog.predicate_families]
    return family_tuple_pe(ordered)


def _coord_expr(expr: Expr, coord_of: dict, pred_coord: dict, force_pos: Optional[str] = None) -> Expr:
    """Rewrite vector/predicate atoms to coordinate atoms."""
    if isinstance(expr, Const):
        return expr
    if isinstance(expr, Var):
        return catom(coord_of[expr.name], force_pos or expr.pos)
    if isinstance(expr, Pred):
        return catom(pred_coord[expr.family], force_pos or expr.pos)
    if isinstance(expr, bx.Not):
        return bx.neg(_coord_expr(expr.arg, coord_of, pred_coord, force_pos))
    if isinstance(expr, bx.And):
        return bx.conj(_coord_expr(a, coord_of, pred_coord, force_pos) for a in expr.args)
    return bx.disj(_coord_expr(a, coord_of, pred_coord, force_pos) for a in expr.args)


def _folded_value(body: Attention) -> Expr:
    """(score and value) or (not score and default), over attended-position atoms.

    Sound as a per-position bit because scores and values read only the
    attended position and the default is a constant at this stage.
    """
    if not isinstance(body.default, Const):
        raise CompileError("attention default must be constant here")
    return bx.disj(
        [
            bx.conj([body.score, body.value]),
            bx.conj([bx.neg(body.score), body.default]),
        ]
    )


# ---------------------------------------------------------------------------
# Naive compilation


def compile_naive(prog: BraspProgram, preds=None) -> Transformer:
    """One layer per position-wise op, two per attention op.

    The compiled transformer simulates every vector of the (normalized)
    program: the coordinate allocated to a vector equals its value at every
    position. Accepting programs get an output layer emitting +1/2 or -1/2;
    transducers compile without one.
    """
    src = _pipeline(prog)
    pe = _program_pe(src, preds)

    nsym = len(src.alphabet.symbols)
    npred = pe.dim if pe is not None else 0
    coord_of = {qname(s): k for k, s in enumerate(src.alphabet.symbols)}
    pred_coord = {f: nsym + k for k, f in enumerate(src.predicate_families)}
    base = nsym + npred
    for op in src.ops:
        coord_of[op.name] = base
        base += 1

    # Scratch allocation per attention op.
    scratch = {}
    width = base
    decomps = {}
    for op in src.ops:
        if isinstance(op.body, Positionwise):
            continue
        dec = decompose_score(op.body.score)
        decomps[op.name] = dec
        m = len(dec.conjuncts)
        if m == 0:
            continue
        scratch[op.name] = {
            "alpha": list(range(width, width + m)),
            "beta": list(range(width + m, width + 2 * m)),
            "flag_att": width + 2 * m,
            "flag_def": width + 2 * m + 1,
            "gval": width + 2 * m + 2,
            "gatt": width + 2 * m + 3,
        }
        width += 2 * m + 4

    def to_coords(expr, force_pos=None):
        return _coord_expr(expr, coord_of, pred_coord, force_pos)

    layers = []
    coord_doc = {str(v): k for k, v in coord_of.items()}
    for op in src.ops:
        body = op.body
        out = coord_of[op.name]
        if isinstance(body, Positionwise):
            layers.append(
                TransformerLayer(
                    identity_layer(width).heads,
                    ffn_from_writes(width, {out: to_coords(body.expr)}),
                )
            )
            continue
        dec = decomps[op.name]
        if not dec.conjuncts:
            # Unsatisfiable score: attention never fires, so the default wins.
            layers.append(
                TransformerLayer(
                    identity_layer(width).heads,
                    ffn_from_writes(width, {out: to_coords(body.default)}),
                )
            )
            continue
        sc = scratch[op.name]
        coord_doc.update(
            {
                str(sc["flag_att"]): f"{op.name}: attended flag",
                str(sc["flag_def"]): f"{op.name}: default flag",
                str(sc["gval"]): f"{op.name}: value bit",
                str(sc["gatt"]): f"{op.name}: attended value bit",
            }
        )
        writes = {}
        for k, (alpha, beta) in enumerate(dec.conjuncts):
            writes[sc["alpha"][k]] = to_coords(alpha, force_pos="i")
            writes[sc["beta"][k]] = to_coords(beta, force_pos="i")
        writes[sc["flag_def"]] = bx.TRUE
        writes[sc["gval"]] = to_coords(_folded_value(body), force_pos="i")
        layers.append(
            TransformerLayer(
                identity_layer(width).heads, ffn_from_writes(width, writes)
            )
        )

        score = [[ZERO] * width for _ in range(width)]
        for k in range(len(dec.conjuncts)):
            score[sc["alpha"][k]][sc["beta"][k]] = ONE
        value = [[ZERO] * width for _ in range(width)]
        value[sc["flag_att"]][sc["flag_def"]] = ONE
        value[sc["flag_def"]][sc["flag_def"]] = -ONE
        value[sc["gatt"]][sc["gval"]] = ONE
        head = AttentionHead(
            score,
            body.mask,
            body.direction,
            value,
        )
        answer = bx.disj(
            [
                bx.conj([catom(sc["flag_att"]), catom(sc["gatt"])]),
                bx.conj([bx.neg(catom(sc["flag_att"])), to_coords(body.default)]),
            ]
        )
        layers.append(TransformerLayer([head], ffn_from_writes(width, {out: answer})))

    embedding = {}
    for k, s in enumerate(src.alphabet.symbols):
        vec = [ZERO] * width
        vec[k] = ONE
        embedding[s] = tuple(vec)
    output = None
    if isinstance(src.output, Accept):
        weights = [ZERO] * width
        weights[coord_of[src.output.vector]] = ONE
        output = OutputLayer(tuple(weights), -HALF)
    pes = ((pe, nsym),) if pe is not None else ()
    model = Transformer(width, src.alphabet, embedding, layers, output, pes)
    model.coord_of = dict(coord_of)
    model.coord_doc = coord_doc
    model.source_program = src
    return model


# ---------------------------------------------------------------------------
# Depth-preserving compilation


@dataclass
class _Sim:
    """A transformer simulating one vector, plus fusion bookkeeping."""

    model: Transformer
    coord: int
    top_writes: dict  # symbolic writes of the top layer's FFN


def _subst_post(expr: Expr, top_writes: dict) -> Expr:
    """Rewrite an expr over post-FFN coordinates to pre-FFN coordinates."""
    mapping = {}
    for a in bx.atoms(expr):
        c = _coord_of_atom(a)
        if c in top_writes:
            mapping[a] = top_writes[c] if a.pos == "i" else bx.retag(top_writes[c], "i", "j")
    return bx.substitute(expr, mapping)


def _widen_model(model: Transformer, extra: int) -> Transformer:
    """Append `extra` zero coordinates to every structural piece."""
    d = model.width
    total = d + extra

    def widen_vec(vec):
        return tuple(vec) + tuple(ZERO for _ in range(extra))

    def widen_mat(mat, rows, cols):
        out = [list(row) + [ZERO] * (cols - len(row)) for row in mat]
        while len(out) < rows:
            out.append([ZERO] * cols)
        return tuple(tuple(r) for r in out)

    layers = []
    for layer in model.layers:
        heads = [
            AttentionHead(
                widen_mat(h.score_matrix, total, total),
                h.mask,
                h.tiebreak,
                widen_mat(h.value_matrix, total, total),
                widen_vec(h.value_bias) if h.value_bias is not None else None,
            )
            for h in layer.heads
        ]
        ffn = FeedForward(
            widen_mat(layer.ffn.w1, layer.ffn.hidden, total),
            layer.ffn.b1,
            widen_mat(layer.ffn.w2, total, layer.ffn.hidden),
            widen_vec(layer.ffn.b2),
        )
        layers.append(TransformerLayer(heads, ffn))
    embedding = {sym: widen_vec(vec) for sym, vec in model.embedding.items()}
    return Transformer(total, model.alphabet, embedding, layers, None, model.position_embeddings)


def _fuse_writes(sim_model: Transformer, top_writes: dict, new_writes: dict) -> tuple:
    """Merge new symbolic writes (over post-FFN values) into the top layer.

    Depth zero folds into the embedding; otherwise the top FFN is relowered
    from the combined symbolic writes. Returns (model, combined writes).
    """
    if sim_model.depth == 0:
        if sim_model.position_embeddings:
            raise CompileError(
                "cannot fuse position-dependent writes into a word embedding"
            )
        embedding = {}
        for sym, vec in sim_model.embedding.items():
            new = list(vec)
            for c, expr in new_writes.items():
                new[c] = ONE if eval_coord_expr(expr, vec) else ZERO
            embedding[sym] = tuple(new)
        model = Transformer(
            sim_model.width, sim_model.alphabet, embedding, [], None,
            sim_model.position_embeddings,
        )
        return model, {}
    combined = dict(top_writes)
    for c, expr in new_writes.items():
        combined[c] = _subst_post(expr, top_writes)
    top = sim_model.layers[-1]
    new_top = TransformerLayer(top.heads, ffn_from_writes(sim_model.width, combined))
    model = Transformer(
        sim_model.width,
        sim_model.alphabet,
        sim_model.embedding,
        list(sim_model.layers[:-1]) + [new_top],
        None,
        sim_model.position_embeddings,
    )
    return model, combined


def compile_depth_preserving(prog: BraspProgram) -> Transformer:
    """Layer depth equals the program's attention depth.

    Builds one transformer per operation: dependencies are parallel-composed
    (multi-head, block feed-forward nets), position-wise work is fused into
    the top feed-forward network (or the embedding at depth zero), and each
    attention operation adds exactly one layer. Programs with predicate
    families are not supported here; use the naive compiler for those.
    """
    src = _pipeline(prog)
    if src.predicate_families:
        raise CompileError(
            "depth-preserving compilation does not support predicate families"
        )
    alphabet = src.alphabet
    nsym = len(alphabet.symbols)

    base_embedding = {}
    for k, s in enumerate(alphabet.symbols):
        vec = [ZERO] * nsym
        vec[k] = ONE
        base_embedding[s] = tuple(vec)

    def base_sim() -> tuple:
        model = Transformer(nsym, alphabet, dict(base_embedding), [], None, ())
        qcoords = {qname(s): k for k, s in enumerate(alphabet.symbols)}
        return model, qcoords

    ops_by_name = {op.name: op for op in src.ops}
    sims: dict = {}

    def dep_names(expr: Expr) -> list:
        out = []
        for a in bx.atoms(expr):
            if isinstance(a, Var) and a.name in ops_by_name and a.name not in out:
                out.append(a.name)
        return out

    def compose(parts: list) -> tuple:
        """parallel-compose [(model, top_writes, coordmap)] triples.

        A part that gets padded with identity layers no longer writes
        anything in the composed top layer, so only parts at the full depth
        contribute their top-layer writes.
        """
        from .transformer import parallel_compose

        depth = max(p[0].depth for p in parts)
        model = None
        offset = 0
        merged = {}
        out_writes = {}
        for part_model, part_writes, part_map in parts:
            model = part_model if model is None else parallel_compose(model, part_model)
            merged.update({k: v + offset for k, v in part_map.items()})
            if part_model.depth == depth:
                for c, e in part_writes.items():
                    out_writes[c + offset] = _shift_expr(e, offset)
            offset = model.width
        return model, out_writes, merged

    def _shift_expr(expr: Expr, offset: int) -> Expr:
        mapping = {}
        for a in bx.atoms(expr):
            mapping[a] = catom(_coord_of_atom(a) + offset, a.pos)
        return bx.substitute(expr, mapping)

    def build(name: str) -> _Sim:
        hit = sims.get(name)
        if hit is not None:
            return hit
        op = ops_by_name[name]
        body = op.body
        exprs = (
            [body.expr]
            if isinstance(body, Positionwise)
            else [body.score, body.value, body.default]
        )
        deps = []
        for e in exprs:
            for d in dep_names(e):
                if d not in deps:
                    deps.append(d)
        parts = []
        base_model, qmap = base_sim()
        parts.append((base_model, {}, qmap))
        for d in deps:
            s = build(d)
            parts.append((s.model, s.top_writes, {d: s.coord}))
        model, top_writes, coordmap = compose(parts)

        def to_coords(expr, force_pos=None):
            return _coord_expr(expr, coordmap, {}, force_pos)

        if isinstance(body, Positionwise):
            out = model.width
            model = _widen_model(model, 1)
            top_writes = {c: e for c, e in top_writes.items()}
            model, top_writes = _fuse_writes(model, top_writes, {out: to_coords(body.expr)})
            sim = _Sim(model, out, top_writes)
            sims[name] = sim
            return sim

        dec = decompose_score(body.score)
        if not dec.conjuncts:
            out = model.width
            model = _widen_model(model, 1)
            model, top_writes = _fuse_writes(model, top_writes, {out: to_coords(body.default)})
            sim = _Sim(model, out, top_writes)
            sims[name] = sim
            return sim

        m = len(dec.conjuncts)
        w0 = model.width
        alpha = list(range(w0, w0 + m))
        beta = list(range(w0 + m, w0 + 2 * m))
        flag_att, flag_def, gval, gatt, out = (
            w0 + 2 * m,
            w0 + 2 * m + 1,
            w0 + 2 * m + 2,
            w0 + 2 * m + 3,
            w0 + 2 * m + 4,
        )
        model = _widen_model(model, 2 * m + 5)
        scratch_writes = {}
        for k, (al, be) in enumerate(dec.conjuncts):
            scratch_writes[alpha[k]] = to_coords(al, force_pos="i")
            scratch_writes[beta[k]] = to_coords(be, force_pos="i")
        scratch_writes[flag_def] = bx.TRUE
        scratch_writes[gval] = to_coords(_folded_value(body), force_pos="i")
        model, _ = _fuse_writes(model, top_writes, scratch_writes)

        width = model.width
        score = [[ZERO] * width for _ in range(width)]
        for k in range(m):
            score[alpha[k]][beta[k]] = ONE
        value = [[ZERO] * width for _ in range(width)]
        value[flag_att][flag_def] = ONE
        value[flag_def][flag_def] = -ONE
        value[gatt][gval] = ONE
        head = AttentionHead(score, body.mask, body.direction, value)
        answer = bx.disj(
            [
                bx.conj([catom(flag_att), catom(gatt)]),
                bx.conj([bx.neg(catom(flag_att)), to_coords(body.default)]),
            ]
        )
        new_writes = {out: answer}
        new_layer = TransformerLayer([head], ffn_from_writes(width, new_writes))
        model = Transformer(
            width,
            model.alphabet,
            model.embedding,
            list(model.layers) + [new_layer],
            None,
            model.position_embeddings,
        )
        sim = _Sim(model, out, new_writes)
        sims[name] = sim
        return sim

    if not isinstance(src.output, Accept):
        raise CompileError("depth-preserving compilation needs an accepting program")
    out_name = src.output.vector
    if out_name not in ops_by_name:
        # Output is an initial vector; wrap it in a copy so there is an op.
        sim_model, qmap = base_sim()
        sim = _Sim(sim_model, qmap[out_name], {})
    else:
        sim = build(out_name)
    weights = [ZERO] * sim.model.width
    weights[sim.coord] = ONE
    model = Transformer(
        sim.model.width,
        sim.model.alphabet,
        sim.model.embedding,
        sim.model.layers,
        OutputLayer(tuple(weights), -HALF),
        sim.model.position_embeddings,
    )
    model.coord_of = {out_name: sim.coord}
    model.source_program = src
    return model


# ---------------------------------------------------------------------------
# Value-set enumeration


CANDIDATE_CAP = 2_000_000


@dataclass
class LayerValueSet:
    """Everything a transformer layer can produce, over all inputs.

    `activations` are the possible layer-output vectors; `scores` and
    `value_options` are per head (options include the all-masked zero
    output). Layer 0 holds the possible embedding vectors.
    """

    activations: list
    scores: list
    value_options: list

    def components(self) -> set:
        out = set()
        for vec in self.activations:
            out.update(vec)
        for opts in self.value_options:
            for vec in opts:
                out.update(vec)
        for svals in self.scores:
            out.update(svals)
        return out


def enumerate_value_set(model: Transformer) -> list:
    """Per-layer closure of reachable scores and activations.

    Independent of any particular input: layer l+1 candidates pair every
    layer-l activation with every possible attended output (or zero), then
    map through the feed-forward net. The result is a superset of anything
    observable on a real input. Requires finite-image position embeddings.
    """
    for pe, _off in model.position_embeddings:
        if not pe.finite_image:
            raise CompileError(
                f"position embedding {pe.name!r} has no finite-image certificate"
            )
    base = []
    pe_images = [pe.image() for pe, _ in model.position_embeddings]
    for sym in model.alphabet.symbols:
        for combo in itertools.product(*pe_images):
            vec = list(model.embedding[sym])
            for (pe, off), pv in zip(model.position_embeddings, combo):
                for k, v in enumerate(pv):
                    vec[off + k] = vec[off + k] + v
            base.append(tuple(vec))
    levels = [LayerValueSet(_dedup(base), [], [])]

    for layer in model.layers:
        prev = levels[-1].activations
        zero = tuple([ZERO] * model.width)
        opts_per_head = []
        scores_per_head = []
        for head in layer.heads:
            opts = _dedup([tuple(head.value(list(u))) for u in prev] + [zero])
            opts_per_head.append(opts)
            queries = {}
            for u in prev:
                q = head.query(list(u))
                queries[tuple(sorted(q.items()))] = q
            svals = set()
            for q in queries.values():
                for v in prev:
                    svals.add(head.score_from_query(q, list(v)))
            scores_per_head.append(sorted(svals, key=_scalar_key))
        total = len(prev)
        for opts in opts_per_head:
            total *= len(opts)
        if total > CANDIDATE_CAP:
            raise CompileError(
                f"value-set enumeration needs {total} candidates (cap {CANDIDATE_CAP})"
            )
        outs = []
        for x in prev:
            for combo in itertools.product(*opts_per_head):
                ct = list(x)
                for o in combo:
                    for k, v in enumerate(o):
                        if v != 0:
                            ct[k] = ct[k] + v
                if layer.ln_att is not None:
                    ct = layer.ln_att.apply(ct)
                delta = layer.ffn.apply(ct)
                y = [a + b for a, b in zip(ct, delta)]
                if layer.ln_ffn is not None:
                    y = layer.ln_ffn.apply(y)
                outs.append(tuple(y))
        levels.append(LayerValueSet(_dedup(outs), scores_per_head, opts_per_head))
    return levels


def _dedup(items) -> list:
    seen = set()
    out = []
    for it in items:
        if it not in seen:
            seen.add(it)
            out.append(it)
    return out


def _scalar_key(v):
    from .predicates import ScalarKey

    return ScalarKey(v)


def finite_image_bound(model: Transformer, layer: int) -> int:
    """(|Sigma|+1)^(2^layer) - 1, the closure's coarse size bound."""
    return (len(model.alphabet.symbols) + 1) ** (2 ** layer) - 1


# ---------------------------------------------------------------------------
# Decompilation


PAIR_CAP = 1_000_000


@dataclass
class _Decompiler:
    model: Transformer
    variant: str
    levels: list
    codes: dict
    bits: int
    ops: list = field(default_factory=list)
    bitref: dict = field(default_factory=dict)  # (layer, coord, bit) -> Expr
    families: dict = field(default_factory=dict)  # name -> PredicateFamily
    pe_codings: list = field(default_factory=list)
    counter: int = 0

    def fresh(self, base: str) -> str:
        self.counter += 1
        return f"{base}_{self.counter}"

    def emit_pw(self, base: str, expr: Expr) -> Expr:
        if isinstance(expr, Const):
            return expr
        name = self.fresh(base)
        self.ops.append(BraspOp(name, Positionwise(expr)))
        return Var(name, "i")

    def emit_att(self, base, direction, mask, score, value, default) -> Expr:
        name = self.fresh(base)
        self.ops.append(BraspOp(name, Attention(direction, mask, score, value, default)))
        return Var(name, "i")

    # -- encoding helpers

    def code(self, v) -> int:
        from .predicates import lookup_code

        return lookup_code(self.codes, v)

    def coord_match(self, layer: int, coord: int, value, pos: str) -> Expr:
        code = self.code(value)
        terms = []
        for b in range(self.bits):
            ref = self.bitref[(layer, coord, b)]
            if pos == "j":
                ref = bx.retag(ref, "i", "j")
            terms.append(ref if code >> b & 1 else bx.neg(ref))
        return bx.conj(terms)

    def proj_match(self, layer: int, coords, values, pos: str) -> Expr:
        return bx.conj(
            self.coord_match(layer, c, v, pos) for c, v in zip(coords, values)
        )


def decompile_with_predicates(model: Transformer, variant: str = "shallower"):
    """Program simulating the transformer bit for bit, plus the predicate
    bindings for any position-embedding bit families it references.

    The returned program has one Boolean vector per (coordinate, bit) of the
    order-preserving encoding of each layer's possible values (unchanged
    coordinates alias the previous layer's vectors). The `shallower` variant
    simulates each attention layer at attention depth one with a
    max-detector per possible score value; the `smaller` variant builds a
    per-bit argmax chain, deeper but with fewer operations per layer.
    """
    if variant not in ("shallower", "smaller"):
        raise CompileError(f"unknown variant {variant!r}")
    for layer in model.layers:
        if layer.ln_att is not None or layer.ln_ffn is not None:
            raise CompileError("decompilation does not support layer norm; "
                               "decompile the unencoded model instead")
    levels = enumerate_value_set(model)
    table = set()
    for lvl in levels:
        table.update(lvl.components())
    table.add(ZERO)
    for v in table:
        if not exact.is_rational(v):
            raise CompileError(f"non-rational value {v} cannot be bit-encoded")
    from .predicates import ScalarKey, bind_pe_as_predicates, pe_bit_coding

    ordered = sorted(table, key=ScalarKey)
    codes = {v: k for k, v in enumerate(ordered)}
    bits = max(1, (len(ordered) - 1).bit_length())
    dec = _Decompiler(model, variant, levels, codes, bits)

    for pe, _off in model.position_embeddings:
        coding = pe_bit_coding(pe)
        dec.pe_codings.append(coding)
        for fam in bind_pe_as_predicates(pe):
            dec.families[fam.name] = fam

    _decompile_embedding(dec)
    for ell in range(1, model.depth + 1):
        _decompile_layer(dec, ell)

    if model.output is None:
        raise CompileError("transformer has no output layer to decompile")
    outsupp = [k for k, w in enumerate(model.output.weights) if w != 0]
    projs = _dedup([tuple(u[k] for k in outsupp) for u in levels[-1].activations])
    branches = []
    for p in projs:
        acc = model.output.bias
        for k, v in zip(outsupp, p):
            acc = acc + model.output.weights[k] * v
        if exact.sign(acc) >= 0:
            branches.append(dec.proj_match(model.depth, outsupp, p, "i"))
    yexpr = bx.disj(branches)
    name = dec.fresh("Y")
    dec.ops.append(BraspOp(name, Positionwise(yexpr)))
    prog = BraspProgram(
        model.alphabet,
        tuple(dec.ops),
        Accept(name),
        tuple(dec.families),
    )
    return prog, dict(dec.families)


def decompile(model: Transformer, variant: str = "shallower") -> BraspProgram:
    return decompile_with_predicates(model, variant)[0]


def _decompile_embedding(dec: _Decompiler):
    model = dec.model
    pe_images = [pe.image() for pe, _ in model.position_embeddings]
    combos = []
    for sym in model.alphabet.symbols:
        for pvs in itertools.product(*pe_images):
            vec = list(model.embedding[sym])
            for (pe, off), pv in zip(model.position_embeddings, pvs):
                for k, v in enumerate(pv):
                    vec[off + k] = vec[off + k] + v
            combos.append((sym, pvs, tuple(vec)))

    def combo_match(sym, pvs) -> Expr:
        terms = [Var(qname(sym), "i")]
        for coding, pv in zip(dec.pe_codings, pvs):
            for c, v in enumerate(pv):
                code = coding.code_of(c, v)
                for b in range(coding.bits[c]):
                    atom = Pred(coding.family_name(c, b), "i")
                    terms.append(atom if code >> b & 1 else bx.neg(atom))
        return bx.conj(terms)

    for c in range(model.width):
        vals = {vec[c] for _, _, vec in combos}
        for b in range(dec.bits):
            bitvals = {dec.code(v) >> b & 1 for v in vals}
            if len(bitvals) == 1:
                dec.bitref[(0, c, b)] = Const(bool(bitvals.pop()))
                continue
            expr = bx.disj(
                combo_match(sym, pvs)
                for sym, pvs, vec in combos
                if dec.code(vec[c]) >> b & 1
            )
            dec.bitref[(0, c, b)] = dec.emit_pw(f"E{c}b{b}", expr)


def _head_tables(dec: _Decompiler, ell: int, head_idx: int):
    """Projections and exact tables for one head at one layer."""
    model = dec.model
    head = model.layers[ell - 1].heads[head_idx]
    prev = dec.levels[ell - 1].activations
    isupp = sorted({r for r, _c, _v in head._score_nnz})
    jsupp = sorted({c for _r, c, _v in head._score_nnz})
    vsupp = sorted({c for _r, c, _v in head._value_nnz})
    iprojs = _dedup([tuple(u[k] for k in isupp) for u in prev])
    jprojs = _dedup([tuple(u[k] for k in jsupp) for u in prev])
    vprojs = _dedup([tuple(u[k] for k in vsupp) for u in prev])
    if len(iprojs) * len(jprojs) > PAIR_CAP:
        raise CompileError("score pair enumeration exceeds cap")

    def score_of(p, q):
        acc = ZERO
        pidx = {k: v for k, v in zip(isupp, p)}
        qidx = {k: v for k, v in zip(jsupp, q)}
        for r, c, w in head._score_nnz:
            pr = pidx[r]
            qc = qidx[c]
            if pr != 0 and qc != 0:
                acc = acc + w * pr * qc
        return acc

    def value_of(q):
        vec = [ZERO] * model.width
        for k, v in zip(vsupp, q):
            vec[k] = v
        return tuple(head.value(vec))

    return head, isupp, jsupp, vsupp, iprojs, jprojs, vprojs, score_of, value_of


def _value_bit_expr(dec, ell, jsupp_coords, projs, value_fn, coord, bit) -> Expr:
    branches = []
    for q in projs:
        if dec.code(value_fn(q)[coord]) >> bit & 1:
            branches.append(dec.proj_match(ell - 1, jsupp_coords, q, "j"))
    return bx.disj(branches)


def _decompile_layer(dec: _Decompiler, ell: int):
    model = dec.model
    layer = model.layers[ell - 1]
    prev_acts = dec.levels[ell - 1].activations
    opts_per_head = dec.levels[ell].value_options
    zero_vec = tuple([ZERO] * model.width)

    # Per head: expressions (or op references) for the bits of the head output.
    obit: dict = {}  # (head, coord, bit) -> Expr
    const_out: dict = {}  # (head, coord) -> constant value when invariant
    for h, head in enumerate(layer.heads):
        (head, isupp, jsupp, vsupp, iprojs, jprojs, vprojs, score_of, value_of) = _head_tables(dec, ell, h)
        varying = []
        for c in range(model.width):
            vals = {value_of(q)[c] for q in vprojs} | {ZERO}
            if len(vals) == 1:
                const_out[(h, c)] = vals.pop()
            else:
                varying.append(c)
        pairs = [(p, q, score_of(p, q)) for p in iprojs for q in jprojs]
        svals = sorted({s for _p, _q, s in pairs}, key=_scalar_key)

        if dec.variant == "shallower":
            none_ref = dec.emit_att(
                f"L{ell}H{h}none", head.tiebreak, head.mask, bx.TRUE, bx.FALSE, bx.TRUE
            )
            max_refs = {}
            pick_refs = {}
            for v in svals:
                sv = bx.disj(
                    bx.conj(
                        [
                            dec.proj_match(ell - 1, isupp, p, "i"),
                            dec.proj_match(ell - 1, jsupp, q, "j"),
                        ]
                    )
                    for p, q, s in pairs
                    if s == v
                )
                sgt = bx.disj(
                    bx.conj(
                        [
                            dec.proj_match(ell - 1, isupp, p, "i"),
                            dec.proj_match(ell - 1, jsupp, q, "j"),
                        ]
                    )
                    for p, q, s in pairs
                    if exact.compare(s, v) > 0
                )
                vkey = dec.code(v)
                max_refs[vkey] = dec.emit_att(
                    f"L{ell}H{h}max{vkey}", head.tiebreak, head.mask, sgt, bx.FALSE, bx.TRUE
                )
                for c in varying:
                    for b in range(dec.bits):
                        vb = _value_bit_expr(dec, ell, vsupp, vprojs, value_of, c, b)
                        pick_refs[(vkey, c, b)] = dec.emit_att(
                            f"L{ell}H{h}at{vkey}c{c}b{b}",
                            head.tiebreak,
                            head.mask,
                            sv,
                            vb,
                            bx.FALSE,
                        )
            for c in varying:
                for b in range(dec.bits):
                    zbit = bool(dec.code(ZERO) >> b & 1)
                    expr = bx.disj(
                        [
                            bx.conj([max_refs[dec.code(v)], pick_refs[(dec.code(v), c, b)]])
                            for v in svals
                        ]
                        + ([bx.conj([none_ref, bx.TRUE])] if zbit else [])
                    )
                    obit[(h, c, b)] = dec.emit_pw(f"L{ell}H{h}o{c}b{b}", expr)
        else:
            sbit = {}
            for b in range(dec.bits):
                sbit[b] = bx.disj(
                    bx.conj(
                        [
                            dec.proj_match(ell - 1, isupp, p, "i"),
                            dec.proj_match(ell - 1, jsupp, q, "j"),
                        ]
                    )
                    for p, q, s in pairs
                    if dec.code(s) >> b & 1
                )
            max_refs = {}
            for b in range(dec.bits - 1, -1, -1):
                higher = bx.conj(
                    bx.iff(sbit[b2], max_refs[b2]) for b2 in range(b + 1, dec.bits)
                )
                max_refs[b] = dec.emit_att(
                    f"L{ell}H{h}mx{b}",
                    head.tiebreak,
                    head.mask,
                    bx.conj([higher, sbit[b]]),
                    bx.TRUE,
                    bx.FALSE,
                )
            argmax = bx.conj(bx.iff(sbit[b], max_refs[b]) for b in range(dec.bits))
            for c in varying:
                for b in range(dec.bits):
                    zbit = Const(bool(dec.code(ZERO) >> b & 1))
                    vb = _value_bit_expr(dec, ell, vsupp, vprojs, value_of, c, b)
                    obit[(h, c, b)] = dec.emit_att(
                        f"L{ell}H{h}o{c}b{b}",
                        head.tiebreak,
                        head.mask,
                        argmax,
                        vb,
                        zbit,
                    )

    # Position-wise combination: residual + head sums + feed-forward net.
    ffn = layer.ffn
    for c in range(model.width):
        units = [u for u in range(ffn.hidden) if ffn.w2[c][u] != 0]
        fsupp = {c}
        for u in units:
            fsupp.update(k for k, w in enumerate(ffn.w1[u]) if w != 0)
        fsupp = sorted(fsupp)
        head_varies = [
            h
            for h in range(len(layer.heads))
            if any((h, k) not in const_out for k in fsupp)
        ]
        writes_nothing = (
            not units
            and ffn.b2[c] == 0
            and all(const_out.get((h, c), None) == ZERO for h in range(len(layer.heads)))
        )
        if writes_nothing:
            for b in range(dec.bits):
                dec.bitref[(ell, c, b)] = dec.bitref[(ell - 1, c, b)]
            continue

        xprojs = _dedup([tuple(u[k] for k in fsupp) for u in prev_acts])
        opt_projs = []
        for h in range(len(layer.heads)):
            if h in head_varies:
                opt_projs.append(_dedup([tuple(o[k] for k in fsupp) for o in opts_per_head[h]]))
            else:
                opt_projs.append([tuple(const_out[(h, k)] for k in fsupp)])
        total = len(xprojs)
        for ops_ in opt_projs:
            total *= len(ops_)
        if total > PAIR_CAP:
            raise CompileError("combination enumeration exceeds cap")

        outcomes = []
        for xp in xprojs:
            for combo in itertools.product(*opt_projs):
                ct = {k: xv for k, xv in zip(fsupp, xp)}
                for o in combo:
                    for k, ov in zip(fsupp, o):
                        if ov != 0:
                            ct[k] = ct[k] + ov
                acc = ffn.b2[c] + ct[c]
                for u in units:
                    s = ffn.b1[u]
                    for k, w in enumerate(ffn.w1[u]):
                        if w != 0:
                            s = s + w * ct[k]
                    r = exact.relu(s)
                    if r != 0:
                        acc = acc + ffn.w2[c][u] * r
                outcomes.append((xp, combo, acc))

        for b in range(dec.bits):
            bitvals = {dec.code(y) >> b & 1 for _xp, _combo, y in outcomes}
            if len(bitvals) == 1:
                dec.bitref[(ell, c, b)] = Const(bool(bitvals.pop()))
                continue
            branches = []
            for xp, combo, y in outcomes:
                if not dec.code(y) >> b & 1:
                    continue
                terms = [dec.proj_match(ell - 1, fsupp, xp, "i")]
                for h in head_varies:
                    o = combo[h]
                    for k, ov in zip(fsupp, o):
                        if (h, k) in const_out:
                            continue
                        code = dec.code(ov)
                        for b2 in range(dec.bits):
                            ref = obit[(h, k, b2)]
                            terms.append(ref if code >> b2 & 1 else bx.neg(ref))
                branches.append(bx.conj(terms))
            dec.bitref[(ell, c, b)] = dec.emit_pw(f"L{ell}y{c}b{b}", bx.disj(branches))
