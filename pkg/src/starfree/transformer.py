"""Exact-arithmetic runtime for masked hard-attention transformers.

All weights and activations are exact scalars (Fractions, or algebraic
tokens coming from sinusoidal position embeddings), so attention argmax
sets, tie-breaking, and acceptance thresholds are decided exactly and runs
are reproducible bit for bit.

Per layer and position: every head scores all unmasked positions with a
bilinear form, keeps the best-scoring set, breaks ties leftmost or
rightmost, and emits a linear function of the chosen position's activation
(the zero vector when everything is masked); head outputs are summed into
the residual stream, followed by a two-layer ReLU feed-forward network with
its own residual. Optional layer normalization runs after either sublayer.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import exact
from .brasp import Alphabet, MaskKind, LEFTMOST, RIGHTMOST
from .predicates import PositionEmbedding, pe_from_spec


class TransformerError(Exception):
    pass


def _intify(v):
    """Integral Fractions become plain ints: exact, and much faster to add."""
    if isinstance(v, Fraction) and v.denominator == 1:
        return v.numerator
    return v


def _intify_vec(vec):
    return tuple(_intify(v) for v in vec)


def _intify_mat(mat):
    return tuple(_intify_vec(row) for row in mat)


def _nonzeros(matrix) -> list:
    out = []
    for r, row in enumerate(matrix):
        for c, v in enumerate(row):
            if v != 0:
                out.append((r, c, v))
    return out


class AttentionHead:
    """One hard-attention head: bilinear score, mask, tie-break, linear value."""

    def __init__(self, score_matrix, mask: MaskKind, tiebreak: str, value_matrix, value_bias=None):
        if tiebreak not in (LEFTMOST, RIGHTMOST):
            raise TransformerError(f"bad tie-break {tiebreak!r}")
        self.score_matrix = _intify_mat(score_matrix)
        self.mask = mask
        self.tiebreak = tiebreak
        self.value_matrix = _intify_mat(value_matrix)
        self.value_bias = _intify_vec(value_bias) if value_bias is not None else None
        self._score_nnz = _nonzeros(self.score_matrix)
        self._value_nnz = _nonzeros(self.value_matrix)

    @property
    def width(self) -> int:
        return len(self.score_matrix)

    def query(self, x) -> dict:
        """Sparse row vector x^T W, keyed by column."""
        out: dict = {}
        for r, c, v in self._score_nnz:
            xr = x[r]
            if xr != 0:
                out[c] = out.get(c, 0) + xr * v
        return {c: v for c, v in out.items() if v != 0}

    def score_from_query(self, q: dict, y) -> object:
        acc = 0
        for c, v in q.items():
            yc = y[c]
            if yc != 0:
                acc = acc + v * yc
        return acc

    def value(self, y) -> list:
        out = [0] * len(self.value_matrix)
        for r, c, v in self._value_nnz:
            yc = y[c]
            if yc != 0:
                out[r] = out[r] + v * yc
        if self.value_bias is not None:
            out = [a + b for a, b in zip(out, self.value_bias)]
        return out


class FeedForward:
    """Two-layer ReLU network; `apply` returns the residual delta."""

    def __init__(self, w1, b1, w2, b2):
        self.w1 = _intify_mat(w1)
        self.b1 = _intify_vec(b1)
        self.w2 = _intify_mat(w2)
        self.b2 = _intify_vec(b2)
        self._w1_rows = [
            [(c, v) for c, v in enumerate(row) if v != 0] for row in self.w1
        ]
        self._w2_nnz = _nonzeros(self.w2)

    @property
    def hidden(self) -> int:
        return len(self.w1)

    def apply(self, x) -> list:
        hidden = []
        for row, b in zip(self._w1_rows, self.b1):
            acc = b
            for c, v in row:
                xc = x[c]
                if xc != 0:
                    acc = acc + v * xc
            hidden.append(exact.relu(acc))
        out = list(self.b2)
        for r, c, v in self._w2_nnz:
            hc = hidden[c]
            if hc != 0:
                out[r] = out[r] + v * hc
        return out

    @staticmethod
    def zero(width: int) -> "FeedForward":
        return FeedForward((), (), tuple(() for _ in range(width)), tuple(Fraction(0) for _ in range(width)))


class LayerNorm:
    """Position-wise normalization with exact statistics.

    In "exact" mode the vector is normalized (the variance must have a
    rational square root); in "assert" mode the declared mean and variance
    are checked and the vector passes through unchanged.
    """

    def __init__(self, gamma, beta, mode: str = "exact", expected_mean=None, expected_var=None):
        if mode not in ("exact", "assert"):
            raise TransformerError(f"bad layer norm mode {mode!r}")
        self.gamma = tuple(gamma)
        self.beta = tuple(beta)
        self.mode = mode
        self.expected_mean = expected_mean
        self.expected_var = expected_var

    def stats(self, x):
        d = len(x)
        if all(type(v) is int for v in x):
            total = sum(x)
            mean = Fraction(total, d)
            sq = sum(v * v for v in x)
            var = Fraction(sq, d) - mean * mean
            return mean, var
        mean = sum(x, Fraction(0)) / d
        var = sum(((v - mean) ** 2 for v in x), Fraction(0)) / d
        return mean, var

    def apply(self, x) -> list:
        mean, var = self.stats(x)
        if self.mode == "assert":
            if self.expected_mean is not None and not exact.eq(mean, self.expected_mean):
                raise TransformerError(f"layer norm: mean {mean} != {self.expected_mean}")
            if self.expected_var is not None and not exact.eq(var, self.expected_var):
                raise TransformerError(f"layer norm: variance {var} != {self.expected_var}")
            return list(x)
        sigma = _exact_sqrt(var)
        if sigma == 0:
            raise TransformerError("layer norm: zero variance")
        inv = 1 / sigma
        if all(g * inv == 1 and b == mean for g, b in zip(self.gamma, self.beta)):
            return list(x)  # parameters cancel the normalization exactly
        return [g * (v - mean) * inv + b for g, b, v in zip(self.gamma, self.beta, x)]


def _exact_sqrt(v: Fraction) -> Fraction:
    if not isinstance(v, Fraction):
        raise TransformerError("layer norm requires rational activations")
    if v < 0:
        raise TransformerError("negative variance")
    num = math.isqrt(v.numerator)
    den = math.isqrt(v.denominator)
    if num * num != v.numerator or den * den != v.denominator:
        raise TransformerError(f"variance {v} has no rational square root")
    return Fraction(num, den)


@dataclass
class TransformerLayer:
    heads: list
    ffn: FeedForward
    ln_att: Optional[LayerNorm] = None
    ln_ffn: Optional[LayerNorm] = None

    def __post_init__(self):
        if not self.heads:
            raise TransformerError("layer needs at least one head")


@dataclass
class OutputLayer:
    weights: tuple
    bias: object = Fraction(0)


class Transformer:
    """Embeddings, layers, and an optional scalar output rule.

    `position_embeddings` is a tuple of (PositionEmbedding, offset) pairs;
    each embedding's vector is added into the coordinate slice starting at
    its offset. Acceptance is "output projection of the last position's
    activation is >= 0".
    """

    def __init__(self, width, alphabet, embedding, layers, output=None, position_embeddings=()):
        self.width = width
        self.alphabet = alphabet if isinstance(alphabet, Alphabet) else Alphabet(tuple(alphabet))
        self.embedding = {sym: _intify_vec(vec) for sym, vec in embedding.items()}
        self.layers = list(layers)
        self.output = output
        self.position_embeddings = tuple(position_embeddings)
        for sym in self.alphabet.symbols:
            if sym not in self.embedding:
                raise TransformerError(f"no embedding for symbol {sym!r}")
            if len(self.embedding[sym]) != width:
                raise TransformerError(f"embedding width mismatch for {sym!r}")
        for layer in self.layers:
            for head in layer.heads:
                if head.width != width:
                    raise TransformerError("head width mismatch")
        for pe, offset in self.position_embeddings:
            if offset < 0 or offset + pe.dim > width:
                raise TransformerError("position embedding slice out of range")

    @property
    def depth(self) -> int:
        return len(self.layers)

    def embed(self, tokens) -> list:
        n = len(tokens)
        out = []
        for i, t in enumerate(tokens, start=1):
            vec = list(self.embedding[t])
            for pe, offset in self.position_embeddings:
                pv = pe(n, i)
                for k, v in enumerate(pv):
                    vec[offset + k] = vec[offset + k] + v
            out.append(vec)
        return out


@dataclass
class LayerActivations:
    choices: list  # per head: list over positions of chosen j (1-based) or None
    att_state: list  # after attention + residual, before any layer norm
    ffn_state: list  # after ffn + residual, before any layer norm
    out_state: list  # layer output


@dataclass
class ActivationTrace:
    tokens: list
    embeddings: list
    layers: list

    @property
    def final(self) -> list:
        return self.layers[-1].out_state if self.layers else self.embeddings

    def activations(self, layer: int) -> list:
        """Layer outputs; layer 0 is the embedding."""
        if layer == 0:
            return self.embeddings
        return self.layers[layer - 1].out_state


def run_transformer(model: Transformer, input_text) -> ActivationTrace:
    tokens = model.alphabet.tokenize(input_text)
    n = len(tokens)
    if n == 0:
        raise TransformerError("empty input string")
    states = model.embed(tokens)
    emb0 = [list(v) for v in states]
    trace_layers = []
    for layer in model.layers:
        head_choices = []
        deltas = [[0] * model.width for _ in range(n)]
        for head in layer.heads:
            values = [head.value(states[j - 1]) for j in range(1, n + 1)]
            choices = []
            for i in range(1, n + 1):
                unmasked = [j for j in range(1, n + 1) if _mask_ok(head.mask, i, j)]
                if not unmasked:
                    choices.append(None)
                    continue
                q = head.query(states[i - 1])
                best = None
                best_score = None
                for j in unmasked:
                    s = head.score_from_query(q, states[j - 1])
                    if best is None:
                        best, best_score = [j], s
                        continue
                    cmp = exact.compare(s, best_score)
                    if cmp > 0:
                        best, best_score = [j], s
                    elif cmp == 0:
                        best.append(j)
                j_i = best[0] if head.tiebreak == LEFTMOST else best[-1]
                choices.append(j_i)
                dv = values[j_i - 1]
                row = deltas[i - 1]
                for k, v in enumerate(dv):
                    if v != 0:
                        row[k] = row[k] + v
            head_choices.append(choices)
        att_state = [
            [a + b for a, b in zip(states[k], deltas[k])] for k in range(n)
        ]
        mid = att_state
        if layer.ln_att is not None:
            mid = [layer.ln_att.apply(v) for v in att_state]
        ffn_state = [
            [a + b for a, b in zip(v, layer.ffn.apply(v))] for v in mid
        ]
        out_state = ffn_state
        if layer.ln_ffn is not None:
            out_state = [layer.ln_ffn.apply(v) for v in ffn_state]
        trace_layers.append(LayerActivations(head_choices, att_state, ffn_state, out_state))
        states = out_state
    return ActivationTrace(tokens, emb0, trace_layers)


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


def accepts_transformer(model: Transformer, input_text) -> bool:
    """True iff the output projection at the last position is nonnegative."""
    if model.output is None:
        raise TransformerError("transformer has no output layer")
    trace = run_transformer(model, input_text)
    final = trace.final[-1]
    acc = model.output.bias
    for w, v in zip(model.output.weights, final):
        if w != 0:
            acc = acc + w * v
    return exact.sign(acc) >= 0


# ---------------------------------------------------------------------------
# Structural combinators


def zero_matrix(rows: int, cols: int) -> tuple:
    return tuple(tuple(Fraction(0) for _ in range(cols)) for _ in range(rows))


def identity_layer(width: int) -> TransformerLayer:
    """A layer whose attention adds nothing and whose FFN is zero."""
    head = AttentionHead(zero_matrix(width, width), MaskKind.NONE, LEFTMOST, zero_matrix(width, width))
    return TransformerLayer([head], FeedForward.zero(width))


def _block_matrix(m1, m2, d1, d2):
    top = [tuple(row) + tuple(Fraction(0) for _ in range(d2)) for row in m1]
    bottom = [tuple(Fraction(0) for _ in range(d1)) + tuple(row) for row in m2]
    return tuple(top + bottom)


def _shift_head(head: AttentionHead, offset: int, total: int) -> AttentionHead:
    d = head.width

    def shift(matrix):
        out = [[Fraction(0)] * total for _ in range(total)]
        for r in range(d):
            for c in range(d):
                v = matrix[r][c]
                if v != 0:
                    out[offset + r][offset + c] = v
        return tuple(tuple(row) for row in out)

    bias = None
    if head.value_bias is not None:
        bias = [Fraction(0)] * total
        for k, v in enumerate(head.value_bias):
            bias[offset + k] = v
    return AttentionHead(shift(head.score_matrix), head.mask, head.tiebreak, shift(head.value_matrix), bias)


def parallel_compose(t1: Transformer, t2: Transformer) -> Transformer:
    """Concatenate two transformers coordinate-wise.

    The result has width d1+d2 and depth max(L1, L2); the shallower side is
    padded with identity layers on top. Activations are the concatenation of
    both sides' activations at every position. Output layers are dropped;
    layer norm is not supported here because it couples the two blocks.
    """
    if t1.alphabet.symbols != t2.alphabet.symbols:
        raise TransformerError("alphabet mismatch")
    for t in (t1, t2):
        for layer in t.layers:
            if layer.ln_att is not None or layer.ln_ffn is not None:
                raise TransformerError("parallel composition does not support layer norm")
    d1, d2 = t1.width, t2.width
    depth = max(t1.depth, t2.depth)
    layers1 = list(t1.layers) + [identity_layer(d1) for _ in range(depth - t1.depth)]
    layers2 = list(t2.layers) + [identity_layer(d2) for _ in range(depth - t2.depth)]
    new_layers = []
    for l1, l2 in zip(layers1, layers2):
        heads = [_shift_head(h, 0, d1 + d2) for h in l1.heads]
        heads += [_shift_head(h, d1, d1 + d2) for h in l2.heads]
        h1, h2 = l1.ffn.hidden, l2.ffn.hidden
        w1 = _block_matrix(l1.ffn.w1, l2.ffn.w1, d1, d2)
        b1 = tuple(l1.ffn.b1) + tuple(l2.ffn.b1)
        w2 = _block_matrix(l1.ffn.w2, l2.ffn.w2, h1, h2)
        b2 = tuple(l1.ffn.b2) + tuple(l2.ffn.b2)
        new_layers.append(TransformerLayer(heads, FeedForward(w1, b1, w2, b2)))
    embedding = {
        sym: tuple(t1.embedding[sym]) + tuple(t2.embedding[sym])
        for sym in t1.alphabet.symbols
    }
    pes = list(t1.position_embeddings) + [
        (pe, off + d1) for pe, off in t2.position_embeddings
    ]
    return Transformer(d1 + d2, t1.alphabet, embedding, new_layers, None, tuple(pes))


# ---------------------------------------------------------------------------
# Layer-norm-compatible Boolean pair encoding


def apply_layernorm_encoding(model: Transformer, mode: str = "exact") -> Transformer:
    """Double every coordinate into a (value, complement) pair.

    Requires a Boolean-valued transformer (as produced by the compilers):
    every coordinate is 0 or 1 at every sublayer boundary. Each pair then
    sums to 1, so every vector has mean 1/2 and variance 1/4 regardless of
    the input, and layer normalization with gain and shift 1/2 is exactly
    the identity. The encoded model recognizes the same language.
    """
    for sym, vec in model.embedding.items():
        for v in vec:
            if v != 0 and v != 1:
                raise TransformerError(
                    f"embedding of {sym!r} is not Boolean; cannot pair-encode"
                )
    d = model.width
    d2 = 2 * d

    def pair_vec(vec):
        out = []
        for v in vec:
            out.extend([v, 1 - v])
        return tuple(out)

    def encode_head(head: AttentionHead) -> AttentionHead:
        score = [[Fraction(0)] * d2 for _ in range(d2)]
        for r, c, v in head._score_nnz:
            score[2 * r][2 * c] = v
        value = [[Fraction(0)] * d2 for _ in range(d2)]
        for r, c, v in head._value_nnz:
            value[2 * r][2 * c] = v
            value[2 * r + 1][2 * c] = -v
        bias = None
        if head.value_bias is not None:
            bias = []
            for v in head.value_bias:
                bias.extend([v, -v])
        return AttentionHead(score, head.mask, head.tiebreak, value, bias)

    def encode_ffn(ffn: FeedForward) -> FeedForward:
        w1 = []
        for row in ffn.w1:
            new = [Fraction(0)] * d2
            for c, v in enumerate(row):
                new[2 * c] = v
            w1.append(tuple(new))
        w2 = []
        b2 = []
        for r, row in enumerate(ffn.w2):
            w2.append(tuple(row))
            w2.append(tuple(-v for v in row))
            b2.extend([ffn.b2[r], -ffn.b2[r]])
        return FeedForward(tuple(w1), ffn.b1, tuple(w2), tuple(b2))

    half = Fraction(1, 2)
    quarter = Fraction(1, 4)

    def fresh_ln():
        return LayerNorm(
            [half] * d2, [half] * d2, mode=mode, expected_mean=half, expected_var=quarter
        )

    layers = []
    for layer in model.layers:
        if layer.ln_att is not None or layer.ln_ffn is not None:
            raise TransformerError("model already has layer norm")
        layers.append(
            TransformerLayer(
                [encode_head(h) for h in layer.heads],
                encode_ffn(layer.ffn),
                ln_att=fresh_ln(),
                ln_ffn=fresh_ln(),
            )
        )
    embedding = {sym: pair_vec(vec) for sym, vec in model.embedding.items()}
    pes = []
    for pe, offset in model.position_embeddings:
        pes.append((_paired_pe(pe), 2 * offset))
    output = None
    if model.output is not None:
        weights = []
        for w in model.output.weights:
            weights.extend([w, Fraction(0)])
        output = OutputLayer(tuple(weights), model.output.bias)
    return Transformer(d2, model.alphabet, embedding, layers, output, tuple(pes))


def _paired_pe(pe: PositionEmbedding) -> PositionEmbedding:
    def func(n, i):
        out = []
        for v in pe(n, i):
            out.extend([v, -v])
        return tuple(out)

    values = None
    if pe.values is not None:
        values = tuple(
            tuple(x for v in vec for x in (v, -v)) for vec in pe.values
        )
    return PositionEmbedding(
        f"paired({pe.name})",
        2 * pe.dim,
        func,
        pe.finite_image,
        period=pe.period,
        values=values,
        spec={"kind": "paired", "inner": pe.spec} if pe.spec else None,
    )


# ---------------------------------------------------------------------------
# Weight files


def _tok_vec(vec):
    return [exact.to_token(v) for v in vec]


def _tok_mat(mat):
    return [_tok_vec(row) for row in mat]


def transformer_to_json(model: Transformer, coord_doc=None) -> str:
    layers = []
    for layer in model.layers:
        heads = []
        for h in layer.heads:
            heads.append(
                {
                    "mask": h.mask.value,
                    "tiebreak": h.tiebreak,
                    "score": _tok_mat(h.score_matrix),
                    "value": _tok_mat(h.value_matrix),
                    "value_bias": _tok_vec(h.value_bias) if h.value_bias is not None else None,
                }
            )
        entry = {
            "heads": heads,
            "ffn": {
                "w1": _tok_mat(layer.ffn.w1),
                "b1": _tok_vec(layer.ffn.b1),
                "w2": _tok_mat(layer.ffn.w2),
                "b2": _tok_vec(layer.ffn.b2),
            },
        }
        for key, ln in (("ln_att", layer.ln_att), ("ln_ffn", layer.ln_ffn)):
            if ln is not None:
                entry[key] = {
                    "gamma": _tok_vec(ln.gamma),
                    "beta": _tok_vec(ln.beta),
                    "mode": ln.mode,
                    "expected_mean": exact.to_token(ln.expected_mean) if ln.expected_mean is not None else None,
                    "expected_var": exact.to_token(ln.expected_var) if ln.expected_var is not None else None,
                }
        layers.append(entry)
    pes = []
    for pe, offset in model.position_embeddings:
        if pe.spec is None:
            raise TransformerError(f"position embedding {pe.name!r} is not serializable")
        pes.append({"offset": offset, "pe": pe.spec})
    payload = {
        "width": model.width,
        "alphabet": list(model.alphabet.symbols),
        "embedding": {sym: _tok_vec(vec) for sym, vec in model.embedding.items()},
        "position_embeddings": pes,
        "layers": layers,
        "output": (
            {"weights": _tok_vec(model.output.weights), "bias": exact.to_token(model.output.bias)}
            if model.output is not None
            else None
        ),
    }
    if coord_doc:
        payload["coords"] = coord_doc
    return json.dumps(payload, indent=1) + "\n"


def _untok_vec(vec):
    return tuple(exact.from_token(v) for v in vec)


def _untok_mat(mat):
    return tuple(_untok_vec(row) for row in mat)


def transformer_from_json(text: str) -> Transformer:
    payload = json.loads(text)
    masks = {m.value: m for m in MaskKind}
    layers = []
    for entry in payload["layers"]:
        heads = []
        for h in entry["heads"]:
            heads.append(
                AttentionHead(
                    _untok_mat(h["score"]),
                    masks[h["mask"]],
                    h["tiebreak"],
                    _untok_mat(h["value"]),
                    _untok_vec(h["value_bias"]) if h.get("value_bias") else None,
                )
            )
        ffn = FeedForward(
            _untok_mat(entry["ffn"]["w1"]),
            _untok_vec(entry["ffn"]["b1"]),
            _untok_mat(entry["ffn"]["w2"]),
            _untok_vec(entry["ffn"]["b2"]),
        )
        lns = {}
        for key in ("ln_att", "ln_ffn"):
            if entry.get(key):
                spec = entry[key]
                lns[key] = LayerNorm(
                    _untok_vec(spec["gamma"]),
                    _untok_vec(spec["beta"]),
                    spec["mode"],
                    exact.from_token(spec["expected_mean"]) if spec.get("expected_mean") else None,
                    exact.from_token(spec["expected_var"]) if spec.get("expected_var") else None,
                )
        layers.append(TransformerLayer(heads, ffn, lns.get("ln_att"), lns.get("ln_ffn")))
    pes = []
    for item in payload.get("position_embeddings", []):
        spec = item["pe"]
        if spec.get("kind") == "paired":
            pes.append((_paired_pe(pe_from_spec(spec["inner"])), item["offset"]))
        else:
            pes.append((pe_from_spec(spec), item["offset"]))
    output = None
    if payload.get("output"):
        output = OutputLayer(
            _untok_vec(payload["output"]["weights"]),
            exact.from_token(payload["output"]["bias"]),
        )
    return Transformer(
        payload["width"],
        Alphabet(tuple(payload["alphabet"])),
        {sym: _untok_vec(vec) for sym, vec in payload["embedding"].items()},
        layers,
        output,
        tuple(pes),
    )
