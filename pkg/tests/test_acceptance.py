"""Acceptance suite: one test per exit criterion, each printing a line.

Run as `pytest -s tests/test_acceptance.py` for the per-criterion report, or
directly with `python3 tests/test_acceptance.py`.
"""

import itertools
import time
from fractions import Fraction
from functools import lru_cache

from starfree import brasp, compiler, corpus, ltl, testkit
from starfree import transformer as tf
from starfree.testkit import diff_languages, program_recognizer, formula_recognizer


def _report(num, desc, started):
    print(f"ACCEPTANCE {num:02d} PASS ({time.time() - started:5.1f}s): {desc}")


@lru_cache(maxsize=None)
def _naive(name):
    return compiler.compile_naive(_programs()[name])


@lru_cache(maxsize=None)
def _depthwise(name):
    return compiler.compile_depth_preserving(_programs()[name])


@lru_cache(maxsize=None)
def _programs():
    return {
        "dyck": corpus.dyck_program(),
        "phi2": ltl.ltl_to_brasp(corpus.phi(2), corpus.PHI_ALPHABET),
        "phi4": ltl.ltl_to_brasp(corpus.phi(4), corpus.PHI_ALPHABET),
        "stair_2": ltl.ltl_to_brasp(testkit.stair_formula(2), testkit.STAIR_ALPHABET),
    }


_BOUNDS = {"dyck": 8, "phi2": 7, "phi4": 7, "stair_2": 7}
_ORACLES = {
    "dyck": corpus.ORACLES["dyck"],
    "phi2": corpus.ORACLES["phi2"],
    "phi4": corpus.ORACLES["phi4"],
    "stair_2": corpus.ORACLES["stair_2"],
}


def test_criterion_01_bracket_traces():
    t0 = time.time()
    prog = corpus.dyck_program()
    for name, word, accept in [
        ("dyck_accept", "llrrllrlrr", 1),
        ("dyck_reject", "lrrlllrrrl", 0),
    ]:
        expected = corpus.expected_trace(name)
        trace = brasp.eval(prog, "".join(expected.input_tokens))
        assert trace.input_tokens == list(expected.input_tokens)
        assert set(expected.rows) == set(trace.vector_names)
        for vec, bits in expected.rows.items():
            assert tuple(trace.row_bits(vec)) == bits, (name, vec)
        assert trace.value("Y", trace.n) == accept
    elapsed = time.time() - t0
    assert elapsed < 1.0, f"took {elapsed:.2f}s, budget 1s"
    _report(1, "bracket-language traces reproduced bit-exactly", t0)


def test_criterion_02_recall_table():
    t0 = time.time()
    prog = corpus.recall_program()
    expected = corpus.expected_trace("recall")
    tokens = list(expected.input_tokens)
    assert brasp.transduce(prog, tokens) == "a?b?b2a3c?a2c1"
    trace = brasp.eval(prog, tokens)
    assert len(expected.rows) == 13
    for vec, bits in expected.rows.items():
        assert tuple(trace.row_bits(vec)) == bits, vec
    elapsed = time.time() - t0
    assert elapsed < 1.0, f"took {elapsed:.2f}s, budget 1s"
    _report(2, "associative-recall transduction and 13-row table exact", t0)


def test_criterion_03_formula_program_equivalence():
    t0 = time.time()
    cases = []
    for k in (1, 2, 3, 4):
        cases.append((f"phi{k}", corpus.phi(k), corpus.PHI_ALPHABET,
                      corpus.ORACLES[f"phi{k}"], 7))
    for k in (1, 2, 3):
        cases.append((f"stair_{k}", testkit.stair_formula(k), testkit.STAIR_ALPHABET,
                      corpus.ORACLES[f"stair_{k}"], 7))
    for name, formula, alphabet, oracle, bound in cases:
        prog = ltl.ltl_to_brasp(formula, alphabet)
        report = diff_languages(program_recognizer(prog), oracle, alphabet, bound)
        assert report.ok, (name, report.summary())
    # program-to-formula direction on the bracket language, plus its
    # since-only corpus formula through the forward direction
    dyck_formula = ltl.brasp_to_ltl(corpus.dyck_program())
    report = diff_languages(
        formula_recognizer(dyck_formula, alphabet=corpus.LR_ALPHABET),
        corpus.ORACLES["dyck"], corpus.LR_ALPHABET, 8,
    )
    assert report.ok, report.summary()
    prog = ltl.ltl_to_brasp(corpus.dyck_since_formula(), corpus.LR_ALPHABET)
    report = diff_languages(
        program_recognizer(prog), corpus.ORACLES["dyck"], corpus.LR_ALPHABET, 8
    )
    assert report.ok, report.summary()
    elapsed = time.time() - t0
    assert elapsed < 120, f"took {elapsed:.1f}s, budget 120s"
    _report(3, "formula/program translations match oracles exhaustively", t0)


def test_criterion_04_compile_equivalence_and_simulation():
    t0 = time.time()
    for name, prog in _programs().items():
        bound = _BOUNDS[name]
        for model in (_naive(name), _depthwise(name)):
            report = diff_languages(
                testkit.transformer_recognizer(model),
                program_recognizer(prog),
                prog.alphabet,
                bound,
            )
            assert report.ok, (name, report.summary())
    # per-coordinate simulation invariant, every vector at every position
    for name in ("dyck", "phi2"):
        model = _naive(name)
        src = model.source_program
        bound = _BOUNDS[name]
        for w in testkit.strings_over(src.alphabet, bound):
            trace = brasp.eval(src, w)
            final = tf.run_transformer(model, w).final
            for vec, coord in model.coord_of.items():
                for i in range(1, trace.n + 1):
                    assert final[i - 1][coord] == trace.value(vec, i), (name, w, vec, i)
    elapsed = time.time() - t0
    assert elapsed < 300, f"took {elapsed:.1f}s, budget 300s"
    _report(4, "both compilers language-equal plus coordinate simulation", t0)


def test_criterion_05_decompile_equivalence():
    t0 = time.time()
    for name in ("dyck", "phi2", "stair_2"):
        prog = _programs()[name]
        model = _naive(name)
        for variant in ("shallower", "smaller"):
            back = compiler.decompile(model, variant)
            report = diff_languages(
                program_recognizer(back),
                program_recognizer(prog),
                prog.alphabet,
                _BOUNDS[name],
            )
            assert report.ok, (name, variant, report.summary())
    elapsed = time.time() - t0
    assert elapsed < 600, f"took {elapsed:.1f}s, budget 600s"
    _report(5, "both decompile variants reproduce the source language", t0)


def test_criterion_06_depth_accounting():
    t0 = time.time()
    formulas = {
        "phi1": corpus.phi(1),
        "phi2": corpus.phi(2),
        "phi3": corpus.phi(3),
        "phi4": corpus.phi(4),
        "stair_1": testkit.stair_formula(1),
        "stair_2": testkit.stair_formula(2),
        "stair_3": testkit.stair_formula(3),
        "ab_star": corpus.ab_star_formula(),
        "apbp_star": corpus.apbp_star_formula(),
        "dyck_since": corpus.dyck_since_formula(),
    }
    for name, f in formulas.items():
        prog = ltl.ltl_to_brasp(f, None)
        assert brasp.attention_depth(prog) == ltl.temporal_depth(f), name
    for name in ("dyck", "phi2", "phi4", "stair_2"):
        prog = _programs()[name]
        assert _depthwise(name).depth == brasp.attention_depth(prog), name
    _report(6, "attention depth = temporal depth = layer depth", t0)


def test_criterion_07_finite_image_bound():
    t0 = time.time()
    for name, obs_bound in (("dyck", 8), ("phi2", 7)):
        model = _naive(name)
        levels = compiler.enumerate_value_set(model)
        for ell, level in enumerate(levels):
            assert len(level.activations) <= compiler.finite_image_bound(model, ell), (
                name, ell,
            )
        sets = [set(level.activations) for level in levels]
        for w in testkit.strings_over(model.alphabet, obs_bound):
            trace = tf.run_transformer(model, w)
            for ell in range(model.depth + 1):
                for vec in trace.activations(ell):
                    assert tuple(vec) in sets[ell], (name, w, ell)
    elapsed = time.time() - t0
    assert elapsed < 300, f"took {elapsed:.1f}s"
    _report(7, "value-set sizes within bound; observed activations covered", t0)


def test_criterion_08_automata():
    t0 = time.time()
    from starfree import automata

    assert automata.is_counter_free(corpus.a3_dfa()) is True
    assert automata.is_counter_free(corpus.aa_dfa()) is False
    assert automata.check_homomorphism(corpus.a3_cascade(), corpus.a3_dfa()) is True
    prog = automata.cascade_to_brasp(corpus.a3_cascade(), corpus.a3_dfa())
    report = diff_languages(
        program_recognizer(prog),
        corpus.a3_dfa().accepts,
        corpus.a3_dfa().alphabet,
        10,
    )
    assert report.ok, report.summary()
    elapsed = time.time() - t0
    assert elapsed < 60, f"took {elapsed:.1f}s, budget 60s"
    _report(8, "counter-freeness, homomorphism, cascade compilation all check", t0)


def test_criterion_09_stutter_invariance():
    t0 = time.time()
    ab = corpus.AB_ALPHABET
    ok, _ = testkit.stutter_invariant_up_to(corpus.ORACLES["apbp_star"], ab, 8)
    assert ok
    ok, w = testkit.stutter_invariant_up_to(corpus.ORACLES["ab_star"], ab, 8)
    assert not ok and (w.prefix, w.symbol, w.suffix) == ("", "a", "b")
    ok, w = testkit.stutter_invariant_up_to(corpus.ORACLES["dyck"], corpus.LR_ALPHABET, 8)
    assert not ok and (w.prefix, w.symbol, w.suffix) == ("", "l", "r")
    nonstrict = corpus.nonstrict_variant(corpus.dyck_program())
    ok, w = testkit.stutter_invariant_up_to(program_recognizer(nonstrict), corpus.LR_ALPHABET, 8)
    assert ok, w
    for seed in range(200):
        prog = testkit.random_nonstrict_program(seed)
        ok, w = testkit.stutter_invariant_up_to(program_recognizer(prog), prog.alphabet, 8)
        assert ok, (seed, w, brasp.program_to_text(prog))
    _report(9, "stutter invariance holds exactly where it should", t0)


def test_criterion_10_layernorm_encoding():
    t0 = time.time()
    model = _naive("dyck")
    encoded = tf.apply_layernorm_encoding(model)
    report = diff_languages(
        testkit.transformer_recognizer(encoded),
        testkit.transformer_recognizer(model),
        model.alphabet,
        8,
    )
    assert report.ok, report.summary()
    half, quarter = Fraction(1, 2), Fraction(1, 4)
    for n in (3, 6):
        for tup in itertools.product("lr", repeat=n):
            trace = tf.run_transformer(encoded, "".join(tup))
            for layer, spec in zip(trace.layers, encoded.layers):
                for vecs, ln in ((layer.att_state, spec.ln_att), (layer.ffn_state, spec.ln_ffn)):
                    for vec in vecs:
                        mean, var = ln.stats(vec)
                        assert mean == half and var == quarter
    _report(10, "pair encoding neutralizes layer norm with constant statistics", t0)


def test_criterion_11_predicates():
    t0 = time.time()
    from starfree import predicates

    report = diff_languages(
        formula_recognizer(corpus.mid_formula(), alphabet=corpus.PHI_ALPHABET),
        corpus.ORACLES["mid_lang"],
        corpus.PHI_ALPHABET,
        9,
    )
    assert report.ok, report.summary()
    prog = corpus.parity_mod_program()
    report = diff_languages(
        program_recognizer(prog), corpus.ORACLES["aa_star"], prog.alphabet, 12
    )
    assert report.ok, report.summary()
    for m in (2, 3, 4):
        for r in range(m):
            gadget = predicates.mod_relu_gadget(r, m)
            fam = predicates.mod_predicate(r, m)
            for i in range(1, 25):
                assert gadget.evaluate_at(i) == int(fam(24, i)), (r, m, i)
    _report(11, "predicate families, gadget, and bounded-width languages agree", t0)


if __name__ == "__main__":
    funcs = sorted(
        (name, fn) for name, fn in list(globals().items())
        if name.startswith("test_criterion")
    )
    for _name, fn in funcs:
        fn()
