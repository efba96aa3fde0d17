"""Temporal formulas on finite words and both translation directions.

The four showcase formulas define the languages Sigma*#, Sigma*#b*#,
Sigma*#a*#b*#, and #a*#b*#. Each compiles to a program with one Boolean
vector per subformula; the nesting depth of since/until becomes the
program's attention depth exactly.
"""

from starfree import brasp, corpus, ltl, testkit

for k in (1, 2, 3, 4):
    f = corpus.phi(k)
    print(f"phi{k}: {ltl.formula_to_text(f)}")
    print(f"  temporal depth {ltl.temporal_depth(f)}")
    prog = ltl.ltl_to_brasp(f, corpus.PHI_ALPHABET)
    print(f"  compiles to {len(prog.ops)} vectors, attention depth {brasp.attention_depth(prog)}")
    report = testkit.diff_languages(
        testkit.program_recognizer(prog),
        corpus.ORACLES[f"phi{k}"],
        corpus.PHI_ALPHABET,
        6,
    )
    print(f"  vs oracle: {report.summary()}")

# Reverse direction: the bracket program becomes a formula. The since-only
# normal form comes out of the cascade pipeline instead.
dyck = corpus.dyck_program()
formula = ltl.brasp_to_ltl(dyck)
report = testkit.diff_languages(
    testkit.formula_recognizer(formula, alphabet=corpus.LR_ALPHABET),
    corpus.ORACLES["dyck"],
    corpus.LR_ALPHABET,
    8,
)
print(f"\nbracket program -> formula: {report.summary()}")

since_only = corpus.dyck_since_formula()
print(f"since-only variant uses until: {ltl.uses_until(since_only)}")
back = ltl.ltl_to_brasp(since_only, corpus.LR_ALPHABET, until_free=True)
masks = {op.body.mask.value for op in back.ops if isinstance(op.body, brasp.Attention)}
print(f"its translation uses only masks {masks} (rightmost attention)")
