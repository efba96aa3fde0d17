"""Predicate families and position embeddings.

Families assign a Boolean to every (length, position) pair: the midpoint
family holds at the center of odd-length strings, the modular families at
fixed residues. Finite-image position embeddings are interchangeable with
collections of bit families, and sinusoidal coordinates at rational
frequencies decode residues through a small ReLU network.
"""

from fractions import Fraction

from starfree import brasp, corpus, ltl, predicates, testkit

mid = predicates.mid_predicate()
print("midpoint family over n=5:", mid.truth_table(5))
print("midpoint family over n=4:", mid.truth_table(4))

f = corpus.mid_formula()
print("\ncenter-marked formula:", ltl.formula_to_text(f))
report = testkit.diff_languages(
    testkit.formula_recognizer(f, alphabet=corpus.PHI_ALPHABET),
    corpus.ORACLES["mid_lang"],
    corpus.PHI_ALPHABET,
    7,
)
print("vs the #a^m#b^m# oracle:", report.summary())

prog = corpus.parity_mod_program()
print("\neven-length program accepts aaaa:", brasp.accepts(prog, "aaaa"))
print("even-length program accepts aaa:", brasp.accepts(prog, "aaa"))

pe = predicates.sinusoidal_pe([Fraction(1, 4)])
print(f"\nsin/cos embedding at frequency 1/4: period {pe.period}, "
      f"{len(pe.image())} distinct vectors")
for i in range(1, 5):
    print(f"  position {i}: {pe(8, i)}")

fams = predicates.bind_pe_as_predicates(pe)
print("as bit families:", [fam.name for fam in fams])

print("\nresidue gadget outputs (m=3):")
for r in range(3):
    gadget = predicates.mod_relu_gadget(r, 3)
    print(f"  r={r}:", [gadget.evaluate_at(i) for i in range(1, 10)])
