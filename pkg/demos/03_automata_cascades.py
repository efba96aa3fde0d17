"""Counter-free automata, identity-reset cascades, and their compilation.

The running example is a four-state bounded walk: R steps right, L steps
left, both saturating. Its cascade decomposition stacks three two-state
identity-reset factors; the homomorphism table maps triples like ACE back
to walk states.
"""

from starfree import automata, corpus, testkit

walk = corpus.a3_dfa()
print("walk automaton counter-free:", automata.is_counter_free(walk))
print("parity automaton counter-free:", automata.is_counter_free(corpus.aa_dfa()))

trace = automata.run_dfa(walk, "RRL")
print("states along RRL:", trace.states)

cascade = corpus.a3_cascade()
glob = automata.cascade_to_global(cascade)
print("global automaton has", len(glob.states), "states; ACE --R-->", glob.delta[("ACE", "R")])
print("homomorphism commutes:", automata.check_homomorphism(cascade, walk))

prog = automata.cascade_to_brasp(cascade, walk)
print("compiled program tracks", len(prog.ops), "vectors")
report = testkit.diff_languages(
    testkit.program_recognizer(prog), walk.accepts, walk.alphabet, 10
)
print("exhaustive agreement:", report.summary())

# A single identity-reset factor on its own: vectors B_q(i) say which state
# the factor is in just before reading position i.
from starfree.brasp import Alphabet
factor = cascade.factors[0]
tracker, names = automata.identity_reset_to_brasp(factor, alphabet=Alphabet(("R", "L")))
from starfree import brasp
tr = brasp.eval(tracker, "RL")
for state, vec in names.items():
    print(f"factor state {state} before each position:", tr.row_bits(vec))
