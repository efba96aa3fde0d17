"""Walk through the bracket-language program: parse, run, inspect traces.

The program recognizes strings of l/r brackets that balance with nesting
depth at most 2. It first marks positions that sit in an immediately
matched pair, then checks that the leftover brackets pair up across them.
"""

from starfree import brasp, corpus

prog = corpus.dyck_program()
print(brasp.program_to_text(prog))

for word in ["llrrllrlrr", "lrrlllrrrl"]:
    trace = brasp.eval(prog, word)
    print(f"\ninput {word}: accept = {bool(trace.value('Y', trace.n))}")
    print(trace.format_table())

# The same language, recognized three more ways: by its automaton, by a
# since-only temporal formula, and by the hand-written counting oracle.
dfa = corpus.l12_dfa()
formula = corpus.dyck_since_formula()
oracle = corpus.ORACLES["dyck"]
from starfree import ltl

for word in ["lr", "llrr", "lllrrr", "rl"]:
    answers = (
        brasp.accepts(prog, word),
        dfa.accepts(word),
        ltl.ltl_accepts(formula, word, alphabet=corpus.LR_ALPHABET),
        oracle(word),
    )
    print(word, answers)
    assert len(set(answers)) == 1
