"""Compile programs to exact-arithmetic hard-attention transformers.

Two constructions: the naive one spends two layers per attention operation
and one per position-wise operation; the depth-preserving one matches the
program's attention depth using multi-head layers. Both simulate every
program vector in a dedicated coordinate.
"""

from starfree import brasp, compiler, corpus, testkit
from starfree import transformer as tf

prog = corpus.dyck_program()
naive = compiler.compile_naive(prog)
deep = compiler.compile_depth_preserving(prog)
print(f"naive: width {naive.width}, {naive.depth} layers")
print(f"depth-preserving: width {deep.width}, {deep.depth} layers "
      f"(= attention depth {brasp.attention_depth(prog)})")

for model, name in ((naive, "naive"), (deep, "depth-preserving")):
    report = testkit.diff_languages(
        testkit.transformer_recognizer(model),
        testkit.program_recognizer(prog),
        prog.alphabet,
        7,
    )
    print(f"{name} vs program: {report.summary()}")

# Coordinates simulate vectors bit for bit.
word = "llrlrr"
trace = brasp.eval(prog, word)
run = tf.run_transformer(naive, word)
row = [run.final[i][naive.coord_of["C"]] for i in range(len(word))]
print(f"transformer coordinate for C on {word}:", row)
print(f"program vector  C on {word}:           ", trace.row_bits("C"))

# The pair encoding doubles coordinates so layer norm becomes a no-op.
encoded = tf.apply_layernorm_encoding(naive)
print(f"encoded width {encoded.width}; agreement on a few words:")
for w in ["lr", "lrrl", "llrr"]:
    print(" ", w, tf.accepts_transformer(encoded, w), tf.accepts_transformer(naive, w))

# Weight files round-trip exactly: every scalar is a p/q token.
text = tf.transformer_to_json(naive, naive.coord_doc)
again = tf.transformer_from_json(text)
assert tf.transformer_to_json(again, naive.coord_doc) == text
print(f"weight file: {len(text)} bytes, round-trips bit-exactly")
