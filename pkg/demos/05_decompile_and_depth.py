"""Decompile transformers back to programs, and the depth hierarchy.

Without position embeddings every activation and score a transformer can
produce lives in a finite set, enumerable layer by layer. Encoding those
values in bits yields a program simulating the transformer; two attention
simulations are available with different depth/size trade-offs.

The staircase languages separate depth levels: k-step staircases need
temporal depth k, and the depth-preserving compiler realizes exactly that
many layers.
"""

from starfree import brasp, compiler, corpus, ltl, testkit

prog = corpus.dyck_program()
model = compiler.compile_naive(prog)
levels = compiler.enumerate_value_set(model)
print("possible activation vectors per layer:", [len(l.activations) for l in levels])
for ell in (0, 4, 12):
    print(f"  layer {ell}: bound {compiler.finite_image_bound(model, ell)}")

for variant in ("shallower", "smaller"):
    back = compiler.decompile(model, variant)
    report = testkit.diff_languages(
        testkit.program_recognizer(back),
        testkit.program_recognizer(prog),
        prog.alphabet,
        7,
    )
    print(f"{variant}: {len(back.ops)} ops, attention depth "
          f"{brasp.attention_depth(back)}; {report.summary()}")

print()
for k in (1, 2, 3):
    f = testkit.stair_formula(k)
    p = ltl.ltl_to_brasp(f, testkit.STAIR_ALPHABET)
    model = compiler.compile_depth_preserving(p)
    report = testkit.diff_languages(
        testkit.transformer_recognizer(model),
        testkit.stair_oracle(k),
        testkit.STAIR_ALPHABET,
        6,
    )
    print(f"staircase k={k}: temporal depth {ltl.temporal_depth(f)}, "
          f"layers {model.depth}; {report.summary()}")
