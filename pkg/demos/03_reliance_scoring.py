"""Score how much an edited draft still relies on the original text.

Reliance = 1 - LD(W(x), W(y)) / max(|W(x)|, |W(y)|), where LD is token-level
Levenshtein distance and W lowercases, lemmatizes, and drops stopwords while
always keeping negations (no, not, nor, n't). 1.0 means no content edits.
"""

from claimtrace.evalharness import normalize_tokens, reliance, token_levenshtein

original = (
    "The optimizer reduced launch mass by twelve percent, and the team "
    "did not observe any thermal violations during the descent trials."
)
light_edit = (
    "The optimizer reduced launch mass by roughly twelve percent, and the team "
    "did not observe thermal violations during the descent trials."
)
heavy_edit = (
    "We rewrote the plan: mass savings were unclear, and thermal violations "
    "did appear in two descent trials."
)

print("normalized original:", normalize_tokens(original))
print()
for label, edited in (("identical", original), ("light edit", light_edit),
                      ("heavy edit", heavy_edit), ("deleted", "")):
    wx, wy = normalize_tokens(original), normalize_tokens(edited)
    print(f"{label:>10}: reliance = {reliance(original, edited):.3f} "
          f"(edit distance {token_levenshtein(wx, wy)} over max {max(len(wx), len(wy))} tokens)")

# negations survive normalization, so polarity flips register as edits
print("\nnegation handling:")
print("  W('results did not replicate') =", normalize_tokens("results did not replicate"))
print("  W(\"it doesn't converge\")       =", normalize_tokens("it doesn't converge"))
