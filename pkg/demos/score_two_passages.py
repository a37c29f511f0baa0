"""
Scoring two passages against each other
=======================================

A minimal tour of the library API: normalize two passages, split them
into sentences, embed the tokens with the hash backend, and look at the
precision/recall/F1 grid. Run from the repository root:

    python3 demos/score_two_passages.py
"""

import numpy as np

from influence_scan import (
    SegmentationConfig,
    bertscore,
    compare_all,
    hash_embed,
    normalize_text,
    segment_passage,
    top_pairs,
)

# Two small passages. The candidate borrows a phrase from the reference,
# which is exactly the situation the toolkit is built to surface.
candidate = normalize_text(
    "The storm broke before midnight. Israel had now been three days "
    "without food, except one two-penny loaf. He walked on through the "
    "dark lanes toward the river."
)
reference = normalize_text(
    "I had now been three days without food, with the exception of a "
    "single two-penny loaf. My spirits began to forsake me. The night "
    "offered neither shelter nor rest."
)

# Sentence segments carry their text, character span, and word tokens.
cfg = SegmentationConfig(level="sentence")
cand_sentences = segment_passage(candidate, cfg)
ref_sentences = segment_passage(reference, cfg)
print(f"candidate: {len(cand_sentences)} sentences")
print(f"reference: {len(ref_sentences)} sentences")

# The hash backend embeds each word from its character trigrams. It is
# deterministic and needs no model, which makes it ideal for pipeline
# development; swap in transformer embeddings via an EMBX store for the
# real analysis.
cands = [hash_embed(s, side="candidate") for s in cand_sentences]
refs = [hash_embed(s, side="reference") for s in ref_sentences]

# Score one pair directly. Precision asks how much of the candidate is
# reflected in the reference; recall asks the reverse.
t = bertscore(cands[1], refs[0])
print(f"\nborrowed sentence vs its source: "
      f"p = {t.p:.2f}, r = {t.r:.2f}, F1 = {t.f1:.2f}")

# Or score every pair at once and rank.
m = compare_all(cands, refs)
print(f"\nfull grid ({m.cand_count} x {m.ref_count}), precision:")
print(np.array_str(m.p, precision=2))

print("\ntop pairs by precision:")
for pair in top_pairs(m, k=3, metric="p"):
    flags = f"  [{', '.join(sorted(pair.flags))}]" if pair.flags else ""
    print(f"  cand {pair.cand_index} vs ref {pair.ref_index}: "
          f"p = {pair.triple.p:.2f}{flags}")
