"""
Sequences, mutation and elite selection
=======================================

Peptides are strings over the 20 standard amino acids. Mutation substitutes
residues, then may insert one and delete one, always staying inside the
configured length bounds.
"""

# %%
# Parsing validates the alphabet and uppercases the input.
import numpy as np

from boga.seqcore import (
    EvaluationDataset,
    MutationParams,
    SelectionStrategy,
    mutate,
    parse_sequence,
    propose_pool,
    select_elites,
)

print(parse_sequence("emalkk"))
try:
    parse_sequence("EMXL")
except ValueError as exc:
    print("rejected:", exc)

# %%
# Mutation draws from an explicit generator, so results are reproducible.
params = MutationParams(substitution_rate=0.2, insertion_rate=0.5, deletion_rate=0.5, min_length=8, max_length=12)
rng = np.random.default_rng(0)
parent = "EMALEMALEMAL"
for _ in range(5):
    print(parent, "->", mutate(parent, params, rng))

# %%
# Each residue is substituted with the configured probability, so the
# substituted fraction over many children sits close to that rate.
sub_only = MutationParams(0.2, 0.0, 0.0)
children = [mutate(parent, sub_only, rng) for _ in range(5000)]
changed = np.mean([[a != b for a, b in zip(parent, c)] for c in children])
print(f"substituted fraction {changed:.4f} (rate 0.2)")

# %%
# A proposal pool contains only novel, distinct children of the elites.
data = EvaluationDataset()
for seq, score in [("EMALEMALEMAL", 1.0), ("GGGGSSSSGGGG", 0.0), ("EMALGGGGEMAL", 0.67)]:
    data.add(seq, score)
elites = select_elites(data, SelectionStrategy("top_k"), k=2, direction="maximize")
pool = propose_pool(elites, MutationParams(), 6, data, rng)
print("elites:", elites)
print("pool:", pool.sequences)
