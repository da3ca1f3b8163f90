"""
Built-in objectives
===================

Three cheap sequence properties stand in for an expensive assay: the fraction
of sheet-favouring residues (E, M, A, L), the normalized hydrophobic moment of
an ideal helix, and molecular weight.
"""

# %%
from boga.objectives import ObjectiveSpec, beta_sheet_fraction, make_objective, molecular_weight, relative_hydrophobic_moment

for seq in ["EMALEMAL", "GGGGSSSS", "LKKLLKLLKKLLKLLK", "KKKKKKKKKKKK"]:
    print(
        f"{seq:18s} sheet={beta_sheet_fraction(seq):.3f} "
        f"moment={relative_hydrophobic_moment(seq):.3f} mw={molecular_weight(seq):.2f}"
    )

# %%
# Campaigns use the batch interface, which returns one score (or one error)
# per sequence in input order, whatever the degree of parallelism.
objective = make_objective(ObjectiveSpec("moment", kind="mock", latency=0.01, n_jobs=4))
print(objective.evaluate_batch(["EMALEMAL", "LKKLLKLLKKLLKLLK", "GGGGSSSS"]))
objective.close()
