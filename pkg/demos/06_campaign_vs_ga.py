"""
A campaign against the plain genetic algorithm
==============================================

With ``k_propose == m_select`` the surrogate cannot change which candidates
are evaluated, so the campaign is a plain GA. Proposing more candidates than
are evaluated lets the surrogate filter them.
"""

# %%
import numpy as np

from boga.engine import CampaignConfig, SchedulePhase, budget_report, run_campaign, run_reference_ga
from boga.objectives import ObjectiveSpec
from boga.seqcore import MutationParams, random_sequences
from boga.surrogate import SurrogateConfig

init = tuple(random_sequences(50, np.random.default_rng(0)))


def config(k):
    return CampaignConfig(
        objective=ObjectiveSpec("sheet"),
        initial_sequences=init,
        mutation=MutationParams.from_rate(0.05),
        surrogate=SurrogateConfig(hidden_sizes=(16,), epochs=100),
        schedule=(SchedulePhase(generations=30, m_select=5, k_propose=k, elite_k=10),),
        master_seed=1,
        n_init=50,
        refit_interval=5,
    )


# %%
# The degenerate configuration reproduces the reference GA exactly.
ga = config(5)
print("identical to reference GA:", run_campaign(ga).evaluated_sequences() == run_reference_ga(ga))

# %%
# Same evaluation budget, larger proposal pools.
for k in (5, 50, 250):
    log = run_campaign(config(k))
    last = [e.score for e in log.dataset if e.generation > 20]
    c = budget_report(log)
    print(
        f"k_propose={k:4d} best={log.best.score:.3f} mean(last 10 gens)={np.mean(last):.3f} "
        f"evals={c.objective_evals} predictions={c.surrogate_predictions}"
    )
