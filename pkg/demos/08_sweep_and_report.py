"""
Sweeps and reports
==================

A sweep runs every combination of proposal size and seed; the report turns
campaign logs into CSV tables and SVG plots. The command line exposes the
same steps as ``boga sweep`` and ``boga report``.
"""

# %%
from pathlib import Path

from boga.cli import main

here = Path(__file__).parent
out = here / "output"
config = out / "mini_sweep.toml"
out.mkdir(exist_ok=True)
config.write_text(
    """
master_seed = 0
n_init = 30
refit_interval = 5

[objective]
name = "sheet"

[initial.random]
count = 30

[surrogate]
hidden_sizes = [16]
epochs = 60

[[schedule]]
generations = 20
m_select = 5
k_propose = 5
elite_k = 5

[sweep]
k_propose = [5, 100]
seeds = [1, 2]
output_dir = "mini_sweep"
final_window = 5
"""
)

# %%
main(["sweep", "--config", str(config)])

# %%
logs = sorted((out / "mini_sweep").glob("k*_seed*"))
args = ["report", "--out", str(out / "mini_report"), "--window", "20"]
for d in logs:
    args += ["--log", str(d)]
main(args)
