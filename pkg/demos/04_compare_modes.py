# %% [markdown]
# # RECSA against CSAIM
#
# Seeded runs of both modes on the same data, summarized the way the
# `csaim compare` command does. Expect a small gap: the synthetic labels
# are noisy and only partly linear, so neither mode gets near perfect.

# %%
import tempfile
from pathlib import Path

from csaim.core import ExperimentConfig
from csaim.dataset import DatasetSpec, desk_train_a, generate
from csaim.harness import compare, load_reports, run_repeats

train = generate(desk_train_a(seed=0))
test = generate(DatasetSpec(650, 650, seed=1000))
reports = run_repeats(ExperimentConfig(G_max=40), train, test, seeds=range(3))

# %%
out = Path(tempfile.mkdtemp())
for r in reports:
    r.save(out / f"{r.mode}_{r.seed}")
print(compare(load_reports(out)).format())

# %%
for r in reports:
    cells = r.traces[-1].memory_cell_count
    print(f"{r.mode:6} seed {r.seed}: train {r.train_correct_ratio:.3f}  memory cells {cells}")
