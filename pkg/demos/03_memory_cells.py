# %% [markdown]
# # Immunological memory
#
# Memory cells answer a sample when the sample, rescaled onto the cell's
# weights, lies within the response radius. Any responding cell overrides
# the best antibody.

# %%
import numpy as np

from csaim.core import Antibody, ExperimentConfig, Sample
from csaim.memory import MemoryStore, delta_rule, medoid, promote_to_memory, responds, retrieve, scale_to_antibody

cell_ab = Antibody(np.linspace(0.1, 0.8, 8), 0.4)
store = MemoryStore(capacity=5)
cell = promote_to_memory([cell_ab], store, mu_theta=0.3)

s = Sample(np.linspace(0.1, 0.8, 8) * 0.5, 1)
print("scaled sample equals weights:", np.allclose(scale_to_antibody(s.features, cell_ab.weights), cell_ab.weights))
print("responds:", responds(cell, s, 0.3), "  retrieved:", retrieve(store, s, 0.3) is cell)

# %% [markdown]
# Training is an online delta rule on misclassified records. On one record
# the residual shrinks by |1 - eta |x|^2| every pass.

# %%
x = np.full(8, 0.5)
w, errors = delta_rule(np.zeros(8), x[None, :], 1.0, 0.3, 50, 0.001)
print("residual per pass:", np.round(np.sqrt(2 * np.array(errors)), 4))

# %% [markdown]
# A crowd of trained antibodies is represented by its medoid.

# %%
rng = np.random.default_rng(0)
crowd = [Antibody(cell_ab.weights + rng.normal(0, 0.05, 8), 0.4) for _ in range(6)]
print("medoid weights:", np.round(medoid(crowd).weights, 3))
print("store cap at default settings:", ExperimentConfig().c_max_memory)
