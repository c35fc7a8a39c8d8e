# %% [markdown]
# # Synthetic CHD records
#
# The generator draws raw records over the eight-feature CHD schema, labels
# them with a logistic risk model, flips a small share of labels and keeps
# drawing until the requested class counts are met exactly.

# %%
import numpy as np

from csaim.dataset import CHD_SCHEMA, DatasetSpec, denormalize_array, desk_ratio, desk_train_a, generate, write_csv

train = generate(desk_train_a(seed=0))
y = np.array([s.label for s in train])
print(f"{len(train)} records, {y.sum()} CHD / {len(y) - y.sum()} non-CHD")

# %% [markdown]
# Features are min-max scaled with fixed schema bounds, so every value sits
# in [0, 1] and the mapping back to raw units is exact.

# %%
X = np.array([s.features for s in train])
raw = denormalize_array(X)
for i, name in enumerate(CHD_SCHEMA.names):
    print(f"{name:8} norm {X[:, i].mean():.3f}   raw {raw[:, i].mean():8.2f}")

# %% [markdown]
# Risk factors separate the classes only partly: that overlap is what limits
# any linear-threshold recognizer on this data.

# %%
for name in ("SBP", "TC", "TOBACCO"):
    i = CHD_SCHEMA.index(name)
    print(f"{name:8} CHD {X[y == 1, i].mean():.3f}  non-CHD {X[y == 0, i].mean():.3f}")

# %%
imbalanced = generate(desk_ratio(9, seed=0))
print("1:9 design:", sum(s.label for s in imbalanced), "cases of", len(imbalanced))
steep = generate(DatasetSpec(200, 200, coefficients={"SBP": 3.0, "TC": 2.0}, intercept=0.0, seed=1))
print(write_csv(steep[:3]), end="")
