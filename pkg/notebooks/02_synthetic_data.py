"""Synthetic survival data: ancestral SEM sampling, censoring, binning, splits."""
# %%
import numpy as np

from dagsurv.synthgen import SYNTHETIC_PRESETS, make_synthetic, split

# %% The synthetic-small preset: 9 covariates plus the event time, 10k rows,
# half of them censored, unit-width time bins.
print(SYNTHETIC_PRESETS["synthetic-small"])
dag, ds, split_seed = make_synthetic("synthetic-small", seed=0)
print("rows:", len(ds), "censored:", ds.censored_fraction, "horizon M:", ds.horizon)
print("max event time:", ds.raw_times.max().round(1))

# %% Censored rows had their time moved earlier, uniformly in (0, t).
ev, ce = ds.events == 1, ds.events == 0
print("median time, events vs censored:", np.median(ds.raw_times[ev]).round(1),
      np.median(ds.raw_times[ce]).round(1))

# %% Histogram of binned event times (text only).
counts, edges = np.histogram(ds.time_bins[ev], bins=10)
for c, lo in zip(counts, edges):
    print(f"{lo:7.1f} {'#' * int(60 * c / counts.max())}")

# %% 64 / 16 / 20 train / validation / test partition.
train, val, test = split(ds, seed=split_seed)
print([len(p) for p in (train, val, test)])
