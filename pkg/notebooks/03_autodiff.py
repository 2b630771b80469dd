"""The small reverse-mode autodiff engine, checked against finite differences."""
# %%
import numpy as np

from dagsurv import autodiff as ad
from dagsurv.graph import DagSampleConfig, sample_erdos_renyi_dag

rng = np.random.default_rng(0)

# %% A two-layer network with a SEM solve in the middle, reduced to a scalar.
dag = sample_erdos_renyi_dag(DagSampleConfig(4, 2, seed=0))
x = rng.normal(size=(5, 3))
w1 = ad.Value(rng.normal(size=(3, 4)))
w2 = ad.Value(rng.normal(size=(4, 2)))


def loss_fn():
    h = ad.sem_solve_rows(dag, ad.selu(ad.as_value(x) @ w1))
    return ad.mean(ad.log(ad.softmax_rows(h @ w2)))


loss = loss_fn()
loss.backward()

# %% Compare one gradient entry with a central difference.
h = 1e-6
w1.data[1, 2] += h
up = loss_fn().data.item()
w1.data[1, 2] -= 2 * h
down = loss_fn().data.item()
w1.data[1, 2] += h
print("analytic:", w1.grad[1, 2], "numeric:", (up - down) / (2 * h))

# %% One Adam step moves each parameter by about lr against its gradient sign.
params = {"w1": w1.data, "w2": w2.data}
before = w1.data.copy()
ad.adam_step(params, {"w1": w1.grad, "w2": w2.grad}, ad.AdamState(lr=1e-3))
print(np.round((w1.data - before) / 1e-3, 3))
print(np.all(np.sign(w1.data - before) == -np.sign(w1.grad)))
