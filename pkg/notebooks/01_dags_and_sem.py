"""Random weighted DAGs and the linear SEM maps used inside the model."""
# %%
import numpy as np

from dagsurv.graph import (DagSampleConfig, sample_erdos_renyi_dag, sem_backward, sem_forward,
                           validate_dag)

# %% A 10-node graph, expected degree 3. The last node is the event time.
dag = sample_erdos_renyi_dag(DagSampleConfig(10, expected_degree=3, seed=0))
print("edges:", dag.num_edges, "mean degree:", 2 * dag.num_edges / dag.num_nodes)
print("topological order:", list(dag.topo_order))
print("target parents:", dag.parents(dag.target).tolist(),
      "children:", dag.children(dag.target).tolist())

# %% The decoder applies (I - A^T)^{-1}, the encoder (I - A^T). They undo each other.
m = np.random.default_rng(1).normal(size=(10, 4))
r = sem_forward(dag, m)
print("round trip error:", np.abs(sem_backward(dag, r) - m).max())

# %% Along a chain 0 -> 1 -> 2 the solve accumulates weighted ancestors.
a = np.zeros((3, 3))
a[0, 1], a[1, 2] = 2.0, 0.5
print(sem_forward(validate_dag(a), np.array([1.0, 0.0, 0.0])).ravel())  # [1, 2, 1]

# %% Cycles are refused with the offending nodes named.
try:
    validate_dag(np.array([[0, 1.0], [1.0, 0]]))
except ValueError as exc:
    print(type(exc).__name__, exc)
