"""Weighted DAGs over covariates plus a target node, and the SEM transforms.

The adjacency convention is ``A[i, j] = weight of edge i -> j``. For a batch
stored row-wise (one instance per row, one node per column) the two SEM maps are

    sem_backward:  m -> (I - A^T) m
    sem_forward:   m -> (I - A^T)^{-1} m

acting on node-major matrices of shape ``(num_nodes, K)``. Because the graph is
acyclic, ``I - A^T`` is unit lower-triangular once rows and columns are put in
topological order, so the inverse map is a single triangular solve.
"""
from __future__ import annotations

import csv
import heapq
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import solve_triangular

from .errors import CycleError, DimensionError, FormatError, NonSquareError


@dataclass(frozen=True, eq=False)
class Dag:
    """Immutable weighted DAG with a cached topological order.

    Build instances through :func:`validate_dag` (or the samplers) rather than
    directly, so that acyclicity is checked.
    """

    adjacency: np.ndarray
    topo_order: tuple
    _lower: np.ndarray = field(repr=False)  # (I - A^T) permuted into topo order

    @property
    def num_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def target(self) -> int:
        """Index of the time-to-event node (always the last one)."""
        return self.num_nodes - 1

    @property
    def num_edges(self) -> int:
        return int(np.count_nonzero(self.adjacency))

    def parents(self, node: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[:, node])

    def children(self, node: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[node, :])

    def is_empty(self) -> bool:
        return self.num_edges == 0

    def zeroed(self) -> "Dag":
        """The same node set with every edge removed (the A = 0 ablation)."""
        return validate_dag(np.zeros_like(self.adjacency))

    def __eq__(self, other):
        if not isinstance(other, Dag):
            return NotImplemented
        return np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self):
        return hash(self.adjacency.tobytes())


def topological_order(adjacency: np.ndarray) -> list[int]:
    """Kahn's algorithm; among ready nodes the smallest index goes first.

    Raises CycleError naming the nodes that could not be ordered.
    """
    n = adjacency.shape[0]
    edges = adjacency != 0
    indegree = edges.sum(axis=0).astype(int)
    ready = [i for i in range(n) if indegree[i] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        node = heapq.heappop(ready)
        order.append(node)
        for child in np.flatnonzero(edges[node]):
            indegree[child] -= 1
            if indegree[child] == 0:
                heapq.heappush(ready, int(child))
    if len(order) != n:
        stuck = sorted(set(range(n)) - set(order))
        raise CycleError(f"graph has a directed cycle through nodes {stuck}", stuck)
    return order


def validate_dag(adjacency) -> Dag:
    """Check that ``adjacency`` is a square finite matrix of a DAG and wrap it."""
    a = np.array(adjacency, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonSquareError(f"adjacency must be square, got shape {a.shape}")
    if a.shape[0] == 0:
        raise NonSquareError("adjacency must have at least one node")
    if not np.all(np.isfinite(a)):
        raise ValueError("adjacency contains non-finite entries")
    if np.any(np.diag(a) != 0):
        loops = np.flatnonzero(np.diag(a)).tolist()
        raise CycleError(f"self-loops at nodes {loops}", loops)
    order = topological_order(a)
    a.setflags(write=False)
    perm = np.asarray(order)
    lower = np.eye(a.shape[0]) - a.T
    lower = np.ascontiguousarray(lower[np.ix_(perm, perm)])
    lower.setflags(write=False)
    return Dag(adjacency=a, topo_order=tuple(order), _lower=lower)


@dataclass(frozen=True)
class DagSampleConfig:
    num_nodes: int
    expected_degree: float = 3.0
    weight_low: float = 0.5
    weight_high: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.num_nodes < 1:
            raise ValueError("num_nodes must be positive")
        if self.expected_degree <= 0:
            raise ValueError("expected_degree must be positive")
        if self.num_nodes > 1 and self.expected_degree >= self.num_nodes:
            raise ValueError("expected_degree must be below num_nodes")
        if not 0 < self.weight_low <= self.weight_high:
            raise ValueError("need 0 < weight_low <= weight_high")

    @property
    def edge_probability(self) -> float:
        if self.num_nodes < 2:
            return 0.0
        return min(1.0, self.expected_degree / (self.num_nodes - 1))


def sample_erdos_renyi_dag(config: DagSampleConfig) -> Dag:
    """Random DAG: random node ordering, then independent forward edges.

    Each of the ``n(n-1)/2`` forward pairs is kept with probability
    ``expected_degree / (n - 1)``, so a node's in-plus-out degree has the
    requested mean. Weights are uniform on ``[weight_low, weight_high]``.
    """
    n = config.num_nodes
    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(n)
    keep = rng.random((n, n)) < config.edge_probability
    weights = rng.uniform(config.weight_low, config.weight_high, size=(n, n))
    forward = np.triu(keep, k=1)
    a = np.zeros((n, n))
    rows, cols = np.nonzero(forward)
    a[perm[rows], perm[cols]] = weights[rows, cols]
    return validate_dag(a)


def _check_rows(dag: Dag, m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2 or m.shape[0] != dag.num_nodes:
        raise DimensionError(
            f"expected {dag.num_nodes} rows (one per node), got shape {m.shape}"
        )
    return m


def sem_backward(dag: Dag, m) -> np.ndarray:
    """``(I - A^T) m`` for a node-major matrix ``m``."""
    m = _check_rows(dag, m)
    return m - dag.adjacency.T @ m


def sem_forward(dag: Dag, m, transpose: bool = False) -> np.ndarray:
    """Solve ``(I - A^T) r = m`` for ``r`` (or ``(I - A) r = m`` if ``transpose``).

    Uses forward substitution in topological order; no inverse is formed.
    """
    m = _check_rows(dag, m)
    perm = np.asarray(dag.topo_order)
    r = np.empty_like(m)
    r[perm] = solve_triangular(
        dag._lower, m[perm], lower=True, unit_diagonal=True, trans=1 if transpose else 0
    )
    return r


def read_adjacency(path) -> Dag:
    """Load a comma-separated square adjacency matrix (no header)."""
    path = Path(path)
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise FormatError(f"non-numeric entry ({exc})", path, lineno) from None
            if len(rows[-1]) != len(rows[0]):
                raise FormatError(
                    f"row has {len(rows[-1])} columns, expected {len(rows[0])}", path, lineno
                )
    if not rows:
        raise FormatError("empty adjacency file", path)
    if len(rows) != len(rows[0]):
        raise FormatError(f"matrix is {len(rows)}x{len(rows[0])}, must be square", path)
    try:
        return validate_dag(rows)
    except (CycleError, ValueError) as exc:
        raise FormatError(str(exc), path) from exc


def write_adjacency(dag: Dag, path) -> None:
    with open(path, "w", newline="") as fh:
        for row in dag.adjacency:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
