"""Exact entropies of small discrete Bayesian networks by full enumeration.

Used to check that knowing the DAG lowers the cost of describing the source:
``H(X) <= sum_i H(X_i)``, strictly when some node's CPT varies with its parents.

Net file grammar (one statement per line, ``#`` starts a comment)::

    node <name> <cardinality> [parents <name> ...]
    cpt <name> [<parent state> ...] : <p_0> <p_1> ... <p_{card-1}>

Parents must be declared before their children, listed in the ``parents``
clause in any order; the parent states on a ``cpt`` line follow that order.
Every parent configuration needs exactly one ``cpt`` line. Rows must sum to 1
within 1e-6 and are renormalised on load.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError
from .graph import Dag, validate_dag

MAX_CARDINALITY = 8
MAX_STATES = 10**6


@dataclass(frozen=True, eq=False)
class DiscreteBayesNet:
    """``cpts[i]`` has shape ``(card[p] for p in parents(i)) + (card[i],)``,
    parents in increasing index order. ``known`` selects whether the joint is
    factored along the DAG or replaced by the product of its marginals."""

    dag: Dag
    cardinalities: tuple
    cpts: tuple
    known: bool = True
    names: tuple | None = None

    def __post_init__(self):
        n = self.dag.num_nodes
        cards = tuple(int(c) for c in self.cardinalities)
        if len(cards) != n or len(self.cpts) != n:
            raise ValueError("need one cardinality and one CPT per node")
        if any(c < 1 or c > MAX_CARDINALITY for c in cards):
            raise ValueError(f"cardinalities must be in 1..{MAX_CARDINALITY}")
        if int(np.prod(cards)) > MAX_STATES:
            raise ValueError(f"joint support exceeds {MAX_STATES} states")
        cpts = []
        for i, cpt in enumerate(self.cpts):
            cpt = np.asarray(cpt, dtype=np.float64)
            want = tuple(cards[p] for p in self.dag.parents(i)) + (cards[i],)
            if cpt.shape != want:
                raise ValueError(f"CPT of node {i} has shape {cpt.shape}, expected {want}")
            if np.any(cpt < 0) or not np.allclose(cpt.sum(axis=-1), 1.0, rtol=0, atol=1e-12):
                raise ValueError(f"CPT rows of node {i} must be nonnegative and sum to 1")
            cpts.append(cpt)
        object.__setattr__(self, "cardinalities", cards)
        object.__setattr__(self, "cpts", tuple(cpts))
        if self.names is None:
            object.__setattr__(self, "names", tuple(f"X{i + 1}" for i in range(n)))

    def with_knowledge(self, known: bool) -> "DiscreteBayesNet":
        return DiscreteBayesNet(self.dag, self.cardinalities, self.cpts, known, self.names)


def factored_joint(net: DiscreteBayesNet) -> np.ndarray:
    """Product of the CPT factors over every joint state."""
    cards = net.cardinalities
    n = len(cards)
    table = np.ones(cards)
    for i in net.dag.topo_order:
        axes = list(net.dag.parents(i)) + [i]
        factor = net.cpts[i].transpose(np.argsort(axes))
        table = table * factor.reshape([cards[k] if k in axes else 1 for k in range(n)])
    return table


def marginals(table: np.ndarray) -> list:
    axes = range(table.ndim)
    return [table.sum(axis=tuple(a for a in axes if a != k)) for k in axes]


def joint(net: DiscreteBayesNet) -> np.ndarray:
    """Joint table: factored along the DAG if ``net.known``, else the product
    of the factored joint's marginals."""
    table = factored_joint(net)
    if net.known:
        return table
    out = np.ones(())
    for m in marginals(table):
        out = np.multiply.outer(out, m)
    return out


def entropy(table) -> float:
    """Shannon entropy in bits, with ``0 log 0 = 0``."""
    p = np.asarray(table, dtype=np.float64).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def entropy_gap(net: DiscreteBayesNet):
    """``(H(X), sum_i H(X_i), sum_i H(X_i) - H(X))`` for the DAG-factored source."""
    table = factored_joint(net)
    h_joint = entropy(table)
    h_sum = sum(entropy(m) for m in marginals(table))
    return h_joint, h_sum, h_sum - h_joint


def coding_bits(net: DiscreteBayesNet) -> float:
    """Entropy of the source as modelled with or without knowledge of the DAG."""
    return entropy(joint(net))


def has_dependence(net: DiscreteBayesNet, tol: float = 1e-12) -> bool:
    """True when some node's CPT rows differ across parent configurations."""
    for cpt in net.cpts:
        if cpt.ndim > 1:
            rows = cpt.reshape(-1, cpt.shape[-1])
            if np.max(np.abs(rows - rows[0])) > tol:
                return True
    return False


def random_net(rng, num_nodes: int = 4, max_card: int = 3, edge_prob: float = 0.5,
               dependent: bool = True, concentration: float = 1.0) -> DiscreteBayesNet:
    """Random DAG with Dirichlet CPTs.

    With ``dependent=False`` every CPT repeats one row for all parent
    configurations, so the edges carry no information.
    """
    rng = np.random.default_rng(rng)
    perm = rng.permutation(num_nodes)
    adj = np.zeros((num_nodes, num_nodes))
    upper = np.triu(rng.random((num_nodes, num_nodes)) < edge_prob, k=1)
    r, c = np.nonzero(upper)
    adj[perm[r], perm[c]] = 1.0
    dag = validate_dag(adj)
    cards = tuple(int(k) for k in rng.integers(2, max_card + 1, num_nodes))
    cpts = []
    for i in range(num_nodes):
        pa_shape = tuple(cards[p] for p in dag.parents(i))
        rows = int(np.prod(pa_shape, dtype=int))
        if dependent:
            block = rng.dirichlet([concentration] * cards[i], size=rows)
        else:
            block = np.tile(rng.dirichlet([concentration] * cards[i]), (rows, 1))
        cpts.append(block.reshape(pa_shape + (cards[i],)))
    return DiscreteBayesNet(dag, cards, tuple(cpts))


def parse_net(text: str, path=None) -> DiscreteBayesNet:
    names, cards, parents, rows = [], {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] == "node":
            if len(tok) < 3 or (len(tok) > 3 and tok[3] != "parents"):
                raise FormatError("expected 'node <name> <card> [parents ...]'", path, lineno)
            name = tok[1]
            if name in cards:
                raise FormatError(f"node {name!r} declared twice", path, lineno)
            try:
                card = int(tok[2])
            except ValueError:
                raise FormatError(f"cardinality {tok[2]!r} is not an integer", path, lineno) from None
            if not 1 <= card <= MAX_CARDINALITY:
                raise FormatError(f"cardinality must be in 1..{MAX_CARDINALITY}", path, lineno)
            pas = tok[4:]
            for p in pas:
                if p not in cards:
                    raise FormatError(f"parent {p!r} not declared before {name!r}", path, lineno)
            names.append(name)
            cards[name] = card
            parents[name] = pas
            rows[name] = {}
        elif tok[0] == "cpt":
            if ":" not in tok:
                raise FormatError("expected 'cpt <name> [states] : <probs>'", path, lineno)
            colon = tok.index(":")
            if colon < 2 or tok[1] not in cards:
                raise FormatError("cpt for an undeclared node", path, lineno)
            name = tok[1]
            try:
                states = tuple(int(s) for s in tok[2:colon])
                probs = [float(p) for p in tok[colon + 1:]]
            except ValueError:
                raise FormatError("non-numeric state or probability", path, lineno) from None
            pas = parents[name]
            if len(states) != len(pas) or any(
                not 0 <= s < cards[p] for s, p in zip(states, pas)
            ):
                raise FormatError(f"bad parent states {states} for {name!r}", path, lineno)
            if len(probs) != cards[name]:
                raise FormatError(f"need {cards[name]} probabilities", path, lineno)
            if min(probs) < 0 or abs(sum(probs) - 1.0) > 1e-6:
                raise FormatError("probabilities must be >= 0 and sum to 1", path, lineno)
            if states in rows[name]:
                raise FormatError(f"duplicate cpt row {states} for {name!r}", path, lineno)
            rows[name][states] = np.array(probs) / sum(probs)
        else:
            raise FormatError(f"unknown statement {tok[0]!r}", path, lineno)
    if not names:
        raise FormatError("no nodes declared", path)
    index = {nm: i for i, nm in enumerate(names)}
    adj = np.zeros((len(names), len(names)))
    for nm in names:
        for p in parents[nm]:
            adj[index[p], index[nm]] = 1.0
    dag = validate_dag(adj)
    cpts = []
    for i, nm in enumerate(names):
        declared = parents[nm]
        shape = tuple(cards[p] for p in declared)
        table = np.empty(shape + (cards[nm],))
        for states in itertools.product(*[range(s) for s in shape]):
            if states not in rows[nm]:
                raise FormatError(f"missing cpt row {states} for {nm!r}", path)
            table[states] = rows[nm][states]
        # reorder parent axes into increasing node index
        order = np.argsort([index[p] for p in declared])
        table = table.transpose(list(order) + [len(declared)])
        cpts.append(table)
    return DiscreteBayesNet(dag, tuple(cards[nm] for nm in names), tuple(cpts),
                            names=tuple(names))


def read_net(path) -> DiscreteBayesNet:
    return parse_net(Path(path).read_text(), path=Path(path))


def format_net(net: DiscreteBayesNet) -> str:
    """Net file text; nodes are written in topological order so parents come first."""
    lines = []
    order = [int(i) for i in net.dag.topo_order]
    for i in order:
        pas = [net.names[p] for p in net.dag.parents(i)]
        head = f"node {net.names[i]} {net.cardinalities[i]}"
        lines.append(head + (" parents " + " ".join(pas) if pas else ""))
    for i in order:
        cpt = net.cpts[i]
        for states in itertools.product(*[range(s) for s in cpt.shape[:-1]]):
            probs = " ".join(repr(float(p)) for p in cpt[states])
            lines.append(f"cpt {net.names[i]} " + "".join(f"{s} " for s in states) + f": {probs}")
    return "\n".join(lines) + "\n"
