import itertools
import math

import numpy as np
import pytest

from dagsurv.errors import FormatError
from dagsurv.graph import validate_dag
from dagsurv.infotheory import (
    DiscreteBayesNet,
    coding_bits,
    entropy,
    entropy_gap,
    factored_joint,
    format_net,
    has_dependence,
    marginals,
    parse_net,
    random_net,
    read_net,
)

COPY_CHAIN = """\
# X2 copies a fair bit X1
node X1 2
node X2 2 parents X1
cpt X1 : 0.5 0.5
cpt X2 0 : 1 0
cpt X2 1 : 0 1
"""


def brute_joint(net):
    """Enumerate every joint state and multiply the matching CPT entries."""
    out = np.zeros(net.cardinalities)
    for state in itertools.product(*[range(c) for c in net.cardinalities]):
        p = 1.0
        for i in range(len(state)):
            pa = net.dag.parents(i)
            p *= net.cpts[i][tuple(state[k] for k in pa) + (state[i],)]
        out[state] = p
    return out


def test_fair_independent_bits():
    dag = validate_dag(np.zeros((3, 3)))
    net = DiscreteBayesNet(dag, (2, 2, 2), tuple(np.full(2, 0.5) for _ in range(3)))
    h, hsum, gap = entropy_gap(net)
    assert h == pytest.approx(3.0, abs=1e-12) and hsum == pytest.approx(3.0, abs=1e-12)
    assert gap == pytest.approx(0.0, abs=1e-12)


def test_copy_chain_gap_is_one_bit():
    h, hsum, gap = entropy_gap(parse_net(COPY_CHAIN))
    assert (h, hsum, gap) == (1.0, 2.0, 1.0)


def test_binary_entropy_value():
    expected = -(0.9 * math.log2(0.9) + 0.1 * math.log2(0.1))
    assert entropy([0.9, 0.1]) == pytest.approx(expected, rel=1e-12)
    assert entropy([0.9, 0.1]) == pytest.approx(0.4690, abs=1e-4)
    assert entropy([1.0, 0.0]) == 0.0


def test_chain_marginal_matches_matrix_product():
    a = np.zeros((3, 3))
    a[0, 1] = a[1, 2] = 1
    rng = np.random.default_rng(0)
    p1 = rng.dirichlet(np.ones(2))
    t12 = rng.dirichlet(np.ones(3), size=2)
    t23 = rng.dirichlet(np.ones(2), size=3)
    net = DiscreteBayesNet(validate_dag(a), (2, 3, 2), (p1, t12, t23))
    m = marginals(factored_joint(net))
    assert np.allclose(m[1], p1 @ t12, atol=1e-15)
    assert np.allclose(m[2], p1 @ t12 @ t23, atol=1e-15)


def test_factored_joint_matches_enumeration():
    rng = np.random.default_rng(1)
    for _ in range(30):
        net = random_net(rng, num_nodes=int(rng.integers(2, 6)), max_card=3, edge_prob=0.6)
        assert np.allclose(factored_joint(net), brute_joint(net), atol=1e-15)
        assert factored_joint(net).sum() == pytest.approx(1.0, abs=1e-12)


def test_gap_nonnegative_and_positive_with_dependence():
    rng = np.random.default_rng(2)
    dependent_seen = 0
    for _ in range(100):
        net = random_net(rng, num_nodes=int(rng.integers(2, 6)), max_card=4)
        _, _, gap = entropy_gap(net)
        assert gap >= -1e-12
        if has_dependence(net):
            dependent_seen += 1
            assert gap > 1e-6
    assert dependent_seen > 50


def test_gap_zero_for_product_distributions():
    rng = np.random.default_rng(3)
    for _ in range(50):
        net = random_net(rng, num_nodes=int(rng.integers(2, 6)), dependent=False)
        assert not has_dependence(net)
        assert abs(entropy_gap(net)[2]) <= 1e-9


def test_knowing_the_dag_never_costs_bits():
    rng = np.random.default_rng(4)
    for _ in range(50):
        net = random_net(rng, num_nodes=4)
        known = coding_bits(net)
        unknown = coding_bits(net.with_knowledge(False))
        assert known <= unknown + 1e-12
        assert unknown - known == pytest.approx(entropy_gap(net)[2], abs=1e-9)


def test_format_parse_round_trip():
    rng = np.random.default_rng(5)
    for _ in range(20):
        net = random_net(rng, num_nodes=5, edge_prob=0.5)
        back = parse_net(format_net(net))
        assert entropy_gap(back) == pytest.approx(entropy_gap(net), abs=1e-12)
        # node order may change; compare joints through the names
        perm = [back.names.index(n) for n in net.names]
        assert np.allclose(factored_joint(back).transpose(perm), factored_joint(net), atol=1e-15)


def test_parent_order_in_file_is_respected():
    text = """node A 2
node B 3
node C 2 parents B A
cpt A : 0.5 0.5
cpt B : 0.2 0.3 0.5
"""
    # C's rows are keyed (B state, A state)
    for b in range(3):
        for a in range(2):
            p = 0.1 + 0.1 * b + 0.3 * a
            text += f"cpt C {b} {a} : {p} {1 - p}\n"
    net = parse_net(text)
    # stored axes are (A, B, C)
    assert net.cpts[2][1, 2, 0] == pytest.approx(0.1 + 0.2 + 0.3)


@pytest.mark.parametrize("text, needle", [
    ("node A 2\ncpt A : 0.5 0.6\n", "sum to 1"),
    ("node A 2 parents B\n", "not declared"),
    ("node A 9\n", "cardinality"),
    ("node A 2\nnode B 2 parents A\ncpt A : 0.5 0.5\ncpt B 0 : 1 0\n", "missing cpt row"),
    ("edge A B\n", "unknown statement"),
    ("node A 2\ncpt A : 0.5\n", "probabilities"),
])
def test_parse_diagnostics(text, needle):
    with pytest.raises(FormatError, match=needle):
        parse_net(text)


def test_read_net_reports_file_and_line(tmp_path):
    p = tmp_path / "bad.net"
    p.write_text("node A 2\n\ncpt A : 0.2 0.2\n")
    with pytest.raises(FormatError, match=r"bad.net:3"):
        read_net(p)
