import math

import numpy as np
import pytest

from dagsurv import autodiff as ad
from dagsurv.errors import NonScalarLossError, ShapeError
from dagsurv.graph import DagSampleConfig, sample_erdos_renyi_dag

from gradcheck import numeric_grad, rel_error

KINK = 1e-4


def _away_from_kink(rng, shape):
    x = rng.normal(size=shape)
    x[np.abs(x) < KINK * 10] += 0.1
    return x


def _check_primitive(build, arrays, rng, tol=1e-4):
    """``build(*values) -> Value``; project onto a random tensor to get a scalar."""
    leaves = [ad.Value(a) for a in arrays]
    out = build(*leaves)
    proj = rng.normal(size=out.shape)
    ad.total(out * proj).backward()

    def f():
        vals = [ad.Value(a) for a in arrays]
        return float((build(*vals).data * proj).sum())

    for leaf, num in zip(leaves, numeric_grad(f, arrays)):
        assert rel_error(leaf.grad, num) <= tol


UNARY = {
    "cos": ad.cos,
    "exp": lambda v: ad.exp(v * 0.5),
    "log": lambda v: ad.log(v * v + 0.5),
    "max0": ad.max0,
    "relu": ad.relu,
    "selu": ad.selu,
    "softmax_rows": ad.softmax_rows,
    "transpose": ad.transpose,
    "sum_rows": ad.sum_rows,
    "power": lambda v: v ** 3,
}


@pytest.mark.parametrize("name", sorted(UNARY))
def test_unary_primitives_match_finite_differences(name):
    rng = np.random.default_rng(abs(hash(name)) % 2**32)
    for _ in range(5):
        _check_primitive(UNARY[name], [_away_from_kink(rng, (4, 5))], rng)


BINARY = {
    "add": (lambda a, b: a + b, (4, 3), (1, 3)),
    "sub": (lambda a, b: a - b, (4, 3), (4, 1)),
    "mul": (lambda a, b: a * b, (4, 3), (4, 3)),
    "matmul": (lambda a, b: a @ b, (4, 3), (3, 2)),
    "concat_cols": (lambda a, b: ad.concat([a, b], axis=1), (4, 3), (4, 2)),
    "concat_rows": (lambda a, b: ad.concat_rows([a, b]), (2, 3), (4, 3)),
}


@pytest.mark.parametrize("name", sorted(BINARY))
def test_binary_primitives_match_finite_differences(name):
    build, sa, sb = BINARY[name]
    rng = np.random.default_rng(len(name))
    for _ in range(5):
        _check_primitive(build, [rng.normal(size=sa), rng.normal(size=sb)], rng)


def test_sem_primitives_match_finite_differences():
    rng = np.random.default_rng(3)
    for seed in range(5):
        dag = sample_erdos_renyi_dag(DagSampleConfig(6, 3, seed=seed))
        x = rng.normal(size=(4, 6))
        _check_primitive(lambda v: ad.sem_solve_rows(dag, v), [x.copy()], rng)
        _check_primitive(lambda v: ad.sem_mul_rows(dag, v), [x.copy()], rng)


def test_matmul_identity_and_trace_gradient():
    rng = np.random.default_rng(0)
    m = rng.normal(size=(3, 4))
    assert np.array_equal((ad.Value(np.eye(3)) @ ad.Value(m)).data, m)
    a, b = ad.Value(rng.normal(size=(3, 3))), ad.Value(rng.normal(size=(3, 3)))
    ad.total((a @ b) * np.eye(3)).backward()  # trace(ab)
    assert np.allclose(a.grad, b.data.T)


def test_cos_gradient_at_zero():
    x = ad.Value([[0.0]])
    ad.cos(x).backward()
    assert x.grad[0, 0] == 0.0


def test_relu_values_and_kink():
    x = ad.Value([[-1.0, 2.0, 0.0]])
    y = ad.relu(x)
    assert y.data.tolist() == [[0.0, 2.0, 0.0]]
    ad.total(y).backward()
    assert x.grad.tolist() == [[0.0, 1.0, 0.0]]


def test_selu_values():
    assert ad.selu(ad.Value([[0.0]])).data[0, 0] == 0.0
    expected = 1.0507009873554805 * 1.6732632423543772 * (math.exp(-1.0) - 1.0)
    assert ad.selu(ad.Value([[-1.0]])).data[0, 0] == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(-1.1113, abs=1e-4)


def test_softmax_properties():
    assert np.allclose(ad.softmax_rows(ad.Value([[0.0, 0.0]])).data, [[0.5, 0.5]])
    big = ad.softmax_rows(ad.Value([[1000.0, 0.0]])).data
    assert np.all(np.isfinite(big)) and big[0, 0] == pytest.approx(1.0) and big[0, 1] >= 0
    rng = np.random.default_rng(1)
    s = ad.softmax_rows(ad.Value(rng.normal(scale=20, size=(50, 7)))).data
    assert np.all(np.abs(s.sum(axis=1) - 1) <= 1e-9)
    assert np.all(s > 0)


def test_square_gradient():
    x = ad.Value(3.0)
    (x * x).backward()
    assert float(x.grad) == 6.0


def test_fan_out_accumulates():
    x = ad.Value(1.5)
    (x + x).backward()
    assert float(x.grad) == 2.0


def test_backward_twice_doubles_leaf_gradients():
    rng = np.random.default_rng(2)
    w = ad.Value(rng.normal(size=(3, 2)))
    x = rng.normal(size=(4, 3))
    loss = ad.total(ad.cos(ad.Value(x, requires_grad=False) @ w))
    loss.backward()
    first = w.grad.copy()
    loss.backward()
    assert np.array_equal(w.grad, 2 * first)


def test_non_scalar_loss_rejected():
    with pytest.raises(NonScalarLossError):
        ad.Value(np.ones((2, 2))).backward()


def test_shape_errors():
    with pytest.raises(ShapeError):
        ad.Value(np.ones((2, 3))) @ ad.Value(np.ones((2, 3)))
    with pytest.raises(ShapeError):
        ad.Value(np.ones((2, 3))) + ad.Value(np.ones((3, 2)))


def test_constants_receive_no_gradient():
    c = np.ones((2, 2))
    w = ad.Value(np.ones((2, 2)))
    ad.total(w * c).backward()
    assert np.array_equal(w.grad, c)


def test_adam_zero_gradient_keeps_params():
    p = {"w": np.array([[1.0, -2.0]])}
    state = ad.AdamState(lr=0.1)
    ad.adam_step(p, {"w": np.zeros((1, 2))}, state)
    assert p["w"].tolist() == [[1.0, -2.0]]


def test_adam_first_step_moves_by_lr_against_sign():
    p = {"w": np.array([[1.0, 1.0, 1.0]])}
    g = np.array([[3.0, -0.2, 50.0]])
    ad.adam_step(p, {"w": g}, ad.AdamState(), lr=1e-3)
    step = p["w"] - 1.0
    assert np.allclose(step, -1e-3 * np.sign(g), rtol=1e-6)


def test_adam_decreases_quadratic_bowl():
    w = {"w": np.array([[5.0, 5.0]])}
    state = ad.AdamState(lr=1e-2)
    losses = []
    for _ in range(200):
        losses.append(float((w["w"] ** 2).sum()))
        ad.adam_step(w, {"w": 2 * w["w"]}, state)
    assert np.all(np.diff(losses) < 0)
    assert state.step == 200


def test_params_file_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    params = {"a.W0": rng.normal(size=(3, 2)), "a.b0": rng.normal(size=(1, 2))}
    path = tmp_path / "p.txt"
    ad.save_params(path, params, {"k": [1, 2]})
    back, meta = ad.load_params(path)
    assert meta == {"k": [1, 2]}
    assert list(back) == list(params)
    for k in params:
        assert np.array_equal(back[k], params[k])
