"""Reverse-mode autodiff over dense float64 arrays, plus Adam.

A :class:`Value` wraps an ndarray and remembers the op that produced it. Calling
``loss.backward()`` on a scalar sweeps the graph in reverse topological order.
Leaf gradients accumulate across calls (call :func:`zero_grad` between steps);
gradients of interior nodes are recomputed on every sweep.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, NonScalarLossError, ShapeError
from .graph import Dag, sem_backward, sem_forward

SELU_LAMBDA = 1.0507009873554805
SELU_ALPHA = 1.6732632423543772


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Value:
    """An array node in the computation graph.

    User-created values are differentiable leaves by default; plain arrays
    wrapped implicitly by an op are constants (``requires_grad=False``) and
    receive no gradient.
    """

    __slots__ = ("data", "grad", "_backward", "_prev", "op", "requires_grad")
    __array_ufunc__ = None  # make ndarray (op) Value dispatch to Value's reflected ops

    def __init__(self, data, _children=(), op="", requires_grad=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None if _children else np.zeros_like(self.data)
        self._backward = None
        self._prev = _children
        self.op = op
        if requires_grad is None:
            requires_grad = any(c.requires_grad for c in _children) if _children else True
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.data.shape

    @property
    def T(self):
        return transpose(self)

    def __repr__(self):
        return f"Value(shape={self.data.shape}, op={self.op!r})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, k):
        return power(self, k)

    def backward(self):
        if self.data.size != 1:
            raise NonScalarLossError(f"backward needs a scalar loss, got shape {self.shape}")
        topo, seen = [], set()
        stack = [(self, False)]
        while stack:  # iterative DFS: deep MLP graphs would hit the recursion limit
            v, done = stack.pop()
            if done:
                topo.append(v)
                continue
            if id(v) in seen or not v.requires_grad:
                continue
            seen.add(id(v))
            stack.append((v, True))
            for child in v._prev:
                if id(child) not in seen:
                    stack.append((child, False))
        for v in topo:
            if v._prev:
                v.grad = None
        _accum(self, np.ones_like(self.data))
        for v in reversed(topo):
            if v._backward is not None and v.grad is not None:
                v._backward()


def _accum(v: Value, g) -> None:
    if not v.requires_grad:
        return
    if v.grad is None:
        v.grad = np.array(g, dtype=np.float64)
    else:
        v.grad += g


def as_value(x) -> Value:
    return x if isinstance(x, Value) else Value(x, requires_grad=False)


def zero_grad(params) -> None:
    for p in params:
        p.grad = np.zeros_like(p.data)


def _check_broadcast(a, b, op):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


def add(a, b) -> Value:
    a, b = as_value(a), as_value(b)
    _check_broadcast(a, b, "add")
    out = Value(a.data + b.data, (a, b), "add")

    def _backward():
        _accum(a, _unbroadcast(out.grad, a.shape))
        _accum(b, _unbroadcast(out.grad, b.shape))

    out._backward = _backward
    return out


def sub(a, b) -> Value:
    a, b = as_value(a), as_value(b)
    _check_broadcast(a, b, "sub")
    out = Value(a.data - b.data, (a, b), "sub")

    def _backward():
        _accum(a, _unbroadcast(out.grad, a.shape))
        _accum(b, -_unbroadcast(out.grad, b.shape))

    out._backward = _backward
    return out


def mul(a, b) -> Value:
    """Elementwise product with broadcasting."""
    a, b = as_value(a), as_value(b)
    _check_broadcast(a, b, "mul")
    out = Value(a.data * b.data, (a, b), "mul")

    def _backward():
        if a.requires_grad:
            _accum(a, _unbroadcast(out.grad * b.data, a.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(out.grad * a.data, b.shape))

    out._backward = _backward
    return out


def power(a, k: float) -> Value:
    a = as_value(a)
    out = Value(a.data ** k, (a,), f"pow{k}")

    def _backward():
        _accum(a, out.grad * k * a.data ** (k - 1))

    out._backward = _backward
    return out


def matmul(a, b) -> Value:
    a, b = as_value(a), as_value(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    out = Value(a.data @ b.data, (a, b), "matmul")

    def _backward():
        if a.requires_grad:
            _accum(a, out.grad @ b.data.T)
        if b.requires_grad:
            _accum(b, a.data.T @ out.grad)

    out._backward = _backward
    return out


def transpose(a) -> Value:
    a = as_value(a)
    out = Value(a.data.T, (a,), "transpose")

    def _backward():
        _accum(a, out.grad.T)

    out._backward = _backward
    return out


def concat(values, axis: int = 0) -> Value:
    """Join along ``axis`` (0 stacks rows, 1 stacks columns)."""
    values = [as_value(v) for v in values]
    try:
        data = np.concatenate([v.data for v in values], axis=axis)
    except ValueError as exc:
        raise ShapeError(f"concat: {exc}") from None
    out = Value(data, tuple(values), "concat")
    edges = np.cumsum([v.shape[axis] for v in values])[:-1]

    def _backward():
        for v, g in zip(values, np.split(out.grad, edges, axis=axis)):
            _accum(v, g)

    out._backward = _backward
    return out


def concat_rows(values) -> Value:
    return concat(values, axis=0)


def total(a) -> Value:
    """Sum of all entries, as a 1x1 value."""
    a = as_value(a)
    out = Value(a.data.sum().reshape(1, 1), (a,), "sum")

    def _backward():
        _accum(a, np.broadcast_to(out.grad, a.shape))

    out._backward = _backward
    return out


def sum_rows(a) -> Value:
    """Row sums of a 2-D value, shape ``(N, 1)``."""
    a = as_value(a)
    out = Value(a.data.sum(axis=1, keepdims=True), (a,), "sum_rows")

    def _backward():
        _accum(a, np.broadcast_to(out.grad, a.shape))

    out._backward = _backward
    return out


def mean(a) -> Value:
    a = as_value(a)
    return mul(total(a), 1.0 / a.data.size)


def _unary(a, fwd, dfwd, op):
    a = as_value(a)
    out = Value(fwd(a.data), (a,), op)

    def _backward():
        _accum(a, out.grad * dfwd(a.data, out.data))

    out._backward = _backward
    return out


def cos(a) -> Value:
    return _unary(a, np.cos, lambda x, y: -np.sin(x), "cos")


def exp(a) -> Value:
    return _unary(a, np.exp, lambda x, y: y, "exp")


def log(a) -> Value:
    return _unary(a, np.log, lambda x, y: 1.0 / x, "log")


def max0(a) -> Value:
    # subgradient at 0 is 0
    return _unary(a, lambda x: np.maximum(x, 0.0), lambda x, y: (x > 0).astype(float), "max0")


def relu(a) -> Value:
    return max0(a)


def selu(a) -> Value:
    def fwd(x):
        return SELU_LAMBDA * np.where(x > 0, x, SELU_ALPHA * np.expm1(np.minimum(x, 0.0)))

    def dfwd(x, y):
        return SELU_LAMBDA * np.where(x > 0, 1.0, SELU_ALPHA * np.exp(np.minimum(x, 0.0)))

    return _unary(a, fwd, dfwd, "selu")


def identity(a) -> Value:
    return as_value(a)


ACTIVATIONS = {"relu": relu, "selu": selu, "identity": identity}


def softmax_rows(a) -> Value:
    """Row-wise softmax, stabilised by subtracting each row's max."""
    a = as_value(a)
    z = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    out = Value(e / e.sum(axis=-1, keepdims=True), (a,), "softmax")

    def _backward():
        s = out.data
        g = out.grad
        _accum(a, s * (g - (g * s).sum(axis=-1, keepdims=True)))

    out._backward = _backward
    return out


def sem_solve_rows(dag: Dag, a) -> Value:
    """Row-major ``sem_forward``: each row ``h`` becomes ``(I - A^T)^{-1} h``."""
    a = as_value(a)
    out = Value(sem_forward(dag, a.data.T).T, (a,), "sem_solve")

    def _backward():
        _accum(a, sem_forward(dag, out.grad.T, transpose=True).T)

    out._backward = _backward
    return out


def sem_mul_rows(dag: Dag, a) -> Value:
    """Row-major ``sem_backward``: each row ``h`` becomes ``(I - A^T) h``."""
    a = as_value(a)
    out = Value(sem_backward(dag, a.data.T).T, (a,), "sem_mul")
    adj = dag.adjacency

    def _backward():
        g = out.grad
        _accum(a, g - g @ adj.T)

    out._backward = _backward
    return out


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState, lr: float | None = None) -> None:
    """One bias-corrected Adam update, in place on the arrays in ``params``."""
    lr = state.lr if lr is None else lr
    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    for name, p in params.items():
        g = grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


# Parameter file layout (plain text, one token stream per line):
#   dagsurv-params <version>
#   meta <single-line JSON object>
#   param <name> <rows> <cols>
#   <rows lines of <cols> space-separated floats, repr-formatted>
#   ... repeated per parameter, in insertion order
PARAMS_FORMAT_VERSION = 1


def save_params(path, params: dict, meta: dict | None = None) -> None:
    with open(path, "w") as fh:
        fh.write(f"dagsurv-params {PARAMS_FORMAT_VERSION}\n")
        fh.write("meta " + json.dumps(meta or {}, sort_keys=True) + "\n")
        for name, arr in params.items():
            arr = np.atleast_2d(np.asarray(arr, dtype=np.float64))
            if arr.ndim != 2 or " " in name:
                raise ValueError(f"cannot store parameter {name!r} with shape {arr.shape}")
            fh.write(f"param {name} {arr.shape[0]} {arr.shape[1]}\n")
            for row in arr:
                fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def load_params(path):
    """Return ``(params, meta)`` from a file written by :func:`save_params`."""
    path = Path(path)
    with open(path) as fh:
        lines = fh.read().split("\n")
    if not lines or not lines[0].startswith("dagsurv-params "):
        raise FormatError("not a dagsurv parameter file", path, 1)
    version = int(lines[0].split()[1])
    if version != PARAMS_FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}", path, 1)
    if len(lines) < 2 or not lines[1].startswith("meta "):
        raise FormatError("missing meta line", path, 2)
    meta = json.loads(lines[1][5:])
    params = {}
    i = 2
    while i < len(lines) and lines[i]:
        head = lines[i].split()
        if len(head) != 4 or head[0] != "param":
            raise FormatError(f"expected 'param <name> <rows> <cols>'", path, i + 1)
        name, r, c = head[1], int(head[2]), int(head[3])
        try:
            block = [[float(x) for x in lines[i + 1 + k].split()] for k in range(r)]
            arr = np.array(block, dtype=np.float64).reshape(r, c)
        except (ValueError, IndexError) as exc:
            raise FormatError(f"bad data for parameter {name!r}: {exc}", path, i + 2) from None
        params[name] = arr
        i += 1 + r
    return params, meta
