"""A small reverse-mode differentiation engine over dense float64 matrices.

Every value is a 2-D array; scalars are ``1 x 1``. Operations build a graph
of :class:`Tensor` nodes, and :func:`backward` linearizes that graph into a
:class:`Tape` in topological order before running the backward rules in
reverse. Nodes whose inputs need no gradient are recorded without a rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import NotScalar, NumericalError, ShapeError


def _check_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NumericalError(f"non-finite values in {what}")


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "op", "_parents", "_backward")

    def __init__(self, value, requires_grad: bool = False, *, op: str = "leaf",
                 parents: tuple = (), backward: Callable | None = None):
        value = np.array(value, dtype=np.float64)
        if value.ndim == 0:
            value = value.reshape(1, 1)
        elif value.ndim == 1:
            value = value.reshape(-1, 1)
        elif value.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got {value.ndim} dimensions")
        _check_finite(value, op)
        self.value = value
        self.grad = None
        self.requires_grad = requires_grad
        self.op = op
        self._parents = parents
        self._backward = backward

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    @property
    def rows(self) -> int:
        return self.value.shape[0]

    @property
    def cols(self) -> int:
        return self.value.shape[1]

    @property
    def is_leaf(self) -> bool:
        return not self._parents

    def item(self) -> float:
        if self.value.size != 1:
            raise NotScalar(f"tensor of shape {self.shape} is not a scalar")
        return float(self.value[0, 0])

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.value.copy())

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self.op!r}, requires_grad={self.requires_grad})"

    def __matmul__(self, other):
        return matmul(self, other)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, other)
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    @property
    def T(self):
        return transpose(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(value, op: str, parents: Sequence[Tensor], backward: Callable) -> Tensor:
    needs = any(p.requires_grad for p in parents)
    return Tensor(value, requires_grad=needs, op=op,
                  parents=tuple(parents) if needs else (),
                  backward=backward if needs else None)


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ")


# --- primitive operations ---------------------------------------------------

def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.cols != b.rows:
        raise ShapeError(f"matmul: inner dimensions {a.shape} x {b.shape} do not match")
    av, bv = a.value, b.value
    return _node(av @ bv, "matmul", (a, b), lambda g: (g @ bv.T, av.T @ g))


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "add")
    return _node(a.value + b.value, "add", (a, b), lambda g: (g, g))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "sub")
    return _node(a.value - b.value, "sub", (a, b), lambda g: (g, -g))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "mul")
    av, bv = a.value, b.value
    return _node(av * bv, "mul", (a, b), lambda g: (g * bv, g * av))


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    c = float(c)
    return _node(a.value * c, "scale", (a,), lambda g: (g * c,))


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.value > 0
    return _node(np.where(mask, a.value, 0.0), "relu", (a,), lambda g: (g * mask,))


_SIGMOID_LO = np.finfo(np.float64).tiny
_SIGMOID_HI = 1.0 - np.finfo(np.float64).epsneg


def sigmoid_values(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    # keep outputs strictly inside (0, 1) even where float64 would round to 0 or 1
    return np.clip(out, _SIGMOID_LO, _SIGMOID_HI)


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    s = sigmoid_values(a.value)
    return _node(s, "sigmoid", (a,), lambda g: (g * s * (1.0 - s),))


def log_clamped(a, lo: float = 1e-12, hi: float = 1.0 - 1e-12) -> Tensor:
    """Natural log after clamping into ``[lo, hi]``; no gradient where clamped."""
    a = as_tensor(a)
    clipped = np.clip(a.value, lo, hi)
    inside = (a.value >= lo) & (a.value <= hi)
    return _node(np.log(clipped), "log", (a,), lambda g: (g * inside / clipped,))


def transpose(a) -> Tensor:
    a = as_tensor(a)
    return _node(a.value.T.copy(), "transpose", (a,), lambda g: (g.T,))


def symmetrize(a) -> Tensor:
    a = as_tensor(a)
    if a.rows != a.cols:
        raise ShapeError(f"symmetrize needs a square matrix, got {a.shape}")
    return _node((a.value + a.value.T) / 2, "symmetrize", (a,), lambda g: ((g + g.T) / 2,))


def total(a) -> Tensor:
    a = as_tensor(a)
    shape = a.shape
    return _node(a.value.sum(), "sum", (a,), lambda g: (np.full(shape, g[0, 0]),))


def mse(a, b) -> Tensor:
    """Mean of squared differences over all entries."""
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "mse")
    diff = a.value - b.value
    count = diff.size

    def backward(g):
        ga = g[0, 0] * 2.0 * diff / count
        return ga, -ga

    return _node(np.mean(diff * diff), "mse", (a, b), backward)


def take_rows(a, indices) -> Tensor:
    a = as_tensor(a)
    idx = np.asarray(indices, dtype=np.intp)
    shape = a.shape

    def backward(g):
        out = np.zeros(shape)
        np.add.at(out, idx, g)
        return (out,)

    return _node(a.value[idx], "take_rows", (a,), backward)


def scatter_rows(a, indices, n_rows: int) -> Tensor:
    """Place row ``j`` of ``a`` at row ``indices[j]`` of an ``n_rows`` zero matrix."""
    a = as_tensor(a)
    idx = np.asarray(indices, dtype=np.intp)
    if idx.shape[0] != a.rows:
        raise ShapeError(f"scatter_rows: {idx.shape[0]} indices for {a.rows} rows")
    if idx.size and (idx.max() >= n_rows or idx.min() < 0):
        raise IndexError(f"row index out of range for {n_rows} rows")
    out = np.zeros((n_rows, a.cols))
    out[idx] = a.value
    return _node(out, "scatter_rows", (a,), lambda g: (g[idx],))


def block(a, r0: int, r1: int, c0: int, c1: int) -> Tensor:
    a = as_tensor(a)
    shape = a.shape

    def backward(g):
        out = np.zeros(shape)
        out[r0:r1, c0:c1] = g
        return (out,)

    return _node(a.value[r0:r1, c0:c1].copy(), "block", (a,), backward)


def flatten(a) -> Tensor:
    """Row-major flatten into a ``1 x (rows*cols)`` row vector."""
    a = as_tensor(a)
    shape = a.shape
    return _node(a.value.reshape(1, -1), "flatten", (a,), lambda g: (g.reshape(shape),))


def scale_rows(a, s) -> Tensor:
    """Multiply row ``i`` of ``a`` by ``s[i]`` where ``s`` is a column vector."""
    a, s = as_tensor(a), as_tensor(s)
    if s.shape != (a.rows, 1):
        raise ShapeError(f"scale_rows: factors {s.shape} for matrix {a.shape}")
    av, sv = a.value, s.value
    return _node(av * sv, "scale_rows", (a, s),
                 lambda g: (g * sv, (g * av).sum(axis=1, keepdims=True)))


def unit(a) -> Tensor:
    """``a / ||a||`` (Frobenius norm)."""
    a = as_tensor(a)
    norm = float(np.linalg.norm(a.value))
    if norm == 0.0:
        raise NumericalError("cannot normalize a zero tensor")
    u = a.value / norm

    def backward(g):
        return ((g - u * np.sum(g * u)) / norm,)

    return _node(u, "unit", (a,), backward)


def normalize_adjacency(a) -> Tensor:
    """Differentiable ``D^-1/2 (A + I) D^-1/2`` with absolute-weight degrees."""
    a = as_tensor(a)
    if a.rows != a.cols:
        raise ShapeError(f"normalize_adjacency needs a square matrix, got {a.shape}")
    a_hat = a.value + np.eye(a.rows)
    deg = np.abs(a_hat).sum(axis=1)
    if np.any(deg <= 0):
        raise NumericalError("zero degree in adjacency normalization")
    s = deg ** -0.5
    out = np.outer(s, s) * a_hat

    def backward(g):
        grad = g * s[:, None] * s[None, :]
        weighted = g * a_hat
        g_s = weighted @ s + weighted.T @ s
        g_deg = g_s * (-0.5) * deg ** -1.5
        grad += g_deg[:, None] * np.sign(a_hat)
        return (grad,)

    return _node(out, "normalize_adjacency", (a,), backward)


# --- tape and backward pass -------------------------------------------------

@dataclass
class TapeEntry:
    op: str
    inputs: tuple
    output: Tensor
    backward: Callable


@dataclass
class Tape:
    """Recorded operations in topological order, leaves excluded."""

    entries: list = field(default_factory=list)

    @classmethod
    def record(cls, output: Tensor) -> "Tape":
        order = []
        seen = set()
        stack = [(output, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        return cls([TapeEntry(n.op, n._parents, n, n._backward)
                    for n in order if not n.is_leaf])

    def __len__(self):
        return len(self.entries)

    def run_backward(self, seed: np.ndarray) -> None:
        if not self.entries:
            return
        grads = {id(self.entries[-1].output): seed}
        for entry in reversed(self.entries):
            g = grads.pop(id(entry.output), None)
            if g is None:
                continue
            for parent, pg in zip(entry.inputs, entry.backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                _check_finite(pg, f"gradient of {entry.op}")
                if parent.is_leaf:
                    parent.grad = pg.copy() if parent.grad is None else parent.grad + pg
                else:
                    key = id(parent)
                    grads[key] = pg if key not in grads else grads[key] + pg


def backward(loss: Tensor) -> None:
    """Accumulate ``d loss / d leaf`` into every leaf that requires a gradient."""
    if loss.value.size != 1:
        raise NotScalar(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    if loss.is_leaf:
        loss.grad = np.ones((1, 1)) if loss.grad is None else loss.grad + 1.0
        return
    Tape.record(loss).run_backward(np.ones((1, 1)))


# --- finite-difference verification -----------------------------------------

@dataclass
class GradCheckReport:
    max_rel_error: float
    tol: float
    per_tensor: list

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tol


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """``||a - n|| / max(||a||, ||n||)``; zero when both vanish."""
    denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    if denom < 1e-300:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / denom)


def numeric_gradient(f: Callable[[], Tensor], x: Tensor, eps: float = 1e-5) -> np.ndarray:
    """Central differences of the scalar ``f()`` with respect to ``x.value``."""
    grad = np.zeros(x.shape)
    flat = x.value.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = f().item()
        flat[i] = orig - eps
        lo = f().item()
        flat[i] = orig
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise NumericalError("non-finite value during finite differencing")
        out[i] = (hi - lo) / (2 * eps)
    return grad


def grad_check(f: Callable[[], Tensor], xs, eps: float = 1e-5, tol: float = 1e-4) -> GradCheckReport:
    """Compare analytic gradients of ``f()`` against central differences.

    ``xs`` is one tensor or a sequence of tensors; each is perturbed in place.
    """
    if isinstance(xs, Tensor):
        xs = [xs]
    for x in xs:
        x.zero_grad()
    loss = f()
    backward(loss)
    per_tensor = []
    for x in xs:
        analytic = x.grad if x.grad is not None else np.zeros(x.shape)
        per_tensor.append(relative_error(analytic, numeric_gradient(f, x, eps)))
    for x in xs:
        x.zero_grad()
    return GradCheckReport(max(per_tensor, default=0.0), tol, per_tensor)
