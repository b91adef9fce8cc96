"""Minimal reverse-mode autodiff over numpy arrays.

A ``Tensor`` wraps a float64 array and records the op that produced it;
``backward`` walks the tape once and accumulates gradients into every
reachable leaf, so one loss evaluation costs one forward plus one reverse
sweep regardless of parameter count. Anything that is not a Tensor
(plain arrays, scalars) enters ops as a constant and receives no
gradient, which is how stop-gradient is expressed: run the stopped branch
in plain numpy.

The helper functions at the bottom (``tanh``, ``matmul``, ``sum_`` ...)
dispatch on type, so model code written against them runs identically on
Tensors (training) and on raw arrays (evaluation, finite differencing).
"""

from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcasted gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, dim in enumerate(shape):
        if dim == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    # numpy must not try to handle mixed ndarray/Tensor ufuncs itself
    __array_ufunc__ = None

    __slots__ = ("data", "grad", "_parents", "_backward")

    def __init__(self, data, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self._parents = tuple(parents)
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self, seed=None):
        """Accumulate d(self)/d(leaf) into every reachable leaf's ``.grad``."""
        topo = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        self._accumulate(np.ones_like(self.data) if seed is None else seed)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- operators -------------------------------------------------------

    def __add__(self, other):
        a, b = self, other
        if isinstance(b, Tensor):
            out = Tensor(a.data + b.data, (a, b))

            def back(g):
                a._accumulate(_unbroadcast(g, a.shape))
                b._accumulate(_unbroadcast(g, b.shape))
        else:
            out = Tensor(a.data + b, (a,))

            def back(g):
                a._accumulate(_unbroadcast(g, a.shape))
        out._backward = back
        return out

    __radd__ = __add__

    def __neg__(self):
        a = self
        out = Tensor(-a.data, (a,))
        out._backward = lambda g: a._accumulate(-g)
        return out

    def __sub__(self, other):
        return self + (-other if isinstance(other, Tensor) else -np.asarray(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b = self, other
        if isinstance(b, Tensor):
            out = Tensor(a.data * b.data, (a, b))

            def back(g):
                a._accumulate(_unbroadcast(g * b.data, a.shape))
                b._accumulate(_unbroadcast(g * a.data, b.shape))
        else:
            b = np.asarray(b)
            out = Tensor(a.data * b, (a,))

            def back(g):
                a._accumulate(_unbroadcast(g * b, a.shape))
        out._backward = back
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        a, b = self, other
        if isinstance(b, Tensor):
            out = Tensor(a.data / b.data, (a, b))

            def back(g):
                a._accumulate(_unbroadcast(g / b.data, a.shape))
                b._accumulate(_unbroadcast(-g * a.data / (b.data * b.data), b.shape))
        else:
            b = np.asarray(b)
            out = Tensor(a.data / b, (a,))

            def back(g):
                a._accumulate(_unbroadcast(g / b, a.shape))
        out._backward = back
        return out

    def __matmul__(self, other):
        a, b = self, other
        bdata = b.data if isinstance(b, Tensor) else np.asarray(b)
        out_parents = (a, b) if isinstance(b, Tensor) else (a,)
        out = Tensor(a.data @ bdata, out_parents)

        def back(g):
            a._accumulate(_unbroadcast(g @ bdata.swapaxes(-1, -2), a.shape))
            if isinstance(b, Tensor):
                b._accumulate(_unbroadcast(a.data.swapaxes(-1, -2) @ g, b.shape))
        out._backward = back
        return out

    def __rmatmul__(self, other):
        a, b = np.asarray(other), self
        out = Tensor(a @ b.data, (b,))
        out._backward = lambda g: b._accumulate(
            _unbroadcast(a.swapaxes(-1, -2) @ g, b.shape)
        )
        return out


# -- unary / reduction primitives ---------------------------------------


def _tensor_tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    out = Tensor(y, (a,))
    out._backward = lambda g: a._accumulate(g * (1.0 - y * y))
    return out


def _tensor_exp(a: Tensor) -> Tensor:
    y = np.exp(a.data)
    out = Tensor(y, (a,))
    out._backward = lambda g: a._accumulate(g * y)
    return out


def _tensor_log(a: Tensor) -> Tensor:
    out = Tensor(np.log(a.data), (a,))
    out._backward = lambda g: a._accumulate(g / a.data)
    return out


def _tensor_abs(a: Tensor) -> Tensor:
    out = Tensor(np.abs(a.data), (a,))
    out._backward = lambda g: a._accumulate(g * np.sign(a.data))
    return out


def _tensor_sum(a: Tensor, axis=None, keepdims=False) -> Tensor:
    out = Tensor(a.data.sum(axis=axis, keepdims=keepdims), (a,))

    def back(g):
        if axis is None:
            a._accumulate(np.broadcast_to(g, a.shape).copy())
            return
        if not keepdims:
            g = np.expand_dims(g, axis)
        a._accumulate(np.broadcast_to(g, a.shape).copy())
    out._backward = back
    return out


def _tensor_amax(a: Tensor, axis=None, keepdims=False) -> Tensor:
    y = a.data.max(axis=axis, keepdims=True)
    hit = (a.data == y).astype(np.float64)
    hit /= hit.sum(axis=axis, keepdims=True)  # ties share the subgradient
    y_out = y if keepdims or axis is None else np.squeeze(y, axis)
    if axis is None and not keepdims:
        y_out = a.data.max()
    out = Tensor(y_out, (a,))

    def back(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a._accumulate(hit * g)
    out._backward = back
    return out


def _tensor_reshape(a: Tensor, shape) -> Tensor:
    out = Tensor(a.data.reshape(shape), (a,))
    out._backward = lambda g: a._accumulate(g.reshape(a.shape))
    return out


def _tensor_swap_last(a: Tensor) -> Tensor:
    out = Tensor(a.data.swapaxes(-1, -2), (a,))
    out._backward = lambda g: a._accumulate(g.swapaxes(-1, -2))
    return out


def _tensor_take_rows(table: Tensor, idx: np.ndarray) -> Tensor:
    idx = np.asarray(idx)
    out = Tensor(table.data[idx], (table,))

    def back(g):
        buf = np.zeros_like(table.data)
        np.add.at(buf, idx, g)
        table._accumulate(buf)
    out._backward = back
    return out


# -- type-dispatching helpers (Tensor or ndarray) ------------------------


def tanh(x):
    return _tensor_tanh(x) if isinstance(x, Tensor) else np.tanh(x)


def exp(x):
    return _tensor_exp(x) if isinstance(x, Tensor) else np.exp(x)


def log(x):
    return _tensor_log(x) if isinstance(x, Tensor) else np.log(x)


def absolute(x):
    return _tensor_abs(x) if isinstance(x, Tensor) else np.abs(x)


def sum_(x, axis=None, keepdims=False):
    if isinstance(x, Tensor):
        return _tensor_sum(x, axis=axis, keepdims=keepdims)
    return np.sum(x, axis=axis, keepdims=keepdims)


def amax(x, axis=None, keepdims=False):
    if isinstance(x, Tensor):
        return _tensor_amax(x, axis=axis, keepdims=keepdims)
    return np.max(x, axis=axis, keepdims=keepdims)


def reshape(x, shape):
    return _tensor_reshape(x, shape) if isinstance(x, Tensor) else np.reshape(x, shape)


def swap_last(x):
    return _tensor_swap_last(x) if isinstance(x, Tensor) else x.swapaxes(-1, -2)


def take_rows(table, idx):
    if isinstance(table, Tensor):
        return _tensor_take_rows(table, idx)
    return table[np.asarray(idx)]


def mean_(x, axis=None, keepdims=False):
    if isinstance(x, Tensor):
        n = x.data.size if axis is None else x.shape[axis]
        return sum_(x, axis=axis, keepdims=keepdims) * (1.0 / n)
    return np.mean(x, axis=axis, keepdims=keepdims)


def log_softmax(x, axis=-1):
    if isinstance(x, Tensor):
        shift = x - np.max(x.data, axis=axis, keepdims=True)
        return shift - log(sum_(exp(shift), axis=axis, keepdims=True))
    shift = x - np.max(x, axis=axis, keepdims=True)
    return shift - np.log(np.sum(np.exp(shift), axis=axis, keepdims=True))


def softmax(x, axis=-1):
    if isinstance(x, Tensor):
        e = exp(x - np.max(x.data, axis=axis, keepdims=True))
        return e / sum_(e, axis=axis, keepdims=True)
    e = np.exp(x - np.max(x, axis=axis, keepdims=True))
    return e / np.sum(e, axis=axis, keepdims=True)


def value(x) -> np.ndarray:
    """Underlying array of a Tensor, or the array itself."""
    return x.data if isinstance(x, Tensor) else np.asarray(x)
