"""Minimal reverse-mode automatic differentiation on numpy arrays.

A Tensor wraps an ndarray and remembers how it was produced; calling
``backward()`` on a scalar cost walks the tape in reverse topological order
and accumulates gradients into the leaf parameters.  Only the primitives the
mapping networks need are implemented; each backward rule handles numpy
broadcasting by summing gradients over broadcast axes.
"""

import numpy as np

from .errors import NumericalError


def _unbroadcast(grad, shape):
    """Sum a gradient down to the shape the operand had before broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, (g, s) in enumerate(zip(grad.shape, shape)):
        if s == 1 and g != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, parents=(), backward=None):
        self.data = np.asarray(data, dtype=float)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    def backward(self):
        if self.data.size != 1:
            raise NumericalError("backward() expects a scalar cost tensor")
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def _accumulate(self, grad):
        if self.grad is None:
            self.grad = grad.copy()
        else:
            self.grad += grad

    # operator sugar -------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, neg(_as_tensor(other)))

    def __rsub__(self, other):
        return add(neg(self), other)

    def __neg__(self):
        return neg(self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def param(data):
    return Tensor(np.array(data, dtype=float), requires_grad=True)


def const(data):
    return Tensor(data)


def _make(data, parents, backward):
    if any(p.requires_grad for p in parents):
        return Tensor(data, parents=parents, backward=backward)
    return Tensor(data)


def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data + b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.shape))

    return _make(out_data, (a, b), backward)


def neg(a):
    a = _as_tensor(a)

    def backward(g):
        if a.requires_grad:
            a._accumulate(-g)

    return _make(-a.data, (a,), backward)


def mul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data * b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.shape))

    return _make(out_data, (a, b), backward)


def matmul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = np.matmul(a.data, b.data)

    def backward(g):
        if a.requires_grad:
            ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
            a._accumulate(_unbroadcast(ga, a.shape))
        if b.requires_grad:
            gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
            b._accumulate(_unbroadcast(gb, b.shape))

    return _make(out_data, (a, b), backward)


def tanh(a):
    a = _as_tensor(a)
    out_data = np.tanh(a.data)

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * (1.0 - out_data**2))

    return _make(out_data, (a,), backward)


def exp(a):
    a = _as_tensor(a)
    out_data = np.exp(a.data)

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * out_data)

    return _make(out_data, (a,), backward)


def absolute(a):
    a = _as_tensor(a)

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * np.sign(a.data))

    return _make(np.abs(a.data), (a,), backward)


def tsum(a, axis=None, keepdims=False):
    a = _as_tensor(a)
    out_data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if not a.requires_grad:
            return
        if axis is None:
            a._accumulate(np.broadcast_to(g, a.shape).copy())
        else:
            gg = g if keepdims else np.expand_dims(g, axis)
            a._accumulate(np.broadcast_to(gg, a.shape).copy())

    return _make(out_data, (a,), backward)


def tmean(a, axis=None, keepdims=False):
    a = _as_tensor(a)
    n = a.data.size if axis is None else a.data.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def vnorm(a, eps=1e-12):
    """Row norms over the last axis with a guarded gradient at zero."""
    a = _as_tensor(a)
    n = np.linalg.norm(a.data, axis=-1)

    def backward(g):
        if a.requires_grad:
            scale = g / np.maximum(n, eps)
            a._accumulate(scale[..., None] * a.data)

    return _make(n, (a,), backward)


def huber_norm(a, delta):
    """Row norms smoothed to a quadratic inside ``delta``.

    Value is n^2/(2 delta) for n < delta and n - delta/2 beyond, so the
    gradient a / max(n, delta) is continuous and vanishes at zero instead of
    turning into unit-magnitude direction noise.
    """
    a = _as_tensor(a)
    n = np.linalg.norm(a.data, axis=-1)
    out_data = np.where(n < delta, n * n / (2.0 * delta), n - delta / 2.0)

    def backward(g):
        if a.requires_grad:
            scale = g / np.maximum(n, delta)
            a._accumulate(scale[..., None] * a.data)

    return _make(out_data, (a,), backward)


def getcols(a, idx):
    a = _as_tensor(a)
    idx = list(idx)

    def backward(g):
        if a.requires_grad:
            full = np.zeros(a.shape)
            full[..., idx] = g
            a._accumulate(full)

    return _make(a.data[..., idx], (a,), backward)


def putcols(blocks, width):
    """Assemble (..., width) from (column-indices, tensor) blocks."""
    tensors = [_as_tensor(t) for _, t in blocks]
    lead = tensors[0].data.shape[:-1]
    out_data = np.zeros(lead + (width,))
    for (idx, _), t in zip(blocks, tensors):
        out_data[..., list(idx)] = t.data

    def backward(g):
        for (idx, _), t in zip(blocks, tensors):
            if t.requires_grad:
                t._accumulate(g[..., list(idx)])

    return _make(out_data, tuple(tensors), backward)


def take(a, indices, axis):
    """Select indices along an axis (scalar index drops the axis)."""
    a = _as_tensor(a)
    scalar = isinstance(indices, (int, np.integer))
    idx = indices if scalar else list(indices)
    out_data = np.take(a.data, idx, axis=axis)

    def backward(g):
        if not a.requires_grad:
            return
        full = np.zeros(a.shape)
        sl = [slice(None)] * full.ndim
        sl[axis] = idx
        full[tuple(sl)] = g
        a._accumulate(full)

    return _make(out_data, (a,), backward)


def stack(tensors, axis):
    tensors = [_as_tensor(t) for t in tensors]
    out_data = np.stack([t.data for t in tensors], axis=axis)

    def backward(g):
        for i, t in enumerate(tensors):
            if t.requires_grad:
                t._accumulate(np.take(g, i, axis=axis))

    return _make(out_data, tuple(tensors), backward)


def transpose(a):
    a = _as_tensor(a)

    def backward(g):
        if a.requires_grad:
            a._accumulate(g.T)

    return _make(a.data.T, (a,), backward)


def unsqueeze(a, axis):
    a = _as_tensor(a)

    def backward(g):
        if a.requires_grad:
            a._accumulate(np.squeeze(g, axis=axis))

    return _make(np.expand_dims(a.data, axis), (a,), backward)


class Adam:
    """First-order optimizer with adaptive moment estimates."""

    def __init__(self, params, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        self.t += 1
        for i, p in enumerate(self.params):
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g**2
            m_hat = self.m[i] / (1.0 - self.beta1**self.t)
            v_hat = self.v[i] / (1.0 - self.beta2**self.t)
            p.data -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)
