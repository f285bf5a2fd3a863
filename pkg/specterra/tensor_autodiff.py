#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
specterra: vocoder-free voice conversion on raw STFT magnitudes.

Reverse-mode automatic differentiation over numpy arrays, limited to the
operations the transformer needs. Every op checks its result for NaN and
infinity. Shapes are explicit: the only broadcasting is bias addition,
scalar ops, and constant masks/biases applied with add_const/mul_const.

    >>> x = Tensor([1.0, -2.0, 3.0], requires_grad=True)
    >>> loss = sum_all(square(x))
    >>> backward(loss)
    >>> x.grad.tolist()
    [2.0, -4.0, 6.0]

Copyright 2026 The specterra developers

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

   http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
"""
import threading
from contextlib import contextmanager

import numpy as np

from .errors import NumericError, ShapeError

_state = threading.local()


def is_grad_enabled():
    return getattr(_state, 'grad_enabled', True)


@contextmanager
def no_grad():
    """
    Within the block, ops record no graph. Per thread, so concurrent
    inference on a frozen model is unaffected by training elsewhere.
    """
    previous = is_grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


class Tensor(object):
    """
    An n-dimensional value that may take part in a gradient tape.
    """
    __slots__ = ('values', 'requires_grad', 'grad', 'op', '_parents', '_backward')

    def __init__(self, values, requires_grad=False, dtype=None):
        values = np.array(values, dtype=dtype if dtype is not None else None, copy=True)
        if values.dtype.kind != 'f':
            values = values.astype(np.float64)
        self.values = values
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.op = 'leaf'
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.values.shape

    @property
    def ndim(self):
        return self.values.ndim

    @property
    def dtype(self):
        return self.values.dtype

    @property
    def is_leaf(self):
        return not self._parents

    def numpy(self):
        return self.values

    def zero_grad(self):
        self.grad = None

    def backward(self):
        backward(self)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return mul_scalar(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul_scalar(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        return "Tensor(shape={0}, dtype={1}, op={2!r}, requires_grad={3})".format(
            self.shape, self.dtype, self.op, self.requires_grad)


def _check_finite(values, op):
    if not np.all(np.isfinite(values)):
        raise NumericError("{0}: non-finite result".format(op))


def _result(values, op, parents, backward_fn):
    """
    Wrap op output; record graph edges when some parent needs a gradient.
    backward_fn maps the output gradient to one gradient (or None) per
    parent.
    """
    _check_finite(values, op)
    track = is_grad_enabled() and any(p.requires_grad for p in parents)
    out = Tensor.__new__(Tensor)
    out.values = values
    out.requires_grad = track
    out.grad = None
    out.op = op
    out._parents = tuple(parents) if track else ()
    out._backward = backward_fn if track else None
    return out


def _same_shape(a, b, op):
    if a.shape != b.shape:
        raise ShapeError("{0}: shapes {1} and {2} differ".format(op, a.shape, b.shape))


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _const_for(x, c, op):
    c = np.asarray(c, dtype=x.dtype)
    try:
        shape = np.broadcast_shapes(x.shape, c.shape)
    except ValueError:
        shape = None
    if shape != x.shape:
        raise ShapeError("{0}: constant of shape {1} does not broadcast onto {2}".format(
            op, c.shape, x.shape))
    return c


def _sum_to(g, shape):
    """Reduce a broadcast gradient back onto shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# Elementwise and scalar ops

def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _same_shape(a, b, 'add')
    return _result(a.values + b.values, 'add', (a, b), lambda g: (g, g))


def sub(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _same_shape(a, b, 'sub')
    return _result(a.values - b.values, 'sub', (a, b), lambda g: (g, -g))


def mul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _same_shape(a, b, 'mul')
    av, bv = a.values, b.values
    return _result(av * bv, 'mul', (a, b), lambda g: (g * bv, g * av))


def mul_scalar(a, c):
    c = float(c)
    return _result(a.values * a.dtype.type(c), 'mul_scalar', (a,),
                   lambda g: (g * a.dtype.type(c),))


def add_bias(x, b):
    """x (..., n) plus bias b (n,)."""
    if b.ndim != 1 or x.shape[-1:] != b.shape:
        raise ShapeError("add_bias: bias {0} does not match {1}".format(b.shape, x.shape))
    lead = tuple(range(x.ndim - 1))
    return _result(x.values + b.values, 'add_bias', (x, b),
                   lambda g: (g, g.sum(axis=lead)))


def add_const(x, c):
    """x plus a constant array broadcastable onto x (no gradient to c)."""
    c = _const_for(x, c, 'add_const')
    return _result(x.values + c, 'add_const', (x,), lambda g: (g,))


def mul_const(x, c):
    """x times a constant array broadcastable onto x (no gradient to c)."""
    c = _const_for(x, c, 'mul_const')
    return _result(x.values * c, 'mul_const', (x,), lambda g: (g * c,))


def relu(x):
    positive = x.values > 0
    return _result(np.where(positive, x.values, 0).astype(x.dtype), 'relu', (x,),
                   lambda g: (g * positive,))


def abs_(x):
    sign = np.sign(x.values)
    return _result(np.abs(x.values), 'abs', (x,), lambda g: (g * sign,))


def square(x):
    xv = x.values
    return _result(xv * xv, 'square', (x,), lambda g: (2 * g * xv,))


def sum_all(x):
    """Sum of every element, as a 0-d tensor."""
    shape = x.shape
    return _result(np.asarray(x.values.sum(), dtype=x.dtype), 'sum_all', (x,),
                   lambda g: (np.broadcast_to(g, shape).astype(x.dtype),))


# Shape ops

def reshape(x, shape):
    shape = tuple(shape)
    old = x.shape
    try:
        values = x.values.reshape(shape)
    except ValueError:
        raise ShapeError("reshape: cannot reshape {0} to {1}".format(old, shape))
    return _result(values, 'reshape', (x,), lambda g: (g.reshape(old),))


def transpose(x, axes):
    axes = tuple(axes)
    if sorted(axes) != list(range(x.ndim)):
        raise ShapeError("transpose: {0} is not a permutation of {1} axes".format(axes, x.ndim))
    inverse = tuple(np.argsort(axes))
    return _result(np.transpose(x.values, axes), 'transpose', (x,),
                   lambda g: (np.transpose(g, inverse),))


# Linear algebra

def matmul(a, b):
    """
    Batched product over the last two axes; leading axes must match.
    """
    a, b = _as_tensor(a), _as_tensor(b)
    if (a.ndim < 2 or a.ndim != b.ndim or a.shape[:-2] != b.shape[:-2] or
            a.shape[-1] != b.shape[-2]):
        raise ShapeError("matmul: cannot multiply {0} by {1}".format(a.shape, b.shape))
    av, bv = a.values, b.values

    def grads(g):
        return (np.matmul(g, np.swapaxes(bv, -1, -2)),
                np.matmul(np.swapaxes(av, -1, -2), g))
    return _result(np.matmul(av, bv), 'matmul', (a, b), grads)


def linear(x, w, b=None):
    """
    x (..., n_in) times w (n_in, n_out), plus optional bias (n_out,).
    """
    if w.ndim != 2 or x.shape[-1] != w.shape[0]:
        raise ShapeError("linear: input {0} does not match weight {1}".format(x.shape, w.shape))
    if b is not None and b.shape != (w.shape[1],):
        raise ShapeError("linear: bias {0} does not match weight {1}".format(b.shape, w.shape))
    xv, wv = x.values, w.values
    flat = xv.reshape(-1, xv.shape[-1])
    out = np.matmul(xv, wv)
    if b is not None:
        out = out + b.values

    def grads(g):
        g2 = g.reshape(-1, g.shape[-1])
        gx = np.matmul(g, wv.T)
        gw = np.matmul(flat.T, g2)
        if b is None:
            return gx, gw
        return gx, gw, g2.sum(axis=0)
    parents = (x, w) if b is None else (x, w, b)
    return _result(out, 'linear', parents, grads)


# Normalization and attention pieces

def softmax_lastdim(x):
    """Softmax over the last axis, shifted by the row max."""
    shifted = x.values - x.values.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)

    def grads(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)
    return _result(y, 'softmax', (x,), grads)


def layer_norm(x, gain, bias, eps=1e-6):
    """
    Normalize over the last axis to zero mean and unit variance, then
    scale by gain and shift by bias (both (d,)).
    """
    d = x.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise ShapeError("layer_norm: gain {0} / bias {1} do not match {2}".format(
            gain.shape, bias.shape, x.shape))
    xv = x.values
    mu = xv.mean(axis=-1, keepdims=True)
    centered = xv - mu
    var = (centered ** 2).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + x.dtype.type(eps))
    xhat = centered * inv_std
    lead = tuple(range(x.ndim - 1))
    gv = gain.values

    def grads(g):
        dxhat = g * gv
        dx = (inv_std / d) * (
            d * dxhat
            - dxhat.sum(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True))
        return dx, (g * xhat).sum(axis=lead), g.sum(axis=lead)
    return _result(xhat * gv + bias.values, 'layer_norm', (x, gain, bias), grads)


def dropout(x, rate, training, rng):
    """
    Inverted dropout: zero each element with probability rate and scale
    the survivors by 1/(1 - rate). The identity when not training.
    """
    if not training or rate == 0:
        return x
    if not 0 <= rate < 1:
        raise ValueError("dropout: rate must lie in [0, 1), got {0}".format(rate))
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / x.dtype.type(1.0 - rate)
    return mul_const(x, keep)


# Backward pass

class Tape(object):
    """
    The executed ops reachable from a root, in topological order (every
    node after all of its inputs).
    """
    __slots__ = ('nodes',)

    def __init__(self, nodes):
        self.nodes = nodes

    @classmethod
    def from_root(cls, root):
        order = []
        seen = set()
        stack = [(root, False)]
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
        return cls(order)

    def __len__(self):
        return len(self.nodes)

    def run(self, root, seed):
        """
        Propagate seed from root back to the leaves, visiting each node
        once. Leaf gradients accumulate into .grad.
        """
        pending = {id(root): seed}
        for node in reversed(self.nodes):
            g = pending.pop(id(node), None)
            if g is None:
                continue
            _check_finite(g, 'backward through ' + node.op)
            if node.is_leaf:
                if node.requires_grad:
                    node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                pg = np.asarray(pg, dtype=parent.dtype)
                if pg.shape != parent.shape:
                    pg = _sum_to(pg, parent.shape)
                key = id(parent)
                pending[key] = pg if key not in pending else pending[key] + pg


def backward(loss):
    """
    Populate .grad on every requires_grad leaf that loss depends on.
    :raises ShapeError: loss is not a single element
    """
    if loss.values.size != 1:
        raise ShapeError("backward: loss must be a scalar, got shape {0}".format(loss.shape))
    if not loss.requires_grad:
        return
    seed = np.ones(loss.shape, dtype=loss.dtype)
    Tape.from_root(loss).run(loss, seed)
