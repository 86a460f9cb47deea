"""Differentiable primitives.

Every function accepts numpy arrays, floats, or :class:`Tensor`. When no
argument is tracked on a tape the plain numpy result is returned (wrapped in a
detached Tensor only if a Tensor came in), so the same model code runs on the
fast numpy path and on the recording path.
"""
from __future__ import annotations

import numpy as np

from .tape import Tensor, TapeError


def _data(x):
    return x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)


def _tracked(x) -> bool:
    return isinstance(x, Tensor) and x.node is not None


def _wrap(value, *inputs):
    if any(isinstance(x, Tensor) for x in inputs):
        return Tensor(value)
    return value


def _tape_of(*inputs):
    tape = None
    for x in inputs:
        if _tracked(x):
            if tape is None:
                tape = x.tape
            elif x.tape is not tape:
                raise TapeError("inputs recorded on different tapes")
    return tape


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g.reshape(shape)


def _record(value, inputs, partials):
    """Record ``value`` with per-input cotangent maps for the tracked inputs."""
    tape = _tape_of(*inputs)
    if tape is None:
        return _wrap(value, *inputs)
    parents = [x for x in inputs if _tracked(x)]
    fns = [fn for x, fn in zip(inputs, partials) if _tracked(x)]

    def vjp(g):
        return [fn(g) for fn in fns]

    return tape.record(value, parents, vjp)


# elementwise binary -------------------------------------------------------

def add(a, b):
    ad, bd = _data(a), _data(b)
    out = ad + bd
    return _record(out, (a, b), (lambda g: _unbroadcast(g, ad.shape), lambda g: _unbroadcast(g, bd.shape)))


def sub(a, b):
    ad, bd = _data(a), _data(b)
    out = ad - bd
    return _record(out, (a, b), (lambda g: _unbroadcast(g, ad.shape), lambda g: _unbroadcast(-g, bd.shape)))


def mul(a, b):
    ad, bd = _data(a), _data(b)
    out = ad * bd
    return _record(out, (a, b), (lambda g: _unbroadcast(g * bd, ad.shape), lambda g: _unbroadcast(g * ad, bd.shape)))


def div(a, b):
    ad, bd = _data(a), _data(b)
    out = ad / bd
    return _record(
        out,
        (a, b),
        (lambda g: _unbroadcast(g / bd, ad.shape), lambda g: _unbroadcast(-g * out / bd, bd.shape)),
    )


# elementwise unary --------------------------------------------------------

def square(x):
    xd = _data(x)
    return _record(xd * xd, (x,), (lambda g: 2.0 * g * xd,))


def exp(x):
    out = np.exp(_data(x))
    return _record(out, (x,), (lambda g: g * out,))


def tanh(x):
    out = np.tanh(_data(x))
    return _record(out, (x,), (lambda g: g * (1.0 - out * out),))


def sin(x):
    xd = _data(x)
    return _record(np.sin(xd), (x,), (lambda g: g * np.cos(xd),))


def cos(x):
    xd = _data(x)
    return _record(np.cos(xd), (x,), (lambda g: -g * np.sin(xd),))


def arctan(x):
    xd = _data(x)
    return _record(np.arctan(xd), (x,), (lambda g: g / (1.0 + xd * xd),))


def elu(x):
    xd = _data(x)
    # e^min(x, 0) is also the derivative on both branches
    e = np.exp(np.minimum(xd, 0.0))
    out = e - 1.0
    np.maximum(out, xd, out=out)
    return _record(out, (x,), (lambda g: g * e,))


def clip(x, lo, hi):
    """Clamp; the gradient passes where the value is strictly inside."""
    xd = _data(x)
    out = np.clip(xd, lo, hi)
    inside = (xd > lo) & (xd < hi)
    return _record(out, (x,), (lambda g: g * inside,))


def where(mask, a, b):
    """Select from ``a`` where the constant ``mask`` holds, else from ``b``."""
    m = np.asarray(_data(mask), dtype=bool)
    ad, bd = _data(a), _data(b)
    out = np.where(m, ad, bd)
    return _record(
        out,
        (a, b),
        (lambda g: _unbroadcast(np.where(m, g, 0.0), ad.shape), lambda g: _unbroadcast(np.where(m, 0.0, g), bd.shape)),
    )


# reductions and shape -----------------------------------------------------

def sum(x, axis=None):
    xd = _data(x)
    out = np.sum(xd, axis=axis)

    def back(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return np.broadcast_to(g, xd.shape).copy()

    return _record(out, (x,), (back,))


def mean(x, axis=None):
    xd = _data(x)
    n = xd.size if axis is None else xd.shape[axis]
    return mul(sum(x, axis=axis), 1.0 / n)


def getitem(x, idx):
    xd = _data(x)
    out = xd[idx]

    def back(g):
        full = np.zeros_like(xd)
        full[idx] += g
        return full

    return _record(out, (x,), (back,))


def stack(xs, axis=0):
    datas = [_data(x) for x in xs]
    out = np.stack(datas, axis=axis)
    fns = [(lambda g, i=i: np.take(g, i, axis=axis)) for i in range(len(xs))]
    return _record(out, tuple(xs), tuple(fns))


def concat(xs, axis=-1):
    datas = [_data(x) for x in xs]
    out = np.concatenate(datas, axis=axis)
    bounds = np.cumsum([0] + [d.shape[axis] for d in datas])
    fns = []
    for i in range(len(xs)):
        lo, hi = bounds[i], bounds[i + 1]
        sl = [slice(None)] * out.ndim
        sl[axis] = slice(lo, hi)
        fns.append(lambda g, sl=tuple(sl): g[sl])
    return _record(out, tuple(xs), tuple(fns))


# linear algebra -----------------------------------------------------------

def matmul(a, b):
    ad, bd = _data(a), _data(b)
    out = ad @ bd
    return _record(out, (a, b), (lambda g: g @ bd.T, lambda g: ad.T @ g))


def linear(x, w, b):
    """``x @ w + b`` for a batch ``x`` of shape (N, in) as one node."""
    xd, wd, bd = _data(x), _data(w), _data(b)
    out = xd @ wd + bd
    return _record(
        out,
        (x, w, b),
        (lambda g: g @ wd.T, lambda g: xd.T @ g, lambda g: g.sum(axis=0)),
    )
