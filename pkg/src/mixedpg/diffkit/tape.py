"""Reverse-mode tape and the tensor type that records onto it.

A :class:`Tape` is a single-use recording of one scalar loss. Leaves are
created with :meth:`Tape.watch` (raw arrays) or :meth:`Tape.watch_params`
(whole networks); every primitive applied to a tracked tensor appends a node
holding its parents and a vector-Jacobian closure. :func:`backward` walks the
nodes once in reverse order.
"""
from __future__ import annotations

import threading
from typing import Callable, Sequence

import numpy as np


class TapeError(RuntimeError):
    pass


_local = threading.local()


def active_tape() -> "Tape | None":
    stack = getattr(_local, "stack", None)
    return stack[-1] if stack else None


class Tensor:
    """Dense float64 array, optionally tied to a node of a tape."""

    __slots__ = ("data", "node", "tape")
    # numpy must defer to our reflected operators
    __array_ufunc__ = None

    def __init__(self, data, node: int | None = None, tape: "Tape | None" = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.node = node
        self.tape = tape

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def tracked(self) -> bool:
        return self.node is not None

    def __len__(self) -> int:
        return len(self.data)

    def __repr__(self) -> str:
        tag = f"node={self.node}" if self.tracked else "detached"
        return f"Tensor(shape={self.shape}, {tag})"

    # arithmetic is implemented in functional; imported lazily to avoid a cycle
    def __add__(self, other):
        return _F().add(self, other)

    def __radd__(self, other):
        return _F().add(other, self)

    def __sub__(self, other):
        return _F().sub(self, other)

    def __rsub__(self, other):
        return _F().sub(other, self)

    def __mul__(self, other):
        return _F().mul(self, other)

    def __rmul__(self, other):
        return _F().mul(other, self)

    def __truediv__(self, other):
        return _F().div(self, other)

    def __rtruediv__(self, other):
        return _F().div(other, self)

    def __neg__(self):
        return _F().mul(self, -1.0)

    def __pow__(self, k):
        if k == 2:
            return _F().square(self)
        raise TapeError("only integer power 2 is supported")

    def __matmul__(self, other):
        return _F().matmul(self, other)

    def __rmatmul__(self, other):
        return _F().matmul(other, self)

    def __getitem__(self, idx):
        return _F().getitem(self, idx)


def _F():
    from . import functional

    return functional


VJP = Callable[[np.ndarray], Sequence[np.ndarray]]


class Tape:
    """Ordered record of primitive applications.

    Node ``i`` stores the node ids of its tracked parents and a closure
    mapping the output cotangent to one cotangent per tracked parent. Parents
    always precede children because ids are assigned on creation.
    """

    def __init__(self) -> None:
        self._parents: list[tuple[int, ...]] = []
        self._vjps: list[VJP | None] = []
        self._shapes: list[tuple[int, ...]] = []
        self._consumed = False

    def __len__(self) -> int:
        return len(self._parents)

    def __enter__(self) -> "Tape":
        if not hasattr(_local, "stack"):
            _local.stack = []
        _local.stack.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _local.stack.pop()

    def _check_open(self) -> None:
        if self._consumed:
            raise TapeError("tape already consumed by backward(); record a new one")

    def watch(self, array) -> Tensor:
        """Register ``array`` as a differentiable leaf."""
        self._check_open()
        arr = np.array(array, dtype=np.float64)
        node = len(self._parents)
        self._parents.append(())
        self._vjps.append(None)
        self._shapes.append(arr.shape)
        return Tensor(arr, node, self)

    def watch_params(self, params):
        """Return a copy of ``params`` whose arrays are leaves on this tape."""
        return params.map_arrays(self.watch)

    def record(self, value: np.ndarray, parents: Sequence[Tensor], vjp: VJP) -> Tensor:
        self._check_open()
        for p in parents:
            if p.tape is not self:
                raise TapeError("tensor from a different tape used in this recording")
        node = len(self._parents)
        self._parents.append(tuple(p.node for p in parents))
        self._vjps.append(vjp)
        self._shapes.append(np.shape(value))
        return Tensor(value, node, self)


def stop_gradient(t) -> Tensor:
    """Same values, no connection to any tape."""
    data = t.data if isinstance(t, Tensor) else t
    return Tensor(np.array(data, dtype=np.float64, copy=True))


def backward(tape: Tape, output: Tensor, wrt) -> list:
    """Gradient of scalar ``output`` with respect to each leaf in ``wrt``.

    ``wrt`` is a single leaf, a sequence of leaves, or a watched parameter
    set (anything with ``arrays()`` and ``map_arrays``); the return mirrors
    that structure. Leaves that are not ancestors of ``output`` get zeros.
    """
    if not isinstance(output, Tensor) or output.tape is not tape or output.node is None:
        raise TapeError("output is not recorded on this tape")
    if output.data.size != 1:
        raise TapeError(f"output must be scalar, got shape {output.shape}")
    tape._check_open()

    grads: list[np.ndarray | None] = [None] * (output.node + 1)
    grads[output.node] = np.ones_like(output.data)
    for i in range(output.node, -1, -1):
        g = grads[i]
        vjp = tape._vjps[i]
        if g is None or vjp is None:
            continue
        parent_grads = vjp(g)
        for p, pg in zip(tape._parents[i], parent_grads):
            if pg is None:
                continue
            if grads[p] is None:
                grads[p] = pg
            else:
                grads[p] = grads[p] + pg
        if i != output.node:
            grads[i] = None
    tape._consumed = True
    tape._vjps = []

    def leaf_grad(leaf: Tensor) -> np.ndarray:
        if leaf.tape is not tape or leaf.node is None:
            raise TapeError("requested gradient for a tensor not watched on this tape")
        if leaf.node < len(grads) and grads[leaf.node] is not None:
            return np.asarray(grads[leaf.node], dtype=np.float64).reshape(leaf.shape)
        return np.zeros(leaf.shape)

    if isinstance(wrt, Tensor):
        return leaf_grad(wrt)
    if hasattr(wrt, "map_arrays"):
        return wrt.map_arrays(leaf_grad)
    return [leaf_grad(w) for w in wrt]
