"""Two-hidden-layer ELU networks used for policies and critics."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import functional as F
from .tape import Tensor


class ShapeError(ValueError):
    pass


@dataclass
class MlpParams:
    """Weights and biases of an input -> hidden... -> output network.

    ``weights[i]`` has shape (fan_in, fan_out). Entries may be numpy arrays
    (frozen when applied) or tape leaves (after :meth:`Tape.watch_params`).
    ``in_scale`` multiplies the input before the first layer; ``out_scale``
    multiplies the tanh-squashed output when ``output == "tanh"``.
    """

    weights: list
    biases: list
    output: str = "linear"
    in_scale: np.ndarray | None = None
    out_scale: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def init(
        cls,
        rng: np.random.Generator,
        in_dim: int,
        out_dim: int,
        hidden: tuple[int, ...] = (256, 256),
        output: str = "linear",
        in_scale=None,
        out_scale=None,
    ) -> "MlpParams":
        sizes = [in_dim, *hidden, out_dim]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(
            weights,
            biases,
            output=output,
            in_scale=None if in_scale is None else np.asarray(in_scale, dtype=np.float64),
            out_scale=None if out_scale is None else np.asarray(out_scale, dtype=np.float64),
        )

    @property
    def in_dim(self) -> int:
        return int(np.shape(_raw(self.weights[0]))[0])

    @property
    def out_dim(self) -> int:
        return int(np.shape(_raw(self.weights[-1]))[1])

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def arrays(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def map_arrays(self, fn: Callable) -> "MlpParams":
        return MlpParams(
            [fn(w) for w in self.weights],
            [fn(b) for b in self.biases],
            self.output,
            self.in_scale,
            self.out_scale,
            dict(self.meta),
        )

    def copy(self) -> "MlpParams":
        return self.map_arrays(lambda a: np.array(_raw(a), dtype=np.float64, copy=True))

    def shapes(self) -> list[tuple[int, ...]]:
        return [tuple(np.shape(_raw(a))) for a in self.arrays()]

    def n_params(self) -> int:
        return int(sum(int(np.prod(s)) for s in self.shapes()))

    def to_flat(self) -> np.ndarray:
        return np.concatenate([np.ravel(_raw(a)) for a in self.arrays()])

    def from_flat(self, vec: np.ndarray) -> "MlpParams":
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != self.n_params():
            raise ShapeError(f"flat vector has {vec.size} entries, network needs {self.n_params()}")
        arrays, pos = [], 0
        for shape in self.shapes():
            n = int(np.prod(shape))
            arrays.append(vec[pos:pos + n].reshape(shape).copy())
            pos += n
        return MlpParams(arrays[0::2], arrays[1::2], self.output, self.in_scale, self.out_scale, dict(self.meta))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(_raw(a))) for a in self.arrays())


def _raw(a):
    return a.data if isinstance(a, Tensor) else a


def forward_mlp(params: MlpParams, x):
    """Apply the network to a batch ``x`` of shape (N, in_dim).

    Hidden layers use ELU. Parameters given as numpy arrays act as constants,
    so passing unwatched params realizes a frozen-parameter application whose
    input Jacobian is still recorded when ``x`` is tracked.
    """
    xd = x.data if isinstance(x, Tensor) else np.asarray(x)
    if xd.ndim != 2:
        raise ShapeError(f"input must be (batch, features), got shape {xd.shape}")
    h = x
    if params.in_scale is not None:
        h = F.mul(h, params.in_scale)
    last = params.n_layers - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        fan_in = np.shape(_raw(w))[0]
        width = np.shape(_raw(h))[1]
        if width != fan_in:
            raise ShapeError(f"layer {i}: input width {width} does not match weight shape {np.shape(_raw(w))}")
        h = F.linear(h, w, b)
        if i < last:
            h = F.elu(h)
    if params.output == "tanh":
        h = F.tanh(h)
        if params.out_scale is not None:
            h = F.mul(h, params.out_scale)
    elif params.output != "linear":
        raise ValueError(f"unknown output activation {params.output!r}")
    return h


def polyak_update(target: MlpParams, online: MlpParams, tau: float) -> MlpParams:
    """In-place ``target <- tau * online + (1 - tau) * target``.

    Written as ``target += tau * (online - target)`` so equal networks stay
    bitwise equal.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    if target.shapes() != online.shapes():
        raise ShapeError(f"target shapes {target.shapes()} differ from online {online.shapes()}")
    for t, o in zip(target.arrays(), online.arrays()):
        if tau == 1.0:
            t[...] = _raw(o)
        else:
            t += tau * (_raw(o) - t)
    return target
