"""Dense network substrate: layers, activations, exact reverse-mode gradients.

Only sequential stacks of fully-connected layers are supported; that is all
the agents and the attention evaluator need.  Everything is float64 and
deterministic: the same parameters and input produce bitwise-identical output.
"""

from enum import IntEnum

import numpy as np

from . import backend
from .params import ParamVector


class Activation(IntEnum):
    IDENTITY = 0
    TANH = 1
    SOFTPLUS = 2
    RELU = 3


ACT_BY_NAME = {a.name.lower(): a for a in Activation}


def glorot_uniform(rng, in_dim, out_dim):
    """Scale-aware uniform init in [-sqrt(6/(in+out)), +sqrt(6/(in+out))]."""
    limit = np.sqrt(6.0 / (in_dim + out_dim))
    return rng.uniform(-limit, limit, size=(in_dim, out_dim))


class DenseLayer:
    """One affine map plus activation; W and b are views into the owning
    network's ParamVector."""

    def __init__(self, index, in_dim, out_dim, activation, pv):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.activation = Activation(activation)
        self.w_name = f"layer{index}.W"
        self.b_name = f"layer{index}.b"
        self.W = pv.view(self.w_name)
        self.b = pv.view(self.b_name)
        self.gW = pv.grad_view(self.w_name)
        self.gb = pv.grad_view(self.b_name)


def _as_batch(x, in_dim, what="input"):
    x = np.ascontiguousarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != in_dim:
        raise ValueError(
            f"{what} has shape {x.shape if not single else (x.shape[1],)}, "
            f"expected trailing dimension {in_dim}"
        )
    return x, single


class MLP:
    """Sequential dense stack with cached forward state for backprop.

    `sizes` is [in, h1, ..., out]; `activations` has one entry per layer.
    forward() accepts a single vector or a (batch, in) matrix; backward()
    takes the upstream gradient of a scalar loss w.r.t. the output and
    accumulates parameter gradients into the ParamVector.
    """

    def __init__(self, sizes, activations, rng=None, name="mlp"):
        if len(activations) != len(sizes) - 1:
            raise ValueError("need exactly one activation per layer")
        self.name = name
        self.sizes = [int(s) for s in sizes]
        self.activations = [Activation(a) for a in activations]
        specs = []
        for i in range(len(sizes) - 1):
            specs.append((f"layer{i}.W", (sizes[i], sizes[i + 1])))
            specs.append((f"layer{i}.b", (sizes[i + 1],)))
        self.pv = ParamVector(specs)
        self.layers = [
            DenseLayer(i, sizes[i], sizes[i + 1], self.activations[i], self.pv)
            for i in range(len(sizes) - 1)
        ]
        if rng is not None:
            self.init_params(rng)
        self._cache = None

    @property
    def in_dim(self):
        return self.sizes[0]

    @property
    def out_dim(self):
        return self.sizes[-1]

    def init_params(self, rng):
        """Glorot-uniform weights, zero biases."""
        for layer in self.layers:
            layer.W[:] = glorot_uniform(rng, layer.in_dim, layer.out_dim)
            layer.b[:] = 0.0

    def forward(self, x):
        x2, single = _as_batch(x, self.in_dim, f"{self.name} input")
        posts, pres = backend.active().stack_forward(
            [l.W for l in self.layers],
            [l.b for l in self.layers],
            [int(a) for a in self.activations],
            x2,
        )
        self._cache = (x2, posts, pres, single)
        return posts[-1][0] if single else posts[-1]

    def backward(self, d_out):
        """Backprop a cached forward pass; returns dLoss/dx."""
        if self._cache is None:
            raise RuntimeError(f"{self.name}: backward without cached forward activations")
        x2, posts, pres, single = self._cache
        d2, d_single = _as_batch(d_out, self.out_dim, f"{self.name} output gradient")
        if d_single != single or d2.shape[0] != x2.shape[0]:
            raise ValueError(
                f"{self.name}: output gradient batch {d2.shape} does not match "
                f"cached forward batch {posts[-1].shape}"
            )
        d_x = backend.active().stack_backward(
            [l.W for l in self.layers],
            [int(a) for a in self.activations],
            x2,
            posts,
            pres,
            d2,
            [l.gW for l in self.layers],
            [l.gb for l in self.layers],
        )
        return d_x[0] if single else d_x

    def clone(self):
        other = MLP(self.sizes, self.activations, rng=None, name=self.name)
        other.pv.copy_data_from(self.pv)
        return other

    def arch_meta(self):
        return {
            "sizes": self.sizes,
            "activations": [a.name.lower() for a in self.activations],
            "name": self.name,
        }

    @classmethod
    def from_meta(cls, meta):
        return cls(
            meta["sizes"],
            [ACT_BY_NAME[a] for a in meta["activations"]],
            name=meta.get("name", "mlp"),
        )
