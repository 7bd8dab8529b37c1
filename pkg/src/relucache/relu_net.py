"""Fully-connected scalar-input ReLU networks.

A network is a list of hidden layers followed by one affine output unit.
Each hidden unit applies either ``relu`` or the identity to its affine
pre-activation.  Layers are stored densely (absent connections are zeros),
which is what weight counting against the standard architecture needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels
from .errors import DomainError, StructureError

__all__ = [
    "RELU",
    "LINEAR",
    "Unit",
    "Layer",
    "Network",
    "StandardShape",
    "ValidationReport",
    "forward",
    "weight_count",
    "standard_weight_count",
    "validate_standard",
]

RELU = "relu"
LINEAR = "linear"
FORMAT = "relucache-network/1"


@dataclass(frozen=True)
class Unit:
    weights: tuple[float, ...]
    bias: float
    mode: str = RELU

    def __post_init__(self):
        if self.mode not in (RELU, LINEAR):
            raise StructureError(f"unknown activation mode {self.mode!r}")


class Layer:
    """One hidden layer: weights (width, previous width), biases, relu mask."""

    __slots__ = ("weights", "bias", "relu")

    def __init__(self, weights, bias, relu):
        W = np.array(weights, dtype=float, ndmin=2)
        b = np.array(bias, dtype=float).reshape(-1)
        r = np.array(relu, dtype=bool).reshape(-1)
        if W.shape[0] != b.shape[0] or r.shape[0] != b.shape[0]:
            raise StructureError(
                f"layer has {W.shape[0]} weight rows, {b.shape[0]} biases "
                f"and {r.shape[0]} modes")
        for a in (W, b, r):
            a.setflags(write=False)
        self.weights, self.bias, self.relu = W, b, r

    @property
    def width(self) -> int:
        return self.bias.shape[0]

    @property
    def fan_in(self) -> int:
        return self.weights.shape[1]

    def units(self) -> list[Unit]:
        return [Unit(tuple(self.weights[k]), float(self.bias[k]),
                     RELU if self.relu[k] else LINEAR) for k in range(self.width)]

    @classmethod
    def from_units(cls, units: list[Unit]) -> "Layer":
        if not units:
            raise StructureError("empty layer")
        n = {len(u.weights) for u in units}
        if len(n) != 1:
            raise StructureError("units in a layer must share the fan-in")
        return cls([u.weights for u in units], [u.bias for u in units],
                   [u.mode == RELU for u in units])


@dataclass(eq=False)
class Network:
    """Scalar-input network with a single linear output unit.

    ``identity_regime`` marks nets whose linear hidden units stand in for
    ReLU units operating in their identity regime.
    """

    layers: list[Layer]
    output_weights: np.ndarray
    output_bias: float
    input_width: int = 1
    identity_regime: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.input_width != 1:
            raise StructureError("only scalar-input networks are supported")
        if not self.layers:
            raise StructureError("a network needs at least one hidden layer")
        prev = self.input_width
        for idx, layer in enumerate(self.layers):
            if layer.fan_in != prev:
                raise StructureError(
                    f"layer {idx} expects {layer.fan_in} inputs, previous width is {prev}")
            prev = layer.width
        self.output_weights = np.array(self.output_weights, dtype=float).reshape(-1)
        if self.output_weights.shape[0] != prev:
            raise StructureError(
                f"output unit has {self.output_weights.shape[0]} weights, "
                f"last hidden width is {prev}")
        self.output_bias = float(self.output_bias)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def widths(self) -> list[int]:
        return [layer.width for layer in self.layers]

    @cached_property
    def packed(self):
        """Layers padded to a common width M: (W, b, relu, w_out)."""
        M = max(self.widths)
        L = self.depth
        W = np.zeros((L, M, M))
        b = np.zeros((L, M))
        r = np.zeros((L, M), dtype=np.uint8)
        for l, layer in enumerate(self.layers):
            W[l, :layer.width, :layer.fan_in] = layer.weights
            b[l, :layer.width] = layer.bias
            r[l, :layer.width] = layer.relu
        w_out = np.zeros(M)
        w_out[:self.output_weights.shape[0]] = self.output_weights
        return W, b, r, w_out

    def __call__(self, x):
        return forward(self, x)

    def to_dict(self) -> dict:
        def unit(u: Unit) -> dict:
            return {"mode": u.mode, "bias": float.hex(u.bias),
                    "weights": [float.hex(float(w)) for w in u.weights]}

        return {
            "format": FORMAT,
            "input_width": self.input_width,
            "identity_regime": self.identity_regime,
            "layers": [[unit(u) for u in layer.units()] for layer in self.layers],
            "output": {"bias": float.hex(self.output_bias),
                       "weights": [float.hex(float(w)) for w in self.output_weights]},
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Network":
        if data.get("format") != FORMAT:
            raise StructureError(f"not a {FORMAT} document")

        def unit(d: dict) -> Unit:
            return Unit(tuple(float.fromhex(w) for w in d["weights"]),
                        float.fromhex(d["bias"]), d["mode"])

        layers = [Layer.from_units([unit(u) for u in layer]) for layer in data["layers"]]
        out = data["output"]
        return cls(layers, [float.fromhex(w) for w in out["weights"]],
                   float.fromhex(out["bias"]), int(data.get("input_width", 1)),
                   bool(data.get("identity_regime", False)), dict(data.get("meta", {})))


def forward(net: Network, x):
    """Evaluate ``net`` at a scalar or array of points in [0, 1]."""
    xa = np.asarray(x, dtype=float)
    if np.any((xa < 0) | (xa > 1)):
        raise DomainError("network input outside [0, 1]")
    W, b, r, w_out = net.packed
    out = kernels.forward_dense(W, b, r, w_out, net.output_bias, xa.reshape(-1))
    return float(out[0]) if xa.ndim == 0 else out.reshape(xa.shape)


def weight_count(net: Network) -> int:
    """Every weight and bias, zeros included."""
    hidden = sum(layer.weights.size + layer.bias.size for layer in net.layers)
    return int(hidden + net.output_weights.size + 1)


def standard_weight_count(M: int, N: int) -> int:
    return M * M * (N - 1) + M * (N + 2) + 1


@dataclass(frozen=True)
class StandardShape:
    M: int
    N: int

    @property
    def nu(self) -> int:
        return standard_weight_count(self.M, self.N)


@dataclass
class ValidationReport:
    shape: StandardShape
    depth: int
    weight_count: int
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        head = (f"M={self.shape.M} N={self.shape.N} depth={self.depth} "
                f"weights={self.weight_count} nu={self.shape.nu}")
        if self.ok:
            return head + ": conforming"
        return head + "\n" + "\n".join(f"  - {v}" for v in self.violations)


def validate_standard(net: Network, shape: StandardShape) -> ValidationReport:
    """Check ``net`` against the width-M depth-N fully-connected architecture.

    Depth counts hidden layers only; the output unit is separate.
    """
    v: list[str] = []
    if net.depth != shape.N:
        v.append(f"depth: {net.depth} hidden layers, expected {shape.N}")
    for l, layer in enumerate(net.layers):
        if layer.width != shape.M:
            v.append(f"layer width: layer {l} has {layer.width} units, expected {shape.M}")
        if not net.identity_regime and not layer.relu.all():
            k = [int(i) for i in np.nonzero(~layer.relu)[0]]
            v.append(f"activation: layer {l} has linear-mode units {k}")
    wc = weight_count(net)
    if wc != shape.nu:
        v.append(f"weight count: {wc} != nu_{{{shape.M},{shape.N}}} = {shape.nu}")
    return ValidationReport(shape, net.depth, wc, v)
