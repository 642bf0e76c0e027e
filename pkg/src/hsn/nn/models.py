"""Feed-forward stacks of 3x3 convolutions.

``MiniIspModel``: 5 convolutions 3 -> w -> w -> w -> w -> 3, ReLU after the
first four. ``TinyDenoiser``: D convolutions on packed 4-channel Bayer input
with a global residual, output = input + net(input); the last layer starts at
zero so the untrained model is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from hsn.core.errors import ArchMismatch, InvariantViolation, ShapeMismatch
from hsn.core.rng import Rng
from hsn.nn.layers import (
    Conv2dLayer,
    check_tensor4,
    conv2d_backward,
    conv2d_forward,
    relu_backward,
    relu_forward,
)

MINI_ISP_LAYERS = 5


@dataclass
class ForwardCache:
    inputs: list[np.ndarray]
    pre_activations: list[np.ndarray]
    x: np.ndarray


class ConvNet:
    kind = "convnet"

    def __init__(self, layers: list[Conv2dLayer], residual: bool = False) -> None:
        if not layers:
            raise InvariantViolation("A ConvNet needs at least one layer")
        for prev, nxt in zip(layers, layers[1:], strict=False):
            if prev.out_channels != nxt.in_channels:
                raise ShapeMismatch(
                    f"Layer widths do not chain: {prev.out_channels} -> {nxt.in_channels}"
                )
        if residual and layers[0].in_channels != layers[-1].out_channels:
            raise ShapeMismatch("A residual net needs equal input and output channels")
        self.layers = layers
        self.residual = residual

    @property
    def widths(self) -> list[int]:
        return [self.layers[0].in_channels] + [layer.out_channels for layer in self.layers]

    @property
    def dtype(self) -> np.dtype:
        return self.layers[0].weight.dtype

    def architecture(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "in_channels": self.widths[0],
            "out_channels": self.widths[-1],
            "widths": self.widths,
            "residual": self.residual,
        }

    def parameters(self) -> list[np.ndarray]:
        params = []
        for layer in self.layers:
            params.extend([layer.weight, layer.bias])
        return params

    def set_parameters(self, params: list[np.ndarray]) -> None:
        current = self.parameters()
        if len(params) != len(current):
            raise ArchMismatch(f"Expected {len(current)} parameter arrays, got {len(params)}")
        for dst, src in zip(current, params, strict=True):
            if dst.shape != src.shape:
                raise ArchMismatch(f"Parameter shape {src.shape} != model shape {dst.shape}")
            dst[...] = src

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
        x = check_tensor4(x, "input")
        if x.shape[1] != self.widths[0]:
            raise ShapeMismatch(f"Input {x.shape} does not match {self.widths[0]} channels")
        inputs, pre = [], []
        h = x
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            inputs.append(h)
            z = conv2d_forward(h, layer)
            pre.append(z)
            h = relu_forward(z) if i < last else z
        if self.residual:
            h = h + x
        return h, ForwardCache(inputs=inputs, pre_activations=pre, x=x)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(
        self, cache: ForwardCache, grad_y: np.ndarray
    ) -> tuple[list[np.ndarray], np.ndarray]:
        """Parameter gradients (ordered like ``parameters()``) and the input gradient."""
        grads: list[np.ndarray] = [None] * (2 * len(self.layers))  # type: ignore[list-item]
        g = grad_y
        last = len(self.layers) - 1
        for i in range(last, -1, -1):
            if i < last:
                g = relu_backward(cache.pre_activations[i], g)
            g, gw, gb = conv2d_backward(cache.inputs[i], self.layers[i], g)
            grads[2 * i] = gw.astype(self.layers[i].weight.dtype, copy=False)
            grads[2 * i + 1] = gb.astype(self.layers[i].bias.dtype, copy=False)
        if self.residual:
            g = g + grad_y
        return grads, g

    def copy(self) -> ConvNet:
        clone = object.__new__(type(self))
        clone.__dict__.update(self.__dict__)
        clone.layers = [
            Conv2dLayer(layer.weight.copy(), layer.bias.copy()) for layer in self.layers
        ]
        return clone

    @classmethod
    def from_widths(
        cls,
        widths: list[int],
        seed: int = 0,
        residual: bool = False,
        zero_last: bool = False,
        dtype: np.dtype | type = np.float32,
    ) -> ConvNet:
        rng = Rng(seed, "init")
        layers = [
            Conv2dLayer.init(
                widths[i],
                widths[i + 1],
                rng.derive(i),
                dtype=dtype,
                zero=zero_last and i == len(widths) - 2,
            )
            for i in range(len(widths) - 1)
        ]
        net = object.__new__(cls)
        ConvNet.__init__(net, layers, residual=residual)
        return net


class MiniIspModel(ConvNet):
    kind = "mini_isp"

    def __init__(
        self, width: int = 128, seed: int = 0, dtype: np.dtype | type = np.float32
    ) -> None:
        widths = [3] + [width] * (MINI_ISP_LAYERS - 1) + [3]
        built = ConvNet.from_widths(widths, seed=seed, dtype=dtype)
        super().__init__(built.layers, residual=False)


class TinyDenoiser(ConvNet):
    kind = "tiny_denoiser"

    def __init__(
        self,
        depth: int = 6,
        width: int = 32,
        channels: int = 4,
        seed: int = 0,
        zero_last: bool = True,
        dtype: np.dtype | type = np.float32,
    ) -> None:
        if depth < 2:
            raise InvariantViolation(f"TinyDenoiser depth must be >= 2, got {depth}")
        widths = [channels] + [width] * (depth - 1) + [channels]
        built = ConvNet.from_widths(widths, seed=seed, zero_last=zero_last, dtype=dtype)
        super().__init__(built.layers, residual=True)


def model_from_architecture(arch: dict[str, Any], dtype: np.dtype | type = np.float32) -> ConvNet:
    widths = [int(w) for w in arch["widths"]]
    kind = arch["kind"]
    if kind == MiniIspModel.kind:
        if len(widths) != MINI_ISP_LAYERS + 1:
            raise ArchMismatch(f"Mini-ISP needs {MINI_ISP_LAYERS} layers, got {len(widths) - 1}")
        return MiniIspModel(width=widths[1], dtype=dtype)
    if kind == TinyDenoiser.kind:
        return TinyDenoiser(
            depth=len(widths) - 1, width=widths[1], channels=widths[0], dtype=dtype
        )
    net = ConvNet.from_widths(widths, residual=bool(arch["residual"]), dtype=dtype)
    return net
