"""3x3 same-padding convolution and ReLU with hand-written backward passes.

Tensors are plain numpy arrays laid out (N, C, H, W). Convolution runs as a
windowed tensordot over a zero-padded view of the input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from hsn.core.errors import InvariantViolation, ShapeMismatch
from hsn.core.rng import Rng

KERNEL = 3


def check_tensor4(x: np.ndarray, name: str = "tensor") -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 4:
        raise ShapeMismatch(f"{name} must be (N, C, H, W), got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvariantViolation(f"{name} holds non-finite values")
    return x


@dataclass(eq=False)
class Conv2dLayer:
    weight: np.ndarray
    bias: np.ndarray

    padding = 1
    stride = 1

    def __post_init__(self) -> None:
        if self.weight.ndim != 4 or self.weight.shape[2:] != (KERNEL, KERNEL):
            raise ShapeMismatch(f"Conv weight must be (C_out, C_in, 3, 3), got {self.weight.shape}")
        if self.bias.shape != (self.weight.shape[0],):
            raise ShapeMismatch(
                f"Conv bias must be ({self.weight.shape[0]},), got {self.bias.shape}"
            )

    @property
    def in_channels(self) -> int:
        return int(self.weight.shape[1])

    @property
    def out_channels(self) -> int:
        return int(self.weight.shape[0])

    @classmethod
    def init(
        cls,
        in_channels: int,
        out_channels: int,
        rng: Rng,
        dtype: np.dtype | type = np.float32,
        zero: bool = False,
    ) -> Conv2dLayer:
        shape = (out_channels, in_channels, KERNEL, KERNEL)
        weight = np.zeros(shape) if zero else kaiming_uniform(shape, rng)
        return cls(weight.astype(dtype), np.zeros(out_channels, dtype=dtype))


def kaiming_uniform(shape: tuple[int, int, int, int], rng: Rng) -> np.ndarray:
    """U(-b, b) with b = sqrt(6 / fan_in), fan_in = C_in * 3 * 3."""
    fan_in = shape[1] * shape[2] * shape[3]
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, shape)


def _windows(x: np.ndarray) -> np.ndarray:
    """(N, C, H, W) -> (N, C, H, W, 3, 3) view over the zero-padded input."""
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    return sliding_window_view(xp, (KERNEL, KERNEL), axis=(2, 3))


def conv2d_forward(x: np.ndarray, layer: Conv2dLayer) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 4 or x.shape[1] != layer.in_channels:
        raise ShapeMismatch(
            f"Input {x.shape} does not match a conv with {layer.in_channels} input channels"
        )
    y = np.tensordot(_windows(x), layer.weight, axes=([1, 4, 5], [1, 2, 3]))
    y = y.transpose(0, 3, 1, 2) + layer.bias[None, :, None, None]
    return np.ascontiguousarray(y)


def conv2d_backward(
    x: np.ndarray, layer: Conv2dLayer, grad_y: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (grad_x, grad_w, grad_b) of conv2d_forward."""
    x = np.asarray(x)
    grad_y = np.asarray(grad_y)
    n, _, h, w = x.shape
    if grad_y.shape != (n, layer.out_channels, h, w):
        raise ShapeMismatch(
            f"grad_y {grad_y.shape} does not match output shape {(n, layer.out_channels, h, w)}"
        )
    grad_b = grad_y.sum(axis=(0, 2, 3))
    grad_w = np.tensordot(grad_y, _windows(x), axes=([0, 2, 3], [0, 2, 3]))
    flipped = layer.weight[:, :, ::-1, ::-1]
    grad_x = np.tensordot(_windows(grad_y), flipped, axes=([1, 4, 5], [0, 2, 3]))
    grad_x = np.ascontiguousarray(grad_x.transpose(0, 3, 1, 2))
    return grad_x, grad_w, grad_b


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(x: np.ndarray, grad_y: np.ndarray) -> np.ndarray:
    """Passes the gradient where x > 0; the subgradient at 0 is 0."""
    return np.where(x > 0, grad_y, 0).astype(np.result_type(grad_y), copy=False)
