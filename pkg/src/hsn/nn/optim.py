from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from hsn.core.errors import InvariantViolation, ShapeMismatch, StepOutOfRange


@dataclass(eq=False)
class AdamState:
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray], **kwargs: float) -> AdamState:
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            **kwargs,
        )


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamState,
    lr: float,
) -> AdamState:
    """One bias-corrected Adam update, applied to ``params`` in place."""
    if not (len(params) == len(grads) == len(state.m) == len(state.v)):
        raise ShapeMismatch(
            f"Adam got {len(params)} params, {len(grads)} grads, {len(state.m)} moments"
        )
    for p, g, m in zip(params, grads, state.m, strict=True):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeMismatch(f"Adam shapes differ: param {p.shape}, grad {g.shape}")

    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v, strict=True):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        step = lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        p -= step.astype(p.dtype, copy=False)
    return state


@dataclass(frozen=True)
class CosineSchedule:
    lr0: float
    T: int
    lr_min: float = 0.0

    def __post_init__(self) -> None:
        if not 0 <= self.lr_min <= self.lr0:
            raise InvariantViolation(f"Need 0 <= lr_min <= lr0, got {self.lr_min}, {self.lr0}")
        if self.T < 1:
            raise InvariantViolation(f"Schedule length T must be >= 1, got {self.T}")


def cosine_lr(schedule: CosineSchedule, t: int) -> float:
    if not 0 <= t <= schedule.T:
        raise StepOutOfRange(f"Step {t} outside [0, {schedule.T}]")
    cos = 1.0 + math.cos(math.pi * t / schedule.T)
    return schedule.lr_min + 0.5 * (schedule.lr0 - schedule.lr_min) * cos
