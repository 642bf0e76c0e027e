"""Seeded counter-based random streams.

``Rng`` wraps numpy's Philox generator: an integer-only counter-based core,
so a seed yields the same stream on every platform. Independent sub-streams
are derived from (seed, keys...) through ``SeedSequence`` so per-image or
per-step randomness does not depend on call order or worker scheduling.
"""

from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _key_to_int(key: int | str) -> int:
    # crc32 is stable across processes, unlike hash()
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8")) & 0xFFFFFFFF
    if key < 0:
        raise ValueError(f"Stream keys must be non-negative, got {key}")
    return int(key)


class Rng:
    def __init__(self, seed: int, *keys: int | str) -> None:
        self._seed = int(seed) & _MASK64
        self._keys = tuple(_key_to_int(k) for k in keys)
        entropy = [self._seed & 0xFFFFFFFF, self._seed >> 32, *self._keys]
        key = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def keys(self) -> tuple[int, ...]:
        return self._keys

    def derive(self, *keys: int | str) -> Rng:
        """Independent child stream; does not advance this one."""
        return Rng(self._seed, *self._keys, *keys)

    def random(self, size: int | tuple[int, ...] | None = None) -> float | np.ndarray:
        return self._gen.random(size)

    def uniform(
        self, lo: float, hi: float, size: int | tuple[int, ...] | None = None
    ) -> float | np.ndarray:
        if lo > hi:
            raise ValueError(f"uniform needs lo <= hi, got [{lo}, {hi})")
        if lo == hi:
            return lo if size is None else np.full(size, float(lo))
        u = self._gen.random(size)
        # half-open even when lo + (hi - lo) * u rounds up to hi
        out = np.minimum(lo + (hi - lo) * u, np.nextafter(hi, lo))
        return float(out) if size is None else out

    def normal(self, size: int | tuple[int, ...] | None = None) -> float | np.ndarray:
        return self._gen.standard_normal(size)

    def integers(
        self, lo: int, hi: int, size: int | tuple[int, ...] | None = None
    ) -> int | np.ndarray:
        """Integers in [lo, hi)."""
        out = self._gen.integers(lo, hi, size=size)
        return int(out) if size is None else out

    def coin(self) -> bool:
        return bool(self._gen.integers(0, 2))


def rng_uniform(rng: Rng, lo: float, hi: float) -> float:
    """One uniform draw in [lo, hi); returns ``lo`` exactly when lo == hi."""
    return float(rng.uniform(lo, hi))
