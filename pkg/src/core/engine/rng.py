"""
Seeded random streams.

The generator is numpy's PCG64 seeded through SeedSequence, so
RngStream(seed) yields exactly the draws of numpy.random.default_rng(seed).
Per-item streams use mix_seed(master, index), which hashes the pair with
SeedSequence spawn keys: item streams are independent of processing order
and of each other.
"""

from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from ..errors import ParameterError

MAX_SEED = 2**64


def _check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ParameterError(f"Seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed < MAX_SEED:
        raise ParameterError(f"Seed must be in [0, 2^64), got {seed}")
    return seed


def mix_seed(master: int, *key: int) -> int:
    """
    Derive a 64-bit seed from a master seed and an integer key path.

    mix_seed(s, i) seeds item i of a run; mix_seed(s, i, 1) seeds side draws
    for the same item (CutMix partner choice).
    """
    master = _check_seed(master)
    spawn_key = tuple(_check_seed(k) for k in key)
    sequence = np.random.SeedSequence(master, spawn_key=spawn_key)
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


@dataclass
class DrawLog:
    """Draws consumed inside an RngStream.record() block."""
    scalars: list[float] = field(default_factory=list)
    bulk: int = 0

    @property
    def total(self) -> int:
        return len(self.scalars) + self.bulk


class RngStream:
    """
    Deterministic uniform stream.

    Not thread-safe: give every concurrent task its own stream.
    """

    def __init__(self, seed: int):
        self.seed = _check_seed(seed)
        self._generator = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed)))
        self.draws_consumed = 0
        self._logs: list[DrawLog] = []

    def uniform(self) -> float:
        """One draw in [0, 1)."""
        value = float(self._generator.random())
        self.draws_consumed += 1
        for entry in self._logs:
            entry.scalars.append(value)
        return value

    def uniform_range(self, lo: float, hi: float) -> float:
        """One draw mapped affinely onto [lo, hi)."""
        return lo + (hi - lo) * self.uniform()

    def uniform_array(self, shape: int | tuple[int, ...]) -> np.ndarray:
        """
        Bulk draws filled in C order.

        Consumes the same values as the equivalent number of uniform() calls.
        """
        values = self._generator.random(shape)
        self.draws_consumed += values.size
        for entry in self._logs:
            entry.bulk += values.size
        return values

    @contextmanager
    def record(self) -> Iterator[DrawLog]:
        """Capture draws made inside the block (scalars by value, bulk by count)."""
        entry = DrawLog()
        self._logs.append(entry)
        try:
            yield entry
        finally:
            self._logs = [e for e in self._logs if e is not entry]

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, draws_consumed={self.draws_consumed})"


def uniform_draw(rng: RngStream) -> float:
    """Advance the stream by exactly one draw and return it."""
    return rng.uniform()


def item_stream(master_seed: int, index: int) -> RngStream:
    """Stream for work item `index` of a run seeded with master_seed."""
    return RngStream(mix_seed(master_seed, index))
