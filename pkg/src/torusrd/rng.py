"""Counter-based per-replica random streams.

Each replica gets an independent Philox stream keyed by (master seed,
replica index, ...); a single stream is consumed in a fixed documented
order (waiting time, then selection, then coupling marks), so every run
is reproducible from its key.
"""
from __future__ import annotations

import numpy as np


def stream(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((master_seed, *key))))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return stream(int(rng))


class UniformFeed:
    """Block-buffered uniforms handed to the numba kernels.

    Leftover uniforms are carried across refills, so the stream is consumed
    contiguously no matter where a kernel chunk stops.
    """

    def __init__(self, rng: np.random.Generator, block: int = 1 << 17):
        self.rng = rng
        self.block = block
        self.buf = rng.random(block)

    def consume(self, used: int) -> None:
        self.buf = self.buf[used:]

    def refill(self) -> None:
        self.buf = np.concatenate([self.buf, self.rng.random(self.block)])
