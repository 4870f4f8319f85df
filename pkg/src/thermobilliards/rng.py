"""Reproducible RNG streams: one independent substream per trajectory/task."""

from dataclasses import dataclass

import numpy as np

BLOCK = 65536


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.master_seed,
                                     spawn_key=(self.stream_index,))
        return np.random.default_rng(seq)


class BlockDraws:
    """Uniform/normal draws consumed from fixed-size refill blocks.

    The compiled and pure-Python kernels both follow this exact refill and
    consumption pattern, so trajectories are bit-identical across backends.
    """

    def __init__(self, gen: np.random.Generator):
        self.gen = gen
        self._u = gen.random(BLOCK)
        self._n = gen.standard_normal(BLOCK)
        self._ui = 0
        self._ni = 0

    def uniform(self) -> float:
        if self._ui == BLOCK:
            self._u = self.gen.random(BLOCK)
            self._ui = 0
        v = self._u[self._ui]
        self._ui += 1
        return v

    def normal(self) -> float:
        if self._ni == BLOCK:
            self._n = self.gen.standard_normal(BLOCK)
            self._ni = 0
        v = self._n[self._ni]
        self._ni += 1
        return v
