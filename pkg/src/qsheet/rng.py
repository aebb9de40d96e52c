"""Deterministic, splittable random streams.

A :class:`Seed` holds one 64-bit master value. Stream ``k`` is derived from
``(master, k)`` through numpy's ``SeedSequence`` hash mixing and drives a
Philox counter-based generator, so any number of replica streams can be
issued in parallel without coordination. Identical ``(master, k)`` always
reproduces the same draws; Gaussians come from ``Generator.standard_normal``
(ziggurat), which is stable for a fixed numpy build.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError

_MASTER_LIMIT = 2**64


@dataclass(frozen=True)
class Seed:
    """Master seed for a whole experiment.

    Replica ``k`` of an experiment must use ``stream(k)``; distinct indices
    give statistically independent streams.
    """

    master: int

    def __post_init__(self) -> None:
        if not isinstance(self.master, (int, np.integer)):
            raise ArgumentError(f"seed master must be an integer, got {self.master!r}")
        if not 0 <= int(self.master) < _MASTER_LIMIT:
            raise ArgumentError(f"seed master must be a 64-bit unsigned integer, got {self.master}")

    def stream(self, index: int) -> np.random.Generator:
        """Counter-derived generator for replica ``index``."""
        if index < 0:
            raise ArgumentError(f"stream index must be nonnegative, got {index}")
        ss = np.random.SeedSequence(entropy=int(self.master), spawn_key=(int(index),))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, offset: int) -> "Seed":
        """A related master seed, for multi-seed ensembles of whole experiments."""
        return Seed((int(self.master) + int(offset)) % _MASTER_LIMIT)
