"""Labeled random streams derived from one root seed.

Every consumer asks for a stream by purpose label plus integer keys (draw
index, trial index, ...), so topology, fading and initial profiles can be
regenerated independently of each other.
"""

import numpy as np

_PURPOSES = {
    "topology": 0,
    "fading": 1,
    "init": 2,
    "contraction": 3,
    "uniqueness": 4,
    "perturb": 5,
}


def stream(seed: int, purpose: str, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(_PURPOSES[purpose], *map(int, keys)))
    return np.random.Generator(np.random.PCG64(ss))


def crandn(rng: np.random.Generator, *shape) -> np.ndarray:
    """Circularly-symmetric complex normal samples with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
