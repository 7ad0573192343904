"""Counter-based randomness.

Every random decision is a pure function of (seed, counter), built from the
splitmix64 finaliser.  Advice at node ``u`` in trial ``s`` never depends on
the order in which nodes are visited, so lazily sampled advice on implicit
trees, eagerly sampled advice arrays and the exact oracle all agree.
"""
from __future__ import annotations

import numpy as np

from ._jit import njit, u64

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = u64(0x9E3779B97F4A7C15)
_C1 = u64(0xBF58476D1CE4E5B9)
_C2 = u64(0x94D049BB133111EB)
_FOUR = u64(4)
_INV53 = 1.0 / 9007199254740992.0

# counter slots per node
SLOT_FAULT = 0
SLOT_POINTER = 1


@njit
def mix(x):
    z = (u64(x) + _GOLDEN) & _MASK
    z = ((z ^ (z >> u64(30))) * _C1) & _MASK
    z = ((z ^ (z >> u64(27))) * _C2) & _MASK
    return z ^ (z >> u64(31))


@njit
def hash3(seed, a, slot):
    return mix(u64(seed) ^ mix(u64(a) * _FOUR + u64(slot)))


@njit
def uniform(x):
    """Top 53 bits of a 64-bit word as a float in [0, 1)."""
    return float(x >> u64(11)) * _INV53


@njit
def derive(seed, index):
    """Seed of the ``index``-th sub-stream of ``seed``."""
    return mix(mix(u64(seed)) ^ mix(u64(index) + _GOLDEN))


def trial_seeds(root_seed: int, trials: int, offset: int = 0) -> np.ndarray:
    """Per-trial seeds, independent of how trials are later scheduled."""
    idx = np.arange(offset, offset + trials, dtype=np.uint64)
    return derive_np(np.uint64(root_seed & _MASK), idx)


# vectorised twins (numpy uint64 arithmetic wraps modulo 2**64)

def mix_np(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = np.asarray(x, dtype=np.uint64) + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def hash3_np(seed, a: np.ndarray, slot: int) -> np.ndarray:
    with np.errstate(over="ignore"):
        a = np.asarray(a, dtype=np.uint64)
        return mix_np(np.uint64(int(seed) & _MASK) ^ mix_np(a * np.uint64(4) + np.uint64(slot)))


def uniform_np(x: np.ndarray) -> np.ndarray:
    return (x >> np.uint64(11)).astype(np.float64) * _INV53


def derive_np(seed, index: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        idx = np.asarray(index, dtype=np.uint64)
        return mix_np(mix_np(np.uint64(int(seed) & _MASK)) ^ mix_np(idx + np.uint64(0x9E3779B97F4A7C15)))
