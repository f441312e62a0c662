"""
Seed derivation: one master seed, independent labelled sub-streams
"""
import hashlib
from typing import List

import numpy as np


def derive_seed(master: int, label: str) -> int:
    """Sub-seed = first 8 bytes (little endian) of SHA-256("{master}:{label}")"""
    digest = hashlib.sha256(f"{int(master)}:{label}".encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'little')


def rng_for(master: int, label: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, label))


def spawn_chunk_seeds(master: int, n_chunks: int) -> List[np.random.SeedSequence]:
    """Chunk i always gets the i-th child of SeedSequence(master), whatever the worker count"""
    return np.random.SeedSequence(int(master) % 2**64).spawn(n_chunks)
