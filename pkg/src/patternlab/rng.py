"""Deterministic random streams keyed by coordinates.

Two layers:

* a splitmix64-style avalanche hash (``mix64``) used to derive per-replica
  stream seeds and to generate Bernoulli site values directly from lattice
  coordinates (counter mode, no sequential state), and
* numpy ``Generator`` instances seeded from derived streams for everything
  that does not need coordinate addressing (Gibbs sweeps, generic MC).

Counter mode is what makes lazy window growth reproducible: the value at a
site depends only on (stream seed, site coordinates), never on the order or
extent of generation, so a window extended on demand is bit-identical to the
same window sampled up front.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

# domain-separation tags for the different hash uses
_TAG_AXIS = 0x8D1B_3C60_52F3_11A7
_TAG_WORD = 0x27D4_EB2F_1656_67C5
_TAG_SITE = 0x9216_D5D9_8979_FB1B

GENERATOR_ID = "coordhash-splitmix64-v1"


def mix64_int(x: int) -> int:
    """64-bit finalizer (splitmix64) on plain Python ints."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix64(x: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer over uint64 arrays."""
    x = np.asarray(x, dtype=np.uint64)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def fold(*keys: int) -> int:
    """Order-sensitive fold of integer keys into one 64-bit value."""
    h = 0
    for k in keys:
        h = mix64_int((h ^ (int(k) & MASK64)) + GOLDEN)
    return h


def stream_seed(master: int, replica: int, purpose: int = 0) -> int:
    """Seed for one replica stream; distinct (replica, purpose) decorrelate."""
    return fold(master, replica, purpose)


def generator(master: int, replica: int, purpose: int = 0) -> np.random.Generator:
    """numpy Generator on a derived stream, for non-coordinate randomness."""
    return np.random.default_rng(stream_seed(master, replica, purpose))


def row_keys(stream: int, coords: tuple[np.ndarray, ...]) -> np.ndarray:
    """Hash keys for lattice rows given their leading-coordinate arrays.

    ``coords`` holds one int array per leading axis (all axes except the
    packed last one); the arrays must broadcast to the row layout.  Keys do
    not depend on window extents, only on the coordinates themselves.
    """
    h = np.full(np.broadcast_shapes(*(c.shape for c in coords)) or (1,),
                stream, dtype=np.uint64) if coords else np.array([stream], dtype=np.uint64)
    for axis, c in enumerate(coords):
        t = np.uint64(mix64_int(_TAG_AXIS + axis))
        h = mix64((h ^ (np.asarray(c, dtype=np.uint64) * np.uint64(GOLDEN) ^ t)) + np.uint64(GOLDEN))
    return h


def words_half(rk: np.ndarray, word_idx: np.ndarray) -> np.ndarray:
    """64 Bernoulli(1/2) bits per (row key, word index) pair, as uint64.

    Bit j of word w is the site at column 64*w + j (little-endian in the
    packed-row convention of the lattice module).
    """
    wk = mix64(np.asarray(word_idx, dtype=np.uint64) + np.uint64(_TAG_WORD))
    return mix64(rk[..., None] ^ wk)


def site_uniform_u64(rk: np.ndarray, col_idx: np.ndarray) -> np.ndarray:
    """One uniform uint64 per (row key, column) pair, for threshold sampling."""
    ck = mix64(np.asarray(col_idx, dtype=np.uint64) + np.uint64(_TAG_SITE))
    return mix64(rk[..., None] ^ ck)


def p_threshold(p: float) -> int:
    """uint64 threshold t with P(U64 < t) = p up to 2^-64 quantization."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability p={p} outside [0, 1]")
    return min(int(p * 2.0**64), 1 << 64)
