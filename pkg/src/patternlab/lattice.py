"""Cube geometry, binary patterns, sampled windows, and Hamming arithmetic.

Conventions fixed here and relied on everywhere else:

* The n-cube C_n is [0, n]^d with |C_n| = (n+1)^d sites, d in {1, 2, 3}.
* Site order is row-major lexicographic with the last coordinate fastest.
* Values are bit-packed along the last axis into little-endian uint64 words:
  column c lives in word c // 64 at bit c % 64.  Leading axes are flattened
  in lexicographic order to form the row index of the packed array.
* Mismatch counts use word XOR + popcount; a naive site loop is kept in the
  test suite as the correctness oracle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """A site set is not contained in the domain of a configuration."""


def pack_rows(bits: np.ndarray) -> np.ndarray:
    """Pack a (..., ncols) array of {0,1} into (..., ceil(ncols/64)) uint64."""
    bits = np.asarray(bits, dtype=np.uint8)
    nwords = (bits.shape[-1] + 63) // 64
    by = np.packbits(bits, axis=-1, bitorder="little")
    pad = 8 * nwords - by.shape[-1]
    if pad:
        by = np.concatenate([by, np.zeros(by.shape[:-1] + (pad,), np.uint8)], axis=-1)
    return np.ascontiguousarray(by).view("<u8").astype(np.uint64, copy=False)


def unpack_rows(words: np.ndarray, ncols: int) -> np.ndarray:
    """Inverse of pack_rows, recovering a (..., ncols) uint8 array."""
    by = np.ascontiguousarray(words.astype("<u8", copy=False)).view(np.uint8)
    return np.unpackbits(by, axis=-1, count=ncols, bitorder="little")


def popcount_words(words: np.ndarray) -> int:
    return int(np.bitwise_count(words).sum())


def tail_mask(ncols: int) -> np.ndarray:
    """Word mask keeping only the first ncols bits of a packed row."""
    nwords = (ncols + 63) // 64
    m = np.full(nwords, ~np.uint64(0), dtype=np.uint64)
    rem = ncols % 64
    if rem:
        m[-1] = np.uint64((1 << rem) - 1)
    return m


@dataclass(frozen=True)
class Cube:
    """The n-cube C_n = [0, n]^d."""

    d: int
    n: int

    def __post_init__(self):
        if not 1 <= self.d <= 3:
            raise ValueError(f"dimension d={self.d} unsupported, need 1 <= d <= 3")
        if self.n < 0:
            raise ValueError(f"side index n={self.n} must be nonnegative")

    @property
    def side(self) -> int:
        return self.n + 1

    @property
    def volume(self) -> int:
        return self.side ** self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.side,) * self.d

    def sites(self):
        """Lexicographic site iterator, last coordinate fastest."""
        return itertools.product(range(self.side), repeat=self.d)


@dataclass(frozen=True)
class Window:
    """Rectangular site set [0, L_1] x ... x [0, L_d]."""

    extents: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "extents", tuple(int(e) for e in self.extents))
        if not 1 <= len(self.extents) <= 3:
            raise ValueError("window dimension must be 1, 2, or 3")
        if any(e < 0 for e in self.extents):
            raise ValueError(f"window extents {self.extents} must be nonnegative")

    @property
    def d(self) -> int:
        return len(self.extents)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(e + 1 for e in self.extents)

    @property
    def volume(self) -> int:
        return math.prod(self.shape)

    def contains_cube(self, cube: Cube, offset: tuple[int, ...]) -> bool:
        if cube.d != self.d or len(offset) != self.d:
            return False
        return all(0 <= x and x + cube.n <= e
                   for x, e in zip(offset, self.extents))


def _leading_shape(shape: tuple[int, ...]) -> tuple[int, ...]:
    return shape[:-1]


class _Packed:
    """Shared packed-row behaviour for Pattern and FieldSample."""

    shape: tuple[int, ...]
    words: np.ndarray  # (rows, nwords) uint64, padding bits zero

    def to_array(self) -> np.ndarray:
        bits = unpack_rows(self.words, self.shape[-1])
        return bits.reshape(self.shape)

    def _rows_nd(self) -> np.ndarray:
        """Packed words with leading axes restored: shape[:-1] + (nwords,)."""
        return self.words.reshape(_leading_shape(self.shape) + (self.words.shape[-1],))


def _restricted_words(obj: "_Packed", shape: tuple[int, ...]) -> np.ndarray:
    """Packed rows of the restriction to [0,s_1-1] x ... anchored at 0."""
    if len(shape) != len(obj.shape) or any(s > t for s, t in zip(shape, obj.shape)):
        raise DomainError(f"site set of shape {shape} not contained in domain {obj.shape}")
    nd = obj._rows_nd()
    sl = tuple(slice(0, s) for s in shape[:-1])
    nwords = (shape[-1] + 63) // 64
    rows = nd[sl + (slice(0, nwords),)].reshape(-1, nwords)
    return rows & tail_mask(shape[-1])


class Pattern(_Packed):
    """Binary values on a cube C_n, bit-packed per row."""

    def __init__(self, cube: Cube, words: np.ndarray):
        self.cube = cube
        self.shape = cube.shape
        words = np.asarray(words, dtype=np.uint64).reshape(cube.side ** (cube.d - 1), -1)
        self.words = words & tail_mask(cube.side)
        self.words.setflags(write=False)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Pattern":
        arr = np.asarray(arr)
        d = arr.ndim
        side = arr.shape[0]
        if arr.shape != (side,) * d:
            raise ValueError(f"pattern array shape {arr.shape} is not a cube")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("pattern values must be 0 or 1")
        cube = Cube(d, side - 1)
        return cls(cube, pack_rows(arr.reshape(side ** (d - 1), side)))

    @property
    def n(self) -> int:
        return self.cube.n

    def row_masks(self) -> np.ndarray:
        """One uint64 mask per pattern row; only valid for side <= 64."""
        if self.cube.side > 64:
            raise ValueError("row_masks requires pattern side <= 64")
        return self.words[:, 0]

    def complement(self) -> "Pattern":
        return Pattern(self.cube, ~self.words & tail_mask(self.cube.side))

    def __eq__(self, other):
        return (isinstance(other, Pattern) and self.cube == other.cube
                and np.array_equal(self.words, other.words))

    def __hash__(self):
        return hash((self.cube, self.words.tobytes()))

    def __repr__(self):
        return f"Pattern(d={self.cube.d}, n={self.cube.n})"


class FieldSample(_Packed):
    """Binary values on a window with generation provenance."""

    def __init__(self, window: Window, words: np.ndarray, provenance: dict | None = None):
        self.window = window
        self.shape = window.shape
        rows = math.prod(_leading_shape(self.shape)) if window.d > 1 else 1
        words = np.asarray(words, dtype=np.uint64).reshape(rows, -1)
        self.words = words & tail_mask(self.shape[-1])
        self.words.setflags(write=False)
        self.provenance = dict(provenance or {})

    @classmethod
    def from_array(cls, arr: np.ndarray, provenance: dict | None = None) -> "FieldSample":
        arr = np.asarray(arr)
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("field values must be 0 or 1")
        window = Window(tuple(s - 1 for s in arr.shape))
        return cls(window, pack_rows(arr.reshape(-1, arr.shape[-1])), provenance)

    def extract(self, cube: Cube, offset: tuple[int, ...]) -> Pattern:
        """Pattern read off the sample at C_n + offset."""
        offset = tuple(int(x) for x in offset)
        if not self.window.contains_cube(cube, offset):
            raise DomainError(
                f"cube n={cube.n} at offset {offset} not inside window {self.window.extents}")
        nd = self._rows_nd()
        sl = tuple(slice(x, x + cube.side) for x in offset[:-1])
        rows = nd[sl].reshape(cube.side ** (cube.d - 1), -1)
        out = shift_columns(rows, offset[-1], cube.side)
        return Pattern(cube, out)

    def site_mean(self) -> float:
        return popcount_words(self.words) / self.window.volume

    def __eq__(self, other):
        return (isinstance(other, FieldSample) and self.window == other.window
                and np.array_equal(self.words, other.words))

    def __hash__(self):
        return hash((self.window, self.words.tobytes()))

    def __repr__(self):
        return f"FieldSample(extents={self.window.extents}, provenance={self.provenance})"


def shift_columns(rows: np.ndarray, start: int, ncols: int) -> np.ndarray:
    """Extract ncols bits starting at column `start` from packed rows.

    Returns packed rows of width ncols with padding bits cleared.
    """
    rows = np.atleast_2d(rows)
    cw, cb = divmod(start, 64)
    nout = (ncols + 63) // 64
    # gather enough source words to cover the shifted span
    need = cw + nout + (1 if cb else 0)
    if need > rows.shape[1]:
        pad = np.zeros((rows.shape[0], need - rows.shape[1]), dtype=np.uint64)
        rows = np.concatenate([rows, pad], axis=1)
    src = rows[:, cw:cw + nout + (1 if cb else 0)]
    if cb:
        out = (src[:, :nout] >> np.uint64(cb)) | (src[:, 1:nout + 1] << np.uint64(64 - cb))
    else:
        out = src[:, :nout].copy()
    return out & tail_mask(ncols)


@dataclass(frozen=True)
class DistortionSpec:
    """Distortion level epsilon and the induced mismatch budget per cube."""

    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon={self.epsilon} outside [0, 1]")

    def threshold(self, cube_or_sites: Cube | int) -> int:
        """E = floor(epsilon * |C_n|), the largest admissible mismatch count."""
        nsites = cube_or_sites.volume if isinstance(cube_or_sites, Cube) else int(cube_or_sites)
        # tiny nudge so decimal epsilons like 0.3 * 10 land on the intended floor
        e = math.floor(self.epsilon * nsites + 1e-9)
        return max(0, min(nsites, e))


def ball_threshold(epsilon: float, cube: Cube) -> int:
    """Mismatch budget E = floor(epsilon * (n+1)^d)."""
    return DistortionSpec(epsilon).threshold(cube)


def _as_packed(obj) -> _Packed:
    if isinstance(obj, _Packed):
        return obj
    return Pattern.from_array(obj) if _is_cube_array(obj) else FieldSample.from_array(obj)


def _is_cube_array(obj) -> bool:
    arr = np.asarray(obj)
    return arr.ndim >= 1 and all(s == arr.shape[0] for s in arr.shape)


def hamming_delta(V: Cube | Window, eta, sigma) -> int:
    """Number of sites of V where the two configurations disagree.

    V is anchored at the origin; both arguments must be defined on all of it.
    Symmetric in eta and sigma; result lies in [0, |V|].
    """
    shape = V.shape
    w1 = _restricted_words(_as_packed(eta), shape)
    w2 = _restricted_words(_as_packed(sigma), shape)
    return popcount_words(w1 ^ w2)


def epsilon_match(A: Pattern, sigma: FieldSample, x: tuple[int, ...],
                  spec: DistortionSpec) -> bool:
    """True iff sigma extracted at offset x lies in the epsilon-ball of A."""
    got = sigma.extract(A.cube, x)
    return popcount_words(got.words ^ A.words) <= spec.threshold(A.cube)


# ---------------------------------------------------------------------------
# plain-text serialization

def pattern_to_text(A: Pattern) -> str:
    lines = [f"pattern {A.cube.d} {A.cube.n}"]
    arr = A.to_array().reshape(-1, A.cube.side)
    lines += ["".join(str(v) for v in row) for row in arr]
    return "\n".join(lines) + "\n"


def sample_to_text(s: FieldSample) -> str:
    lines = [f"window {s.window.d} " + " ".join(str(e) for e in s.window.extents)]
    arr = s.to_array().reshape(-1, s.shape[-1])
    lines += ["".join(str(v) for v in row) for row in arr]
    lines += [f"# {k} {s.provenance[k]}" for k in sorted(s.provenance)]
    return "\n".join(lines) + "\n"


def _parse_rows(lines: list[str], nrows: int, ncols: int) -> np.ndarray:
    if len(lines) < nrows:
        raise ValueError(f"expected {nrows} value rows, found {len(lines)}")
    arr = np.zeros((nrows, ncols), dtype=np.uint8)
    for i, line in enumerate(lines[:nrows]):
        if len(line) != ncols or set(line) - {"0", "1"}:
            raise ValueError(f"row {i}: need exactly {ncols} characters from {{0,1}}")
        arr[i] = np.frombuffer(line.encode(), dtype=np.uint8) - ord("0")
    return arr


def _coerce(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def from_text(text: str):
    """Parse the text form of a Pattern or FieldSample."""
    lines = [ln.rstrip("\n") for ln in text.strip().splitlines()]
    head = lines[0].split()
    body = [ln for ln in lines[1:] if not ln.startswith("#")]
    meta = {}
    for ln in lines[1:]:
        if ln.startswith("# "):
            k, _, v = ln[2:].partition(" ")
            meta[k] = _coerce(v)
    if head[0] == "pattern":
        d, n = int(head[1]), int(head[2])
        cube = Cube(d, n)
        arr = _parse_rows(body, cube.side ** (d - 1), cube.side)
        return Pattern(cube, pack_rows(arr))
    if head[0] == "window":
        d = int(head[1])
        extents = tuple(int(t) for t in head[2:2 + d])
        window = Window(extents)
        shape = window.shape
        arr = _parse_rows(body, math.prod(shape[:-1]), shape[-1])
        return FieldSample(window, pack_rows(arr), meta)
    raise ValueError(f"unknown header {head[0]!r}")
