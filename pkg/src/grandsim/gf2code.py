"""GF(2) vectors and matrices, random linear codes, encoding, syndrome tests.

Bit vectors ("bit words") are 1-D numpy uint8 arrays of 0/1 values, with
index 0 holding the first transmitted bit.  Matrices are 2-D uint8 arrays.
"""

from dataclasses import dataclass, field

import numpy as np


def as_bits(x, length=None) -> np.ndarray:
    """Coerce a bit string, iterable or array to a uint8 0/1 array."""
    if isinstance(x, str):
        arr = np.array([int(ch) for ch in x], dtype=np.uint8)
    else:
        arr = np.asarray(x, dtype=np.uint8)
    if arr.ndim != 1:
        raise ValueError("bit words are one-dimensional")
    if arr.size and arr.max() > 1:
        raise ValueError("bit words contain only 0/1 entries")
    if length is not None and arr.size != length:
        raise ValueError(f"expected {length} bits, got {arr.size}")
    return arr


def bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in bits)


def weight(bits) -> int:
    """Hamming weight."""
    return int(np.count_nonzero(bits))


def random_bits(rng, length) -> np.ndarray:
    return rng.integers(0, 2, size=length, dtype=np.uint8)


def gf2_matmul(a, b) -> np.ndarray:
    """Matrix product over GF(2).  Accumulates in int32 to avoid wraparound."""
    return (np.matmul(np.asarray(a, dtype=np.int32), np.asarray(b, dtype=np.int32)) & 1).astype(np.uint8)


def gf2_rank(mat) -> int:
    """Rank over GF(2) via elimination on integer-packed rows."""
    rows = [int.from_bytes(np.packbits(r, bitorder="little").tobytes(), "little")
            for r in np.asarray(mat, dtype=np.uint8)]
    rank = 0
    for bit in range(np.asarray(mat).shape[1]):
        mask = 1 << bit
        pivot = next((i for i in range(rank, len(rows)) if rows[i] & mask), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i] & mask:
                rows[i] ^= rows[rank]
        rank += 1
    return rank


@dataclass
class LinearCode:
    """An [n, k] binary linear block code given by generator and parity-check matrices."""

    n: int
    k: int
    generator: np.ndarray
    parity_check: np.ndarray
    _h_col_ints: np.ndarray = field(init=False, repr=False, default=None)

    def __post_init__(self):
        if not 0 < self.k < self.n:
            raise ValueError(f"need 0 < k < n, got k={self.k}, n={self.n}")
        self.generator = np.asarray(self.generator, dtype=np.uint8)
        self.parity_check = np.asarray(self.parity_check, dtype=np.uint8)
        if self.generator.shape != (self.k, self.n):
            raise ValueError("generator must be k x n")
        if self.parity_check.shape != (self.n - self.k, self.n):
            raise ValueError("parity-check must be (n-k) x n")
        if gf2_matmul(self.generator, self.parity_check.T).any():
            raise ValueError("G H^T != 0")
        if gf2_rank(self.generator) != self.k:
            raise ValueError("generator is rank deficient")
        if (~self.parity_check.any(axis=0)).any():
            raise ValueError("parity-check matrix has an all-zero column")

    @property
    def h_col_ints(self) -> np.ndarray:
        """Columns of H packed into one machine word each (syndrome hot path)."""
        if self._h_col_ints is None:
            r = self.n - self.k
            if r > 64:
                raise ValueError("packed syndromes support n - k <= 64")
            pow2 = (np.uint64(1) << np.arange(r, dtype=np.uint64))
            self._h_col_ints = (self.parity_check.astype(np.uint64) * pow2[:, None]).sum(axis=0)
        return self._h_col_ints

    def syndrome_int(self, y) -> int:
        """Syndrome of a bit word packed into an integer (bit j = row j of H)."""
        sel = self.h_col_ints[np.asarray(y, dtype=np.uint8) == 1]
        if sel.size == 0:
            return 0
        return int(np.bitwise_xor.reduce(sel))

    def syndrome_ints(self, ys) -> np.ndarray:
        """Packed syndromes of a batch of bit words (rows of `ys`)."""
        r = self.n - self.k
        s = np.matmul(np.asarray(ys, dtype=np.float32), self.parity_check.T.astype(np.float32)) % 2
        pow2 = (np.uint64(1) << np.arange(r, dtype=np.uint64))
        return (s.astype(np.uint64) * pow2[None, :]).sum(axis=1)


def generate_rlc(n: int, k: int, seed: int) -> LinearCode:
    """Random linear code in systematic form, G = [I | P], H = [P^T | I].

    Deterministic in (n, k, seed).  All-zero rows of P are redrawn so that no
    information bit maps to a weight-1 codeword and H keeps nonzero columns.
    """
    if not 0 < k < n:
        raise ValueError(f"need 0 < k < n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    p = rng.integers(0, 2, size=(k, n - k), dtype=np.uint8)
    while True:
        zero_rows = np.flatnonzero(~p.any(axis=1))
        if zero_rows.size == 0:
            break
        p[zero_rows] = rng.integers(0, 2, size=(zero_rows.size, n - k), dtype=np.uint8)
    gen = np.hstack([np.eye(k, dtype=np.uint8), p])
    par = np.hstack([p.T, np.eye(n - k, dtype=np.uint8)])
    return LinearCode(n=n, k=k, generator=gen, parity_check=par)


def encode(u, code: LinearCode) -> np.ndarray:
    """Codeword u G over GF(2); the first k bits equal u (systematic form)."""
    u = as_bits(u, code.k)
    return gf2_matmul(u[None, :], code.generator)[0]


def syndrome(y, code: LinearCode) -> np.ndarray:
    """y H^T over GF(2); all-zero exactly when y is a codeword."""
    y = as_bits(y, code.n)
    return gf2_matmul(y[None, :], code.parity_check.T)[0]


def is_codeword(y, code: LinearCode) -> bool:
    return not syndrome(y, code).any()


def write_matrix_text(mat, path) -> None:
    """Plain-text matrix export: one row of '0'/'1' characters per line."""
    with open(path, "w") as fh:
        for row in np.asarray(mat, dtype=np.uint8):
            fh.write(bits_to_str(row) + "\n")


def read_matrix_text(path) -> np.ndarray:
    with open(path) as fh:
        rows = [as_bits(line.strip()) for line in fh if line.strip()]
    if not rows:
        raise ValueError(f"no matrix rows in {path}")
    if len({r.size for r in rows}) != 1:
        raise ValueError("ragged matrix rows")
    return np.vstack(rows)
