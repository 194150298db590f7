"""Gray-coded square M-QAM: geometry, mapping, hard detection, neighborhoods.

Labels are read in transmission order; a label's integer value packs its bits
most-significant-first, so the 16-QAM label string "1101" is the integer 13.
Bits alternate between the two axes (even-index bits select the in-phase
coordinate, odd-index bits the quadrature coordinate).  Each axis uses a
reflected Gray sequence oriented so that the published 16-QAM layout is
reproduced: label 1101 sits on a corner with nearest-neighbor error strings
{1000, 0100} and diagonal error string {1100}.
"""

import math
from dataclasses import dataclass

import numpy as np

from .gf2code import as_bits

CORNER = "corner"
SIDE = "side"
INNER = "inner"


def _brgc(i: int) -> int:
    return i ^ (i >> 1)


def _bitrev(v: int, m: int) -> int:
    out = 0
    for _ in range(m):
        out = (out << 1) | (v & 1)
        v >>= 1
    return out


def _axis_labels(m_axis: int) -> list:
    # Gray sequence along ascending coordinates; the bit reversal plus
    # complement orients it to match the reference 16-QAM labeling.
    mask = (1 << m_axis) - 1
    return [_bitrev(_brgc(i), m_axis) ^ mask for i in range(1 << m_axis)]


def _string_sort_key(s: int, m: int) -> int:
    # canonical member order: ascending numeric value with transmission-order
    # bit i weighted 2^i
    return _bitrev(s, m)


@dataclass
class Constellation:
    """Immutable square M-QAM geometry and per-label neighborhood error strings."""

    M: int
    bits_per_symbol: int
    d: float
    energy_per_symbol: float
    points: np.ndarray        # complex coordinate per label value
    point_class: list         # CORNER / SIDE / INNER per label value
    e1: list                  # per label: nearest-neighbor error strings (weight 1)
    e2: list                  # per label: diagonal-neighbor error strings (weight 2)
    axis_coords: np.ndarray   # ascending odd multiples of d
    label_grid: np.ndarray    # label value at (i index, q index)
    label_bits: np.ndarray    # (M, bits_per_symbol) uint8 rows

    @property
    def root(self) -> int:
        return int(round(math.sqrt(self.M)))


def build_constellation(M: int, energy_per_symbol: float = 1.0) -> Constellation:
    """Construct the Gray-coded square constellation with unit-average energy
    scaled to `energy_per_symbol`."""
    if M < 16 or (M & (M - 1)) != 0 or (int(math.log2(M)) % 2) != 0:
        raise ValueError(f"M must be an even power of two, >= 16; got {M}")
    bps = int(math.log2(M))
    m_axis = bps // 2
    root = 1 << m_axis
    d = math.sqrt(3.0 * energy_per_symbol / (2.0 * (M - 1)))
    coords = d * (2.0 * np.arange(root) - (root - 1))
    axis = _axis_labels(m_axis)

    points = np.zeros(M, dtype=np.complex128)
    classes = [None] * M
    label_grid = np.zeros((root, root), dtype=np.int64)
    grid_pos = {}
    for ix in range(root):
        for iq in range(root):
            label = 0
            for t in range(m_axis):
                label = (label << 1) | ((axis[ix] >> (m_axis - 1 - t)) & 1)
                label = (label << 1) | ((axis[iq] >> (m_axis - 1 - t)) & 1)
            points[label] = coords[ix] + 1j * coords[iq]
            label_grid[ix, iq] = label
            grid_pos[label] = (ix, iq)
            on_edge = (ix in (0, root - 1)) + (iq in (0, root - 1))
            classes[label] = (INNER, SIDE, CORNER)[on_edge]

    e1 = [None] * M
    e2 = [None] * M
    for label, (ix, iq) in grid_pos.items():
        near, diag = [], []
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            jx, jy = ix + dx, iq + dy
            if 0 <= jx < root and 0 <= jy < root:
                near.append(label ^ int(label_grid[jx, jy]))
        for dx in (1, -1):
            for dy in (1, -1):
                jx, jy = ix + dx, iq + dy
                if 0 <= jx < root and 0 <= jy < root:
                    diag.append(label ^ int(label_grid[jx, jy]))
        e1[label] = tuple(sorted(near, key=lambda s: _string_sort_key(s, bps)))
        e2[label] = tuple(sorted(diag, key=lambda s: _string_sort_key(s, bps)))

    label_bits = ((np.arange(M)[:, None] >> np.arange(bps - 1, -1, -1)[None, :]) & 1).astype(np.uint8)
    return Constellation(M=M, bits_per_symbol=bps, d=d, energy_per_symbol=energy_per_symbol,
                         points=points, point_class=classes, e1=e1, e2=e2,
                         axis_coords=coords, label_grid=label_grid, label_bits=label_bits)


def labels_from_bits(bits, c: Constellation) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % c.bits_per_symbol:
        raise ValueError(f"bit length {bits.size} not divisible by {c.bits_per_symbol}")
    groups = bits.reshape(-1, c.bits_per_symbol).astype(np.int64)
    pow2 = 1 << np.arange(c.bits_per_symbol - 1, -1, -1)
    return groups @ pow2


def bits_from_labels(labels, c: Constellation) -> np.ndarray:
    return c.label_bits[np.asarray(labels, dtype=np.int64)].reshape(-1)


def modulate(x, c: Constellation) -> np.ndarray:
    """Map a bit word onto a sequence of constellation symbols."""
    return c.points[labels_from_bits(as_bits(x), c)]


def detect_labels(symbols, c: Constellation) -> np.ndarray:
    """Nearest-point labels via per-axis quantization (boundaries are
    axis-aligned, so this equals the full nearest-neighbor search).
    Exact boundary ties round toward the smaller coordinate."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    half = c.root - 1
    ix = np.ceil((symbols.real / c.d + half) / 2.0 - 0.5).astype(np.int64)
    iq = np.ceil((symbols.imag / c.d + half) / 2.0 - 0.5).astype(np.int64)
    np.clip(ix, 0, c.root - 1, out=ix)
    np.clip(iq, 0, c.root - 1, out=iq)
    return c.label_grid[ix, iq]


def hard_detect(r_eq, c: Constellation) -> np.ndarray:
    """Hard-detected bit word for an equalized symbol sequence."""
    return bits_from_labels(detect_labels(r_eq, c), c)


def classify_and_neighbors(label, c: Constellation):
    """Point class and the weight-1 / weight-2 neighborhood error strings of a label.

    `label` may be a bit word or an integer label value; the error strings are
    returned as bit arrays in canonical order.
    """
    if isinstance(label, (int, np.integer)):
        value = int(label)
    else:
        value = int(labels_from_bits(as_bits(label, c.bits_per_symbol), c)[0])
    if not 0 <= value < c.M:
        raise ValueError(f"label {value} out of range for M={c.M}")
    e1 = [c.label_bits[v].copy() for v in c.e1[value]]
    e2 = [c.label_bits[v].copy() for v in c.e2[value]]
    return c.point_class[value], e1, e2


def constellation_table_text(c: Constellation) -> str:
    """Fixture dump: label, coordinates in units of d, class, neighborhoods."""
    lines = [f"M={c.M} bits_per_symbol={c.bits_per_symbol} d={c.d!r} Es={c.energy_per_symbol!r}",
             "label  I/d  Q/d  class   E1              E2"]
    bps = c.bits_per_symbol
    fmt = "{label}  {i:+d}  {q:+d}  {cls:<6}  {e1:<14}  {e2}"
    for value in range(c.M):
        pt = c.points[value]
        lines.append(fmt.format(
            label="".join(str(b) for b in c.label_bits[value]),
            i=int(round(pt.real / c.d)), q=int(round(pt.imag / c.d)),
            cls=c.point_class[value],
            e1=",".join(format(v, f"0{bps}b") for v in c.e1[value]),
            e2=",".join(format(v, f"0{bps}b") for v in c.e2[value])))
    return "\n".join(lines) + "\n"
