"""Error-structure probabilities and the ordered structure lookup table.

An error pattern over L received symbols decomposes into per-symbol error
strings.  Under the extended-neighborhood approximation each nonzero string
is either a nearest-neighbor string (weight 1) or a diagonal-neighbor string
(weight 2), and the probability that a pattern contains exactly L1 of the
former and L2 of the latter has a closed form driven by the per-class
(corner/side/inner) detection probabilities.

Two independent evaluation routes are provided:

* ``structure_prob`` sums the class-split expansion directly: an outer
  multinomial sum over the numbers of corner/side/inner symbols and inner
  sums over how many of each class erred and how many of those errors are
  weight-1 strings.
* ``structure_prob_factorized`` collapses the average over point classes
  first and evaluates a single trinomial term in the log domain.

They agree to floating-point accuracy; the test suite enforces this.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import convolve2d
from scipy.special import erfc

CLASSES = ("corner", "side", "inner")


def q_func(z):
    """Gaussian tail probability Q(z)."""
    out = 0.5 * erfc(np.asarray(z, dtype=np.float64) / math.sqrt(2.0))
    return float(out) if np.ndim(z) == 0 else out


def d_prime(d: float, h: complex, n0: float) -> float:
    """Normalized half-distance d |h| / sqrt(n0 / 2)."""
    if n0 <= 0:
        raise ValueError("n0 must be positive")
    return d * abs(h) / math.sqrt(n0 / 2.0)


def d_prime_from_snr(snr_linear: float, M: int) -> float:
    """d' as a function of the effective post-fading SNR (unit symbol energy)."""
    return math.sqrt(3.0 * snr_linear / (M - 1))


@dataclass
class TypeProbabilities:
    """Per point class: probabilities of correct detection, a weight-1 error
    string and a weight-2 error string."""

    d_prime: float
    p_correct: dict
    p_e1: dict
    p_e2: dict


def type_probs(dp: float) -> TypeProbabilities:
    if dp < 0:
        raise ValueError("d_prime must be non-negative")
    q = q_func(dp)
    p_correct = {
        "corner": (1 - q) ** 2,
        "side": (1 - q) * (1 - 2 * q),
        "inner": (1 - 2 * q) ** 2,
    }
    p_e1 = {
        "corner": 2 * (1 - q) * q,
        "side": 2 * (1 - q) * q + (1 - 2 * q) * q,
        "inner": 4 * (1 - 2 * q) * q,
    }
    p_e2 = {
        "corner": q ** 2,
        "side": 2 * q ** 2,
        "inner": 4 * q ** 2,
    }
    return TypeProbabilities(d_prime=dp, p_correct=p_correct, p_e1=p_e1, p_e2=p_e2)


def class_counts(M: int):
    """Numbers of corner, side and inner points of the square constellation."""
    root = int(round(math.sqrt(M)))
    if root * root != M:
        raise ValueError("M must be a perfect square")
    return 4, 4 * (root - 2), (root - 2) ** 2


def averaged_string_probs(M: int, dp: float):
    """Class-weighted per-symbol probabilities (correct, weight-1, weight-2)."""
    tp = type_probs(dp)
    counts = dict(zip(CLASSES, class_counts(M)))
    pc = sum(counts[c] * tp.p_correct[c] for c in CLASSES) / M
    p1 = sum(counts[c] * tp.p_e1[c] for c in CLASSES) / M
    p2 = sum(counts[c] * tp.p_e2[c] for c in CLASSES) / M
    return pc, p1, p2


def _binom_table(n: int) -> np.ndarray:
    # Pascal triangle in float64; exact for n <= 32 (entries < 2^53)
    t = np.zeros((n + 1, n + 1))
    t[:, 0] = 1.0
    for i in range(1, n + 1):
        t[i, 1:i + 1] = t[i - 1, :i] + t[i - 1, 1:i + 1]
    return t


@lru_cache(maxsize=8)
def _direct_matrix(L: int, M: int, dp: float) -> np.ndarray:
    """All structure probabilities from the class-split expansion.

    Entry [K, J] is the probability of a pattern with K nonzero strings of
    which J have weight 1, i.e. structure (L1, L2) = (J, K - J).  Sums run in
    the linear domain: every term is non-negative, bounded by 1 after the
    multinomial weighting, so double precision is exact to ~1e-13 relative.
    """
    tp = type_probs(dp)
    n_c, n_s, n_i = class_counts(M)
    comb = _binom_table(L)
    # per-class split of K erred symbols into J weight-1 and K-J weight-2 strings
    split = {}
    for cls in CLASSES:
        p1, p2 = tp.p_e1[cls], tp.p_e2[cls]
        b = np.zeros((L + 1, L + 1))
        for k in range(L + 1):
            b[k, :k + 1] = comb[k, :k + 1] * p1 ** np.arange(k + 1) * p2 ** (k - np.arange(k + 1))
        split[cls] = b
    # per-class tables over (symbols of the class, erred, weight-1 among erred)
    tables = {}
    for cls in CLASSES:
        per_m = []
        for m in range(L + 1):
            ks = np.arange(m + 1)
            col = comb[m, :m + 1] * tp.p_correct[cls] ** (m - ks)
            per_m.append(col[:, None] * split[cls][:m + 1, :m + 1])
        tables[cls] = per_m

    out = np.zeros((L + 1, L + 1))
    root_m2 = int(round(math.sqrt(M))) - 2
    log_m = L * math.log(M)
    for l_c in range(L + 1):
        for l_s in range(L + 1 - l_c):
            l_i = L - l_c - l_s
            if root_m2 == 0 and (l_s or l_i):
                continue
            coef = math.exp(
                math.log(comb[L, l_c]) + math.log(comb[L - l_c, l_s])
                + (l_c + l_s) * math.log(4.0)
                + ((l_s + 2 * l_i) * math.log(root_m2) if root_m2 > 0 and (l_s or l_i) else 0.0)
                - log_m)
            w = convolve2d(tables["corner"][l_c], tables["side"][l_s])
            w = convolve2d(w, tables["inner"][l_i])
            out[:w.shape[0], :w.shape[1]] += coef * w
    return out


def structure_prob(L1: int, L2: int, L: int, M: int, dp: float) -> float:
    """Probability of an error pattern with L1 weight-1 and L2 weight-2 strings,
    via the direct class-split summation."""
    if L1 < 0 or L2 < 0 or L1 + L2 > L:
        raise ValueError(f"invalid structure ({L1}, {L2}) for L={L}")
    class_counts(M)
    return float(_direct_matrix(L, M, float(dp))[L1 + L2, L1])


def log_structure_prob_factorized(L1: int, L2: int, L: int, M: int, dp: float) -> float:
    """log of the factorized trinomial closed form; -inf for zero probability."""
    if L1 < 0 or L2 < 0 or L1 + L2 > L:
        raise ValueError(f"invalid structure ({L1}, {L2}) for L={L}")
    pc, p1, p2 = averaged_string_probs(M, dp)
    l0 = L - L1 - L2
    out = (math.lgamma(L + 1) - math.lgamma(L1 + 1) - math.lgamma(L2 + 1)
           - math.lgamma(l0 + 1))
    for count, p in ((L1, p1), (L2, p2), (l0, pc)):
        if count:
            if p == 0.0:
                return -math.inf
            out += count * math.log(p)
    return out


def structure_prob_factorized(L1: int, L2: int, L: int, M: int, dp: float) -> float:
    return math.exp(log_structure_prob_factorized(L1, L2, L, M, dp))


def admissible_structures(L: int, w_th=None):
    """All (L1, L2) with at least one nonzero string, optionally capped so the
    pattern weight L1 + 2 L2 stays within w_th."""
    out = []
    for L1 in range(L + 1):
        for L2 in range(L + 1 - L1):
            if L1 + L2 == 0:
                continue
            if w_th is not None and L1 + 2 * L2 > w_th:
                continue
            out.append((L1, L2))
    return out


@dataclass
class StructureTable:
    """Ordered error-structure lists indexed by an effective-SNR grid (dB)."""

    L: int
    M: int
    w_th: object
    top_v: object
    snr_grid_db: np.ndarray
    rows: list  # per grid value: list of (L1, L2, probability), descending

    def row_index_for(self, eff_snr_db: float) -> int:
        """Nearest grid point after clamping to the grid range."""
        grid = self.snr_grid_db
        x = min(max(eff_snr_db, grid[0]), grid[-1])
        j = int(np.searchsorted(grid, x))
        if j == 0:
            return 0
        if j >= grid.size or x - grid[j - 1] <= grid[j] - x:
            return j - 1
        return j

    def row_for(self, eff_snr_db: float) -> list:
        return self.rows[self.row_index_for(eff_snr_db)]

    def to_text(self) -> str:
        wth = "-" if self.w_th is None else str(self.w_th)
        top = "-" if self.top_v is None else str(self.top_v)
        lines = [f"structure-table v1 L={self.L} M={self.M} wth={wth} top={top} "
                 f"tau={self.snr_grid_db.size}"]
        for snr, row in zip(self.snr_grid_db, self.rows):
            cells = "; ".join(f"{l1},{l2}:{p!r}" for l1, l2, p in row)
            lines.append(f"{float(snr)!r}; {cells}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "StructureTable":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = lines[0].split()
        if head[:2] != ["structure-table", "v1"]:
            raise ValueError("not a v1 structure table")
        fields = dict(item.split("=", 1) for item in head[2:])
        parse = lambda v: None if v == "-" else int(v)
        grid, rows = [], []
        for ln in lines[1:]:
            cells = ln.split("; ")
            grid.append(float(cells[0]))
            row = []
            for cell in cells[1:]:
                st, p = cell.split(":")
                l1, l2 = st.split(",")
                row.append((int(l1), int(l2), float(p)))
            rows.append(row)
        if len(grid) != int(fields["tau"]):
            raise ValueError("grid size does not match header")
        return cls(L=int(fields["L"]), M=int(fields["M"]), w_th=parse(fields["wth"]),
                   top_v=parse(fields["top"]), snr_grid_db=np.asarray(grid), rows=rows)


def build_structure_table(L: int, M: int, snr_grid_db, w_th=None, top_v=None) -> StructureTable:
    """Rank admissible structures by probability for every grid SNR.

    Probabilities come from the factorized closed form evaluated in the log
    domain, which keeps the ordering exact even where deep structures
    underflow linear doubles.  Ties break toward smaller pattern weight, then
    smaller L2.
    """
    grid = np.asarray(snr_grid_db, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("empty SNR grid")
    if grid.size > 1 and not (np.diff(grid) > 0).all():
        raise ValueError("SNR grid must be strictly ascending")
    structures = admissible_structures(L, w_th)
    rows = []
    for snr_db in grid:
        dp = d_prime_from_snr(10.0 ** (snr_db / 10.0), M)
        scored = [(log_structure_prob_factorized(l1, l2, L, M, dp), l1, l2)
                  for l1, l2 in structures]
        scored.sort(key=lambda t: (-t[0], t[1] + 2 * t[2], t[2]))
        row = [(l1, l2, math.exp(lp)) for lp, l1, l2 in scored]
        if top_v is not None:
            row = row[:top_v]
        rows.append(row)
    return StructureTable(L=L, M=M, w_th=w_th, top_v=top_v, snr_grid_db=grid, rows=rows)


def _ceil_log2(x: int) -> int:
    return (x - 1).bit_length()


def table_memory_bits(w_th: int, top_v: int, grid_size: int) -> int:
    """Total storage of the lookup table: bits per structure entry times
    entries per grid value times grid size."""
    if w_th <= 0 or top_v <= 0 or grid_size <= 0:
        raise ValueError("all arguments must be positive")
    lam = _ceil_log2(w_th + 1) + _ceil_log2(w_th // 2 + 1)
    return lam * top_v * grid_size
