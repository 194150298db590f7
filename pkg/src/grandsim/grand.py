"""Error-pattern enumeration and the two decoders.

Bit-level GRAND tests patterns in increasing Hamming weight; symbol-level
GRAND tests patterns whose per-symbol error strings come from the received
labels' neighborhood sets, in the order given by a structure lookup table.
Both share the enumeration conventions fixed here:

* the all-zero pattern is always tested first and counted;
* support sets enumerate in colexicographic order;
* mixed structures enumerate their weight-1 position assignments in
  colexicographic order;
* per-position error strings use the canonical member order (ascending
  numeric value with transmission-order bit i weighted 2^i), and the
  highest position's member varies fastest.

``decode`` runs any pattern source naively; ``BitLevelDecoder`` and
``SymbolLevelDecoder`` precompute candidate syndromes so the Monte Carlo
harness avoids per-pattern Python loops while emitting identical outcomes.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .gf2code import LinearCode, as_bits
from .modem import Constellation, labels_from_bits

DECODED = "decoded"
ABANDONED = "abandoned"


@dataclass
class DecodeOutcome:
    result: str
    codeword_estimate: object  # bit array when decoded, else None
    tests: int

    @property
    def decoded(self) -> bool:
        return self.result == DECODED


def _colex(n: int, w: int):
    """Support sets of size w over range(n), colexicographic order."""
    if w == 0:
        yield ()
        return
    for last in range(w - 1, n):
        for rest in _colex(last, w - 1):
            yield rest + (last,)


def bit_pattern_count(n: int, w_th: int) -> int:
    return sum(math.comb(n, w) for w in range(w_th + 1))


def bit_level_patterns(n: int, w_th: int):
    """All patterns of weight <= w_th: the zero pattern, then weight classes in
    increasing order, colex support order within each class."""
    if not 0 <= w_th <= n:
        raise ValueError(f"need 0 <= w_th <= n, got {w_th}")
    yield np.zeros(n, dtype=np.uint8)
    for w in range(1, w_th + 1):
        for supp in _colex(n, w):
            e = np.zeros(n, dtype=np.uint8)
            e[list(supp)] = 1
            yield e


def symbol_level_patterns(y, table_row, c: Constellation):
    """Structure-ordered patterns built from the received word's neighborhoods.

    `table_row` is a sequence whose entries start with (L1, L2); trailing
    fields (such as the stored probability) are ignored.
    """
    y = as_bits(y)
    bps = c.bits_per_symbol
    labels = labels_from_bits(y, c)
    L = labels.size
    yield np.zeros(y.size, dtype=np.uint8)
    for row in table_row:
        l1, l2 = int(row[0]), int(row[1])
        k = l1 + l2
        if k == 0 or k > L:
            continue
        for supp in _colex(L, k):
            for e1_sel in _colex(k, l1):
                e1_at = {supp[i] for i in e1_sel}
                member_lists = [c.e1[labels[pos]] if pos in e1_at else c.e2[labels[pos]]
                                for pos in supp]
                for combo in itertools.product(*member_lists):
                    e = np.zeros(y.size, dtype=np.uint8)
                    for pos, s in zip(supp, combo):
                        e[pos * bps:(pos + 1) * bps] = c.label_bits[s]
                    yield e


def decode(y, code: LinearCode, patterns) -> DecodeOutcome:
    """Run a pattern source in order; return on the first code-book member.

    Membership uses syndrome(y) == syndrome(e), equivalent to a zero syndrome
    of y XOR e by linearity.
    """
    y = as_bits(y, code.n)
    tests = 0
    if code.n - code.k <= 64:
        target = code.syndrome_int(y)
        col = code.h_col_ints
        for e in patterns:
            tests += 1
            nz = np.flatnonzero(e)
            s = int(np.bitwise_xor.reduce(col[nz])) if nz.size else 0
            if s == target:
                return DecodeOutcome(DECODED, y ^ e, tests)
    else:
        target = (y @ code.parity_check.T.astype(np.int64)) & 1
        for e in patterns:
            tests += 1
            s = (e.astype(np.int64) @ code.parity_check.T.astype(np.int64)) & 1
            if (s == target).all():
                return DecodeOutcome(DECODED, y ^ e, tests)
    return DecodeOutcome(ABANDONED, None, tests)


def _colex_combos_array(n: int, w: int) -> np.ndarray:
    """Vectorized colex support enumeration as an (count, w) index array."""
    if w == 0:
        return np.zeros((1, 0), dtype=np.int32)
    if w == 1:
        return np.arange(n, dtype=np.int32)[:, None]
    prev = _colex_combos_array(n, w - 1)  # prefix of length comb(k, w-1) covers positions < k
    chunks = []
    for k in range(w - 1, n):
        head = prev[:math.comb(k, w - 1)]
        tail = np.full((head.shape[0], 1), k, dtype=np.int32)
        chunks.append(np.hstack([head, tail]))
    return np.vstack(chunks)


class BitLevelDecoder:
    """Weight-ordered GRAND with a precomputed first-match syndrome index.

    For a fixed code and abandonment threshold the enumeration is fixed, so
    the first pattern matching any syndrome value (and its position, hence
    the test count) can be tabulated once.
    """

    def __init__(self, code: LinearCode, w_th: int):
        if not 0 <= w_th <= code.n:
            raise ValueError(f"need 0 <= w_th <= n, got {w_th}")
        self.code = code
        self.w_th = w_th
        self.total_patterns = bit_pattern_count(code.n, w_th)
        col = code.h_col_ints
        self._combos = {w: _colex_combos_array(code.n, w) for w in range(1, w_th + 1)}
        syns, weights, rows = [], [], []
        for w in range(1, w_th + 1):
            cw = self._combos[w]
            s = col[cw[:, 0]].copy()
            for t in range(1, w):
                s ^= col[cw[:, t]]
            syns.append(s)
            weights.append(np.full(s.size, w, dtype=np.int8))
            rows.append(np.arange(s.size, dtype=np.int64))
        if syns:
            all_syns = np.concatenate(syns)
            all_w = np.concatenate(weights)
            all_rows = np.concatenate(rows)
            uniq, first = np.unique(all_syns, return_index=True)
            self._uniq = uniq
            self._tests = first.astype(np.int64) + 2  # zero pattern occupies test 1
            self._weight = all_w[first]
            self._row = all_rows[first]
        else:
            self._uniq = np.empty(0, dtype=np.uint64)
            self._tests = self._weight = self._row = np.empty(0, dtype=np.int64)

    def lookup_batch(self, s_ints):
        """For nonzero syndromes: found mask, test counts, matched supports.

        Abandoned entries carry tests equal to the full enumeration size.
        """
        s_ints = np.asarray(s_ints, dtype=np.uint64)
        pos = np.searchsorted(self._uniq, s_ints)
        pos_c = np.minimum(pos, max(self._uniq.size - 1, 0))
        found = (self._uniq.size > 0) & (self._uniq[pos_c] == s_ints)
        tests = np.where(found, self._tests[pos_c], self.total_patterns)
        return found, tests, self._weight[pos_c], self._row[pos_c]

    def support_of(self, weight: int, row: int) -> np.ndarray:
        return self._combos[int(weight)][int(row)]

    def decode_bits(self, y) -> DecodeOutcome:
        y = as_bits(y, self.code.n)
        s = self.code.syndrome_int(y)
        if s == 0:
            return DecodeOutcome(DECODED, y.copy(), 1)
        found, tests, w, row = (x[0] for x in self.lookup_batch([s]))
        if not found:
            return DecodeOutcome(ABANDONED, None, int(tests))
        est = y.copy()
        est[self.support_of(w, row)] ^= 1
        return DecodeOutcome(DECODED, est, int(tests))


class SymbolLevelDecoder:
    """Structure-ordered GRAND driven by a lookup table row per effective SNR.

    Candidate syndromes are precomputed per (symbol position, received label,
    neighborhood member); a decode scans row by row through arrays built in
    exact enumeration order, so test counts equal the naive decoder's.
    """

    def __init__(self, code: LinearCode, c: Constellation, table):
        if code.n % c.bits_per_symbol:
            raise ValueError("codeword length not divisible by bits per symbol")
        self.code = code
        self.c = c
        self.table = table
        self.L = code.n // c.bits_per_symbol
        if table.L != self.L:
            raise ValueError(f"table built for L={table.L}, code needs L={self.L}")
        bps, M, L = c.bits_per_symbol, c.M, self.L
        col = code.h_col_ints
        # syndrome of every possible string value at every position
        syn_all = np.zeros((L, M), dtype=np.uint64)
        for pos in range(L):
            cols = col[pos * bps:(pos + 1) * bps]
            for t in range(bps):
                on = (c.label_bits[:, t] == 1)
                syn_all[pos, on] ^= cols[t]
        self._cnt1 = np.array([len(c.e1[v]) for v in range(M)], dtype=np.int64)
        self._cnt2 = np.array([len(c.e2[v]) for v in range(M)], dtype=np.int64)
        w1, w2 = int(self._cnt1.max()), int(self._cnt2.max())
        self._str1 = np.zeros((M, w1), dtype=np.int64)
        self._str2 = np.zeros((M, w2), dtype=np.int64)
        for v in range(M):
            self._str1[v, :self._cnt1[v]] = c.e1[v]
            self._str2[v, :self._cnt2[v]] = c.e2[v]
        self._syn1 = np.zeros((L, M, w1), dtype=np.uint64)
        self._syn2 = np.zeros((L, M, w2), dtype=np.uint64)
        for v in range(M):
            self._syn1[:, v, :self._cnt1[v]] = syn_all[:, c.e1[v]]
            self._syn2[:, v, :self._cnt2[v]] = syn_all[:, c.e2[v]]

    # -- per-block scan ----------------------------------------------------

    def _arrays(self, labels):
        c1 = self._cnt1[labels]
        c2 = self._cnt2[labels]
        arrs1 = [self._syn1[i, labels[i], :c1[i]] for i in range(self.L)]
        arrs2 = [self._syn2[i, labels[i], :c2[i]] for i in range(self.L)]
        return arrs1, arrs2

    def _level(self, t, arrs1, cache):
        """Flat syndrome array of all t weight-1 strings over colex supports,
        with cumulative lengths per leading position for reconstruction."""
        if t in cache:
            return cache[t]
        if t == 1:
            arr = np.concatenate(arrs1) if arrs1 else np.empty(0, np.uint64)
            cum = np.concatenate([[0], np.cumsum([a.size for a in arrs1])]).astype(np.int64)
        else:
            prev, prev_cum = self._level(t - 1, arrs1, cache)
            chunks, cum = [], np.zeros(self.L + 1, dtype=np.int64)
            total = 0
            for k in range(t - 1, self.L):
                plen = prev_cum[k]
                if plen and arrs1[k].size:
                    block = (prev[:plen, None] ^ arrs1[k][None, :]).ravel()
                    chunks.append(block)
                    total += block.size
                cum[k + 1] = total
            cum[:t] = 0
            arr = np.concatenate(chunks) if chunks else np.empty(0, np.uint64)
        cache[t] = (arr, cum)
        return cache[t]

    def _recon_level(self, t, idx, labels, cache):
        arr, cum = cache[t]
        k = int(np.searchsorted(cum, idx, side="right")) - 1
        within = idx - cum[k]
        width = self._cnt1[labels[k]]
        if t == 1:
            return [(k, int(self._str1[labels[k], within]))]
        a, b = divmod(within, width)
        return self._recon_level(t - 1, int(a), labels, cache) + \
            [(k, int(self._str1[labels[k], int(b)]))]

    def _scan_row(self, l1, l2, labels, arrs1, arrs2, cache, s):
        """Return (match_flat_index or None, row_size, matches or None)."""
        if l2 == 0:
            arr, _ = self._level(l1, arrs1, cache)
            hit = np.flatnonzero(arr == s)
            if hit.size:
                idx = int(hit[0])
                return idx, arr.size, self._recon_level(l1, idx, labels, cache)
            return None, arr.size, None
        if (l1, l2) == (0, 1):
            arr = np.concatenate(arrs2)
            hit = np.flatnonzero(arr == s)
            size = arr.size
            if hit.size:
                idx = int(hit[0])
                cum = np.concatenate([[0], np.cumsum([a.size for a in arrs2])])
                k = int(np.searchsorted(cum, idx, side="right")) - 1
                return idx, size, [(k, int(self._str2[labels[k], idx - cum[k]]))]
            return None, size, None
        if (l1, l2) == (1, 1):
            blocks, meta = [], []
            for j in range(1, self.L):
                for i in range(j):
                    if arrs1[i].size and arrs2[j].size:
                        blocks.append((arrs1[i][:, None] ^ arrs2[j][None, :]).ravel())
                        meta.append((i, j, True))
                    if arrs2[i].size and arrs1[j].size:
                        blocks.append((arrs2[i][:, None] ^ arrs1[j][None, :]).ravel())
                        meta.append((i, j, False))
            arr = np.concatenate(blocks) if blocks else np.empty(0, np.uint64)
            hit = np.flatnonzero(arr == s)
            if hit.size:
                idx = int(hit[0])
                off = 0
                for block, (i, j, e1_first) in zip(blocks, meta):
                    if idx < off + block.size:
                        within = idx - off
                        if e1_first:
                            a, b = divmod(within, arrs2[j].size)
                            return idx, arr.size, [(i, int(self._str1[labels[i], a])),
                                                   (j, int(self._str2[labels[j], b]))]
                        a, b = divmod(within, arrs1[j].size)
                        return idx, arr.size, [(i, int(self._str2[labels[i], a])),
                                               (j, int(self._str1[labels[j], b]))]
                    off += block.size
            return None, arr.size, None
        return self._scan_row_generic(l1, l2, labels, s)

    def _scan_row_generic(self, l1, l2, labels, s):
        # exotic structures (weight > 3): stream the naive enumeration
        k = l1 + l2
        size = 0
        match = None
        for supp in _colex(self.L, k):
            for e1_sel in _colex(k, l1):
                e1_at = {supp[i] for i in e1_sel}
                lists = []
                for pos in supp:
                    v = labels[pos]
                    if pos in e1_at:
                        lists.append([(pos, int(st), int(sy)) for st, sy in
                                      zip(self._str1[v, :self._cnt1[v]], self._syn1[pos, v, :self._cnt1[v]])])
                    else:
                        lists.append([(pos, int(st), int(sy)) for st, sy in
                                      zip(self._str2[v, :self._cnt2[v]], self._syn2[pos, v, :self._cnt2[v]])])
                for combo in itertools.product(*lists):
                    acc = 0
                    for _, _, sy in combo:
                        acc ^= sy
                    if match is None and acc == int(s):
                        match = (size, [(pos, st) for pos, st, _ in combo])
                    size += 1
        if match is not None:
            return match[0], size, match[1]
        return None, size, None

    def scan_labels(self, labels, row, s):
        """Scan table `row` for received `labels` against packed syndrome `s`.

        Returns (found, tests, matches) where matches lists (position, string
        value) pairs of the first accepted pattern.  s must be nonzero; the
        zero pattern's test is included in the count.
        """
        labels = np.asarray(labels, dtype=np.int64)
        arrs1, arrs2 = self._arrays(labels)
        cache = {}
        tests = 1
        for entry in row:
            l1, l2 = int(entry[0]), int(entry[1])
            idx, size, matches = self._scan_row(l1, l2, labels, arrs1, arrs2, cache, np.uint64(s))
            if idx is not None:
                return True, tests + idx + 1, matches
            tests += size
        return False, tests, None

    def pattern_bits(self, matches) -> np.ndarray:
        bps = self.c.bits_per_symbol
        e = np.zeros(self.code.n, dtype=np.uint8)
        for pos, st in matches:
            e[pos * bps:(pos + 1) * bps] = self.c.label_bits[st]
        return e

    def decode_bits(self, y, eff_snr_db: float) -> DecodeOutcome:
        y = as_bits(y, self.code.n)
        s = self.code.syndrome_int(y)
        if s == 0:
            return DecodeOutcome(DECODED, y.copy(), 1)
        labels = labels_from_bits(y, self.c)
        found, tests, matches = self.scan_labels(labels, self.table.row_for(eff_snr_db), s)
        if not found:
            return DecodeOutcome(ABANDONED, None, tests)
        return DecodeOutcome(DECODED, y ^ self.pattern_bits(matches), tests)
