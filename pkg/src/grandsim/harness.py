"""Monte Carlo driver: end-to-end pipeline, statistics, validation, emission.

Blocks are processed in fixed-size batches.  Batch b of SNR point p draws all
of its randomness from a counter-based generator keyed by (seed, p, b), and
batch results are always consumed in batch order, so a run is bit-reproducible
for a given (config, seed) regardless of how many workers execute it.  Random
draws inside a batch happen in a fixed order: information bits, fading
coefficients (Rayleigh only), then noise.
"""

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from multiprocessing import get_context

import numpy as np

from . import channel as chan
from .gf2code import LinearCode, encode, generate_rlc, random_bits
from .grand import (ABANDONED, BitLevelDecoder, SymbolLevelDecoder,
                    bit_level_patterns, decode, symbol_level_patterns)
from .likelihood import (StructureTable, build_structure_table,
                         log_structure_prob_factorized, structure_prob_factorized)
from .modem import (Constellation, build_constellation, detect_labels,
                    hard_detect, labels_from_bits, modulate)

BIT_LEVEL = "bit_level"
SYMBOL_LEVEL = "symbol_level"
BOTH = "both"


@dataclass
class SimConfig:
    n: int = 128
    k: int = 103
    M: int = 16
    channel: str = chan.AWGN
    decoder: str = BOTH
    w_th: int = 2
    ebn0_db: tuple = (10.0,)
    seed: int = 1
    min_block_errors: int = 100
    max_blocks: int = 1_000_000
    grid_start: float = 0.0
    grid_step: float = 0.25
    grid_stop: float = 33.0
    top_v: int = 5
    uncoded: bool = False
    workers: int = 1
    batch_size: int = 4096

    def __post_init__(self):
        self.ebn0_db = tuple(float(v) for v in self.ebn0_db)
        bps = int(math.log2(self.M))
        if self.n % bps:
            raise ValueError(f"n={self.n} not divisible by log2(M)={bps}")
        if self.uncoded:
            if self.k != self.n:
                raise ValueError("uncoded mode requires k = n")
        elif not 0 < self.k < self.n:
            raise ValueError("need 0 < k < n (k = n only with uncoded=True)")
        if self.channel not in (chan.AWGN, chan.RAYLEIGH):
            raise ValueError(f"unknown channel {self.channel!r}")
        if self.decoder not in (BIT_LEVEL, SYMBOL_LEVEL, BOTH):
            raise ValueError(f"unknown decoder {self.decoder!r}")
        if self.min_block_errors < 1 or self.max_blocks < 1:
            raise ValueError("need min_block_errors >= 1 and max_blocks >= 1")
        if self.grid_step <= 0 or self.grid_stop < self.grid_start:
            raise ValueError("bad SNR grid spec")
        if not self.ebn0_db:
            raise ValueError("need at least one Eb/N0 point")

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.M))

    @property
    def L(self) -> int:
        return self.n // self.bits_per_symbol

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.grid_start, self.grid_stop + self.grid_step / 2, self.grid_step)

    @property
    def active_decoders(self) -> tuple:
        if self.decoder == BOTH:
            return (BIT_LEVEL, SYMBOL_LEVEL)
        return (self.decoder,)

    def gamma(self, ebn0_db: float) -> float:
        """Average SNR: bits/symbol times code rate times Eb/N0."""
        return self.bits_per_symbol * (self.k / self.n) * 10.0 ** (ebn0_db / 10.0)

    def n0(self, ebn0_db: float) -> float:
        # unit symbol energy, so N0 is the reciprocal of the average SNR
        return 1.0 / self.gamma(ebn0_db)


@dataclass
class SimResult:
    ebn0_db: float
    decoder: str
    channel: str
    w_th: int
    blocks: int
    block_errors: int
    bler: float
    total_tests: int
    avg_tests: float
    abandonments: int
    wall_time: float


CSV_COLUMNS = ("ebn0_db", "decoder", "channel", "w_th", "blocks", "block_errors",
               "bler", "avg_tests", "abandonments")


def run_block(config: SimConfig, code, constellation, table, ebn0_db, rng,
              decoders=None, noiseless=False):
    """Reference single-block pipeline (encode, modulate, fade, equalize,
    detect, decode).  Returns a per-block record; in uncoded mode the decoders
    are skipped and the realized error structure is recorded instead."""
    u = random_bits(rng, config.k)
    x = u if config.uncoded else encode(u, code)
    s = modulate(x, constellation)
    h = chan.sample_fading(config.channel, rng)
    r = chan.transmit(s, h, 0.0 if noiseless else config.n0(ebn0_db), rng)
    y = hard_detect(chan.equalize(r, h), constellation)
    rec = {"x": x, "y": y, "h": h}
    if config.uncoded:
        lx = labels_from_bits(x, constellation)
        ly = labels_from_bits(y, constellation)
        rec["structure"] = _structure_of(lx, ly, constellation)
        return rec
    eff_snr_db = 10.0 * math.log10(abs(h) ** 2 * config.gamma(ebn0_db))
    for name in config.active_decoders:
        if decoders is not None and name in decoders:
            if name == BIT_LEVEL:
                out = decoders[name].decode_bits(y)
            else:
                out = decoders[name].decode_bits(y, eff_snr_db)
        elif name == BIT_LEVEL:
            out = decode(y, code, bit_level_patterns(config.n, config.w_th))
        else:
            out = decode(y, code, symbol_level_patterns(y, table.row_for(eff_snr_db), constellation))
        wrong = (not out.decoded) or (out.codeword_estimate != x).any()
        rec[f"tests_{name}"] = out.tests
        rec[f"error_{name}"] = bool(wrong)
        rec[f"abandoned_{name}"] = out.result == ABANDONED
    return rec


def _structure_of(labels_tx, labels_ry, constellation):
    """Realized (L1, L2) of the per-symbol error strings, or "other" when a
    string falls outside the weight-1/weight-2 neighborhoods."""
    n1 = n2 = 0
    for lt, lr in zip(labels_tx, labels_ry):
        if lt == lr:
            continue
        g = int(lt ^ lr)
        if g in constellation.e1[lr]:
            n1 += 1
        elif g in constellation.e2[lr]:
            n2 += 1
        else:
            return "other"
    return (n1, n2)


# ---------------------------------------------------------------------------
# batched engine

_SHARED = {}


def _philox(seed, point_idx, batch_idx):
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF,
                    ((point_idx + 1) << 32) + batch_idx], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _build_state(config: SimConfig):
    constellation = build_constellation(config.M, 1.0)
    code = None if config.uncoded else generate_rlc(config.n, config.k, config.seed)
    table = build_structure_table(config.L, config.M, config.grid,
                                  w_th=config.w_th, top_v=config.top_v)
    state = {
        "config": config,
        "constellation": constellation,
        "code": code,
        "table": table,
        "pow2_label": (1 << np.arange(config.bits_per_symbol - 1, -1, -1)).astype(np.int64),
    }
    if not config.uncoded:
        if BIT_LEVEL in config.active_decoders:
            state["bit_decoder"] = BitLevelDecoder(code, config.w_th)
        if SYMBOL_LEVEL in config.active_decoders:
            state["symbol_decoder"] = SymbolLevelDecoder(code, constellation, table)
    return state


def _pipeline_batch(state, ebn0_db, rng, size):
    """Draw and push one batch through the channel; returns tx/rx labels."""
    config = state["config"]
    c = state["constellation"]
    L, bps = config.L, config.bits_per_symbol
    u = rng.integers(0, 2, size=(size, config.k), dtype=np.uint8)
    if config.uncoded:
        x = u
    else:
        g = state["code"].generator
        x = (np.matmul(u.astype(np.float32), g.astype(np.float32)) % 2).astype(np.uint8)
    labels_x = (x.reshape(size * L, bps).astype(np.int64) @ state["pow2_label"]).reshape(size, L)
    s = c.points[labels_x]
    if config.channel == chan.RAYLEIGH:
        ab = rng.normal(0.0, math.sqrt(0.5), size=(size, 2))
        h = ab[:, 0] + 1j * ab[:, 1]
    else:
        h = np.ones(size, dtype=np.complex128)
    n0 = config.n0(ebn0_db)
    z = rng.normal(0.0, 1.0, size=(size, L, 2)) * math.sqrt(n0 / 2.0)
    r = h[:, None] * s + z[:, :, 0] + 1j * z[:, :, 1]
    r_eq = r * (np.conj(h) / np.abs(h) ** 2)[:, None]
    labels_y = detect_labels(r_eq, c)
    return x, labels_x, h, labels_y


def _run_batch(point_idx, batch_idx, size):
    state = _SHARED
    config = state["config"]
    ebn0_db = config.ebn0_db[point_idx]
    rng = _philox(config.seed, point_idx, batch_idx)
    x, labels_x, h, labels_y = _pipeline_batch(state, ebn0_db, rng, size)
    c = state["constellation"]
    code = state["code"]
    L, bps = config.L, config.bits_per_symbol

    y = c.label_bits[labels_y].reshape(size, config.n)
    s_ints = code.syndrome_ints(y)
    e_strings = labels_x ^ labels_y
    e_any = (e_strings != 0).any(axis=1)
    nz = np.flatnonzero(s_ints != 0)
    out = {}

    if BIT_LEVEL in config.active_decoders:
        dec = state["bit_decoder"]
        errors = int(np.count_nonzero(e_any & (s_ints == 0)))  # undetected
        tests_total = size - nz.size  # one test per zero-syndrome block
        abandons = 0
        if nz.size:
            found, tests, ws, rows = dec.lookup_batch(s_ints[nz])
            tests_total += int(tests.sum())
            abandons = int(np.count_nonzero(~found))
            errors += abandons
            e_bits = x[nz] ^ y[nz]
            for j in np.flatnonzero(found):
                supp = dec.support_of(ws[j], rows[j])
                true_supp = np.flatnonzero(e_bits[j])
                if supp.size != true_supp.size or (supp != true_supp).any():
                    errors += 1
        out[BIT_LEVEL] = (errors, tests_total, abandons)

    if SYMBOL_LEVEL in config.active_decoders:
        dec = state["symbol_decoder"]
        table = state["table"]
        errors = int(np.count_nonzero(e_any & (s_ints == 0)))
        tests_total = size - nz.size
        abandons = 0
        gamma = config.gamma(ebn0_db)
        eff_db = 10.0 * np.log10(np.abs(h[nz]) ** 2 * gamma) if nz.size else None
        for pos, j in enumerate(nz):
            row = table.row_for(float(eff_db[pos]))
            found, tests, matches = dec.scan_labels(labels_y[j], row, s_ints[j])
            tests_total += tests
            if not found:
                abandons += 1
                errors += 1
                continue
            true_pos = np.flatnonzero(e_strings[j])
            truth = [(int(p), int(e_strings[j, p])) for p in true_pos]
            if matches != truth:
                errors += 1
        out[SYMBOL_LEVEL] = (errors, tests_total, abandons)
    return size, out


def _batch_plan(max_blocks, batch_size):
    sizes = []
    done = 0
    while done < max_blocks:
        b = min(batch_size, max_blocks - done)
        sizes.append(b)
        done += b
    return sizes


def _consume_point(config, point_idx, pool):
    """Feed batches to the pool (or run inline) and aggregate in batch order."""
    sizes = _batch_plan(config.max_blocks, config.batch_size)
    blocks = 0
    agg = {name: [0, 0, 0] for name in config.active_decoders}

    def absorb(size, out):
        nonlocal blocks
        blocks += size
        for name, (err, tests, aband) in out.items():
            agg[name][0] += err
            agg[name][1] += tests
            agg[name][2] += aband

    def stopped():
        return all(agg[name][0] >= config.min_block_errors for name in config.active_decoders)

    if pool is None:
        for b, size in enumerate(sizes):
            absorb(*_run_batch(point_idx, b, size))
            if stopped():
                break
    else:
        window = config.workers * 2
        pending = {}
        next_submit = 0
        next_consume = 0
        while next_consume < len(sizes):
            while next_submit < len(sizes) and len(pending) < window:
                pending[next_submit] = pool.submit(_run_batch, point_idx,
                                                   next_submit, sizes[next_submit])
                next_submit += 1
            absorb(*pending.pop(next_consume).result())
            next_consume += 1
            if stopped():
                for fut in pending.values():
                    fut.cancel()
                break
    return blocks, agg


def run_simulation(config: SimConfig):
    """Sweep the configured Eb/N0 points; returns one SimResult per point and
    active decoder, deterministic in (config, seed) and worker count."""
    if config.uncoded:
        raise ValueError("run_simulation needs a coded configuration; "
                         "use validate_structures for uncoded runs")
    global _SHARED
    _SHARED = _build_state(config)
    results = []
    pool = None
    try:
        if config.workers > 1:
            pool = ProcessPoolExecutor(max_workers=config.workers,
                                       mp_context=get_context("fork"))
        for point_idx, ebn0 in enumerate(config.ebn0_db):
            t0 = time.perf_counter()
            blocks, agg = _consume_point(config, point_idx, pool)
            dt = time.perf_counter() - t0
            for name in config.active_decoders:
                err, tests, aband = agg[name]
                results.append(SimResult(
                    ebn0_db=ebn0, decoder=name, channel=config.channel,
                    w_th=config.w_th, blocks=blocks, block_errors=err,
                    bler=err / blocks, total_tests=tests, avg_tests=tests / blocks,
                    abandonments=aband, wall_time=dt))
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    return results


# ---------------------------------------------------------------------------
# structure validation (uncoded runs)

def validate_structures(config: SimConfig):
    """Tally realized error structures of uncoded transmission and put them
    next to their predicted probabilities, with standard errors and ranks."""
    if not config.uncoded:
        raise ValueError("validate_structures requires uncoded=True")
    if config.channel != chan.AWGN:
        raise ValueError("structure validation is defined for the AWGN channel (h = 1)")
    constellation = build_constellation(config.M, 1.0)
    c = constellation
    L = config.L
    ix_of = np.zeros(config.M, dtype=np.int64)
    iq_of = np.zeros(config.M, dtype=np.int64)
    for i in range(c.root):
        for q in range(c.root):
            ix_of[c.label_grid[i, q]] = i
            iq_of[c.label_grid[i, q]] = q
    pow2 = (1 << np.arange(config.bits_per_symbol - 1, -1, -1)).astype(np.int64)

    report = {"config": asdict(config), "points": []}
    for point_idx, ebn0 in enumerate(config.ebn0_db):
        gamma = config.gamma(ebn0)
        n0 = 1.0 / gamma
        counts = np.zeros((L + 1, L + 1), dtype=np.int64)
        other = 0
        blocks = 0
        for batch_idx, size in enumerate(_batch_plan(config.max_blocks, config.batch_size)):
            rng = _philox(config.seed, point_idx, batch_idx)
            u = rng.integers(0, 2, size=(size, config.n), dtype=np.uint8)
            labels_x = (u.reshape(size * L, -1).astype(np.int64) @ pow2).reshape(size, L)
            s = c.points[labels_x]
            z = rng.normal(0.0, 1.0, size=(size, L, 2)) * math.sqrt(n0 / 2.0)
            r = s + z[:, :, 0] + 1j * z[:, :, 1]
            half = c.root - 1
            jx = np.clip(np.ceil((r.real / c.d + half) / 2.0 - 0.5), 0, half).astype(np.int64)
            jq = np.clip(np.ceil((r.imag / c.d + half) / 2.0 - 0.5), 0, half).astype(np.int64)
            dx = np.abs(jx - ix_of[labels_x])
            dq = np.abs(jq - iq_of[labels_x])
            is_e1 = (dx + dq) == 1
            is_e2 = (dx == 1) & (dq == 1)
            is_other = ((dx + dq) > 0) & ~is_e1 & ~is_e2
            bad = is_other.any(axis=1)
            other += int(np.count_nonzero(bad))
            ok = ~bad
            n1 = is_e1[ok].sum(axis=1)
            n2 = is_e2[ok].sum(axis=1)
            np.add.at(counts, (n1, n2), 1)
            blocks += size

        dp = math.sqrt(3.0 * gamma / (config.M - 1))
        rows = []
        for l1 in range(L + 1):
            for l2 in range(L + 1 - l1):
                if l1 + l2 == 0:
                    continue
                rows.append((log_structure_prob_factorized(l1, l2, L, config.M, dp), l1, l2))
        rows.sort(key=lambda t: (-t[0], t[1] + 2 * t[2], t[2]))
        freqs = counts / blocks if blocks else counts.astype(float)
        by_freq = sorted(((freqs[l1, l2], l1, l2) for _, l1, l2 in rows), reverse=True)
        emp_rank = {(l1, l2): i + 1 for i, (_, l1, l2) in enumerate(by_freq)}
        entries = []
        for rank, (lp, l1, l2) in enumerate(rows, start=1):
            p = math.exp(lp)
            cnt = int(counts[l1, l2])
            freq = cnt / blocks if blocks else None
            stderr = math.sqrt(freq * (1 - freq) / blocks) if blocks else None
            entries.append({"L1": l1, "L2": l2, "p_theory": p, "count": cnt,
                            "freq": freq, "stderr": stderr,
                            "rank_theory": rank, "rank_empirical": emp_rank[(l1, l2)]})
        report["points"].append({"ebn0_db": ebn0, "d_prime": dp, "blocks": blocks,
                                 "other_blocks": other,
                                 "zero_error_blocks": int(counts[0, 0]),
                                 "structures": entries})
    return report


# ---------------------------------------------------------------------------
# emission

def _fmt(v):
    return repr(float(v)) if isinstance(v, float) else str(v)


def emit_results(results, fmt: str, path, config: SimConfig = None):
    """Write simulation results as CSV (fixed column set) or JSON (adds the
    full config and seed).  CSV bytes are a pure function of the results."""
    if not results:
        raise ValueError("no results to emit")
    if fmt == "csv":
        lines = [",".join(CSV_COLUMNS)]
        for r in results:
            d = asdict(r)
            lines.append(",".join(_fmt(d[col]) for col in CSV_COLUMNS))
        payload = "\n".join(lines) + "\n"
    elif fmt == "json":
        doc = {"config": asdict(config) if config else None,
               "results": [asdict(r) for r in results]}
        payload = json.dumps(doc, indent=2) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    with open(path, "w") as fh:
        fh.write(payload)
    return path


def load_results_json(path):
    with open(path) as fh:
        doc = json.load(fh)
    return [SimResult(**row) for row in doc["results"]]


def emit_validation(report, fmt: str, path):
    """Write a validate_structures report (CSV rows per structure, or JSON)."""
    if fmt == "csv":
        lines = ["ebn0_db,L1,L2,p_theory,count,freq,stderr,rank_theory,rank_empirical"]
        for pt in report["points"]:
            for e in pt["structures"]:
                lines.append(",".join([
                    _fmt(pt["ebn0_db"]), str(e["L1"]), str(e["L2"]), _fmt(e["p_theory"]),
                    str(e["count"]),
                    "" if e["freq"] is None else _fmt(e["freq"]),
                    "" if e["stderr"] is None else _fmt(e["stderr"]),
                    str(e["rank_theory"]), str(e["rank_empirical"])]))
        payload = "\n".join(lines) + "\n"
    elif fmt == "json":
        payload = json.dumps(report, indent=2) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    with open(path, "w") as fh:
        fh.write(payload)
    return path
