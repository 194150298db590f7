"""Command-line interface.

Subcommands: simulate, table, validate-prob, dump-constellation,
dump-patterns.  File-writing commands render a companion PNG figure next to
the delimited output unless --no-plot is given.
"""

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import harness
from .gf2code import as_bits, generate_rlc
from .grand import bit_level_patterns, symbol_level_patterns
from .likelihood import build_structure_table
from .modem import build_constellation, constellation_table_text

_DECODER_ARG = {"bit": harness.BIT_LEVEL, "symbol": harness.SYMBOL_LEVEL, "both": harness.BOTH}


def _parse_sweep(text):
    """Accept 'start:step:stop' or a comma-separated list of dB values."""
    if ":" in text:
        start, step, stop = (float(v) for v in text.split(":"))
        if step <= 0 or stop < start:
            raise argparse.ArgumentTypeError(f"bad sweep spec {text!r}")
        return tuple(np.arange(start, stop + step / 2, step).tolist())
    return tuple(float(v) for v in text.split(","))


def _add_simulate(sub):
    p = sub.add_parser("simulate", help="Monte Carlo BLER / complexity sweep")
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--k", type=int, default=103)
    p.add_argument("--mod", type=int, default=16, metavar="M")
    p.add_argument("--channel", choices=["awgn", "rayleigh"], default="awgn")
    p.add_argument("--decoder", choices=["bit", "symbol", "both"], default="both")
    p.add_argument("--wth", type=int, default=2)
    p.add_argument("--ebn0", type=_parse_sweep, required=True,
                   help="start:step:stop or comma list (dB)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--min-errors", type=int, default=100)
    p.add_argument("--max-blocks", type=int, default=1_000_000)
    p.add_argument("--grid", type=str, default="0:0.25:33",
                   help="lookup-table SNR grid, start:step:stop (dB)")
    p.add_argument("--top", type=int, default=5, help="structures kept per grid value")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--no-plot", action="store_true")


def _add_table(sub):
    p = sub.add_parser("table", help="emit the structure lookup table")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--mod", type=int, default=16, metavar="M")
    p.add_argument("--grid", type=str, default="0:0.25:33")
    p.add_argument("--wth", type=int, default=None)
    p.add_argument("--top", type=int, default=None)
    p.add_argument("--out", type=Path, default=None)


def _add_validate(sub):
    p = sub.add_parser("validate-prob", help="measured vs predicted structure frequencies")
    p.add_argument("--mod", type=int, default=16, metavar="M")
    p.add_argument("--L", type=int, default=32)
    p.add_argument("--ebn0", type=_parse_sweep, required=True)
    p.add_argument("--blocks", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--no-plot", action="store_true")


def _add_dumps(sub):
    p = sub.add_parser("dump-constellation", help="constellation golden fixture")
    p.add_argument("--mod", type=int, default=16, metavar="M")

    q = sub.add_parser("dump-patterns", help="first N error patterns, hex per line")
    q.add_argument("--decoder", choices=["bit", "symbol"], required=True)
    q.add_argument("--count", type=int, default=20, metavar="N")
    q.add_argument("--n", type=int, default=128, help="pattern length (bit decoder)")
    q.add_argument("--wth", type=int, default=3)
    q.add_argument("--mod", type=int, default=16, metavar="M")
    q.add_argument("--y", type=str, default=None,
                   help="received bit string (symbol decoder)")
    q.add_argument("--snr-db", type=float, default=15.0,
                   help="effective SNR ordering the structures (symbol decoder)")


def _hex(bits) -> str:
    # bits packed most-significant-first per byte, transmission order
    return np.packbits(bits).tobytes().hex()


def _cmd_simulate(args) -> int:
    config = harness.SimConfig(
        n=args.n, k=args.k, M=args.mod, channel=args.channel,
        decoder=_DECODER_ARG[args.decoder], w_th=args.wth, ebn0_db=args.ebn0,
        seed=args.seed, min_block_errors=args.min_errors, max_blocks=args.max_blocks,
        grid_start=_parse_sweep(args.grid)[0],
        grid_step=float(args.grid.split(":")[1]) if ":" in args.grid else 0.25,
        grid_stop=_parse_sweep(args.grid)[-1],
        top_v=args.top, workers=args.workers)
    print(f"config: {json.dumps(asdict(config))}")
    results = harness.run_simulation(config)
    for r in results:
        print(f"ebn0={r.ebn0_db:g} {r.decoder}: blocks={r.blocks} bler={r.bler:.3e} "
              f"avg_tests={r.avg_tests:.1f} abandonments={r.abandonments}")
    if args.out:
        harness.emit_results(results, args.format, args.out, config)
        print(f"wrote {args.out}")
        if not args.no_plot:
            from .plots import save_simulation_figure
            fig = args.out.with_suffix(".png")
            save_simulation_figure(results, fig)
            print(f"wrote {fig}")
    return 0


def _cmd_table(args) -> int:
    grid = _parse_sweep(args.grid)
    table = build_structure_table(args.L, args.mod, grid, w_th=args.wth, top_v=args.top)
    text = table.to_text()
    if args.out:
        args.out.write_text(text)
        print(f"wrote {args.out} ({len(table.rows[0])} structures x {len(grid)} grid values)")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_validate(args) -> int:
    n = args.L * int(np.log2(args.mod))
    config = harness.SimConfig(n=n, k=n, M=args.mod, channel="awgn", uncoded=True,
                               ebn0_db=args.ebn0, seed=args.seed,
                               max_blocks=args.blocks, min_block_errors=1)
    print(f"config: {json.dumps(asdict(config))}")
    report = harness.validate_structures(config)
    for pt in report["points"]:
        top = pt["structures"][:5]
        print(f"ebn0={pt['ebn0_db']:g} dB blocks={pt['blocks']}:")
        for e in top:
            freq = "n/a" if e["freq"] is None else f"{e['freq']:.4e}"
            print(f"  [{e['L1']} {e['L2']}] predicted={e['p_theory']:.4e} measured={freq}")
    if args.out:
        harness.emit_validation(report, args.format, args.out)
        print(f"wrote {args.out}")
        if not args.no_plot:
            from .plots import save_validation_figure
            fig = args.out.with_suffix(".png")
            save_validation_figure(report, fig)
            print(f"wrote {fig}")
    return 0


def _cmd_dump_constellation(args) -> int:
    sys.stdout.write(constellation_table_text(build_constellation(args.mod)))
    return 0


def _cmd_dump_patterns(args) -> int:
    if args.decoder == "bit":
        source = bit_level_patterns(args.n, args.wth)
    else:
        if args.y is None:
            raise SystemExit("dump-patterns --decoder symbol requires --y")
        c = build_constellation(args.mod)
        y = as_bits(args.y)
        L = y.size // c.bits_per_symbol
        table = build_structure_table(L, args.mod, [args.snr_db], w_th=args.wth)
        source = symbol_level_patterns(y, table.rows[0], c)
    for i, pattern in enumerate(source):
        if i >= args.count:
            break
        print(_hex(pattern))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="grandsim",
                                     description="GRAND decoding simulator for Gray-coded "
                                                 "square M-QAM over AWGN and Rayleigh fading")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_simulate(sub)
    _add_table(sub)
    _add_validate(sub)
    _add_dumps(sub)
    args = parser.parse_args(argv)
    handlers = {"simulate": _cmd_simulate, "table": _cmd_table,
                "validate-prob": _cmd_validate,
                "dump-constellation": _cmd_dump_constellation,
                "dump-patterns": _cmd_dump_patterns}
    try:
        return handlers[args.command](args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
