"""Command-line entry point: ``iasd-harq {per,throughput,analyze-llr,memory}``.

Results go to ``--out`` as CSV (stdout when omitted).  Exit status is 0 on
success and 2 on any configuration error.
"""

import argparse
import sys

import numpy as np

from .analysis import GAP_HEADER, llr_gap_sweep
from .channel import LinkConfig
from .combiner import MemoryModel, memory_units
from .exceptions import IasdError
from .harness import (PER_HEADER, THROUGHPUT_HEADER, SimConfig, load_config, rows_to_csv,
                      run_per_experiment, run_throughput_experiment, write_csv)

DEFAULT_SNR_GRID = (-6.0, -4.0, -2.0, 0.0, 2.0)
DEFAULT_LLR_SNR_GRID = (10.0, 15.0, 20.0)


def _snr_list(text):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def _mcs_list(text):
    """Parse ``4:0.33,16:0.5`` into [(4, 0.33), (16, 0.5)]."""
    out = []
    for item in text.split(","):
        try:
            mod, rate = item.split(":")
            out.append((int(mod), float(rate)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad MCS {item!r}, expected ORDER:RATE") from None
    return out


def _flatten(values):
    return [v for group in values for v in group] if values else None


def _config(args):
    cfg = load_config(args.config) if args.config else SimConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "scheme", None):
        changes["scheme"] = args.scheme
    if getattr(args, "packets", None):
        changes["packets"] = args.packets
    return cfg.replace(**changes) if changes else cfg


def _emit(args, rows, header):
    if args.out:
        write_csv(args.out, rows, header)
    else:
        sys.stdout.write(rows_to_csv(rows, header))


def cmd_per(args):
    cfg = _config(args)
    rows = run_per_experiment(cfg, _flatten(args.snr_db) or DEFAULT_SNR_GRID, args.workers)
    _emit(args, rows, PER_HEADER)


def cmd_throughput(args):
    cfg = _config(args)
    rows = run_throughput_experiment(cfg, _flatten(args.snr_db) or DEFAULT_SNR_GRID,
                                     args.mcs, args.workers)
    _emit(args, rows, THROUGHPUT_HEADER)


def cmd_analyze_llr(args):
    link = load_config(args.config).link if args.config else LinkConfig()
    rng = np.random.default_rng(0 if args.seed is None else args.seed)
    rows = llr_gap_sweep(link, rng=rng, snr_grid=_flatten(args.snr_db) or DEFAULT_LLR_SNR_GRID,
                         instances=args.instances)
    _emit(args, rows, GAP_HEADER)


def cmd_memory(args):
    print(memory_units(MemoryModel(args.scheme, n_m=args.nm, n_s=args.ns, n_r=args.nr, i=args.i)))


def build_parser():
    p = argparse.ArgumentParser(prog="iasd-harq", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scheme=True):
        sp.add_argument("--config", help="JSON simulation config")
        sp.add_argument("--out", help="CSV output path (default: stdout)")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--snr-db", type=_snr_list, action="append",
                        help="SNR grid in dB, comma or space separated; repeatable")
        if scheme:
            sp.add_argument("--scheme", choices=("none", "blc", "sslc", "slcic"))
            sp.add_argument("--packets", type=int, help="override the packet count")
            sp.add_argument("--workers", type=int,
                            help="worker processes (default: IASD_THREADS or CPU count)")

    sp = sub.add_parser("per", help="packet error rate per transmission index")
    common(sp)
    sp.set_defaults(func=cmd_per)

    sp = sub.add_parser("throughput", help="HARQ throughput per MCS")
    common(sp)
    sp.add_argument("--mcs", type=_mcs_list, help="e.g. 4:0.33,4:0.5,16:0.33")
    sp.set_defaults(func=cmd_throughput)

    sp = sub.add_parser("analyze-llr", help="mixture versus Gaussian LLR gap sweep")
    common(sp, scheme=False)
    sp.add_argument("--instances", type=int, default=1000)
    sp.set_defaults(func=cmd_analyze_llr)

    sp = sub.add_parser("memory", help="memory units kept by a combining scheme")
    sp.add_argument("--scheme", required=True)
    sp.add_argument("--nm", type=int, default=2, help="bits per symbol")
    sp.add_argument("--ns", type=int, default=2, help="streams")
    sp.add_argument("--nr", type=int, default=2, help="receive antennas")
    sp.add_argument("--i", type=int, default=1, help="transmission index")
    sp.set_defaults(func=cmd_memory)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except IasdError as exc:
        print(f"iasd-harq: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
