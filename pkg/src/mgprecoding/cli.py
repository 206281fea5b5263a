"""Command-line entry point (``mgprecoding``).

Exit codes: 0 success, 1 a verification check failed, 2 bad arguments,
3 configuration error, 4 corrupt or unreadable data file, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import FULL_SCALE, ConfigError, ExperimentConfig, config_from_mapping, load_config, resolve_scenario
from .cooperation import overhead_uniform, scheme_precoder
from .harness import curves_csv, drop_channel, run_experiment, sweep_interferers, sweep_power, write_outputs
from .metrics import default_modcod_table
from .precoder import PrecodingError
from .storage import DataFileError, read_matrix, write_matrix
from .verify import interlacing_suite, invariant_suite, smse_order_suite

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3, 4, 5

log = logging.getLogger("mgprecoding")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _float_list(text: str):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_run_options(p):
    p.add_argument("--config", type=Path, help="YAML experiment config")
    p.add_argument("--paper-scale", action="store_true", help="100 beams in 14 clusters")
    p.add_argument("--scenario", help="icm, 4gc, 7gc, gcm, ref, lmc or 1-6")
    p.add_argument("--flavor", choices=("zf", "mmse"))
    p.add_argument("--mmse-reg", choices=("gram", "standard", "paper_literal"))
    p.add_argument("--drops", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out-dir", type=Path, default=Path("."))


def _build_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.paper_scale:
        overrides["beams.count"] = FULL_SCALE["num_beams"]
        overrides["clusters.size"] = FULL_SCALE["cluster_size"]
    for key, attr in (("cooperation", "scenario"), ("precoder.flavor", "flavor"),
                      ("precoder.mmse_reg", "mmse_reg"), ("run.drops", "drops"),
                      ("run.seed", "seed"), ("run.workers", "workers")):
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "power_dbw", None) is not None:
        overrides["run.power_dbw"] = float(args.power_dbw)
    if getattr(args, "rho", None) is not None:
        overrides["feeder.rho"] = float(args.rho)
    if getattr(args, "interferers", None) is not None:
        overrides["feeder.num_interferers"] = args.interferers
    if getattr(args, "quantized", False):
        overrides["csi.quantized"] = True
    if getattr(args, "max_feeds", None) is not None:
        overrides["csi.max_feeds"] = args.max_feeds
    return config_from_mapping(overrides, cfg)


def cmd_gen_channel(args) -> int:
    cfg = _build_config(args)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    for d in range(cfg.drops):
        ch = drop_channel(cfg, d)
        L = ch.layout
        write_matrix(out / f"channel_{d:04d}.json", ch.entries, "channel", seed=cfg.seed, drop=d,
                     K=L.num_beams, N=L.num_feeds, G=L.num_gateways)
    print(f"wrote {cfg.drops} channel drops to {out}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    M, head = read_matrix(args.path)
    print(json.dumps(head, sort_keys=True))
    print(f"shape {M.shape[0]}x{M.shape[1]}, max |entry| {np.abs(M).max() if M.size else 0.0:.6g}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _build_config(args)
    res = run_experiment(cfg)
    paths = write_outputs(res, args.out_dir)
    if args.snapshots:
        snap = args.out_dir / "snapshots"
        snap.mkdir(exist_ok=True)
        for d in range(cfg.drops):
            ch = drop_channel(cfg, d)
            write_matrix(snap / f"channel_{d:04d}.json", ch.entries, "channel", seed=cfg.seed, drop=d,
                         K=ch.layout.num_beams, N=ch.layout.num_feeds, G=ch.layout.num_gateways)
            try:
                ps = scheme_precoder(cfg.scheme, ch, cfg.power_w, cfg.flavor, cfg.mmse_reg)
            except PrecodingError:
                continue
            write_matrix(snap / f"precoder_{d:04d}.json", ps.total, "precoder", seed=cfg.seed, drop=d,
                         flavor=cfg.flavor, alpha=ps.alpha, scheme=cfg.scheme.name)
    n_ok = len(res.included)
    mean = res.mean_efficiency() if n_ok else float("nan")
    print(f"{cfg.scheme.name} {cfg.flavor} P={cfg.power_dbw:g} dBW: {n_ok}/{len(res.drops)} drops, "
          f"mean efficiency {mean:.4f} bit/symbol")
    print(f"results: {paths['results']}  summary: {paths['summary']}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _build_config(args)
    scenarios = args.scenarios.split(",") if args.scenarios else None
    if args.kind == "power":
        powers = args.powers if args.powers else None
        rows, _ = sweep_power(cfg, powers, scenarios)
    else:
        rows, _ = sweep_interferers(cfg, args.counts or None, scenarios)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    path = args.out_dir / f"curve_{args.kind}.csv"
    path.write_text(curves_csv(rows))
    for r in rows:
        print(f"{r['scenario']:>4} x={r['x']:<6g} mean={r['mean_efficiency_bps']:.4f} "
              f"excluded={r['excluded']}")
    print(f"curve: {path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    ok = True
    rep = smse_order_suite(args.instances, args.seed, contractive=args.contractive)
    print(rep.line())
    if not rep.ok:
        print(f"  worst margin {rep.worst:.3e}; first failures (index, margin, rho, m): "
              f"{rep.failures[:3]}")
    ok &= rep.ok
    if args.interlacing:
        rep = interlacing_suite(args.interlacing, args.seed)
        print(rep.line())
        ok &= rep.ok
    if args.drops:
        for rep in invariant_suite(args.drops, args.seed).values():
            print(rep.line())
            ok &= rep.ok
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_modcod(args) -> int:
    table = default_modcod_table()
    if args.mode:
        try:
            row = table[args.mode]
        except KeyError:
            print(f"unknown mode {args.mode!r}", file=sys.stderr)
            return EXIT_USAGE
        print(f"{row.efficiency_bps:.3f} {row.required_sinr_db:.2f}")
    elif args.sinr_db is not None:
        print(f"{table.efficiency(args.sinr_db):.3f}")
    else:
        sys.stdout.write(table.to_csv())
    return EXIT_OK


def cmd_overhead(args) -> int:
    try:
        oh = overhead_uniform(resolve_scenario(args.scheme), args.ng, args.k, args.kg, args.g)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(oh.per_gateway[0] if args.per_gateway else oh.total)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mgprecoding", description="Multigateway multibeam precoding simulator")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-channel", help="write channel drops as matrix files")
    _add_run_options(p)
    p.set_defaults(func=cmd_gen_channel)

    p = sub.add_parser("inspect", help="print the header of a matrix file")
    p.add_argument("path", type=Path)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("run", help="run one scenario over many drops")
    _add_run_options(p)
    p.add_argument("--power-dbw", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--interferers", type=int)
    p.add_argument("--quantized", action="store_true", help="quantize the CSI seen by the gateways")
    p.add_argument("--max-feeds", type=int, help="feeds reported per user")
    p.add_argument("--snapshots", action="store_true", help="also write per-drop channel and precoder files")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="efficiency versus power or feeder interferers")
    _add_run_options(p)
    p.add_argument("kind", choices=("power", "interferers"))
    p.add_argument("--powers", type=_float_list, help="comma-separated dBW values")
    p.add_argument("--counts", type=_int_list, help="comma-separated interferer counts")
    p.add_argument("--scenarios", help="comma-separated scenario names")
    p.add_argument("--power-dbw", type=float)
    p.add_argument("--rho", type=float)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="randomized numerical checks")
    p.add_argument("--instances", type=int, default=1000)
    p.add_argument("--interlacing", type=int, default=0, metavar="N", help="also check N random matrices")
    p.add_argument("--drops", type=int, default=0, help="also check precoder invariants on N drops")
    p.add_argument("--contractive", action="store_true", help="scale the feeder coupling to unit spectral norm")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("modcod", help="SINR to spectral efficiency lookup")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--sinr-db", type=float)
    g.add_argument("--mode")
    p.set_defaults(func=cmd_modcod)

    p = sub.add_parser("overhead", help="inter-gateway CSI exchange count")
    p.add_argument("--ng", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--kg", type=int, required=True)
    p.add_argument("--g", type=int, required=True)
    p.add_argument("--scheme", required=True)
    p.add_argument("--per-gateway", action="store_true")
    p.set_defaults(func=cmd_overhead)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataFileError as exc:
        print(f"data file error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (PrecodingError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
