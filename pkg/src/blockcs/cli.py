"""``bcs`` command line: dataset generation, kernel learning, benchmarks and bound curves.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""
import argparse
import json
import logging
import os
import sys

from . import analysis, bench
from .kernel_learning import learn_kernel

log = logging.getLogger("blockcs")


def _out(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def cmd_gen_data(args, cfg):
    out = args.data or args.out
    bench.write_dataset(cfg, out)
    print(f"wrote {cfg.dataset_size} signals to {out}")


def cmd_learn_kernel(args, cfg):
    data_dir = args.data or cfg.dataset_dir
    if not data_dir:
        raise bench.ConfigError("learn-kernel needs --data or dataset_dir in the config")
    kernel, stats = learn_kernel(bench.read_dataset(data_dir))
    kernel.save(_out(args, "kernel.json"))
    with open(_out(args, "stats.json"), "w") as fh:
        json.dump(stats.to_json(), fh, indent=2)
    print(f"kernel of order {kernel.order} from J={stats.J} signals, s_avg={stats.s_avg:g}")


def cmd_bench_snr(args, cfg):
    rows, _ = bench.bench_snr(cfg)
    path = _out(args, "bench_snr.csv")
    bench.write_csv(path, ["snr_db", "beta", "method", "nmse", "mean_ms"], rows)
    bench.write_sidecar(_out(args, "bench_snr.json"), cfg,
                        {"m": cfg.measurements_for(cfg.ratio)})
    print(path)


def cmd_bench_subsampling(args, cfg):
    rows, _ = bench.bench_subsampling(cfg)
    path = _out(args, "bench_subsampling.csv")
    bench.write_csv(path, ["ratio", "beta", "method", "nmse"], rows)
    bench.write_sidecar(_out(args, "bench_subsampling.json"), cfg,
                        {"m": {str(r): cfg.measurements_for(r) for r in cfg.ratio_grid}})
    print(path)


def cmd_timing(args, cfg):
    rows = bench.timing(cfg)
    path = _out(args, "timing.csv")
    bench.write_csv(path, ["beta", "method", "wall_ms"], rows)
    bench.write_sidecar(_out(args, "timing.json"), cfg, {"m": cfg.measurements_for(cfg.ratio)})
    for beta, method, ms in rows:
        print(f"{beta:>4} {method:<22} {ms if ms == '' else f'{ms:.1f} ms'}")


def cmd_bounds(args, cfg):
    params = analysis.BoundParams(s=args.s, sigma=args.sigma, alpha=args.alpha, m=args.m, n=args.n)
    betas = range(1, args.beta_max + 1)
    rows = analysis.bound_curve(params, betas, exact_blocks=False)
    path = _out(args, "bounds.csv")
    analysis.write_bound_csv(path, rows, params, {"betas": list(betas)})
    undefined = [b for b, _, v in rows if v is None]
    if undefined:
        log.warning("bound undefined ((s-1) mu >= 1) for beta in %s", undefined)
    print(path)


COMMANDS = {
    "gen-data": cmd_gen_data,
    "learn-kernel": cmd_learn_kernel,
    "bench-snr": cmd_bench_snr,
    "bench-subsampling": cmd_bench_subsampling,
    "timing": cmd_timing,
    "bounds": cmd_bounds,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config (overrides the profile)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--profile", default="desk", help="desk | paper | timing | tiny")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="bcs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name in ("gen-data", "learn-kernel"):
            p.add_argument("--data", help="dataset directory")
        if name == "bounds":
            p.add_argument("--s", type=int, default=50)
            p.add_argument("--n", type=int, default=10_000)
            p.add_argument("--m", type=int, default=9_500)
            p.add_argument("--alpha", type=float, default=0.5)
            p.add_argument("--sigma", type=float, default=1e-2)
            p.add_argument("--beta-max", type=int, default=50)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = bench.load_config(args.config, args.profile, args.seed)
        COMMANDS[args.command](args, cfg)
    except (bench.ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.exception("run failed")
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
