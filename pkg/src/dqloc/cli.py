"""Command line entry point: ``dqloc gen | run | compare``."""

import argparse
import json
import logging
import sys

from . import harness


def _common(p):
    p.add_argument("--preset", choices=sorted(harness.PRESETS))
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output-dir", dest="output_dir")
    p.add_argument("--delta", type=float, help="DDQL step size")
    p.add_argument("--t-max", dest="t_max", type=int, help="DDQL iterations")
    p.add_argument("--ts", dest="T_s", type=int, help="re-measurement period (multi-sampling)")
    p.add_argument("--update-mode", dest="update_mode", choices=["jacobi", "gauss_seidel"])
    p.add_argument("--cost-form", dest="cost_form", choices=["literal", "residual"])
    p.add_argument("--metric-stride", dest="metric_stride", type=int)
    p.add_argument("--delta-r", dest="delta_R", type=float, help="TV rotation step size")
    p.add_argument("--delta-t", dest="delta_T", type=float, help="TV translation step size")
    p.add_argument("--iters-r", dest="iters_R", type=int)
    p.add_argument("--iters-t", dest="iters_T", type=int)
    p.add_argument("--init", choices=list(harness.INITS))


def _overrides(args):
    keys = (
        "output_dir", "delta", "t_max", "T_s", "update_mode", "cost_form", "metric_stride",
        "delta_R", "delta_T", "iters_R", "iters_T", "init", "solver",
    )
    return {k: getattr(args, k, None) for k in keys if getattr(args, k, None) is not None}


def _config(args):
    if getattr(args, "config", None):
        return harness.load_config(args.config, preset=args.preset, seed=args.seed, **_overrides(args))
    if args.seed is None:
        raise harness.ConfigError("--seed is required without --config")
    return harness.preset_config(args.preset or "custom", args.seed, **_overrides(args))


def cmd_gen(args):
    cfg = _config(args)
    doc = harness.write_instance(cfg)
    print(f"wrote {cfg.output_dir}/instance.json ({doc['instance_id']})")
    return harness.EXIT_OK


def cmd_run(args):
    cfg = _config(args)
    status = harness.run_experiment(cfg)
    print(f"artifacts in {cfg.output_dir} (status {status})")
    return status


def cmd_compare(args):
    a = harness.load_trace(args.trace_a)
    b = harness.load_trace(args.trace_b)
    report = harness.compare_runs(a, b)
    print(json.dumps(report, indent=2, sort_keys=True))
    return harness.EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="dqloc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a network + measurement instance")
    _common(p)
    p.add_argument("--config")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="run a localization experiment")
    _common(p)
    p.add_argument("--config")
    p.add_argument("--solver", choices=list(harness.SOLVERS))
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="compare two trace CSVs")
    p.add_argument("trace_a")
    p.add_argument("trace_b")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (harness.ConfigError, ValueError, KeyError, OSError) as exc:
        print(f"dqloc: error: {exc}", file=sys.stderr)
        return harness.EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
