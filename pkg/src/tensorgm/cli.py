"""Command-line entry point: ``tensorgm run | presets | check``."""
import argparse
import dataclasses
import json
import sys

from .experiment import ESTIMATORS, PRESETS, ExperimentConfig, rows_to_csv, rows_to_json, run_experiment, write_result


def _dims(text):
    return tuple(int(d) for d in text.replace("x", ",").split(",") if d)


def _entry(text):
    vals = [int(a) for a in text.split(",")]
    if len(vals) != 3 or min(vals) < 1:
        raise argparse.ArgumentTypeError("expected MODE,I,J (1-based)")
    return tuple(vals)


def build_parser():
    p = argparse.ArgumentParser(prog="tensorgm", description="Sparse tensor graphical models: simulation runs.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a replicated simulation")
    r.add_argument("--config", help="JSON file with ExperimentConfig fields (track_entry 1-based); explicit flags override it")
    r.add_argument("--sim", choices=["triangle", "nn", "sim1", "sim2"])
    r.add_argument("--scenario", help=f"preset name ({', '.join(PRESETS)})")
    r.add_argument("--n", type=int, help="sample size (with --dims, overrides the preset)")
    r.add_argument("--dims", type=_dims, help="mode dimensions, e.g. 10,10,20")
    r.add_argument("--reps", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--estimator", choices=list(ESTIMATORS) + ["all"])
    r.add_argument("--T", type=int, help="Tlasso iterations")
    r.add_argument("--C", type=float, help="tuning constant")
    r.add_argument("--v", type=float, nargs="+", dest="v_levels", help="FDR levels")
    r.add_argument("--oracle", action="store_true", default=None, help="also run oracle inference")
    r.add_argument("--track-entry", type=_entry, help="MODE,I,J (1-based) entry whose statistic is collected")
    r.add_argument("--nn-rule", choices=["mutual", "union"], dest="nn_rule")
    r.add_argument("--workers", type=int)
    r.add_argument("--out", help="output file (default: stdout)")
    r.add_argument("--format", choices=["csv", "json"])

    sub.add_parser("presets", help="list scenario presets")

    c = sub.add_parser("check", help="run the built-in oracle checks")
    c.add_argument("--seed", type=int, default=0)
    return p


def config_from_args(args):
    fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
    for key, val in vars(args).items():
        if key in fields and val is not None:
            data[key] = val
    if data.get("track_entry") is not None:
        k, i, j = data["track_entry"]
        data["track_entry"] = (k - 1, i - 1, j - 1)
    if args.n is not None or args.dims is not None:
        if args.n is None or args.dims is None:
            raise ValueError("--n and --dims must be given together")
        data.setdefault("scenario", "custom")
    for key in ("dims", "v_levels"):
        if data.get(key) is not None:
            data[key] = tuple(data[key])
    return ExperimentConfig(**data)


def _cmd_run(args):
    cfg = config_from_args(args)
    result = run_experiment(cfg)
    if cfg.out:
        write_result(result, cfg.out, cfg.format)
    else:
        sys.stdout.write(rows_to_csv(result.rows) if cfg.format == "csv" else rows_to_json(result.rows))
    for f in result.failures:
        print(f"replicate {f['rep']} failed: {f['error']}", file=sys.stderr)
    return 0


def _cmd_presets(args):
    print("name,n,dims")
    for name, (n, dims) in PRESETS.items():
        print(f"{name},{n},{'x'.join(map(str, dims))}")
    return 0


def _cmd_check(args):
    from .checks import run_checks

    failed = 0
    for name, ok, detail in run_checks(args.seed):
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        failed += not ok
    return 1 if failed else 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return {"run": _cmd_run, "presets": _cmd_presets, "check": _cmd_check}[args.command](args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
