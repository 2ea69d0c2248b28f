"""Command line entry points: run, sweep, plot, report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..errors import WeightEvolutionError
from .config import coerce_override, load_config
from .plots import alpha_sweep_plot, convergence_plot, norm_histogram_plot
from .train import run as run_training

log = logging.getLogger("weightevo")

DEFAULT_SWEEP_VALUES = "0.0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0,adaptive"


def _add_we_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("evolution variants")
    group.add_argument("--we.mode", dest="we_mode", choices=["full", "global-only", "local-only"])
    group.add_argument("--we.matching", dest="we_matching", choices=["forward", "reverse"])
    group.add_argument("--we.alpha", dest="we_alpha", help="'adaptive' or a fixed value in [0, 1]")
    group.add_argument("--we.level", dest="we_level", choices=["element", "filter"])
    group.add_argument("--we.without-bn", dest="we_without_bn", action="store_true", default=None)
    group.add_argument("--we.without-conv", dest="we_without_conv", action="store_true", default=None)
    group.add_argument("--baseline", action="store_true", help="disable evolution entirely")


def _collect_overrides(args: argparse.Namespace) -> dict[str, object]:
    overrides: dict[str, object] = {}
    for dotted, attr in (
        ("we.mode", "we_mode"),
        ("we.matching", "we_matching"),
        ("we.level", "we_level"),
        ("we.without_bn", "we_without_bn"),
        ("we.without_conv", "we_without_conv"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            overrides[dotted] = value
    if getattr(args, "we_alpha", None) is not None:
        overrides["we.alpha"] = (
            "adaptive" if args.we_alpha == "adaptive" else coerce_override(args.we_alpha)
        )
    if getattr(args, "baseline", False):
        overrides["we.enabled"] = False
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "epochs", None) is not None:
        overrides["optimizer.epochs"] = args.epochs
    if getattr(args, "output", None) is not None:
        overrides["output_dir"] = args.output
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = coerce_override(value.strip())
    return overrides


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, _collect_overrides(args))
    result = run_training(cfg)
    print(json.dumps(result, indent=2))
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    values = [coerce_override(v) if v != "adaptive" else "adaptive" for v in args.values.split(",")]
    base_overrides = _collect_overrides(args)
    root = Path(args.output) if args.output else None
    leaf = args.param.split(".")[-1]
    results = []
    run_dirs = []
    for value in values:
        overrides = dict(base_overrides)
        overrides[args.param] = value
        tag = f"{leaf}-{value}"
        cfg = load_config(args.config, overrides)
        out = (root / tag) if root else (Path(cfg.output_dir) / tag)
        cfg.output_dir = str(out)
        log.info("sweep %s = %s -> %s", args.param, value, cfg.output_dir)
        results.append({"value": value, "result": run_training(cfg)})
        run_dirs.append(cfg.resolved_output_dir())
    summary_root = root if root else run_dirs[0].parent
    summary_root.mkdir(parents=True, exist_ok=True)
    (summary_root / "sweep-summary.json").write_text(
        json.dumps({"param": args.param, "runs": results}, indent=2)
    )
    if args.param == "we.alpha":
        alpha_sweep_plot(run_dirs, summary_root / "alpha-sweep.png")
    print(json.dumps({"param": args.param, "runs": len(results), "root": str(summary_root)}))
    return 0


def _cmd_plot(args: argparse.Namespace) -> int:
    run_dirs = [Path(d) for d in args.runs]
    out = Path(args.out)
    if args.kind == "convergence":
        path = convergence_plot(run_dirs, out, split=args.split)
    elif args.kind == "alpha-sweep":
        path = alpha_sweep_plot(run_dirs, out)
    else:
        path = norm_histogram_plot(run_dirs[0], out, checkpoint=args.checkpoint)
    print(path)
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    run_dirs = [Path(d) for d in args.runs]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    columns = [
        "run", "model", "dataset", "we_enabled", "final_eval_acc", "best_eval_acc",
        "total_elements_changed", "epochs_with_evolution", "overhead_mean", "wall_time_s",
    ]
    rows = []
    for run_dir in run_dirs:
        result = json.loads((run_dir / "result.json").read_text())
        rows.append([str(result.get(c, result.get("final_eval_acc_mean", ""))) if c != "run" else run_dir.name for c in columns])
    table = "\t".join(columns) + "\n" + "\n".join("\t".join(r) for r in rows) + "\n"
    (out_dir / "report.tsv").write_text(table)
    sys.stdout.write(table)
    figures = [convergence_plot(run_dirs, out_dir / "convergence.png")]
    for run_dir in run_dirs:
        if (run_dir / "best.pt").exists():
            figures.append(
                norm_histogram_plot(run_dir, out_dir / f"{run_dir.name}-norms.png")
            )
    for fig in figures:
        print(fig)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weightevo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="train once from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--epochs", type=int)
    p_run.add_argument("--output", help="output directory (overrides config)")
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config path")
    _add_we_flags(p_run)
    p_run.set_defaults(fn=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a config once per parameter value")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--param", default="we.alpha", help="dotted config path to vary")
    p_sweep.add_argument("--values", default=DEFAULT_SWEEP_VALUES, help="comma-separated values")
    p_sweep.add_argument("--output", help="sweep root directory")
    p_sweep.add_argument("--seed", type=int)
    p_sweep.add_argument("--epochs", type=int)
    p_sweep.add_argument("--set", action="append", metavar="KEY=VALUE")
    _add_we_flags(p_sweep)
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_plot = sub.add_parser("plot", help="render a figure from finished runs")
    p_plot.add_argument("--kind", required=True, choices=["convergence", "alpha-sweep", "norm-histogram"])
    p_plot.add_argument("--runs", nargs="+", required=True)
    p_plot.add_argument("--out", required=True)
    p_plot.add_argument("--split", default="eval", choices=["train", "eval"])
    p_plot.add_argument("--checkpoint", default="best", choices=["best", "last"])
    p_plot.set_defaults(fn=_cmd_plot)

    p_report = sub.add_parser("report", help="tabulate runs and render their figures")
    p_report.add_argument("--runs", nargs="+", required=True)
    p_report.add_argument("--out-dir", required=True)
    p_report.set_defaults(fn=_cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except WeightEvolutionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
