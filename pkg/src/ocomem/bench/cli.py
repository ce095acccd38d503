"""Benchmarks and bound checks for online optimization with structured memory.

Exit codes: 0 success, 1 a run or check failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ..bounds import lower_bound_cr, robd_optimal_cr
from ..errors import ConfigError
from ..oracles import offline_optimal_oco
from ..robd import RobdParams, run_robd
from .config import AlgorithmSpec, load_config
from .experiment import (
    FIGURE1_LAMBDAS,
    FIGURE1_PANELS,
    build_lower_bound_instance,
    run_experiment,
    rows_to_csv,
    rows_to_json,
    run_figure1_panel,
    write_rows,
)
from .svg import line_chart
from .verify import run_bound_checks

OPT_SLACK = 1e-9


def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ocomem", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment configuration")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="directory for result files (default: config paths or stdout)")
    run.add_argument("--format", choices=("csv", "json"), default="csv")

    sweep = sub.add_parser("sweep", help="run Optimistic ROBD over a list of lambda values")
    sweep.add_argument("--lambda", dest="lambdas", type=_floats, required=True)
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--out")
    sweep.add_argument("--format", choices=("csv", "json"), default="csv")

    sub.add_parser("verify-bounds", help="check the closed-form bounds against each other")

    fig = sub.add_parser("repro-figure1", help="rerun the 1-d and 2-d benchmark panels")
    fig.add_argument("--seeds", type=int, default=10)
    fig.add_argument("--lambdas", type=_floats, default=list(FIGURE1_LAMBDAS))
    fig.add_argument("--T", type=int, default=200)
    fig.add_argument("--out", default="figure1")

    lb = sub.add_parser("lower-bound", help="run ROBD on the adversarial lower-bound instance")
    lb.add_argument("--m", type=float, required=True)
    lb.add_argument("--alpha", type=float, required=True)
    lb.add_argument("--n", type=int, required=True)
    lb.add_argument("--m-prime", type=float, default=1e8)
    return parser


def _emit(rows, args, config, error=None):
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_rows(rows, out / f"{config.id}.{args.format}", args.format, error)
    elif config.output.get(args.format):
        write_rows(rows, config.output[args.format], args.format, error)
    else:
        sys.stdout.write(rows_to_csv(rows, error) if args.format == "csv" else rows_to_json(rows, error))


def _cmd_run(args, lambdas=None) -> int:
    try:
        config = load_config(args.config)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        config = config.with_seeds([args.seed])
    if lambdas is not None:
        config = config.with_algorithms(AlgorithmSpec("optimistic-robd", lam) for lam in lambdas)

    rows = []
    try:
        run_experiment(config, on_row=rows.append)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        _emit(rows, args, config, error=f"{type(exc).__name__}: {exc}")
        print(f"error: run failed after {len(rows)} rows: {exc}", file=sys.stderr)
        return 1
    _emit(rows, args, config)
    bad = [r for r in rows if r.cost_alg < r.cost_opt - OPT_SLACK * abs(r.cost_opt)]
    if bad:
        print(f"error: {len(bad)} rows beat the hindsight optimum", file=sys.stderr)
        return 1
    return 0


def _cmd_verify_bounds(args) -> int:
    results = run_bound_checks()
    width = max(len(name) for name, _, _ in results)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}")
    return 0 if all(ok for _, ok, _ in results) else 1


def _cmd_figure1(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = range(args.seeds)
    for panel in FIGURE1_PANELS:
        rows = run_figure1_panel(panel, seeds, args.lambdas, args.T)
        write_rows(rows, out / f"figure1_{panel}.csv")
        series: dict = {}
        for setting in ("known", "unknown"):
            pts = []
            for lam in args.lambdas:
                sel = [r for r in rows if r.lam == lam and r.algorithm.endswith(setting)]
                pts.append((lam, float(np.median([r.ratio_opt for r in sel]))))
            series[f"ORBD, w {setting}"] = pts
        lc = float(np.median([r.cost_lc / r.cost_opt for r in rows]))
        series["LC"] = [(lam, lc) for lam in args.lambdas]
        svg = line_chart(series, title=panel.replace("_", " "), xlabel="lambda",
                         ylabel="cost / cost(OPT), median over seeds")
        (out / f"figure1_{panel}.svg").write_text(svg, encoding="utf-8")
        summary = ", ".join(f"{k}: " + " ".join(f"{y:.3f}" for _, y in v) for k, v in series.items())
        print(f"{panel}: {summary}")
    return 0


def _cmd_lower_bound(args) -> int:
    if args.m <= 0 or args.alpha < 1 or args.n < 0 or args.m_prime <= 0:
        print("error: need m > 0, alpha >= 1, n >= 0, m' > 0", file=sys.stderr)
        return 2
    inst = build_lower_bound_instance(args.m, args.m_prime, args.alpha, args.n)
    lam1, _ = robd_optimal_cr(args.m, args.alpha)
    alg = run_robd(inst, RobdParams(lam1, 0.0)).total
    opt = offline_optimal_oco(inst).cost
    print(f"cost(ROBD)={alg:.10g} cost(OPT)={opt:.10g} ratio={alg / opt:.10g} "
          f"lower_bound={lower_bound_cr(args.m, args.alpha):.10g}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "sweep":
        return _cmd_run(args, lambdas=args.lambdas)
    if args.command == "verify-bounds":
        return _cmd_verify_bounds(args)
    if args.command == "repro-figure1":
        return _cmd_figure1(args)
    return _cmd_lower_bound(args)


if __name__ == "__main__":
    sys.exit(main())
