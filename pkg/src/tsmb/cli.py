"""``tsmb`` command line: inject, run, sweep-b, synth.

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.
Logs go to stderr; stdout carries one JSON summary line per run.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import runner
from .config import RunConfig, apply_overrides, load_config
from .dataset import write_csv
from .errors import ConfigError, OptimizationError, TsmbError
from .injection import synth_dataset

log = logging.getLogger("tsmb")


def _int_list(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _common(p: argparse.ArgumentParser, b_help: str, b_type=int):
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--method", choices=("tsmb", "tdb", "perturbed", "tde-point", "no-alignment", "real-delay"))
    p.add_argument("--score", choices=("gcc", "tdmi"))
    p.add_argument("--learner", choices=("gbdt", "linear"))
    p.add_argument("--b", type=b_type, help=b_help)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.add_argument("--alpha", type=_float_list, help="comma-separated interval levels, e.g. 0.05,0.2")
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsmb", description="Delay-aware ensembles for multivariate time series.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inject", help="write a delay-injected copy of the dataset plus a ground-truth sidecar")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("-v", "--verbose", action="count", default=0)

    _common(sub.add_parser("run", help="train and evaluate one method"), "number of ensemble members")
    _common(sub.add_parser("sweep-b", help="evaluate nested ensembles for several B"),
            "comma-separated member counts, e.g. 5,20,100", _int_list)

    p = sub.add_parser("synth", help="write a synthetic delayed regression/classification CSV")
    p.add_argument("--features", type=int, default=3)
    p.add_argument("--length", type=int, default=2000)
    p.add_argument("--delays", type=_int_list, required=True)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--smoothness", type=float, default=2.0)
    p.add_argument("--task", choices=("regression", "classification"), default="regression")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV path; a .truth.json sidecar is written next to it")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def _load(args, b=None) -> RunConfig:
    cfg = load_config(args.config)
    return apply_overrides(cfg, method=args.method, score=args.score, learner=args.learner, B=b,
                           seed=args.seed, workers=args.workers, out=args.out, alpha=args.alpha)


def cmd_inject(args) -> int:
    cfg = load_config(args.config)
    if args.out:
        cfg.out = args.out
    if cfg.injection is None:
        raise ConfigError("config field 'injection': inject needs an injection section")
    cfg.validate()
    ds = runner.load_dataset(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(ds, out / "injected.csv")
    sidecar = runner.truth_sidecar(ds)
    (out / "injected.truth.json").write_text(runner.dumps(sidecar), encoding="utf-8")
    (out / "config.resolved.json").write_text(runner.dumps(cfg.to_dict()), encoding="utf-8")
    print(json.dumps({"data": str(out / "injected.csv"), "truth": str(out / "injected.truth.json"),
                      "rows": ds.m, "ground_truth": sidecar["ground_truth"]}, sort_keys=True))
    return 0


def cmd_run(args) -> int:
    cfg = _load(args, b=args.b)
    result = runner.run(cfg)
    out = runner.write_outputs(result, cfg, cfg.out)
    print(runner.summary_line(result, out))
    return 0


def cmd_sweep_b(args) -> int:
    cfg = _load(args)
    b_list = args.b if args.b is not None else [cfg.B]
    results = runner.sweep_b(cfg, b_list)
    base = Path(cfg.out)
    rows = []
    for b, result in results.items():
        sub = runner._copy_config(cfg)
        sub.B = b
        out = runner.write_outputs(result, sub, base / f"B{b}")
        rows.append({"B": b, "value": result.report.value, "coverage": result.report.coverage})
        print(runner.summary_line(result, out))
    (base / "sweep.json").write_text(runner.dumps({"method": cfg.method, "metric": results[b_list[0]].report.metric,
                                                   "runs": rows}), encoding="utf-8")
    return 0


def cmd_synth(args) -> int:
    if len(args.delays) != args.features:
        raise ConfigError(f"--delays lists {len(args.delays)} values for {args.features} features")
    ds = synth_dataset(args.features, args.length, args.delays, noise_sd=args.noise, seed=args.seed,
                       task_kind=args.task, smoothness=args.smoothness)
    path = Path(args.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_csv(ds, path)
    sidecar = dict(ds.metadata["synthetic"], ground_truth=list(args.delays))
    truth = path.with_suffix(".truth.json")
    truth.write_text(runner.dumps(sidecar), encoding="utf-8")
    print(json.dumps({"data": str(path), "truth": str(truth)}, sort_keys=True))
    return 0


COMMANDS = {"inject": cmd_inject, "run": cmd_run, "sweep-b": cmd_sweep_b, "synth": cmd_synth}


def exit_code(exc: TsmbError) -> int:
    # an optimiser failure reports the category of whatever the objective raised
    if isinstance(exc, OptimizationError) and isinstance(exc.__cause__, TsmbError):
        return exit_code(exc.__cause__)
    return exc.exit_code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except TsmbError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
