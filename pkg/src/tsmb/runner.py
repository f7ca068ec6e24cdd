"""End-to-end runs: load, optionally inject, split, train one method, evaluate, write artifacts."""

from __future__ import annotations

import contextlib
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import RunConfig, config_from_dict, resolved_dict
from .dataset import CLASSIFICATION, DelayVector, TimeSeriesDataset, fitting_rows, load_csv, split
from .ensemble import (Member, PointModel, TsmbModel, fit_at, member_predictions, perturbed_train,
                       summarise, tdb_train, tde_point_train, tsmb_train, _member_spec)
from .errors import ConfigError, DataError, TsmbError
from .evaluation import (DelayDistributionSummary, EvaluationReport, coverage, delay_distribution,
                         score_predictions)
from .injection import ground_truth, inject_fixed, inject_stochastic, FixedDelaySpec
from .learners import FittedLearner

log = logging.getLogger("tsmb")

MODEL_VERSION = 1
NESTED_METHODS = ("tsmb", "perturbed")


@dataclass
class RunResult:
    report: EvaluationReport
    model: TsmbModel
    delays: DelayDistributionSummary


@contextlib.contextmanager
def stage(name: str):
    """Prefix any package error raised inside with the pipeline stage."""
    t0 = time.perf_counter()
    try:
        yield
    except TsmbError as exc:
        exc.args = (f"[{name}] {exc.args[0] if exc.args else exc}",) + exc.args[1:]
        raise
    log.info("%s took %.2fs", name, time.perf_counter() - t0)


# ---------------------------------------------------------------- data

def load_dataset(cfg: RunConfig) -> TimeSeriesDataset:
    if not cfg.data.path:
        raise ConfigError("config field 'data.path': no dataset given")
    with stage("load"):
        ds = load_csv(cfg.data.path, cfg.data.target_column, cfg.data.task_kind, cfg.data.tick_seconds)
    spec = cfg.injection_spec()
    if spec is not None:
        with stage("inject"):
            ds = inject_fixed(ds, spec) if isinstance(spec, FixedDelaySpec) else inject_stochastic(ds, spec)
    return ds


def read_truth(path) -> tuple:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config field 'truth': sidecar {path} not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config field 'truth': sidecar {path} is not valid JSON") from exc
    if "ground_truth" not in data:
        raise ConfigError(f"config field 'truth': sidecar {path} has no 'ground_truth' entry")
    return tuple(int(d) for d in data["ground_truth"])


def resolve_truth(cfg: RunConfig, dataset: TimeSeriesDataset) -> Optional[tuple]:
    if cfg.truth:
        return read_truth(cfg.truth)
    return ground_truth(dataset)


def truth_sidecar(dataset: TimeSeriesDataset) -> dict:
    info = dict(dataset.metadata["injection"])
    info["ground_truth"] = list(ground_truth(dataset))
    return info


# ---------------------------------------------------------------- training

def train_method(cfg: RunConfig, train: TimeSeriesDataset, truth: Optional[tuple]):
    """Returns (model, model whose members feed the delay histogram)."""
    tcfg = cfg.tsmb_config(train.n_features)
    method = cfg.method
    if method == "tsmb":
        model = tsmb_train(train, tcfg, workers=cfg.workers)
        return model, model
    if method == "tdb":
        pm = tdb_train(train, tcfg, workers=cfg.workers)
        boot = TsmbModel(tuple(Member(dv, None) for dv in pm.bootstrap_delays))
        return pm.as_ensemble(), boot
    if method == "perturbed":
        model = perturbed_train(train, tcfg, sigma=cfg.sigma)
        return model, model
    if method == "tde-point":
        model = tde_point_train(train, tcfg).as_ensemble()
        return model, model
    if method == "no-alignment":
        dv = DelayVector.zeros(train.n_features)
    else:
        if truth is None:
            raise ConfigError("method 'real-delay' needs injection metadata or a 'truth' sidecar")
        dv = DelayVector(tuple(truth), 1)
    model = PointModel(dv, fit_at(train, dv, _member_spec(tcfg, 0))).as_ensemble()
    return model, model


def check_box_fits(cfg: RunConfig, train: TimeSeriesDataset, test: Optional[TimeSeriesDataset] = None) -> None:
    box = cfg.search_box(train.n_features)
    need = max(cfg.score_function().min_rows(), 2)
    for name, part in (("training", train), ("test", test)):
        if part is None:
            continue
        rows = fitting_rows(part, box.upper[:-1], box.upper[-1])
        if rows < need:
            raise ConfigError(f"config field 'box': upper delays {box.upper[:-1]} with window {box.upper[-1]} "
                              f"leave {rows} aligned {name} rows; need {need}")


def common_test_rows(cfg: RunConfig, test: TimeSeriesDataset, model: TsmbModel) -> int:
    """Common test length for every method under this box, so metrics compare row for row."""
    box = cfg.search_box(test.n_features)
    rows = fitting_rows(test, box.upper[:-1], box.upper[-1])
    for mb in model.members:
        rows = min(rows, fitting_rows(test, mb.delay.delays, mb.delay.window))
    if rows < 2:
        raise DataError(f"only {rows} test rows remain after alignment; enlarge the test fraction")
    return rows


# ---------------------------------------------------------------- evaluation

def evaluate_model(cfg: RunConfig, model: TsmbModel, test: TimeSeriesDataset, n_rows: int,
                   baseline: Optional[np.ndarray] = None) -> tuple:
    """(metric value, per-member metrics, coverage by alpha)."""
    task = test.task_kind
    actual = test.target[:n_rows]
    preds = member_predictions(model, test, n_rows)
    dist = summarise(preds)
    value = score_predictions(task, dist.mean, actual)
    members = [score_predictions(task, p, actual) for p in preds]
    cov = {}
    for a in sorted(cfg.alpha, reverse=True):
        lo, hi = dist.interval(a)
        if task == CLASSIFICATION:
            if baseline is None:
                continue
            cov[str(a)] = coverage(lo, hi, baseline)
        else:
            cov[str(a)] = coverage(lo, hi, actual)
    return value, members, cov


def run(cfg: RunConfig, dataset: Optional[TimeSeriesDataset] = None, model: Optional[TsmbModel] = None,
        hist_model: Optional[TsmbModel] = None) -> RunResult:
    """Execute ``cfg.method``; a pre-trained ``model`` skips training (used by B sweeps)."""
    cfg.validate()
    ds = load_dataset(cfg) if dataset is None else dataset
    truth = resolve_truth(cfg, ds)
    if cfg.method == "real-delay" and truth is None:
        raise ConfigError("method 'real-delay' needs injection metadata or a 'truth' sidecar")
    with stage("split"):
        train, _, test = split(ds, cfg.split_spec())
    if test is None:
        raise ConfigError("config field 'split.test': a run needs a test partition")
    check_box_fits(cfg, train, test)

    tcfg = cfg.tsmb_config(train.n_features)
    point = None
    if model is None:
        with stage(f"train {cfg.method}"):
            model, hist_model = train_method(cfg, train, truth)
    hist_model = hist_model or model
    if cfg.method in ("tsmb", "tdb", "perturbed"):
        with stage("tde baseline"):
            point = tde_point_train(train, tcfg)
    elif cfg.method == "tde-point":
        point = PointModel(model.members[0].delay, model.members[0].learner)

    with stage("evaluate"):
        reach = model if point is None else TsmbModel(model.members + point.as_ensemble().members)
        n_rows = common_test_rows(cfg, test, reach)
        baseline = None
        if point is not None and ds.task_kind == CLASSIFICATION:
            baseline = member_predictions(point.as_ensemble(), test, n_rows)[0]
        value, member_metrics, cov = evaluate_model(cfg, model, test, n_rows, baseline)
        hist = delay_distribution(hist_model, tcfg.box, truth=truth,
                                  point_estimates=None if point is None else point.delay.delays,
                                  feature_names=ds.feature_names)

    report = EvaluationReport(
        method=cfg.method, score_kind=cfg.score.kind, task_kind=ds.task_kind,
        metric="auc" if ds.task_kind == CLASSIFICATION else "r2", value=value, n_test_rows=n_rows,
        members=[member_record(b, mb) for b, mb in enumerate(model.members)],
        member_metrics=member_metrics, coverage=cov,
        stats={"B": model.B, "train_rows": train.m, "test_rows_available": test.m,
               "objective_evaluations": int(sum(mb.evaluations for mb in hist_model.members)),
               "tde_delay": None if point is None else list(point.delay.as_point()),
               "truth": None if truth is None else list(truth)},
        config=resolved_dict(cfg),
    )
    return RunResult(report, model, hist)


def member_record(b: int, mb: Member) -> dict:
    return {"index": b, "delays": list(mb.delay.delays), "window": mb.delay.window,
            "score": None if mb.score is None else float(mb.score), "evaluations": int(mb.evaluations)}


def train_for_sweep(cfg: RunConfig, b_list: Sequence[int], dataset: Optional[TimeSeriesDataset] = None):
    """Train once at ``max(b_list)``; smaller B are member prefixes of the same model."""
    if not b_list:
        raise ConfigError("B list is empty")
    if any((not isinstance(b, int)) or b < 1 for b in b_list):
        raise ConfigError(f"B list must hold positive integers, got {list(b_list)}")
    if len(set(b_list)) != len(b_list):
        raise ConfigError(f"B list has duplicate entries: {list(b_list)}")
    if cfg.method not in NESTED_METHODS:
        raise ConfigError(f"config field 'method': B sweeps need one of {NESTED_METHODS}")
    cfg.B = max(b_list)
    cfg.validate()
    ds = load_dataset(cfg) if dataset is None else dataset
    train, _, test = split(ds, cfg.split_spec())
    check_box_fits(cfg, train, test)
    with stage(f"train {cfg.method} B={cfg.B}"):
        full, _ = train_method(cfg, train, resolve_truth(cfg, ds))
    return ds, full


def sweep_b(cfg: RunConfig, b_list: Sequence[int], dataset: Optional[TimeSeriesDataset] = None) -> dict:
    ds, full = train_for_sweep(cfg, b_list, dataset)
    results = {}
    for b in b_list:
        sub = _copy_config(cfg)
        sub.B = b
        results[b] = run(sub, dataset=ds, model=full.prefix(b))
    return results


def _copy_config(cfg: RunConfig) -> RunConfig:
    return config_from_dict(json.loads(json.dumps(cfg.to_dict())))


# ---------------------------------------------------------------- artifacts

def model_to_dict(model: TsmbModel, cfg: RunConfig) -> dict:
    return {"format_version": MODEL_VERSION, "method": cfg.method, "config": resolved_dict(cfg),
            "members": [dict(member_record(b, mb), learner=mb.learner.to_dict())
                        for b, mb in enumerate(model.members)]}


def model_from_dict(data: dict) -> TsmbModel:
    if data.get("format_version") != MODEL_VERSION:
        raise DataError(f"unsupported model format_version {data.get('format_version')!r}")
    members = []
    for rec in data["members"]:
        members.append(Member(DelayVector(tuple(rec["delays"]), int(rec["window"])),
                              FittedLearner.from_dict(rec["learner"]), rec["score"], int(rec["evaluations"])))
    return TsmbModel(tuple(members))


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def load_model(path) -> TsmbModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def write_outputs(result: RunResult, cfg: RunConfig, out) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(dumps(result.report.to_dict()), encoding="utf-8")
    (out / "report.txt").write_text(result.report.summary_table(), encoding="utf-8")
    (out / "model.json").write_text(dumps(model_to_dict(result.model, cfg)), encoding="utf-8")
    (out / "delays.csv").write_text(result.delays.to_csv(), encoding="utf-8")
    (out / "config.resolved.json").write_text(dumps(cfg.to_dict()), encoding="utf-8")
    return out


def summary_line(result: RunResult, out) -> str:
    r = result.report
    return json.dumps({"method": r.method, "metric": r.metric, "value": r.value, "B": len(r.members),
                       "n_test_rows": r.n_test_rows, "coverage": r.coverage, "out": str(out)}, sort_keys=True)
