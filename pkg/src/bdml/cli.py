"""Command-line surface: config parsing, CSV ingestion, and dispatch.

Subcommands:
  simulate     run the replication grid and write report.csv / report.md
  estimate     fit the requested methods on a CSV dataset
  prior-audit  sample prior selection-bias draws across a p grid
  asymptotics  run the bias-rate experiment

Config files are strict JSON: unknown keys are rejected so typos fail loudly.
Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import competitors, harness, prior_audit
from .asymptotics import RateExperiment, run_rate_experiment
from .harness import GridConfig, SimulationAbort, _atomic_write
from .model_core import Dataset

MODES = ("simulate", "estimate", "prior-audit", "asymptotics")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class ConfigError(ValueError):
    """Malformed or invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    mode: str = "simulate"
    dataset: str | None = None
    outcome_col: str = "y"
    treatment_col: str = "d"
    methods: tuple = harness.DEFAULT_METHODS
    sigma_eps_grid: tuple = (1.0, 2.0, 4.0)
    n: int = 200
    p: int = 100
    reps: int = 200
    iters: int = 5000
    burnin: int = 1000
    level: float = 0.95
    seed: int = 0
    workers: int = 1
    out: str = "."
    # prior-audit settings
    p_grid: tuple = (10, 100, 1000)
    draws: int = 20000
    nu0: float = 4.0
    # asymptotics settings
    cells: tuple = ((200, 50), (400, 80), (800, 126), (1600, 200))
    rate_reps: int = 100
    tau_scale: float = 1.0

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0 < self.level < 1:
            raise ConfigError(f"level must be in (0, 1), got {self.level}")
        if self.iters <= self.burnin:
            raise ConfigError(
                f"iters must exceed burnin, got iters={self.iters} burnin={self.burnin}"
            )
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.mode == "estimate" and not self.dataset:
            raise ConfigError("estimate mode requires a dataset path")
        unknown = set(self.methods) - set(competitors.METHODS)
        if unknown:
            raise ConfigError(f"unknown methods {sorted(unknown)}")


_LIST_KEYS = {"methods", "sigma_eps_grid", "p_grid", "cells"}


def config_to_dict(cfg: ExperimentConfig) -> dict:
    out = dataclasses.asdict(cfg)
    for key in _LIST_KEYS:
        val = out[key]
        out[key] = [list(v) if isinstance(v, tuple) else v for v in val]
    return out


def _from_dict(raw: dict, validate: bool = True) -> ExperimentConfig:
    fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(raw) - fields
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    clean = dict(raw)
    for key in _LIST_KEYS & set(clean):
        val = clean[key]
        if not isinstance(val, list):
            raise ConfigError(f"config key {key!r} must be a list")
        clean[key] = tuple(tuple(v) if isinstance(v, list) else v for v in val)
    cfg = ExperimentConfig(**clean)
    if validate:
        cfg.validate()
    return cfg


def parse_config(path: str, validate: bool = True) -> ExperimentConfig:
    """Load and validate a JSON experiment config, filling defaults.

    validate=False defers semantic validation (the schema check still runs),
    for callers that apply command-line overrides before validating.
    """
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a JSON object, got {type(raw).__name__}")
    return _from_dict(raw, validate=validate)


@dataclass
class IngestionReport:
    n: int
    p: int
    columns: list
    dropped_columns: list = field(default_factory=list)
    missing_count: int = 0


def load_dataset(path: str, outcome_col: str = "y", treatment_col: str = "d"):
    """Read a headed CSV into a centered Dataset.

    The outcome and treatment columns are selected by name; every other
    column becomes a control regressor. Missing or non-numeric cells are an
    error naming the row and column (no silent imputation).
    Returns (Dataset, IngestionReport).
    """
    try:
        fh = open(path, newline="")
    except FileNotFoundError:
        raise ConfigError(f"dataset file not found: {path}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty file") from None
        rows = list(reader)
    for col in (outcome_col, treatment_col):
        if col not in header:
            raise ConfigError(f"{path}: column {col!r} not in header {header}")
    if len(rows) <= 2:
        raise ConfigError(f"{path}: need more than 2 data rows, got {len(rows)}")

    values = np.empty((len(rows), len(header)))
    bad = []
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ConfigError(
                f"{path}: row {i + 2} has {len(row)} cells, header has {len(header)}"
            )
        for j, cell in enumerate(row):
            try:
                values[i, j] = float(cell)
            except ValueError:
                bad.append((i + 2, header[j], cell))
    if bad:
        detail = "; ".join(
            f"row {r} column {c!r} = {v!r}" for r, c, v in bad[:10]
        )
        raise ConfigError(f"{path}: {len(bad)} missing or non-numeric cells: {detail}")

    y_idx = header.index(outcome_col)
    d_idx = header.index(treatment_col)
    x_idx = [j for j in range(len(header)) if j not in (y_idx, d_idx)]
    data = Dataset(
        y=values[:, y_idx], d=values[:, d_idx], x=values[:, x_idx]
    ).center()
    report = IngestionReport(
        n=data.n, p=data.p,
        columns=[header[j] for j in x_idx],
    )
    return data, report


def _run_simulate(cfg: ExperimentConfig) -> int:
    grid = GridConfig(
        methods=cfg.methods, sigma_eps_grid=cfg.sigma_eps_grid,
        n=cfg.n, p=cfg.p, reps=cfg.reps, iters=cfg.iters, burnin=cfg.burnin,
        level=cfg.level, master_seed=cfg.seed, workers=cfg.workers,
    )
    report = harness.run_grid(grid)
    paths = harness.write_report(report, cfg.out)
    print(f"wrote {paths['csv']} and {paths['md']}")
    return EXIT_OK


def _run_estimate(cfg: ExperimentConfig) -> int:
    data, ingest = load_dataset(cfg.dataset, cfg.outcome_col, cfg.treatment_col)
    print(f"loaded {cfg.dataset}: n={ingest.n}, p={ingest.p}")
    rows = []
    for method in cfg.methods:
        summary = harness._fit_one(method, data, cfg.seed, GridConfig(
            methods=cfg.methods, n=max(ingest.n, 3), p=ingest.p, reps=1,
            iters=cfg.iters, burnin=cfg.burnin, level=cfg.level,
        ))
        rows.append(summary)
        print(f"{method}: point={summary.point:.6f} "
              f"interval=[{summary.interval_lo:.6f}, {summary.interval_hi:.6f}]")
    os.makedirs(cfg.out, exist_ok=True)
    out_path = os.path.join(cfg.out, "estimates.csv")
    lines = ["method,point,interval_lo,interval_hi,level"]
    for s in rows:
        lines.append(f"{s.method},{s.point:.10g},{s.interval_lo:.10g},"
                     f"{s.interval_hi:.10g},{s.level:.6g}")
    _atomic_write(out_path, "\n".join(lines) + "\n")
    print(f"wrote {out_path}")
    return EXIT_OK


def _run_prior_audit(cfg: ExperimentConfig) -> int:
    os.makedirs(cfg.out, exist_ok=True)
    sample_lines = ["model,p,sb"]
    summary = {"draws": cfg.draws, "dispersion": []}
    for model in ("naive", "bdml"):
        for p in cfg.p_grid:
            sb = prior_audit.prior_selection_bias(
                model, int(p), draws=cfg.draws, seed=cfg.seed, nu0=cfg.nu0,
            )
            for val in sb[:1000]:
                sample_lines.append(f"{model},{p},{val:.10g}")
            summary["dispersion"].append(
                {"model": model, "p": int(p), "sd": float(sb.std(ddof=1))}
            )
    sb_path = os.path.join(cfg.out, "prior_sb.csv")
    _atomic_write(sb_path, "\n".join(sample_lines) + "\n")
    summary_path = os.path.join(cfg.out, "prior_sb_summary.json")
    _atomic_write(summary_path, json.dumps(summary, indent=2) + "\n")
    print(f"wrote {sb_path} and {summary_path}")
    return EXIT_OK


def _run_asymptotics(cfg: ExperimentConfig) -> int:
    exp = RateExperiment(cells=cfg.cells, tau_scale=cfg.tau_scale,
                         reps=cfg.rate_reps, seed=cfg.seed)
    result = run_rate_experiment(exp)
    os.makedirs(cfg.out, exist_ok=True)
    lines = ["n,p,method,mean_bias,mc_se,reps"]
    for r in result.rows:
        lines.append(f"{r.n},{r.p},{r.method},{r.mean_bias:.10g},"
                     f"{r.mc_se:.10g},{r.reps}")
    out_path = os.path.join(cfg.out, "rates.csv")
    _atomic_write(out_path, "\n".join(lines) + "\n")
    print(f"wrote {out_path}")
    return EXIT_OK


_DISPATCH = {
    "simulate": _run_simulate,
    "estimate": _run_estimate,
    "prior-audit": _run_prior_audit,
    "asymptotics": _run_asymptotics,
}


def run(cfg: ExperimentConfig) -> int:
    """Dispatch a validated config; returns the process exit code."""
    try:
        cfg.validate()
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return EXIT_USAGE
    try:
        return _DISPATCH[cfg.mode](cfg)
    except (ConfigError,) as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return EXIT_USAGE
    except SimulationAbort as exc:
        print(json.dumps({
            "error": "runtime", "message": str(exc),
            "flagged": [list(map(str, f)) for f in exc.flagged],
        }), file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:
        print(json.dumps({
            "error": "runtime",
            "message": f"{type(exc).__name__}: {exc}",
        }), file=sys.stderr)
        return EXIT_RUNTIME


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bdml",
        description="Bayesian double machine learning estimators and benchmarks",
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        sp = sub.add_parser(mode)
        sp.add_argument("--config", help="JSON config path")
        sp.add_argument("--seed", type=int, help="master seed (overrides config)")
        sp.add_argument("--workers", type=int, help="worker count (overrides config)")
        sp.add_argument("--out", help="output directory (overrides config)")
        if mode == "estimate":
            sp.add_argument("--dataset", help="CSV path (overrides config)")
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        # semantic validation happens in run(), after flag overrides land
        cfg = (parse_config(args.config, validate=False) if args.config
               else ExperimentConfig())
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return EXIT_USAGE
    cfg.mode = args.mode
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.out is not None:
        cfg.out = args.out
    if getattr(args, "dataset", None):
        cfg.dataset = args.dataset
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
