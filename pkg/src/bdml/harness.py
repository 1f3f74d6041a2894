"""Replication engine for the coverage/RMSE/width benchmark.

Runs every requested method over a grid of noise levels, drawing a fresh
dataset per replication, and aggregates per-(method, noise) rows of RMSE,
frequentist coverage of the causal coefficient, and average interval width.
Replication seeds are derived from (master seed, method, noise level,
replication index) so adding or removing a method never perturbs the draws
seen by the others.
"""

from __future__ import annotations

import concurrent.futures
import csv
import os
import tempfile
import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from . import competitors
from .competitors import EstimateSummary
from .dgp import default_design, generate
from .sur import SurPrior, alpha_summary, bdml_fit

DEFAULT_METHODS = (
    "BDML-Basic", "BDML-Hier", "Naive", "HCPH", "Linero",
    "FDML-Full", "FDML-Split",
)

CSV_COLUMNS = ("method", "sigma_eps", "n", "p", "coverage", "rmse",
               "avg_width", "reps", "mc_se_coverage")


class SimulationAbort(RuntimeError):
    """Raised when a cell's replication failure rate exceeds the cap."""

    def __init__(self, message, flagged):
        super().__init__(message)
        self.flagged = flagged


@dataclass(frozen=True)
class GridConfig:
    methods: tuple = DEFAULT_METHODS
    sigma_eps_grid: tuple = (1.0, 2.0, 4.0)
    n: int = 200
    p: int = 100
    reps: int = 200
    iters: int = 5000
    burnin: int = 1000
    level: float = 0.95
    master_seed: int = 0
    workers: int = 1
    max_failure_rate: float = 0.05

    def __post_init__(self):
        if not self.methods:
            raise ValueError("method list must be nonempty")
        unknown = set(self.methods) - set(competitors.METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if not 0 < self.level < 1:
            raise ValueError(f"level must be in (0,1), got {self.level}")
        if self.iters <= self.burnin:
            raise ValueError("need iters > burnin")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass
class ReportRow:
    method: str
    sigma_eps: float
    n: int
    p: int
    coverage: float
    rmse: float
    avg_width: float
    reps: int
    mc_se_coverage: float


@dataclass
class SimReport:
    rows: list
    flagged: list = field(default_factory=list)  # (method, sigma_eps, rep, error)
    config: GridConfig | None = None

    def row(self, method: str, sigma_eps: float) -> ReportRow:
        for r in self.rows:
            if r.method == method and r.sigma_eps == sigma_eps:
                return r
        raise KeyError((method, sigma_eps))


def replication_seed(master_seed: int, method: str, sigma_eps: float,
                     rep: int) -> np.random.SeedSequence:
    """Independent seed stream per (method, noise level, replication)."""
    return np.random.SeedSequence(entropy=(
        int(master_seed),
        zlib.crc32(method.encode()),
        int(round(sigma_eps * 10**6)),
        int(rep),
    ))


def metrics(points, intervals, truth: float):
    """(rmse, coverage, mean width) over replications.

    Interval endpoints containing the truth exactly count as covered.
    """
    points = np.asarray(points, dtype=float)
    if points.size == 0 or points.size != len(intervals):
        raise ValueError("points and intervals must be nonempty and equal length")
    rmse = float(np.sqrt(np.mean((points - truth) ** 2)))
    los = np.array([lo for lo, _ in intervals], dtype=float)
    his = np.array([hi for _, hi in intervals], dtype=float)
    coverage = float(np.mean((los <= truth) & (truth <= his)))
    width = float(np.mean(his - los))
    return rmse, coverage, width


def _fit_one(method: str, data, seed: int, cfg: GridConfig) -> EstimateSummary:
    iters, burnin, level = cfg.iters, cfg.burnin, cfg.level
    if method in ("BDML-Basic", "BDML-Hier"):
        prior = SurPrior(hierarchical=(method == "BDML-Hier"))
        draws = bdml_fit(data, prior=prior, iters=iters, burnin=burnin,
                         seed=seed, store_coef=False)
        mean, (lo, hi) = alpha_summary(draws, level=level)
        return EstimateSummary(method=method, point=mean, interval_lo=lo,
                               interval_hi=hi, level=level)
    if method == "Naive":
        return competitors.naive_fit(data, iters, burnin, seed, level)
    if method == "HCPH":
        return competitors.hcph_fit(data, iters, burnin, seed, level)
    if method == "Linero":
        return competitors.linero_fit(data, iters, burnin, seed, level)
    if method == "FDML-Full":
        return competitors.fdml_fit(data, "full", iters, burnin, seed, level)
    if method == "FDML-Split":
        return competitors.fdml_fit(data, "half", iters, burnin, seed, level)
    if method == "OLS":
        return competitors.ols_fit(data, level)
    raise ValueError(f"unknown method {method!r}")


def _run_replication(args):
    """One (method, noise, rep) cell unit; returns the fit or the error text."""
    cfg, method, sigma_eps, rep = args
    ss = replication_seed(cfg.master_seed, method, sigma_eps, rep)
    data_ss, fit_ss = ss.spawn(2)
    design = default_design(sigma_eps, n=cfg.n, p=cfg.p)
    data, truth = generate(design, rng=np.random.default_rng(data_ss))
    fit_seed = int(fit_ss.generate_state(1)[0])
    try:
        summary = _fit_one(method, data.center(), fit_seed, cfg)
    except Exception as exc:  # flagged, never silently dropped
        return rep, None, f"{type(exc).__name__}: {exc}", truth.alpha
    return rep, summary, None, truth.alpha


def run_grid(cfg: GridConfig, fit_override=None) -> SimReport:
    """Run the full (method x noise) grid and aggregate.

    fit_override, when given, replaces the estimator dispatch with a callable
    (method, data, seed, cfg) -> EstimateSummary; used for stub-estimator
    tests of the aggregation path.
    """
    report = SimReport(rows=[], config=cfg)
    global _FIT_OVERRIDE
    _FIT_OVERRIDE = fit_override
    for method in cfg.methods:
        for sigma_eps in cfg.sigma_eps_grid:
            tasks = [(cfg, method, sigma_eps, rep) for rep in range(cfg.reps)]
            runner = _run_replication if fit_override is None else _run_replication_override
            if cfg.workers > 1 and fit_override is None:
                with concurrent.futures.ProcessPoolExecutor(cfg.workers) as pool:
                    results = list(pool.map(_run_replication, tasks))
            else:
                results = [runner(t) for t in tasks]
            results.sort(key=lambda r: r[0])  # deterministic reduction order
            points, intervals = [], []
            truth = None
            for rep, summary, err, alpha_true in results:
                truth = alpha_true
                if err is not None:
                    report.flagged.append((method, sigma_eps, rep, err))
                    continue
                points.append(summary.point)
                intervals.append((summary.interval_lo, summary.interval_hi))
            n_fail = cfg.reps - len(points)
            if n_fail / cfg.reps > cfg.max_failure_rate:
                raise SimulationAbort(
                    f"{method} at sigma_eps={sigma_eps}: {n_fail}/{cfg.reps} "
                    f"replications failed (cap {cfg.max_failure_rate:.0%})",
                    flagged=report.flagged,
                )
            rmse, coverage, width = metrics(points, intervals, truth)
            n_ok = len(points)
            report.rows.append(ReportRow(
                method=method, sigma_eps=sigma_eps, n=cfg.n, p=cfg.p,
                coverage=coverage, rmse=rmse, avg_width=width, reps=n_ok,
                mc_se_coverage=float(np.sqrt(coverage * (1 - coverage) / n_ok)),
            ))
    return report


def _run_replication_override(args):
    cfg, method, sigma_eps, rep = args
    ss = replication_seed(cfg.master_seed, method, sigma_eps, rep)
    data_ss, fit_ss = ss.spawn(2)
    design = default_design(sigma_eps, n=cfg.n, p=cfg.p)
    data, truth = generate(design, rng=np.random.default_rng(data_ss))
    fit_seed = int(fit_ss.generate_state(1)[0])
    try:
        summary = _FIT_OVERRIDE(method, data.center(), fit_seed, cfg)
    except Exception as exc:
        return rep, None, f"{type(exc).__name__}: {exc}", truth.alpha
    return rep, summary, None, truth.alpha


_FIT_OVERRIDE = None


def _atomic_write(path: str, text: str) -> None:
    """Write via a temp file in the target directory plus rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def report_csv_text(report: SimReport) -> str:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in report.rows:
        writer.writerow([
            r.method, f"{r.sigma_eps:.6g}", r.n, r.p,
            f"{r.coverage:.6f}", f"{r.rmse:.6f}", f"{r.avg_width:.6f}",
            r.reps, f"{r.mc_se_coverage:.6f}",
        ])
    return buf.getvalue()


def report_markdown_text(report: SimReport) -> str:
    lines = [
        "| Method | sigma_eps | n | p | Coverage | RMSE | Avg. Width |",
        "| --- | --- | --- | --- | --- | --- | --- |",
    ]
    for r in report.rows:
        lines.append(
            f"| {r.method} | {r.sigma_eps:.6g} | {r.n} | {r.p} "
            f"| {r.coverage:.2f} | {r.rmse:.2f} | {r.avg_width:.2f} |"
        )
    if report.flagged:
        lines.append("")
        lines.append(f"Flagged replications: {len(report.flagged)}")
        for method, sigma_eps, rep, err in report.flagged:
            lines.append(f"- {method} sigma_eps={sigma_eps:.6g} rep={rep}: {err}")
    return "\n".join(lines) + "\n"


def write_report(report: SimReport, out_dir: str) -> dict:
    """Emit report.csv and report.md atomically; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "csv": os.path.join(out_dir, "report.csv"),
        "md": os.path.join(out_dir, "report.md"),
    }
    _atomic_write(paths["csv"], report_csv_text(report))
    _atomic_write(paths["md"], report_markdown_text(report))
    return paths


def ci_config(cfg: GridConfig | None = None, reps: int = 50) -> GridConfig:
    """Smaller-budget variant of a config for constrained environments."""
    base = cfg if cfg is not None else GridConfig()
    if reps < 50:
        raise ValueError(f"reps must be >= 50, got {reps}")
    return replace(base, reps=reps)
