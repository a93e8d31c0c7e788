"""Monte-Carlo harness: repeated estimation runs and summary statistics.

Each repetition draws a fresh sample of N path pairs, derives a quantile box
from the first path (2%/98% quantiles for X, 1%/99% for Y, over the
observations kept after the burn-in), runs the adaptive and oracle selectors
off one shared dimension scan, and integrates the squared estimation errors
over the box with composite Simpson quadrature.

Repetition seeds derive from (master seed, repetition index), so runs are
reproducible and repetitions can execute in a process pool without changing
any number. Summaries report 100 * MSE means with per-repetition standard
deviations and mean selected dimensions, one block per drift component.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bases import BasisFamily, HERMITE
from .design import DimPair
from .estimator import FitResult, evaluate_fit
from .quadrature import simpson_grid
from .selection import (
    SelectionConfig,
    scan_dimension_grid,
    select_adaptive_from_scan,
    select_oracle_from_scan,
)
from .simulate import (
    GridSpec,
    PathSample,
    SdeModel,
    SimulationError,
    explanatory_by_name,
    generate_sample,
    make_model,
)

MSE_NODES = 2001
BEAM_GRID_POINTS = 400


@dataclass(frozen=True)
class QuantileBox:
    """Integration box from one path: [a_x, b_x] for X, [a_y, b_y] for Y."""

    a_x: float
    b_x: float
    a_y: float
    b_y: float

    def __post_init__(self):
        if not (self.a_x < self.b_x and self.a_y < self.b_y):
            raise ValueError(f"degenerate quantile box {self}")


def quantile_box(sample: PathSample, path_index: int = 0) -> QuantileBox:
    """Quantile box of one path, burn-in observations excluded."""
    lo = sample.grid.drop_first
    xs = sample.x[path_index, lo:]
    ys = sample.y[path_index, lo:]
    qx = np.quantile(xs, [0.02, 0.98])
    qy = np.quantile(ys, [0.01, 0.99])
    return QuantileBox(a_x=float(qx[0]), b_x=float(qx[1]), a_y=float(qy[0]), b_y=float(qy[1]))


def mse_box(
    fit: FitResult,
    truth: SdeModel,
    box: QuantileBox,
    phi: BasisFamily,
    psi: BasisFamily,
    n_nodes: int = MSE_NODES,
) -> tuple[float, float]:
    """Box-restricted integrated squared errors of the fitted pair."""
    xg, wx = simpson_grid(box.a_x, box.b_x, n_nodes)
    yg, wy = simpson_grid(box.a_y, box.b_y, n_nodes)
    a_hat, b_hat = evaluate_fit(fit, phi, psi, xg, yg)
    ra = a_hat - np.asarray(truth.a(xg), dtype=float)
    rb = b_hat - np.asarray(truth.b(yg), dtype=float)
    return float(wx @ (ra * ra)), float(wy @ (rb * rb))


@dataclass(frozen=True)
class ExperimentConfig:
    """Full experiment protocol; defaults match the benchmark settings."""

    grid: GridSpec = field(default_factory=GridSpec)
    sigma: float = 1.5
    sigma_y: float = 2.0
    x0: float = 0.0
    phi: BasisFamily = HERMITE
    psi: BasisFamily = HERMITE
    selection: SelectionConfig = field(default_factory=SelectionConfig)


@dataclass
class RepRecord:
    """Everything retained from one repetition."""

    rep: int
    seed: int
    failed: bool = False
    error: str = ""
    mse_a: float = math.nan
    mse_b: float = math.nan
    oracle_mse_a: float = math.nan
    oracle_mse_b: float = math.nan
    dims: DimPair | None = None
    oracle_dims: DimPair | None = None
    truncated: bool = False
    oracle_truncated: bool = False
    theta: np.ndarray | None = None
    oracle_theta: np.ndarray | None = None
    box: QuantileBox | None = None
    max_residuals: dict[str, float] | None = None


@dataclass
class ExperimentReport:
    model_id: int
    y_type: str
    n_paths: int
    reps: int
    seed: int
    config: ExperimentConfig
    per_rep: list[RepRecord]
    summary: dict[str, float]
    curves: dict[str, np.ndarray] | None = None

    @property
    def n_failed(self) -> int:
        return sum(1 for r in self.per_rep if r.failed)


def rep_seed(master_seed: int, rep_index: int) -> int:
    """Integer sample seed for one repetition, derived from the master seed."""
    return int(np.random.SeedSequence((master_seed, rep_index)).generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class _RepTask:
    model_id: int
    y_type: str
    n_paths: int
    rep: int
    master_seed: int
    config: ExperimentConfig


def _run_rep(task: _RepTask) -> RepRecord:
    cfg = task.config
    seed = rep_seed(task.master_seed, task.rep)
    record = RepRecord(rep=task.rep, seed=seed)
    model = make_model(task.model_id, sigma=cfg.sigma, x0=cfg.x0)
    spec = explanatory_by_name(task.y_type, sigma_y=cfg.sigma_y)
    try:
        sample = generate_sample(model, spec, cfg.grid, task.n_paths, seed)
    except SimulationError as exc:
        record.failed = True
        record.error = str(exc)
        return record
    box = quantile_box(sample)
    scan = scan_dimension_grid(sample, cfg.phi, cfg.psi, cfg.selection)
    adaptive = select_adaptive_from_scan(scan)
    oracle = select_oracle_from_scan(scan, model, box)
    record.box = box
    record.dims = adaptive.chosen
    record.oracle_dims = oracle.chosen
    record.truncated = adaptive.fit.truncated
    record.oracle_truncated = oracle.fit.truncated
    record.theta = adaptive.fit.theta
    record.oracle_theta = oracle.fit.theta
    record.mse_a, record.mse_b = mse_box(adaptive.fit, model, box, cfg.phi, cfg.psi)
    record.oracle_mse_a, record.oracle_mse_b = mse_box(oracle.fit, model, box, cfg.phi, cfg.psi)
    record.max_residuals = scan.max_residuals
    return record


def summarize(per_rep: Sequence[RepRecord]) -> dict[str, float]:
    """Table-style summary over successful repetitions (100 * MSE scale)."""
    good = [r for r in per_rep if not r.failed]
    out: dict[str, float] = {"n_reps": float(len(per_rep)), "n_failed": float(len(per_rep) - len(good))}
    if not good:
        return out

    def stats(values: list[float], prefix: str, scale: float = 1.0) -> None:
        arr = np.asarray(values, dtype=float) * scale
        out[f"{prefix}_mean"] = float(arr.mean())
        out[f"{prefix}_std"] = float(arr.std(ddof=1)) if arr.size > 1 else 0.0

    stats([r.mse_a for r in good], "mse100_a", 100.0)
    stats([r.mse_b for r in good], "mse100_b", 100.0)
    stats([r.oracle_mse_a for r in good], "mse100_oracle_a", 100.0)
    stats([r.oracle_mse_b for r in good], "mse100_oracle_b", 100.0)
    out["dim_a_mean"] = float(np.mean([r.dims.m1 for r in good]))
    out["dim_b_mean"] = float(np.mean([r.dims.m2 for r in good]))
    out["dim_oracle_a_mean"] = float(np.mean([r.oracle_dims.m1 for r in good]))
    out["dim_oracle_b_mean"] = float(np.mean([r.oracle_dims.m2 for r in good]))
    out["truncated_frac"] = float(np.mean([r.truncated for r in good]))
    return out


def _attach_curves(report: ExperimentReport) -> None:
    good = [r for r in report.per_rep if not r.failed]
    if not good:
        return
    cfg = report.config
    box = good[0].box
    model = make_model(report.model_id, sigma=cfg.sigma, x0=cfg.x0)
    xg = np.linspace(box.a_x, box.b_x, BEAM_GRID_POINTS)
    yg = np.linspace(box.a_y, box.b_y, BEAM_GRID_POINTS)
    a_curves = np.empty((len(good), BEAM_GRID_POINTS))
    b_curves = np.empty((len(good), BEAM_GRID_POINTS))
    for i, rec in enumerate(good):
        fit = FitResult(dims=rec.dims, theta=rec.theta, truncated=rec.truncated)
        a_curves[i], b_curves[i] = evaluate_fit(fit, cfg.phi, cfg.psi, xg, yg)
    report.curves = {
        "x": xg,
        "truth_a": np.asarray(model.a(xg), dtype=float),
        "a": a_curves,
        "y": yg,
        "truth_b": np.asarray(model.b(yg), dtype=float),
        "b": b_curves,
    }


def run_experiment(
    model_id: int,
    y_type: str,
    n_paths: int,
    reps: int,
    seed: int,
    config: ExperimentConfig | None = None,
    workers: int = 1,
    keep_curves: bool = False,
) -> ExperimentReport:
    """Run ``reps`` independent estimation repetitions and summarize them.

    Deterministic given all arguments; ``workers > 1`` distributes
    repetitions over processes without changing any result. Repetitions
    that fail inside the simulator are recorded and excluded from the
    summary rather than aborting the run.
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    config = config or ExperimentConfig()
    tasks = [
        _RepTask(model_id=model_id, y_type=y_type, n_paths=n_paths, rep=r,
                 master_seed=seed, config=config)
        for r in range(reps)
    ]
    if workers > 1 and reps > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            per_rep = list(pool.map(_run_rep, tasks, chunksize=1))
    else:
        per_rep = [_run_rep(t) for t in tasks]
    per_rep.sort(key=lambda r: r.rep)
    report = ExperimentReport(
        model_id=model_id,
        y_type=y_type,
        n_paths=n_paths,
        reps=reps,
        seed=seed,
        config=config,
        per_rep=per_rep,
        summary=summarize(per_rep),
    )
    if keep_curves:
        _attach_curves(report)
    return report


def emit_beam(report: ExperimentReport, which: str, n_curves: int, path) -> None:
    """Write truth plus the first ``n_curves`` estimated curves as CSV.

    Columns are (grid point, truth, rep_1, ..., rep_k). Requires the report
    to have been produced with ``keep_curves=True``.
    """
    if report.curves is None:
        raise ValueError("report has no retained curves; rerun with keep_curves=True")
    if which not in ("a", "b"):
        raise ValueError(f"which must be 'a' or 'b', got {which!r}")
    if n_curves < 0 or n_curves > report.curves[which].shape[0]:
        raise ValueError(f"n_curves must lie in [0, {report.curves[which].shape[0]}]")
    grid = report.curves["x" if which == "a" else "y"]
    truth = report.curves[f"truth_{which}"]
    beams = report.curves[which][:n_curves]
    header = ",".join(["x", "truth"] + [f"rep_{j + 1}" for j in range(n_curves)])
    body = np.column_stack([grid, truth, beams.T])
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in body:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
