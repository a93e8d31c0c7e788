"""Adaptive dimension selection and the truth-based oracle selector.

Both selectors scan every dimension pair in [1, max_m1] x [1, max_m2] that
passes the stability event, fitting each admissible pair once from a single
cached design assembly at the maximal dimensions (the projection spaces are
nested, so sub-designs are sub-blocks).

The adaptive criterion is ``gamma + pen`` with ``gamma = -|fit|_N^2`` and
``pen = kappa * sigma_sq * (m1 + m2) / (N * T0)``. The oracle criterion is
the box-restricted integrated squared error against the true drift pair,
computable only when the truth is known. Ties break toward the smallest
``m1 + m2``, then the smallest ``m1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bases import BasisFamily, eval_matrix
from .design import DesignSystem, DimPair, build_design, subsystem
from .estimator import (
    FitResult,
    StabilityRule,
    fit_residuals,
    solve_constrained,
    stability_event,
)
from .quadrature import simpson_grid
from .simulate import PathSample, SdeModel

ORACLE_NODES = 2001


@dataclass(frozen=True)
class SelectionConfig:
    """Scan bounds, penalty constants, and the stability rule.

    ``sigma_sq`` is the squared sup-norm of the (known) diffusion
    coefficient. ``t_norm`` picks the time normalizer of the empirical
    norm and penalty: the string ``"total"`` (default) uses the full
    horizon T, ``None`` the window length T - t0, and a float an explicit
    value.
    """

    kappa: float = 8.0
    sigma_sq: float = 2.25
    max_m1: int = 25
    max_m2: int = 25
    stability: StabilityRule = field(default_factory=StabilityRule)
    t_norm: float | str | None = "total"

    def __post_init__(self):
        if not (self.kappa > 0):
            raise ValueError(f"kappa must be positive, got {self.kappa!r}")
        if self.sigma_sq < 0:
            raise ValueError(f"sigma_sq must be nonnegative, got {self.sigma_sq!r}")
        if self.max_m1 < 1 or self.max_m2 < 1:
            raise ValueError("scan bounds must be at least 1")

    def resolve_t_norm(self, sample: PathSample) -> float | None:
        if self.t_norm == "total":
            return sample.grid.total_time
        if self.t_norm is None or isinstance(self.t_norm, (int, float)):
            return self.t_norm
        raise ValueError(f"unrecognized t_norm {self.t_norm!r}")


@dataclass
class TableEntry:
    gamma: float
    penalty: float
    admissible: bool

    @property
    def criterion(self) -> float:
        return self.gamma + self.penalty


@dataclass
class SelectionResult:
    chosen: DimPair
    criterion_table: dict[DimPair, TableEntry]
    fit: FitResult
    admissible_any: bool = True


@dataclass
class DimensionScan:
    """All admissible fits from one cached design assembly."""

    design: DesignSystem
    phi: BasisFamily
    psi: BasisFamily
    n_paths: int
    config: SelectionConfig
    fits: dict[DimPair, FitResult]
    admissible: dict[DimPair, bool]
    max_residuals: dict[str, float]

    def penalty(self, dims: DimPair) -> float:
        cfg = self.config
        return cfg.kappa * cfg.sigma_sq * dims.total / (self.n_paths * self.design.t_norm)


def _scan_order(max_m1: int, max_m2: int) -> list[DimPair]:
    pairs = [DimPair(m1, m2) for m1 in range(1, max_m1 + 1) for m2 in range(1, max_m2 + 1)]
    pairs.sort(key=lambda d: (d.total, d.m1, d.m2))
    return pairs


def scan_dimension_grid(
    sample: PathSample,
    phi: BasisFamily,
    psi: BasisFamily,
    config: SelectionConfig,
) -> DimensionScan:
    """Fit every admissible pair in the scan rectangle, sharing one design."""
    n = sample.n_paths
    max_m1 = min(config.max_m1, n)
    max_m2 = min(config.max_m2, n)
    design = build_design(
        sample, phi, psi, DimPair(max_m1, max_m2), config.resolve_t_norm(sample)
    )
    fits: dict[DimPair, FitResult] = {}
    admissible: dict[DimPair, bool] = {}
    max_res = {"constraint": 0.0, "optimality": 0.0, "kkt": 0.0}
    for dims in _scan_order(max_m1, max_m2):
        sub = subsystem(design, dims)
        ok = stability_event(sub, n, config.stability, phi, psi)
        admissible[dims] = ok
        if not ok:
            continue
        fit = solve_constrained(sub)
        fits[dims] = fit
        res = fit_residuals(sub, fit)
        for key in max_res:
            max_res[key] = max(max_res[key], res[key])
    return DimensionScan(
        design=design,
        phi=phi,
        psi=psi,
        n_paths=n,
        config=config,
        fits=fits,
        admissible=admissible,
        max_residuals=max_res,
    )


def _argmin_table(table: dict[DimPair, TableEntry]) -> DimPair | None:
    best: DimPair | None = None
    best_val = math.inf
    for dims in sorted(table, key=lambda d: (d.total, d.m1, d.m2)):
        entry = table[dims]
        if not entry.admissible:
            continue
        if entry.criterion < best_val:
            best, best_val = dims, entry.criterion
    return best


def select_adaptive_from_scan(scan: DimensionScan) -> SelectionResult:
    table = {
        dims: TableEntry(
            gamma=scan.fits[dims].gamma_value if ok else math.nan,
            penalty=scan.penalty(dims),
            admissible=ok,
        )
        for dims, ok in scan.admissible.items()
    }
    chosen = _argmin_table(table)
    if chosen is None:
        return SelectionResult(
            chosen=DimPair(1, 1),
            criterion_table=table,
            fit=FitResult.zero(DimPair(1, 1)),
            admissible_any=False,
        )
    return SelectionResult(chosen=chosen, criterion_table=table, fit=scan.fits[chosen])


def select_adaptive(
    sample: PathSample,
    phi: BasisFamily,
    psi: BasisFamily,
    config: SelectionConfig,
) -> SelectionResult:
    """Penalized-contrast dimension selection over the admissible scan."""
    return select_adaptive_from_scan(scan_dimension_grid(sample, phi, psi, config))


def oracle_errors(
    scan: DimensionScan, truth: SdeModel, bounds
) -> dict[DimPair, tuple[float, float]]:
    """Box-restricted squared errors (a-part, b-part) of every fitted pair."""
    xg, wx = simpson_grid(bounds.a_x, bounds.b_x, ORACLE_NODES)
    yg, wy = simpson_grid(bounds.a_y, bounds.b_y, ORACLE_NODES)
    big = scan.design.dims
    bx = eval_matrix(scan.phi, big.m1, xg)
    by = eval_matrix(scan.psi, big.m2, yg)
    a_true = np.asarray(truth.a(xg), dtype=float)
    b_true = np.asarray(truth.b(yg), dtype=float)
    errors = {}
    for dims, fit in scan.fits.items():
        ra = bx[:, : dims.m1] @ fit.theta[: dims.m1] - a_true
        rb = by[:, : dims.m2] @ fit.theta[dims.m1 :] - b_true
        errors[dims] = (float(wx @ (ra * ra)), float(wy @ (rb * rb)))
    return errors


def select_oracle_from_scan(scan: DimensionScan, truth: SdeModel, bounds) -> SelectionResult:
    errors = oracle_errors(scan, truth, bounds)
    table = {
        dims: TableEntry(
            gamma=sum(errors[dims]) if ok else math.nan,
            penalty=0.0,
            admissible=ok,
        )
        for dims, ok in scan.admissible.items()
    }
    chosen = _argmin_table(table)
    if chosen is None:
        return SelectionResult(
            chosen=DimPair(1, 1),
            criterion_table=table,
            fit=FitResult.zero(DimPair(1, 1)),
            admissible_any=False,
        )
    return SelectionResult(chosen=chosen, criterion_table=table, fit=scan.fits[chosen])


def select_oracle(
    sample: PathSample,
    phi: BasisFamily,
    psi: BasisFamily,
    truth: SdeModel,
    bounds,
    config: SelectionConfig,
) -> SelectionResult:
    """Select the pair minimizing the true integrated squared error.

    ``bounds`` is a quantile box with attributes ``a_x, b_x, a_y, b_y``
    (see :class:`cpls.experiments.QuantileBox`). Requires the true model,
    so it is available only in simulation studies.
    """
    scan = scan_dimension_grid(sample, phi, psi, config)
    return select_oracle_from_scan(scan, truth, bounds)


def criterion_table_rows(result: SelectionResult) -> list[tuple]:
    """Rows (m1, m2, gamma, pen, admissible, criterion) sorted for CSV dumps."""
    rows = []
    for dims in sorted(result.criterion_table, key=lambda d: (d.m1, d.m2)):
        entry = result.criterion_table[dims]
        rows.append(
            (dims.m1, dims.m2, entry.gamma, entry.penalty, entry.admissible, entry.criterion)
        )
    return rows
