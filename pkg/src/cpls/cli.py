"""Command-line front end for fits, experiments, and basis checks.

Subcommands:

* ``experiment``  -- Monte-Carlo run for one (model, explanatory type, N);
                     writes per-repetition and summary CSVs plus a JSON
                     metadata file with the fully resolved configuration.
* ``table1``      -- the full benchmark grid {1,2,3} x {A,B} x {400,1000}
                     as one 12-row wide summary.
* ``fit``         -- a single adaptive fit on one fresh sample; writes the
                     selected coefficients and the criterion table.
* ``bases-check`` -- orthonormality residual of a basis family.

Option precedence: command-line flags override a plain ``key = value``
config file (``--config``), which overrides the built-in defaults. The
default output directory comes from ``CPLS_OUTPUT_DIR`` when set.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import traceback
from pathlib import Path

import numpy as np

from . import __version__
from .bases import family_by_name, orthonormality_residual
from .design import subsystem
from .estimator import SingularDesignError, StabilityRule
from .experiments import (
    ExperimentConfig,
    emit_beam,
    quantile_box,
    rep_seed,
    run_experiment,
)
from .selection import (
    SelectionConfig,
    criterion_table_rows,
    scan_dimension_grid,
    select_adaptive_from_scan,
)
from .simulate import (
    GridSpec,
    SimulationError,
    explanatory_by_name,
    generate_sample,
    make_model,
)

DEFAULTS = {
    "model": 2,
    "y": "A",
    "n": 400,
    "reps": 50,
    "seed": 0,
    "basis_phi": "hermite",
    "basis_psi": "hermite",
    "kappa": 8.0,
    "max_m1": 25,
    "max_m2": 25,
    "stability": "practical",
    "cutoff": 1e14,
    "r": 7.0,
    "n_steps": 500,
    "dt": 0.02,
    "drop": 20,
    "sigma": 1.5,
    "sigma_y": 2.0,
    "x0": 0.0,
    "threads": 1,
    "curves": 0,
}

_INT_KEYS = {"model", "n", "reps", "seed", "max_m1", "max_m2", "n_steps", "drop", "threads", "curves"}
_FLOAT_KEYS = {"kappa", "cutoff", "r", "dt", "sigma", "sigma_y", "x0"}


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def load_config_file(path: str) -> dict:
    """Parse a plain key=value config file (``#`` starts a comment)."""
    settings: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key in _INT_KEYS:
            settings[key] = int(value)
        elif key in _FLOAT_KEYS:
            settings[key] = float(value)
        else:
            settings[key] = value
    return settings


def _resolve_settings(args: argparse.Namespace) -> dict:
    settings = dict(DEFAULTS)
    if getattr(args, "config", None):
        settings.update(load_config_file(args.config))
    for key in settings:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            settings[key] = flag_val
    return settings


def _experiment_config(settings: dict) -> ExperimentConfig:
    grid = GridSpec(n_steps=settings["n_steps"], dt=settings["dt"], drop_first=settings["drop"])
    stability = StabilityRule(
        mode=settings["stability"], cutoff=settings["cutoff"], r=settings["r"]
    )
    selection = SelectionConfig(
        kappa=settings["kappa"],
        sigma_sq=settings["sigma"] ** 2,
        max_m1=settings["max_m1"],
        max_m2=settings["max_m2"],
        stability=stability,
    )
    return ExperimentConfig(
        grid=grid,
        sigma=settings["sigma"],
        sigma_y=settings["sigma_y"],
        x0=settings["x0"],
        phi=family_by_name(settings["basis_phi"]),
        psi=family_by_name(settings["basis_psi"]),
        selection=selection,
    )


def _out_dir(args: argparse.Namespace) -> Path:
    out = getattr(args, "out", None) or os.environ.get("CPLS_OUTPUT_DIR") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_meta(path: Path, settings: dict, extra: dict) -> None:
    meta = {"version": __version__, "settings": settings}
    meta.update(extra)
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


_SUMMARY_HEADER = [
    "function",
    "mse100_mean",
    "mse100_std",
    "mse100_oracle_mean",
    "mse100_oracle_std",
    "dim_mean",
    "dim_oracle_mean",
]


def _summary_rows(summary: dict) -> list[list]:
    rows = []
    for fn in ("a", "b"):
        rows.append([
            fn,
            summary.get(f"mse100_{fn}_mean", math.nan),
            summary.get(f"mse100_{fn}_std", math.nan),
            summary.get(f"mse100_oracle_{fn}_mean", math.nan),
            summary.get(f"mse100_oracle_{fn}_std", math.nan),
            summary.get(f"dim_{fn}_mean", math.nan),
            summary.get(f"dim_oracle_{fn}_mean", math.nan),
        ])
    return rows


def _print_summary(title: str, summary: dict) -> None:
    print(title)
    print("  " + ",".join(_SUMMARY_HEADER))
    for row in _summary_rows(summary):
        print("  " + ",".join(_fmt(v) for v in row))


def _rep_rows(report) -> list[list]:
    rows = []
    for r in report.per_rep:
        rows.append([
            r.rep,
            int(r.failed),
            r.mse_a,
            r.mse_b,
            r.oracle_mse_a,
            r.oracle_mse_b,
            r.dims.m1 if r.dims else -1,
            r.dims.m2 if r.dims else -1,
            r.oracle_dims.m1 if r.oracle_dims else -1,
            r.oracle_dims.m2 if r.oracle_dims else -1,
            int(r.truncated),
            int(r.oracle_truncated),
        ])
    return rows


_REP_HEADER = [
    "rep", "failed", "mse_a", "mse_b", "oracle_mse_a", "oracle_mse_b",
    "m1", "m2", "oracle_m1", "oracle_m2", "truncated", "oracle_truncated",
]


def _cmd_experiment(args: argparse.Namespace) -> int:
    settings = _resolve_settings(args)
    config = _experiment_config(settings)
    out = _out_dir(args)
    keep_curves = settings["curves"] > 0
    report = run_experiment(
        settings["model"], settings["y"], settings["n"], settings["reps"],
        settings["seed"], config, workers=settings["threads"], keep_curves=keep_curves,
    )
    _write_csv(out / "experiment_reps.csv", _REP_HEADER, _rep_rows(report))
    _write_csv(out / "experiment_summary.csv", _SUMMARY_HEADER, _summary_rows(report.summary))
    _write_meta(
        out / "experiment_meta.json",
        settings,
        {"rep_seeds": [rep_seed(settings["seed"], r) for r in range(settings["reps"])],
         "n_failed": report.n_failed},
    )
    if keep_curves and report.curves is not None:
        n_curves = min(settings["curves"], report.curves["a"].shape[0])
        emit_beam(report, "a", n_curves, out / "beam_a.csv")
        emit_beam(report, "b", n_curves, out / "beam_b.csv")
    _print_summary(
        f"model {settings['model']}, Y ({settings['y']}), N = {settings['n']}, "
        f"{settings['reps']} repetitions ({report.n_failed} failed)",
        report.summary,
    )
    return 0


_TABLE1_HEADER = [
    "model", "y", "n_paths",
    "mse_a", "std_a", "mse_oracle_a", "std_oracle_a", "dim_a", "dim_oracle_a",
    "mse_b", "std_b", "mse_oracle_b", "std_oracle_b", "dim_b", "dim_oracle_b",
]


def _cmd_table1(args: argparse.Namespace) -> int:
    settings = _resolve_settings(args)
    config = _experiment_config(settings)
    out = _out_dir(args)
    rows = []
    for model_id in (1, 2, 3):
        for y_type in ("A", "B"):
            for n_paths in (400, 1000):
                report = run_experiment(
                    model_id, y_type, n_paths, settings["reps"], settings["seed"],
                    config, workers=settings["threads"],
                )
                s = report.summary
                rows.append([
                    model_id, y_type, n_paths,
                    s.get("mse100_a_mean", math.nan), s.get("mse100_a_std", math.nan),
                    s.get("mse100_oracle_a_mean", math.nan), s.get("mse100_oracle_a_std", math.nan),
                    s.get("dim_a_mean", math.nan), s.get("dim_oracle_a_mean", math.nan),
                    s.get("mse100_b_mean", math.nan), s.get("mse100_b_std", math.nan),
                    s.get("mse100_oracle_b_mean", math.nan), s.get("mse100_oracle_b_std", math.nan),
                    s.get("dim_b_mean", math.nan), s.get("dim_oracle_b_mean", math.nan),
                ])
                print(f"done: model {model_id}, Y ({y_type}), N = {n_paths}")
    _write_csv(out / "table1.csv", _TABLE1_HEADER, rows)
    _write_meta(out / "table1_meta.json", settings, {"rows": len(rows)})
    print(f"wrote {out / 'table1.csv'} ({len(rows)} rows)")
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    settings = _resolve_settings(args)
    config = _experiment_config(settings)
    out = _out_dir(args)
    model = make_model(settings["model"], sigma=settings["sigma"], x0=settings["x0"])
    spec = explanatory_by_name(settings["y"], sigma_y=settings["sigma_y"])
    sample = generate_sample(model, spec, config.grid, settings["n"], settings["seed"])
    scan = scan_dimension_grid(sample, config.phi, config.psi, config.selection)
    result = select_adaptive_from_scan(scan)
    box = quantile_box(sample)
    m1 = result.chosen.m1
    coef_rows = []
    for idx, value in enumerate(result.fit.theta):
        component = "a" if idx < m1 else "b"
        basis_index = idx + 1 if idx < m1 else idx - m1 + 1
        coef_rows.append([component, basis_index, value])
    _write_csv(out / "fit_coefficients.csv", ["component", "basis_index", "value"], coef_rows)
    _write_csv(
        out / "fit_criterion_table.csv",
        ["m1", "m2", "gamma", "pen", "admissible", "criterion"],
        [list(row) for row in criterion_table_rows(result)],
    )
    _write_meta(
        out / "fit_meta.json",
        settings,
        {
            "chosen": [result.chosen.m1, result.chosen.m2],
            "gamma": result.fit.gamma_value,
            "lambda": result.fit.lambda_multiplier,
            "truncated": result.fit.truncated,
            "admissible_any": result.admissible_any,
            "quantile_box": [box.a_x, box.b_x, box.a_y, box.b_y],
        },
    )
    if getattr(args, "dump_design", False):
        sub = subsystem(scan.design, result.chosen)
        np.savetxt(out / "fit_gram.csv", sub.gram, delimiter=",", fmt="%.17g")
        np.savetxt(out / "fit_zvec.csv", sub.zvec, delimiter=",", fmt="%.17g")
        np.savetxt(out / "fit_dvec.csv", sub.dvec, delimiter=",", fmt="%.17g")
    print(
        f"selected dims (m1, m2) = ({result.chosen.m1}, {result.chosen.m2}), "
        f"gamma = {_fmt(result.fit.gamma_value)}, truncated = {result.fit.truncated}"
    )
    return 0


def _cmd_bases_check(args: argparse.Namespace) -> int:
    family = family_by_name(args.basis)
    residual = orthonormality_residual(family, args.m)
    ok = residual < 1e-6
    print(f"basis {family.name}, m = {args.m}: orthonormality residual = {residual:.3e} "
          f"({'ok' if ok else 'FAIL'})")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpls",
        description="Constrained projection least-squares drift estimation for SDE pairs.",
    )
    parser.add_argument("--version", action="version", version=f"cpls {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, with_reps: bool = True) -> None:
        p.add_argument("--config", help="key=value config file (flags take precedence)")
        p.add_argument("--out", help="output directory (default: $CPLS_OUTPUT_DIR or .)")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int, help="process pool size for repetitions")
        if with_reps:
            p.add_argument("--reps", type=int)
        p.add_argument("--kappa", type=float)
        p.add_argument("--max-m1", dest="max_m1", type=int)
        p.add_argument("--max-m2", dest="max_m2", type=int)
        p.add_argument("--basis-phi", dest="basis_phi", choices=["trig", "trig-noconst", "laguerre", "hermite"])
        p.add_argument("--basis-psi", dest="basis_psi", choices=["trig", "trig-noconst", "laguerre", "hermite"])
        p.add_argument("--stability", choices=["practical", "theoretical"])
        p.add_argument("--cutoff", type=float)
        p.add_argument("--r", type=float)
        p.add_argument("--n-steps", dest="n_steps", type=int)
        p.add_argument("--dt", type=float)
        p.add_argument("--drop", type=int)
        p.add_argument("--sigma", type=float)
        p.add_argument("--sigma-y", dest="sigma_y", type=float)
        p.add_argument("--x0", type=float)

    p_exp = sub.add_parser("experiment", help="Monte-Carlo run for one configuration")
    p_exp.add_argument("--model", type=int, choices=[1, 2, 3])
    p_exp.add_argument("--y", choices=["A", "B"])
    p_exp.add_argument("--n", type=int, help="number of path copies per repetition")
    p_exp.add_argument("--curves", type=int, help="retain and emit this many estimator curves")
    add_common(p_exp)
    p_exp.set_defaults(handler=_cmd_experiment)

    p_tab = sub.add_parser("table1", help="full benchmark grid, 12 summary rows")
    add_common(p_tab)
    p_tab.set_defaults(handler=_cmd_table1)

    p_fit = sub.add_parser("fit", help="single adaptive fit on one fresh sample")
    p_fit.add_argument("--model", type=int, choices=[1, 2, 3])
    p_fit.add_argument("--y", choices=["A", "B"])
    p_fit.add_argument("--n", type=int)
    p_fit.add_argument("--dump-design", action="store_true", help="also write gram/zvec/dvec CSVs")
    add_common(p_fit, with_reps=False)
    p_fit.set_defaults(handler=_cmd_fit)

    p_bas = sub.add_parser("bases-check", help="orthonormality residual of a basis family")
    p_bas.add_argument("--basis", required=True, choices=["trig", "trig-noconst", "laguerre", "hermite"])
    p_bas.add_argument("--m", type=int, required=True)
    p_bas.set_defaults(handler=_cmd_bases_check)
    return parser


_MODULE_BY_EXC = {
    SimulationError: "sde simulation",
    SingularDesignError: "estimator",
}


def _failing_module(exc: BaseException) -> str:
    for exc_type, name in _MODULE_BY_EXC.items():
        if isinstance(exc, exc_type):
            return name
    for frame in reversed(traceback.extract_tb(exc.__traceback__)):
        parts = Path(frame.filename).parts
        if "cpls" in parts:
            return Path(frame.filename).stem
    return "cpls"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except Exception as exc:  # argparse errors exit(2) before reaching here
        print(f"error [{_failing_module(exc)}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
