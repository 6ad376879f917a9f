"""``demon-cycle <config-file> [--out DIR] [--seed N]``.

Exit status is 0 on success, 2 for configuration errors and 3 for runtime
errors.  Results are written as CSV and JSON; nothing is plotted.
"""

from __future__ import annotations

import argparse
import dataclasses
import itertools
import logging
import sys
from pathlib import Path

import numpy as np

from . import output
from .config import ConfigError, RunConfig, load_config
from .continuous import (
    ContinuousParams,
    expected_mean_heat,
    expected_mean_z,
    run_ensemble,
)
from .discrete import run_cycle, sweep
from .distributions import VARIABLES, density_curve, histogram, ks_distance
from .qubit import EngineParams

log = logging.getLogger("demon-cycle")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
KS_TOLERANCE = 0.03

# trajectory column behind each distribution variable
_COLUMNS = {"Q": "Q", "W": "W_ext", "QM": "Q_M", "dS": "dS_M"}


def engine_params(cfg: RunConfig) -> list[EngineParams]:
    z0s = cfg.z0 or (None,)
    return [
        EngineParams(omega0=cfg.omega0, t_demon=t, z0_override=z)
        for t, z in itertools.product(cfg.t_demon, z0s)
    ]


def continuous_params(cfg: RunConfig) -> ContinuousParams:
    return ContinuousParams(cfg.dt_over_tau, cfg.n_steps, cfg.n_traj, cfg.master_seed)


def run_discrete(cfg: RunConfig, out: Path) -> list[Path]:
    rows = []
    for params in engine_params(cfg):
        if cfg.mode == "discrete":
            reports = [run_cycle(params, cfg.kappa)]
        elif cfg.kappa_grid is not None:
            reports = sweep(params, kappas=cfg.kappa_grid)
        else:
            reports = sweep(params, arrows=cfg.Q_grid, branch=cfg.kappa_branch)
        rows.extend((params.omega0, params.t_demon, params.z0, rep) for rep in reports)
    name = "cycle.csv" if cfg.mode == "discrete" else "sweep.csv"
    return [output.emit_reports(rows, out / name)]


def curves(cfg: RunConfig, z0: float) -> dict:
    return {v: density_curve(v, cfg.duration, z0, n_points=cfg.points) for v in VARIABLES}


def run_pdf(cfg: RunConfig, out: Path) -> list[Path]:
    (params,) = engine_params(cfg)
    return [
        output.emit_curve(curve, out / f"density_{name}.csv")
        for name, curve in curves(cfg, params.z0).items()
    ]


def run_simulate(cfg: RunConfig, out: Path) -> list[Path]:
    (params,) = engine_params(cfg)
    z0 = params.z0
    ensemble = run_ensemble(params, continuous_params(cfg), workers=cfg.workers)
    written = [output.emit_records(ensemble.records, out / "trajectories.csv")]

    analytic = -1.0 < z0 < 0.0 and cfg.n_steps > 0
    fitted = curves(cfg, z0) if analytic else {}
    ks = {}
    hists = []
    for name, column in _COLUMNS.items():
        samples = ensemble.column(column)
        curve = fitted.get(name)
        hists.append((name, histogram(samples, cfg.bins), curve))
        if curve is not None and len(samples) >= 100:
            ks[name] = ks_distance(samples, curve)
    written.append(output.emit_histograms(hists, out / "histograms.csv"))

    summary = dict(ensemble.summary)
    summary.update(
        mode=cfg.mode,
        master_seed=cfg.master_seed,
        duration=cfg.duration,
        z0=z0,
        expected={
            "Q_M": expected_mean_heat(z0, cfg.duration),
            "z_pre": expected_mean_z(z0, cfg.duration),
            "exp_minus_half_Q": float(np.exp(-0.5 * cfg.duration)),
        },
        ks=ks,
        config=cfg.to_text(),
    )
    written.append(output.write_json(out / "summary.json", summary))

    if cfg.mode == "compare":
        mean, err = summary["mean"]["Q_M"], summary["stderr"]["Q_M"]
        expected = summary["expected"]["Q_M"]
        report = {f"ks_{name}": value for name, value in ks.items()}
        report.update(
            ks_tolerance=KS_TOLERANCE,
            ks_pass={name: value < KS_TOLERANCE for name, value in ks.items()},
            mean_Q_M=mean,
            stderr_Q_M=err,
            expected_Q_M=expected,
            mean_Q_M_sigmas=(mean - expected) / err if err > 0 else None,
            master_seed=cfg.master_seed,
            config=cfg.to_text(),
        )
        written.append(output.write_json(out / "compare.json", report))
    return written


_RUNNERS = {
    "discrete": run_discrete,
    "sweep": run_discrete,
    "pdf": run_pdf,
    "simulate": run_simulate,
    "compare": run_simulate,
}


def run(cfg: RunConfig, out: Path | None = None) -> list[Path]:
    return _RUNNERS[cfg.mode](cfg, Path(out if out is not None else cfg.output))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="demon-cycle", description=__doc__.splitlines()[0])
    parser.add_argument("config", help="key=value run configuration")
    parser.add_argument("--out", metavar="DIR", help="output directory (overrides 'output')")
    parser.add_argument("--seed", metavar="N", type=int, help="override master_seed")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be a 64-bit unsigned integer")
            cfg = dataclasses.replace(cfg, master_seed=args.seed)
        if args.out is not None:
            cfg = dataclasses.replace(cfg, output=args.out)
    except ConfigError as exc:
        print(f"demon-cycle: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        written = run(cfg)
    except Exception as exc:  # noqa: BLE001
        print(f"demon-cycle: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for path in written:
        log.info("wrote %s", path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
