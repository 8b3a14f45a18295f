"""
Главен файл на програмата - оркестратор на командите
Чете конфигурацията, изпълнява една команда (праг, затворена/отворена
динамика, стационарно състояние, сканирания, характеристики) и извежда CSV.
"""

import argparse
import logging
import math
import os
import sys
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from analysis import (
    SweepTable,
    closed_trajectory,
    drive_optimum,
    feature_scan,
    fit_window,
    peak_curve,
    resolve_workers,
    sweep,
    threshold_analytic,
    threshold_numeric,
)
from config import ConfigError, ConfigManager, LoggingConfig, RunConfig, config_items
from dynamics import initial_density, rabi_frequency, run_open, solve_steady, steady_residual, truncation_converged
from hilbert import build_space
from measures import UndefinedCorrelationError, check_records, cross_correlation, observe, qubit_concurrence
from model import EffectiveParams, ModelParams, liouvillian
from numerics import NumericalError
from output_handler import CsvDocument, CsvExporter, document_from_table

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

# Мрежи по подразбиране: (min, max, брой точки)
DRIVE_GRID = (0.002, 0.1, 50)
RATIO_GRID = (0.05, 1.0, 96)
OPTIMUM_RATIO_GRID = (0.1, 1.0, 10)
OPEN_DECAY_TIMES = 20.0   # t_max = 20/γ


def setup_logging(log_config: LoggingConfig) -> None:
    """Настройва логирането; конзолата е stderr, за да остане stdout само за CSV."""
    for handler in logging.root.handlers[:]:
        logging.root.removeHandler(handler)

    formatter = logging.Formatter(log_config.log_format)
    root = logging.getLogger()
    root.setLevel(getattr(logging, log_config.log_level.upper(), logging.INFO))

    if log_config.enable_console_logging:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(formatter)
        root.addHandler(console_handler)

    if log_config.log_file:
        directory = os.path.dirname(log_config.log_file)
        if directory:
            os.makedirs(directory, exist_ok=True)
        file_handler = logging.FileHandler(log_config.log_file, "a", encoding="utf-8")
        file_handler.setFormatter(formatter)
        root.addHandler(file_handler)


def _grid(cfg: RunConfig, default: tuple) -> np.ndarray:
    lo, hi, n = default
    sw = cfg.sweep
    return np.linspace(
        sw.sweep_min if sw.sweep_min is not None else lo,
        sw.sweep_max if sw.sweep_max is not None else hi,
        sw.sweep_steps if sw.sweep_steps is not None else n,
    )


def _workers(cfg: RunConfig, n_points: int) -> int:
    if not cfg.performance.enable_multiprocessing:
        return 1
    return resolve_workers(cfg.performance.workers, n_points)


def _progress(cfg: RunConfig) -> bool:
    return cfg.performance.show_progress and sys.stderr.isatty()


def _document(cfg: RunConfig, command: str, frame: pd.DataFrame, trailer: Optional[List[str]] = None) -> CsvDocument:
    return CsvDocument(command=command, frame=frame, provenance=config_items(cfg), trailer=trailer or [])


def _check_truncation(p: ModelParams, n_cavity: int) -> None:
    """Предупреждава, ако E_ss не е сходяща по отрязването; грешка в проверката не спира командата."""
    try:
        converged = truncation_converged(p, n_cavity)
    except (NumericalError, ValueError) as e:
        logger.warning(f"Проверката на отрязването при N_c={n_cavity} е неуспешна: {e}")
        return
    if not converged:
        logger.warning(f"E_ss не е сходяща по отрязването при N_c={n_cavity}; увеличете nc")


# --- Команди ---

def cmd_threshold(cfg: RunConfig) -> CsvDocument:
    rows = []
    for nph in range(cfg.sweep.nph_max + 1):
        rows.append({
            "nph": nph,
            "c": 2 * nph + 1,
            "th_analytic": threshold_analytic(nph),
            "th_numeric": threshold_numeric(nph, cfg.sweep.grid_step),
        })
    return _document(cfg, "threshold", pd.DataFrame(rows, columns=["nph", "c", "th_analytic", "th_numeric"]))


def cmd_closed(cfg: RunConfig) -> CsvDocument:
    p, sim = cfg.params, cfg.simulation
    t_max = sim.t_max
    if t_max is None:
        t_max = 4 * math.pi / rabi_frequency(EffectiveParams.from_params(p, sim.nph), p.g1, p.g2)
    times = np.linspace(0.0, t_max, sim.n_steps)
    logger.info(f"Затворена динамика ({sim.model}): N_ph={sim.nph}, g2/g1={p.ratio:.4g}, t_max={t_max:.6g}")

    traj, p10, p01 = closed_trajectory(p, sim.nph, times, model=sim.model, n_cavity=sim.nc)
    frame = pd.DataFrame({"t": traj.times, "E": traj.entanglement, "p10": p10, "p01": p01})
    return _document(cfg, "closed", frame)


def cmd_open(cfg: RunConfig) -> CsvDocument:
    p, sim = cfg.params, cfg.simulation
    t_max = sim.t_max
    if t_max is None:
        if p.gamma == 0:
            raise ValueError("t_max по подразбиране е 20/γ, а γ = 0; задайте t_max")
        t_max = OPEN_DECAY_TIMES / p.gamma
    times = np.linspace(0.0, t_max, sim.n_steps)
    space, ops = build_space(sim.nc)
    logger.info(f"Отворена динамика: N_c={sim.nc}, N_ph={sim.nph}, d={p.d:.4g}, t_max={t_max:.6g}")

    traj = run_open(p, ops, initial_density(space, sim.nph), times, sim.step)
    records = observe(traj, space, ops)
    check_records(records)
    frame = pd.DataFrame({
        "t": traj.times,
        "sz1": [r.sz1 for r in records],
        "sz2": [r.sz2 for r in records],
        "nphot": [r.nphot for r in records],
        "E": [r.E for r in records],
    })
    _check_truncation(p, sim.nc)
    return _document(cfg, "open", frame)


def cmd_steady(cfg: RunConfig) -> CsvDocument:
    p, nc = cfg.params, cfg.simulation.nc
    rho, space, ops = solve_steady(p, nc)
    try:
        c_ss = cross_correlation(rho, ops)
    except UndefinedCorrelationError as e:
        logger.info(f"C_ss не е дефинирана: {e}")
        c_ss = math.nan
    frame = pd.DataFrame([{
        "E_ss": qubit_concurrence(rho, space),
        "C_ss": c_ss,
        "residual": steady_residual(liouvillian(p, ops), rho),
    }])
    _check_truncation(p, nc)
    return _document(cfg, "steady", frame)


def _sweep_document(cfg: RunConfig, command: str, axis: str, grid: np.ndarray, observables: Sequence[str]) -> CsvDocument:
    table = sweep(
        axis, grid, cfg.params, observables, cfg.simulation.nc,
        _workers(cfg, len(grid)), _progress(cfg),
    )
    return document_from_table(command, table, observables, config_items(cfg))


def cmd_sweep_drive(cfg: RunConfig) -> CsvDocument:
    return _sweep_document(cfg, "sweep-drive", "d", _grid(cfg, DRIVE_GRID), ("E_ss",))


def cmd_sweep_ratio(cfg: RunConfig) -> CsvDocument:
    return _sweep_document(cfg, "sweep-ratio", "ratio", _grid(cfg, RATIO_GRID), ("E_ss", "C_ss"))


def _point_errors(tables: Sequence[SweepTable]) -> Tuple[List[Optional[str]], List[str], int]:
    """
    Грешки от вътрешните сканирания: (грешка на ред, редове за trailer, брой точки).

    Ред е неуспешен само ако всичките му точки са неуспешни; останалите
    неуспешни точки се броят отделно.
    """
    row_errors: List[Optional[str]] = []
    trailer: List[str] = []
    point_failures = 0
    for table in tables:
        fixed = {"d": table.provenance["d"], "ratio": table.provenance["g2"] / table.provenance["g1"]}
        for i in table.failed:
            point = {**fixed, table.axis: table.values[i]}
            trailer.append(f"error d={point['d']:.12g} ratio={point['ratio']:.12g}: {table.errors[i]}")
        if table.failed and len(table.failed) == len(table):
            row_errors.append(f"всички {len(table)} точки са неуспешни")
        else:
            row_errors.append(None)
            point_failures += len(table.failed)
    return row_errors, trailer, point_failures


def cmd_features(cfg: RunConfig) -> CsvDocument:
    sw = cfg.sweep
    drives = np.linspace(sw.feature_d_min, sw.feature_d_max, sw.feature_d_steps)
    ratios = _grid(cfg, RATIO_GRID)
    features, tables = feature_scan(
        drives, ratios, cfg.params, cfg.simulation.nc, sw.zero_tol,
        _workers(cfg, len(ratios)), _progress(cfg),
    )
    frame = pd.DataFrame({
        "d": [f.d for f in features],
        "g2r": [f.g2r for f in features],
        "g2p": [f.g2p for f in features],
    })
    row_errors, error_lines, point_failures = _point_errors(tables)

    d_min = sw.fit_d_min if sw.fit_d_min is not None else drives[0]
    d_max = sw.fit_d_max if sw.fit_d_max is not None else drives[-1]
    trailer = []
    for name in ("g2r", "g2p"):
        fit = fit_window(frame["d"], frame[name], d_min, d_max)
        if fit is None:
            trailer.append(f"fit {name}: window [{d_min:.12g}, {d_max:.12g}] has fewer than 2 points")
        else:
            slope, intercept, rms = fit
            trailer.append(f"fit {name}: slope={slope:.12g} intercept={intercept:.12g} rms={rms:.12g}")
    trailer += [f"g2p at grid boundary for d={f.d:.12g}" for f in features if f.g2p_at_boundary]
    trailer += [f"no steady-state entanglement for d={f.d:.12g}" for f in features if not f.entangled]
    trailer += error_lines

    doc = _document(cfg, "features", frame, trailer)
    doc.errors = row_errors
    doc.point_failures = point_failures
    return doc


def cmd_peak_curve(cfg: RunConfig) -> CsvDocument:
    table = peak_curve(_grid(cfg, RATIO_GRID), range(cfg.sweep.nph_max + 1))
    return document_from_table("peak-curve", table, list(table.columns), config_items(cfg))


def cmd_drive_optimum(cfg: RunConfig) -> CsvDocument:
    sw = cfg.sweep
    drives = np.linspace(sw.feature_d_min, sw.feature_d_max, sw.feature_d_steps)
    ratios = _grid(cfg, OPTIMUM_RATIO_GRID)
    rows, tables, trailer = [], [], []
    for ratio in ratios:
        base = cfg.params.with_value("ratio", ratio)
        table = sweep("d", drives, base, ("E_ss",), cfg.simulation.nc, _workers(cfg, len(drives)), _progress(cfg))
        tables.append(table)
        if len(table.failed) == len(table):
            rows.append({"ratio": ratio, "d_peak": math.nan, "E_peak": math.nan, "d_r": math.nan})
            continue
        optimum = drive_optimum(table, sw.zero_tol)
        rows.append({"ratio": ratio, "d_peak": optimum.d_peak, "E_peak": optimum.E_peak, "d_r": optimum.d_r})
        if not optimum.entangled:
            trailer.append(f"no steady-state entanglement for ratio={ratio:.12g}")
    row_errors, error_lines, point_failures = _point_errors(tables)

    frame = pd.DataFrame(rows, columns=["ratio", "d_peak", "E_peak", "d_r"])
    doc = _document(cfg, "drive-optimum", frame, trailer + error_lines)
    doc.errors = row_errors
    doc.point_failures = point_failures
    return doc


COMMANDS: Dict[str, Callable[[RunConfig], CsvDocument]] = {
    "threshold": cmd_threshold,
    "closed": cmd_closed,
    "open": cmd_open,
    "steady": cmd_steady,
    "sweep-drive": cmd_sweep_drive,
    "sweep-ratio": cmd_sweep_ratio,
    "features": cmd_features,
    "peak-curve": cmd_peak_curve,
    "drive-optimum": cmd_drive_optimum,
}


def run_command(name: str, cfg: RunConfig) -> CsvDocument:
    """Изпълнява командата и връща CSV документа; грешките от изчисленията се пропагират."""
    if name not in COMMANDS:
        raise ValueError(f"Непозната команда '{name}'")
    logger.info("=" * 60)
    logger.info(f"КОМАНДА: {name}")
    logger.info("=" * 60)
    doc = COMMANDS[name](cfg)
    logger.info(f"Команда {name}: {len(doc)} реда, неуспешни точки: {doc.failed}")
    return doc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcavity",
        description="Сплетеност на два кубита в резонатор: данни за графики като CSV",
    )
    parser.add_argument("command", choices=list(COMMANDS), help="команда за изпълнение")
    parser.add_argument("--config", metavar="FILE", help="конфигурационен файл (key = value)")
    parser.add_argument("--set", dest="overrides", metavar="KEY=VALUE", action="append", default=[],
                        help="презаписва стойност от конфигурацията (може да се повтаря)")
    parser.add_argument("--out", metavar="PATH", help="изходен CSV файл (по подразбиране stdout)")
    return parser


def load_config(config_file: Optional[str], overrides: Sequence[str], out: Optional[str] = None) -> RunConfig:
    manager = ConfigManager()
    if config_file:
        manager.load_file(config_file)
    cfg = manager.apply_overrides(overrides)
    if out:
        cfg.output.out = out
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    try:
        cfg = load_config(args.config, args.overrides, args.out)
    except ConfigError as e:
        setup_logging(LoggingConfig())
        logger.error(f"Грешка в конфигурацията: {e}")
        return EXIT_CONFIG

    setup_logging(cfg.logging)
    try:
        doc = run_command(args.command, cfg)
    except (NumericalError, ValueError) as e:
        logger.error(f"Изчислителна грешка в '{args.command}': {e}")
        return EXIT_NUMERICAL

    CsvExporter(cfg.output).write(doc)
    if doc.failed:
        logger.error(f"{doc.failed} неуспешни точки; CSV е записан с маркери за грешка")
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
