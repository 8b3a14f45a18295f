"""
Модул за анализ
Аналитични резултати за затворената система, търсене на прага на
максимално сплетено състояние (MES), паралелни сканирания на стационарни
състояния и извличане на характеристики от сканиранията.
"""

import logging
import math
import os
from dataclasses import asdict, dataclass, field
from multiprocessing import Pool
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from dynamics import (
    Trajectory,
    effective_initial_state,
    evolve_closed,
    peak_search_times,
    solve_steady,
    steady_residual,
)
from hilbert import basis_state, build_space
from measures import (
    UndefinedCorrelationError,
    cross_correlation_terms,
    expectation,
    observe,
    observe_effective,
    peak_entanglement,
    qubit_concurrence,
    qubit_populations,
)
from model import EffectiveParams, ModelParams, effective_terms, h_effective, h_model, liouvillian
from numerics import NumericalError, eig_herm, line_fit, parabolic_peak

logger = logging.getLogger(__name__)

MES_CRITERION = 0.999        # числен критерий E_p за MES при грубото сканиране
BISECTION_TOL = 1e-4
MES_BOUND = 6.0              # дясна страна на неравенството за MES
DEFAULT_DELTA = 40.0         # δ/g1 за затворената динамика
MIN_FEATURE_POINTS = 50

OBSERVABLES = ("E_ss", "C_ss", "C1_ss", "C2_ss", "residual", "sz1", "sz2", "nphot")
SWEEP_AXES = ("ratio", "omega", "epsilon", "g1", "g2", "omega_d", "d", "kappa", "gamma")


class NoMESFoundError(NumericalError):
    """Няма съотношение g2/g1 в мрежата, което да дава MES."""


# --- Аналитични резултати за затворената система ---

def lambda_pm(eff: EffectiveParams, g1: float, g2: float) -> Tuple[float, float]:
    """
    λ± = (g̃1²+g̃2²)/δ ± sqrt((g̃1²+g̃2²)²/δ² - 4 g̃1² g̃2² (1 - 1/c²)/δ²).
    Това е спектърът на удвоения блок с диагонал g̃_i²/δ.
    """
    gt1_sq, gt2_sq = eff.g_tilde(g1) ** 2, eff.g_tilde(g2) ** 2
    total = gt1_sq + gt2_sq
    delta = eff.delta
    discriminant = total ** 2 / delta ** 2 - 4 * gt1_sq * gt2_sq * (1 - 1 / eff.c ** 2) / delta ** 2
    assert discriminant >= -1e-12 * (total / delta) ** 2, f"отрицателен дискриминант {discriminant}"
    root = math.sqrt(max(discriminant, 0.0))
    return total / delta + root, total / delta - root


def _mes_lhs(diagonal_01: float, eigenvalue: float, exchange: float) -> float:
    x = (diagonal_01 - eigenvalue) ** 2 / exchange ** 2
    if x == 0:
        return math.inf
    return x + 1 / x


def mes_inequality(eff: EffectiveParams, g1: float, g2: float) -> Tuple[float, bool]:
    """
    Неравенството x + 1/x <= 6, x = (g̃2²/δ - λ₋)² / (g̃1 g̃2 / (cδ))².
    λ₋ е собствената стойност на блока с диагонал g̃2²/δ, т.е. λ₋/2 от lambda_pm.
    """
    if g2 == 0 or g1 == 0:
        raise ValueError("Нулев знаменател: неравенството изисква g1, g2 > 0")
    exchange = eff.g_tilde(g1) * eff.g_tilde(g2) / (eff.c * eff.delta)
    _, lam_minus = lambda_pm(eff, g1, g2)
    lhs = _mes_lhs(eff.g_tilde(g2) ** 2 / eff.delta, lam_minus / 2, exchange)
    return lhs, lhs <= MES_BOUND


def mes_inequality_numeric(eff: EffectiveParams, g1: float, g2: float) -> Tuple[float, bool]:
    """Същото неравенство от числените собствени стойности на безследовия блок."""
    if g2 == 0 or g1 == 0:
        raise ValueError("Нулев знаменател: неравенството изисква g1, g2 > 0")
    h = h_effective(eff, g1, g2)
    w, _ = eig_herm(h)
    lhs = _mes_lhs(h[1, 1].real, w[0], h[0, 1].real)
    return lhs, lhs <= MES_BOUND


def threshold_analytic(nph: int) -> float:
    """(g2/g1)_th = [1/c + sqrt(1 + 1/c²)]^-1 = c / (1 + sqrt(1 + c²))."""
    if nph < 0:
        raise ValueError(f"N_ph трябва да е >= 0, получено {nph}")
    c = 2 * nph + 1
    return c / (1 + math.sqrt(1 + c * c))


def rabi_peak(eff: EffectiveParams, g1: float, g2: float) -> Tuple[float, float]:
    """p_max = J²/(J²+Δ²); E_p = 1 при p_max >= 1/2, иначе 2 sqrt(p_max(1-p_max))."""
    splitting, exchange = effective_terms(eff, g1, g2)
    denom = exchange ** 2 + splitting ** 2
    p_max = exchange ** 2 / denom if denom > 0 else 0.0
    e_p = 1.0 if p_max >= 0.5 else 2 * math.sqrt(p_max * (1 - p_max))
    return p_max, e_p


# --- Числена затворена динамика ---

@dataclass
class ClosedPeak:
    E_p: float
    t_p: float
    p_max: float


def closed_trajectory(
    p: ModelParams,
    nph: int,
    times: Sequence[float],
    model: str = "effective",
    n_cavity: Optional[int] = None,
) -> Tuple[Trajectory, np.ndarray, np.ndarray]:
    """Затворена еволюция от |0 N_ph 1>; връща (траектория, p10, p01)."""
    if model == "effective":
        eff = EffectiveParams.from_params(p, nph)
        traj = evolve_closed(h_effective(eff, p.g1, p.g2), effective_initial_state(), times)
        observe_effective(traj)
        p10, p01 = qubit_populations(traj)
        return traj, p10, p01

    if model == "full":
        n_cavity = n_cavity or nph + 3
        space, ops = build_space(n_cavity)
        traj = evolve_closed(h_model(p, ops), basis_state(space, 0, nph, 1), times)
        observe(traj, space, ops)
        p10, p01 = qubit_populations(traj, space)
        return traj, p10, p01

    raise ValueError(f"Непознат модел '{model}' (очаква се effective или full)")


def closed_peak(nph: int, ratio: float, delta: float = DEFAULT_DELTA, g1: float = 1.0) -> ClosedPeak:
    """Пикова сплетеност от численната ефективна динамика в [0, 4π/Ω]."""
    p = ModelParams(omega=0.0, epsilon=delta, g1=g1, g2=ratio * g1)
    eff = EffectiveParams(nph=nph, delta=delta)
    times = peak_search_times(eff, p.g1, p.g2)
    traj, p10, _ = closed_trajectory(p, nph, times)
    e_p, t_p = peak_entanglement(traj)
    index = int(np.argmax(p10))
    _, p_max = parabolic_peak(times, p10, index)
    return ClosedPeak(E_p=e_p, t_p=t_p, p_max=min(p_max, 1.0))


def _equal_weights(nph: int, ratio: float, delta: float) -> bool:
    """|<10|ψ(t)>| достига |<01|ψ(t)>| някъде по траекторията."""
    return closed_peak(nph, ratio, delta).p_max >= 0.5


def threshold_numeric(nph: int, grid_step: float = 0.01, delta: float = DEFAULT_DELTA) -> float:
    """
    Най-малкото g2/g1 с MES: грубо сканиране по E_p >= 0.999 и бисекция
    по условието за равни амплитуди до 1e-4.
    """
    if not 0 < grid_step <= 0.01:
        raise ValueError(f"grid_step трябва да е в (0, 0.01], получено {grid_step}")

    n_points = int(round(1.0 / grid_step))
    ratios = grid_step * np.arange(1, n_points + 1)
    hit = next(
        (k for k, r in enumerate(ratios) if closed_peak(nph, r, delta).E_p >= MES_CRITERION),
        None,
    )
    if hit is None:
        raise NoMESFoundError(f"Няма MES за N_ph={nph} в [{grid_step}, 1]")

    lo = ratios[hit - 1] if hit > 0 else 0.0
    hi_idx = hit
    while hi_idx < len(ratios) - 1 and not _equal_weights(nph, ratios[hi_idx], delta):
        hi_idx += 1
    hi = ratios[hi_idx]

    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if _equal_weights(nph, mid, delta):
            hi = mid
        else:
            lo = mid
    threshold = 0.5 * (lo + hi)
    logger.info(f"Праг N_ph={nph}: числено {threshold:.6f}, аналитично {threshold_analytic(nph):.6f}")
    return threshold


# --- Сканиране на стационарни състояния ---

@dataclass
class SweepTable:
    """Ос, стойности и наблюдаеми по точки; неуспешните точки носят съобщение в errors."""
    axis: str
    values: List[float]
    columns: Dict[str, List[float]]
    errors: List[Optional[str]]
    provenance: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.values)

    def column(self, name: str) -> np.ndarray:
        return np.asarray(self.columns[name], dtype=float)

    @property
    def failed(self) -> List[int]:
        return [i for i, e in enumerate(self.errors) if e is not None]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({self.axis: self.values, **self.columns})
        frame["error"] = self.errors
        return frame


def _point_observables(p: ModelParams, n_cavity: int, observables: Sequence[str]) -> Dict[str, float]:
    rho, space, ops = solve_steady(p, n_cavity)
    row: Dict[str, float] = {}
    if "E_ss" in observables:
        row["E_ss"] = qubit_concurrence(rho, space)
    if {"C_ss", "C1_ss", "C2_ss"} & set(observables):
        try:
            c1, c2 = cross_correlation_terms(rho, ops)
        except UndefinedCorrelationError as e:
            logger.debug(f"Кроскорелацията не е дефинирана: {e}")
            c1 = c2 = math.nan
        row.update({"C_ss": 0.5 * (c1 + c2), "C1_ss": c1, "C2_ss": c2})
    if "residual" in observables:
        row["residual"] = steady_residual(liouvillian(p, ops), rho)
    for name in ("sz1", "sz2", "nphot"):
        if name in observables:
            op = {"sz1": ops.s1_z, "sz2": ops.s2_z, "nphot": ops.n_phot}[name]
            row[name] = expectation(rho, op)
    return {name: row[name] for name in observables}


def _sweep_worker(args: Tuple[str, float, Dict[str, float], Tuple[str, ...], int]) -> Tuple[Dict[str, float], Optional[str]]:
    """Една точка от сканирането; параметрите идват като речник заради pickling."""
    axis, value, params_dict, observables, n_cavity = args
    try:
        p = ModelParams(**params_dict).with_value(axis, value)
        return _point_observables(p, n_cavity, observables), None
    except (NumericalError, ValueError) as e:
        return {name: math.nan for name in observables}, f"{type(e).__name__}: {e}"


def resolve_workers(max_workers: int, n_points: int) -> int:
    cpu_cores = os.cpu_count() or 1
    workers = max(1, cpu_cores - 1) if max_workers == -1 else max(1, max_workers)
    return min(workers, max(1, n_points))


def sweep(
    axis: str,
    values: Sequence[float],
    base: ModelParams,
    observables: Sequence[str] = ("E_ss",),
    n_cavity: int = 6,
    workers: int = 1,
    progress: bool = False,
) -> SweepTable:
    """Стационарно състояние за всяка точка от мрежата; грешките се записват, не спират сканирането."""
    if not len(values):
        raise ValueError("Празна мрежа за сканиране")
    if axis not in SWEEP_AXES:
        raise ValueError(f"Непозната ос '{axis}', допустими: {', '.join(SWEEP_AXES)}")
    unknown = set(observables) - set(OBSERVABLES)
    if unknown:
        raise ValueError(f"Непознати наблюдаеми: {sorted(unknown)}")

    observables = tuple(observables)
    params_dict = asdict(base)
    tasks = [(axis, float(v), params_dict, observables, n_cavity) for v in values]
    logger.info(f"Сканиране по '{axis}': {len(tasks)} точки, N_c={n_cavity}, работници: {workers}")

    bar = tqdm(total=len(tasks), desc=f"sweep {axis}", unit="pt", disable=not progress)
    results = []
    if workers > 1:
        with Pool(processes=workers) as pool:
            for result in pool.imap(_sweep_worker, tasks):
                results.append(result)
                bar.update(1)
    else:
        for task in tasks:
            results.append(_sweep_worker(task))
            bar.update(1)
    bar.close()

    columns: Dict[str, List[float]] = {name: [] for name in observables}
    errors: List[Optional[str]] = []
    for value, (row, error) in zip(values, results):
        for name in observables:
            columns[name].append(row[name])
        errors.append(error)
        if error:
            logger.warning(f"Точка {axis}={value:.6g} е неуспешна: {error}")

    return SweepTable(
        axis=axis,
        values=[float(v) for v in values],
        columns=columns,
        errors=errors,
        provenance={**params_dict, "n_cavity": n_cavity},
    )


# --- Характеристики на сканиранията ---

@dataclass
class FeatureSet:
    """Ширина на долината E_ss=0 (g2r) и позиция на пика на E_ss (g2p) при даден драйв."""
    d: float
    g2r: float
    g2p: float
    valley: Optional[Tuple[float, float]] = None
    g2p_at_boundary: bool = False
    entangled: bool = True


@dataclass
class DriveOptimum:
    """Оптимален драйв при дадено g2/g1: позиция и височина на пика и ширина на областта с E_ss > 0."""
    ratio: float
    d_peak: float
    E_peak: float
    d_r: float
    d_peak_at_boundary: bool = False
    entangled: bool = True


def _runs(mask: np.ndarray) -> List[Tuple[int, int]]:
    """Непрекъснати серии от True като (начало, край) включително."""
    runs = []
    start = None
    for i, flag in enumerate(mask):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(mask) - 1))
    return runs


def _widest_run(axis_values: np.ndarray, mask: np.ndarray) -> Optional[Tuple[float, float]]:
    runs = _runs(mask)
    if not runs:
        return None
    lo, hi = max(runs, key=lambda r: axis_values[r[1]] - axis_values[r[0]])
    return float(axis_values[lo]), float(axis_values[hi])


def _peak(axis_values: np.ndarray, values: np.ndarray) -> Tuple[float, float, bool]:
    index = int(np.nanargmax(values))
    x_peak, y_peak = parabolic_peak(axis_values, values, index)
    at_boundary = index in (0, len(values) - 1)
    return x_peak, y_peak, at_boundary


def extract_features(table: SweepTable, zero_tol: float = 1e-4, d: Optional[float] = None) -> FeatureSet:
    """g2r = ширина на най-широката непрекъсната област E_ss <= zero_tol; g2p = g2/g1 на глобалния максимум."""
    if len(table) == 0:
        raise ValueError("Празна таблица")
    if table.axis != "ratio":
        raise ValueError(f"Очаква се ос 'ratio', получена '{table.axis}'")
    if len(table) < MIN_FEATURE_POINTS:
        raise ValueError(f"Нужни са поне {MIN_FEATURE_POINTS} точки, получени {len(table)}")

    x = np.asarray(table.values, dtype=float)
    e_ss = table.column("E_ss")
    if np.all(np.isnan(e_ss)):
        raise ValueError("Всички точки от сканирането са неуспешни")

    drive = d if d is not None else float(table.provenance.get("d", math.nan))
    valley = _widest_run(x, e_ss <= zero_tol)
    g2r = valley[1] - valley[0] if valley else 0.0
    if np.nanmax(e_ss) <= zero_tol:
        logger.warning(f"Няма стационарна сплетеност при d={drive:.4g}: g2p не е дефиниран")
        return FeatureSet(d=drive, g2r=g2r, g2p=math.nan, valley=valley, entangled=False)

    g2p, _, at_boundary = _peak(x, e_ss)
    if at_boundary:
        logger.warning(f"Пикът на E_ss е на границата на мрежата (g2/g1={g2p:.4g})")
    return FeatureSet(d=drive, g2r=g2r, g2p=g2p, valley=valley, g2p_at_boundary=at_boundary)


def drive_optimum(table: SweepTable, zero_tol: float = 1e-4) -> DriveOptimum:
    """Позиция на пика на E_ss(d) и ширина d_r на областта с крайна сплетеност."""
    if len(table) == 0:
        raise ValueError("Празна таблица")
    if table.axis != "d":
        raise ValueError(f"Очаква се ос 'd', получена '{table.axis}'")

    x = np.asarray(table.values, dtype=float)
    e_ss = table.column("E_ss")
    if np.all(np.isnan(e_ss)):
        raise ValueError("Всички точки от сканирането са неуспешни")
    ratio = table.provenance["g2"] / table.provenance["g1"]
    if np.nanmax(e_ss) <= zero_tol:
        logger.warning(f"Няма стационарна сплетеност при g2/g1={ratio:.4g}: d_peak не е дефиниран")
        return DriveOptimum(ratio=ratio, d_peak=math.nan, E_peak=float(np.nanmax(e_ss)), d_r=0.0, entangled=False)

    d_peak, e_peak, at_boundary = _peak(x, e_ss)
    finite = _widest_run(x, e_ss > zero_tol)
    d_r = finite[1] - finite[0] if finite else 0.0
    return DriveOptimum(ratio=ratio, d_peak=d_peak, E_peak=e_peak, d_r=d_r, d_peak_at_boundary=at_boundary)


def feature_scan(
    drives: Sequence[float],
    ratios: Sequence[float],
    base: ModelParams,
    n_cavity: int = 6,
    zero_tol: float = 1e-4,
    workers: int = 1,
    progress: bool = False,
) -> Tuple[List[FeatureSet], List[SweepTable]]:
    """За всеки драйв: сканиране по g2/g1 и извличане на характеристиките."""
    features, tables = [], []
    for d in drives:
        table = sweep("ratio", ratios, base.with_value("d", d), ("E_ss",), n_cavity, workers, progress)
        tables.append(table)
        if len(table.failed) == len(table):
            logger.warning(f"Всички точки при d={d:.4g} са неуспешни")
            features.append(FeatureSet(d=float(d), g2r=math.nan, g2p=math.nan))
            continue
        features.append(extract_features(table, zero_tol, d=d))
    return features, tables


def fit_window(xs: Sequence[float], ys: Sequence[float], x_min: float, x_max: float) -> Optional[Tuple[float, float, float]]:
    """Права през точките в прозореца [x_min, x_max]; None ако са по-малко от две различни x."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    mask = (x >= x_min) & (x <= x_max) & ~np.isnan(y)
    if np.unique(x[mask]).size < 2:
        return None
    return line_fit(x[mask], y[mask])


def peak_curve(ratios: Sequence[float], nph_values: Sequence[int], delta: float = DEFAULT_DELTA) -> SweepTable:
    """E_p(g2/g1) за няколко N_ph от численната затворена динамика."""
    columns = {
        f"Ep_nph{n}": [closed_peak(n, float(r), delta).E_p for r in ratios]
        for n in nph_values
    }
    return SweepTable(
        axis="ratio",
        values=[float(r) for r in ratios],
        columns=columns,
        errors=[None] * len(ratios),
        provenance={"delta": delta},
    )
