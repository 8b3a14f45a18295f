"""
Модул за времева еволюция
Затворена еволюция чрез спектрално разлагане, отворена еволюция с RK4
по vec(ρ) и стационарно състояние от нулевото пространство на L.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from hilbert import HilbertSpace, OperatorSet, basis_state, build_space
from model import EffectiveParams, ModelParams, effective_terms, h_rotating, liouvillian
from numerics import (
    TOL,
    NumericalError,
    eig_herm,
    hermiticity_error,
    null_vector,
    spectral_radius,
    unvec,
    vec,
)

logger = logging.getLogger(__name__)

STEP_FRACTION = 0.01
MAX_STEP_HALVINGS = 4
PEAK_SEARCH_POINTS = 2000
CONVERGENCE_TOL = 1e-6


class TraceDriftError(NumericalError):
    """Следата на ρ се е отклонила над допустимото; стъпката трябва да се намали."""

    def __init__(self, message: str, step: float):
        super().__init__(message)
        self.step = step


class InvalidStateError(NumericalError):
    """Векторът или матрицата на плътността нарушава физическите инварианти."""


@dataclass
class Trajectory:
    """
    Времева мрежа (в единици 1/g1) и състоянията в нея.

    states е (n_t, D) за кет вектори или (n_t, D, D) за матрици на плътността.
    records се попълва от measures.observe.
    """
    times: np.ndarray
    states: np.ndarray
    records: List = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def is_pure(self) -> bool:
        return self.states.ndim == 2

    @property
    def entanglement(self) -> np.ndarray:
        return np.array([r.E for r in self.records], dtype=float)


def check_times(times: Sequence[float]) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("Времевата мрежа трябва да е непразен едномерен масив")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("Времената трябва да са строго нарастващи")
    return t


def validate_density_matrix(rho: np.ndarray, label: str = "ρ", trace_tol: float = TOL.trace) -> None:
    """Hermitian to 1e-9, unit trace (1e-9 by default), min eigenvalue >= -1e-8."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError(f"{label}: очаква се квадратна матрица, получена {rho.shape}")
    herm = hermiticity_error(rho)
    if herm > TOL.norm:
        raise InvalidStateError(f"{label}: не е ермитова (max|ρ-ρ†| = {herm:.3e})")
    trace = np.trace(rho)
    if abs(trace - 1) > trace_tol:
        raise InvalidStateError(f"{label}: следа {trace.real:.12g} ≠ 1")
    min_eig = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0])
    if min_eig < TOL.positivity:
        raise InvalidStateError(f"{label}: отрицателно собствено число {min_eig:.3e}")


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128)
    return np.outer(psi, psi.conj())


def evolve_closed(h: np.ndarray, psi0: np.ndarray, times: Sequence[float]) -> Trajectory:
    """ψ(t) = exp(-iHt) ψ0: едно спектрално разлагане, после само фази."""
    t = check_times(times)
    psi0 = np.asarray(psi0, dtype=np.complex128)
    norm0 = np.linalg.norm(psi0)
    if abs(norm0 - 1) > TOL.norm:
        raise InvalidStateError(f"Началното състояние не е нормирано: ||ψ0|| = {norm0:.12g}")

    w, v = eig_herm(h)
    coeffs = v.conj().T @ psi0
    phases = np.exp(-1j * np.outer(t, w))
    states = (phases * coeffs) @ v.T

    drift = np.max(np.abs(np.linalg.norm(states, axis=1) - 1))
    if drift > TOL.norm:
        raise InvalidStateError(f"Нормата не е запазена: дрейф {drift:.3e}")
    return Trajectory(times=t, states=states)


def rk4_increment(lv: np.ndarray, step: float) -> np.ndarray:
    """P - I за една RK4 стъпка на d vec(ρ)/dt = L vec(ρ)."""
    hl = step * lv
    hl2 = hl @ hl
    hl3 = hl2 @ hl
    return hl + hl2 / 2 + hl3 / 6 + (hl3 @ hl) / 24


def rk4_step_map(lv: np.ndarray, step: float) -> np.ndarray:
    """Матрицата P на една RK4 стъпка."""
    return np.eye(lv.shape[0], dtype=np.complex128) + rk4_increment(lv, step)


def compose_increment(increment: np.ndarray, n: int) -> np.ndarray:
    """
    (I + K)^n - I чрез двоично повдигане върху нарастванията.

    Закръглянето в посоката на следата остава пропорционално на ||K||,
    а не на ||I||, което позволява 1e8 подстъпки под прага за дрейф.
    """
    if n < 1:
        raise ValueError(f"n трябва да е >= 1, получено {n}")
    result = np.zeros_like(increment)
    base = increment
    while n:
        if n & 1:
            result = result + base + result @ base
        n >>= 1
        if n:
            base = 2 * base + base @ base
    return result


def evolve_open(
    lv: np.ndarray,
    rho0: np.ndarray,
    times: Sequence[float],
    step: float,
) -> Trajectory:
    """
    Fixed-step RK4 on vec(ρ).

    Between two output times the interval is split into equal sub-steps no
    longer than ``step``. The composed RK4 map is kept as its increment over
    I and applied once per interval.
    ρ is symmetrized only at output points.
    """
    t = check_times(times)
    validate_density_matrix(rho0, "ρ0")
    if step <= 0:
        raise ValueError(f"Стъпката трябва да е > 0, получено {step}")

    dim = rho0.shape[0]
    if lv.shape != (dim * dim, dim * dim):
        raise ValueError(f"L е с форма {lv.shape}, очаква се {(dim * dim, dim * dim)}")

    trace0 = np.trace(rho0)
    maps: Dict[Tuple[int, float], np.ndarray] = {}
    states = np.empty((t.size, dim, dim), dtype=np.complex128)
    states[0] = rho0
    v = vec(np.asarray(rho0, dtype=np.complex128))

    for k in range(1, t.size):
        interval = t[k] - t[k - 1]
        n_sub = max(1, math.ceil(interval / step - 1e-9))
        key = (n_sub, round(interval, 12))
        if key not in maps:
            maps[key] = compose_increment(rk4_increment(lv, interval / n_sub), n_sub)
            logger.debug(f"RK4: интервал {interval:.6g}, {n_sub} подстъпки по {interval / n_sub:.3e}")
        v = v + maps[key] @ v

        rho = unvec(v, dim)
        drift = abs(np.trace(rho) - trace0)
        if drift > TOL.trace_drift:
            raise TraceDriftError(
                f"Дрейф на следата {drift:.3e} при t={t[k]:.6g} (стъпка {step:.3e})", step
            )
        rho = (rho + rho.conj().T) / 2
        validate_density_matrix(rho, f"ρ(t={t[k]:.6g})", trace_tol=TOL.trace_drift)
        states[k] = rho

    return Trajectory(times=t, states=states)


def default_step(p: ModelParams, ops: OperatorSet) -> float:
    """h = 0.01 / max(ρ(H'), κ, γ, d)."""
    scale = max(spectral_radius(h_rotating(p, ops)), p.kappa, p.gamma, p.d)
    return STEP_FRACTION / scale if scale > 0 else STEP_FRACTION


def run_open(
    p: ModelParams,
    ops: OperatorSet,
    rho0: np.ndarray,
    times: Sequence[float],
    step: Optional[float] = None,
) -> Trajectory:
    """evolve_open с автоматична стъпка, която се разполовява при дрейф на следата."""
    lv = liouvillian(p, ops)
    step = step or default_step(p, ops)
    for attempt in range(MAX_STEP_HALVINGS + 1):
        try:
            return evolve_open(lv, rho0, times, step)
        except TraceDriftError as e:
            if attempt == MAX_STEP_HALVINGS:
                raise
            logger.warning(f"{e}; разполовявам стъпката")
            step /= 2
    raise AssertionError("unreachable")


def steady_state(lv: np.ndarray) -> np.ndarray:
    """ρ_ss от единствения нулев вектор на L, нормиран до следа 1."""
    n = lv.shape[0]
    dim = math.isqrt(n)
    if dim * dim != n:
        raise ValueError(f"L с размер {n} не е супероператор")

    v = null_vector(lv)
    rho = unvec(v, dim)
    trace = np.trace(rho)
    if abs(trace) < TOL.correlation_floor:
        raise InvalidStateError("Нулевият вектор е с нулева следа")
    rho = rho / trace

    herm = hermiticity_error(rho)
    if herm > TOL.norm:
        raise InvalidStateError(f"Стационарното състояние не е ермитово: {herm:.3e}")
    rho = (rho + rho.conj().T) / 2

    residual = steady_residual(lv, rho)
    if residual > TOL.steady_residual:
        raise InvalidStateError(f"Остатък ||L vec(ρ_ss)|| = {residual:.3e}")
    validate_density_matrix(rho, "ρ_ss")
    return rho


def steady_residual(lv: np.ndarray, rho: np.ndarray) -> float:
    return float(np.linalg.norm(lv @ vec(rho)))


def solve_steady(p: ModelParams, n_cavity: int) -> Tuple[np.ndarray, HilbertSpace, OperatorSet]:
    space, ops = build_space(n_cavity)
    return steady_state(liouvillian(p, ops)), space, ops


def truncation_converged(p: ModelParams, n_cavity: int) -> bool:
    """|E_ss(N_c) - E_ss(N_c + 2)| <= 1e-6."""
    from measures import qubit_concurrence

    if n_cavity < 4:
        raise ValueError(f"Проверката изисква N_c >= 4, получено {n_cavity}")
    values = []
    for nc in (n_cavity, n_cavity + 2):
        rho, space, _ = solve_steady(p, nc)
        values.append(qubit_concurrence(rho, space))
    diff = abs(values[0] - values[1])
    logger.info(f"Отрязване N_c={n_cavity}: E_ss={values[0]:.8g}, при N_c+2: {values[1]:.8g}, разлика {diff:.2e}")
    return diff <= CONVERGENCE_TOL


def initial_density(space: HilbertSpace, nph: int) -> np.ndarray:
    """|0, N_ph, 1><0, N_ph, 1|."""
    return projector(basis_state(space, 0, nph, 1))


def effective_initial_state() -> np.ndarray:
    """|01>_q в базиса {|10>_q, |01>_q}."""
    return np.array([0.0, 1.0], dtype=np.complex128)


def rabi_frequency(eff: EffectiveParams, g1: float, g2: float) -> float:
    splitting, exchange = effective_terms(eff, g1, g2)
    return math.hypot(splitting, exchange)


def peak_search_times(
    eff: EffectiveParams, g1: float, g2: float, n_points: int = PEAK_SEARCH_POINTS
) -> np.ndarray:
    """Мрежа [0, 4π/Ω] с n_points точки (поне два пълни периода на Раби)."""
    omega = rabi_frequency(eff, g1, g2)
    if omega == 0:
        raise ValueError("Нулева честота на Раби: g1 = g2 = 0")
    return np.linspace(0.0, 4 * math.pi / omega, n_points)
