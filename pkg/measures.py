"""
Модул за наблюдаеми
Редуцирана матрица на кубитите, конкурентност на Wootters,
очаквани стойности, кроскорелация и пикова сплетеност.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from dynamics import Trajectory
from hilbert import QUBIT_DIM, HilbertSpace, OperatorSet
from numerics import TOL, NumericalError, hermiticity_error, parabolic_peak

logger = logging.getLogger(__name__)

SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SYSY = np.kron(SIGMA_Y, SIGMA_Y)

# Индекси на |10>_q и |01>_q в 4-мерния кубитен базис (q1 старши).
IDX_10 = 2
IDX_01 = 1


class UndefinedCorrelationError(NumericalError):
    """Знаменателят на кроскорелацията е под прага (празен резонатор или неполяризиран кубит)."""


class EmptyTrajectoryError(NumericalError):
    """Траекторията няма отчети за сплетеност."""


@dataclass
class ObservableRecord:
    """Наблюдаеми в един момент от време."""
    time: float
    E: float
    sz1: float
    sz2: float
    nphot: float


def reduce_to_qubits(rho: np.ndarray, space: HilbertSpace) -> np.ndarray:
    """Частична следа по резонатора; наредба (q1, q2), q1 старши."""
    rho = np.asarray(rho)
    if rho.shape != (space.dim, space.dim):
        raise ValueError(f"Размерност {rho.shape} не съответства на D={space.dim}")
    nc = space.n_cavity
    tensor = rho.reshape(QUBIT_DIM, nc, QUBIT_DIM, QUBIT_DIM, nc, QUBIT_DIM)
    reduced = np.einsum("anbcnd->abcd", tensor)
    return reduced.reshape(QUBIT_DIM ** 2, QUBIT_DIM ** 2)


def reduce_pure_to_qubits(psi: np.ndarray, space: HilbertSpace) -> np.ndarray:
    psi = np.asarray(psi).reshape(QUBIT_DIM, space.n_cavity, QUBIT_DIM)
    reduced = np.einsum("anb,cnd->abcd", psi, psi.conj())
    return reduced.reshape(QUBIT_DIM ** 2, QUBIT_DIM ** 2)


def concurrence(rho_q: np.ndarray) -> float:
    """
    Конкурентност на Wootters: max(0, λ1 - λ2 - λ3 - λ4).

    λ_i са сингулярните стойности на √ρ·√ρ̃, т.е. корените от собствените
    числа на ρ(σy⊗σy)ρ*(σy⊗σy), без да се коренуват числени нули.
    """
    rho_q = np.asarray(rho_q, dtype=np.complex128)
    if rho_q.shape != (4, 4):
        raise ValueError(f"Очаква се 4×4 матрица на два кубита, получена {rho_q.shape}")
    if hermiticity_error(rho_q) > TOL.norm or abs(np.trace(rho_q) - 1) > TOL.trace_drift:
        raise ValueError("Невалидна двукубитова матрица на плътността")

    w, v = np.linalg.eigh((rho_q + rho_q.conj().T) / 2)
    sqrt_rho = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    sqrt_rho_tilde = SYSY @ sqrt_rho.conj() @ SYSY
    lambdas = np.linalg.svd(sqrt_rho @ sqrt_rho_tilde, compute_uv=False)
    return float(max(0.0, lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]))


def concurrence_pure(psi_q: np.ndarray) -> np.ndarray:
    """C = 2|ad - bc| за a|00> + b|01> + c|10> + d|11>; работи и върху масиви (..., 4)."""
    psi_q = np.asarray(psi_q)
    return 2 * np.abs(psi_q[..., 0] * psi_q[..., 3] - psi_q[..., 1] * psi_q[..., 2])


def effective_to_qubits(amplitudes: np.ndarray) -> np.ndarray:
    """Вгражда амплитуди в базиса {|10>, |01>} в пълния 4-мерен кубитен базис."""
    amplitudes = np.asarray(amplitudes)
    psi_q = np.zeros(amplitudes.shape[:-1] + (4,), dtype=np.complex128)
    psi_q[..., IDX_10] = amplitudes[..., 0]
    psi_q[..., IDX_01] = amplitudes[..., 1]
    return psi_q


def expectation(rho: np.ndarray, op: np.ndarray) -> float:
    """tr(ρ·op) за ермитов оператор."""
    if hermiticity_error(op) > TOL.hermitian:
        raise ValueError("Операторът не е ермитов")
    value = np.trace(np.asarray(rho) @ np.asarray(op))
    if abs(value.imag) > TOL.imag_discard:
        raise NumericalError(f"Имагинерна част {value.imag:.3e} на очаквана стойност")
    return float(value.real)


def qubit_concurrence(rho: np.ndarray, space: HilbertSpace) -> float:
    return concurrence(reduce_to_qubits(rho, space))


def cross_correlation_terms(rho_ss: np.ndarray, ops: OperatorSet) -> Tuple[float, float]:
    """C^i_ss = <s_i^z a†a> / (<s_i^z><a†a>) за i = 1, 2."""
    n_avg = expectation(rho_ss, ops.n_phot)
    if abs(n_avg) <= TOL.correlation_floor:
        raise UndefinedCorrelationError(f"<a†a> = {n_avg:.3e}: празен резонатор")

    terms = []
    for i in (1, 2):
        sz = ops.s_z(i)
        sz_avg = expectation(rho_ss, sz)
        if abs(sz_avg) <= TOL.correlation_floor:
            raise UndefinedCorrelationError(f"<s_{i}^z> = {sz_avg:.3e}: неполяризиран кубит")
        joint = expectation(rho_ss, sz @ ops.n_phot)
        terms.append(joint / (sz_avg * n_avg))
    return terms[0], terms[1]


def cross_correlation(rho_ss: np.ndarray, ops: OperatorSet) -> float:
    """C_ss = (C^1_ss + C^2_ss) / 2."""
    c1, c2 = cross_correlation_terms(rho_ss, ops)
    return 0.5 * (c1 + c2)


def observe(traj: Trajectory, space: HilbertSpace, ops: OperatorSet) -> List[ObservableRecord]:
    """Попълва traj.records от състоянията в пълното пространство."""
    records = []
    for t, state in zip(traj.times, traj.states):
        if traj.is_pure:
            rho_q = reduce_pure_to_qubits(state, space)
            rho = np.outer(state, state.conj())
        else:
            rho = state
            rho_q = reduce_to_qubits(rho, space)
        records.append(ObservableRecord(
            time=float(t),
            E=concurrence(rho_q),
            sz1=expectation(rho, ops.s1_z),
            sz2=expectation(rho, ops.s2_z),
            nphot=expectation(rho, ops.n_phot),
        ))
    traj.records = records
    return records


def observe_effective(traj: Trajectory) -> List[ObservableRecord]:
    """Records for a trajectory of the effective 2×2 model (vacuum-free, E from amplitudes)."""
    amplitudes = traj.states
    entanglement = concurrence_pure(effective_to_qubits(amplitudes))
    p10 = np.abs(amplitudes[:, 0]) ** 2
    p01 = np.abs(amplitudes[:, 1]) ** 2
    traj.records = [
        ObservableRecord(time=float(t), E=float(e), sz1=float(a - b) / 2, sz2=float(b - a) / 2, nphot=0.0)
        for t, e, a, b in zip(traj.times, entanglement, p10, p01)
    ]
    return traj.records


def qubit_populations(traj: Trajectory, space: Optional[HilbertSpace] = None) -> Tuple[np.ndarray, np.ndarray]:
    """(p10, p01) по времето; за ефективния модел space е None."""
    if space is None:
        return np.abs(traj.states[:, 0]) ** 2, np.abs(traj.states[:, 1]) ** 2

    nc = space.n_cavity
    if traj.is_pure:
        probs = np.abs(traj.states.reshape(-1, QUBIT_DIM, nc, QUBIT_DIM)) ** 2
    else:
        diag = np.real(np.einsum("tii->ti", traj.states))
        probs = diag.reshape(-1, QUBIT_DIM, nc, QUBIT_DIM)
    marginal = probs.sum(axis=2)
    return marginal[:, 1, 0], marginal[:, 0, 1]


def peak_entanglement(traj: Trajectory) -> Tuple[float, float]:
    """
    Максимум на E по мрежата с параболично уточнение около дискретния максимум.
    При равни стойности печели най-ранното време.
    """
    if len(traj) == 0 or not traj.records:
        raise EmptyTrajectoryError("Траекторията няма стойности на E")
    values = traj.entanglement
    index = int(np.argmax(values))
    t_peak, e_peak = parabolic_peak(traj.times, values, index)
    return min(e_peak, 1.0), t_peak


def fidelity_with_pure(rho: np.ndarray, psi: np.ndarray) -> float:
    psi = np.asarray(psi)
    return float(np.real(psi.conj() @ rho @ psi))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    diff = np.asarray(rho) - np.asarray(sigma)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2))))


def check_records(records: List[ObservableRecord]) -> None:
    """Диапазони на наблюдаемите с толеранс 1e-8."""
    eps = -TOL.positivity
    for r in records:
        if not (-eps <= r.E <= 1 + eps):
            raise NumericalError(f"E={r.E} извън [0, 1] при t={r.time}")
        for name, value in (("sz1", r.sz1), ("sz2", r.sz2)):
            if not (-0.5 - eps <= value <= 0.5 + eps):
                raise NumericalError(f"{name}={value} извън [-1/2, 1/2] при t={r.time}")
        if r.nphot < -eps:
            raise NumericalError(f"nphot={r.nphot} < 0 при t={r.time}")
