"""
Модул за тричастичното пространство кубит-1 ⊗ резонатор ⊗ кубит-2
Построява вградените стълбични и спинови оператори.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np

from numerics import kron_all

logger = logging.getLogger(__name__)

QUBIT_DIM = 2

# Базис на един кубит: индекс 0 = основно състояние, 1 = възбудено.
SZ_QUBIT = np.diag([-0.5, 0.5]).astype(np.complex128)
SMINUS_QUBIT = np.array([[0, 1], [0, 0]], dtype=np.complex128)


@dataclass(frozen=True)
class HilbertSpace:
    """Наредба q1 ⊗ резонатор ⊗ q2, индекс = q1·(N_c·2) + n·2 + q2."""
    n_cavity: int

    @property
    def dim(self) -> int:
        return QUBIT_DIM * self.n_cavity * QUBIT_DIM

    def index(self, q1: int, n: int, q2: int) -> int:
        return q1 * (self.n_cavity * QUBIT_DIM) + n * QUBIT_DIM + q2


@dataclass(frozen=True)
class OperatorSet:
    """Вградени D×D оператори; масивите са само за четене."""
    a: np.ndarray
    a_dag: np.ndarray
    n_phot: np.ndarray
    s1_minus: np.ndarray
    s1_plus: np.ndarray
    s1_z: np.ndarray
    s2_minus: np.ndarray
    s2_plus: np.ndarray
    s2_z: np.ndarray
    identity: np.ndarray

    def s_minus(self, i: int) -> np.ndarray:
        return (self.s1_minus, self.s2_minus)[i - 1]

    def s_plus(self, i: int) -> np.ndarray:
        return (self.s1_plus, self.s2_plus)[i - 1]

    def s_z(self, i: int) -> np.ndarray:
        return (self.s1_z, self.s2_z)[i - 1]


def cavity_annihilation(n_cavity: int) -> np.ndarray:
    """Отрязан оператор a: a|n> = sqrt(n)|n-1>."""
    return np.diag(np.sqrt(np.arange(1, n_cavity)), k=1).astype(np.complex128)


def _frozen(m: np.ndarray) -> np.ndarray:
    m = np.ascontiguousarray(m)
    m.setflags(write=False)
    return m


@lru_cache(maxsize=16)
def build_space(n_cavity: int) -> Tuple[HilbertSpace, OperatorSet]:
    """Build the space and its embedded operators for N_c Fock levels."""
    if n_cavity < 2:
        raise ValueError(f"N_c трябва да е поне 2, получено {n_cavity}")

    space = HilbertSpace(n_cavity=n_cavity)
    i_q = np.eye(QUBIT_DIM, dtype=np.complex128)
    i_c = np.eye(n_cavity, dtype=np.complex128)
    a_c = cavity_annihilation(n_cavity)

    a = kron_all([i_q, a_c, i_q])
    s1_minus = kron_all([SMINUS_QUBIT, i_c, i_q])
    s2_minus = kron_all([i_q, i_c, SMINUS_QUBIT])

    ops = OperatorSet(
        a=_frozen(a),
        a_dag=_frozen(a.conj().T),
        n_phot=_frozen(a.conj().T @ a),
        s1_minus=_frozen(s1_minus),
        s1_plus=_frozen(s1_minus.conj().T),
        s1_z=_frozen(kron_all([SZ_QUBIT, i_c, i_q])),
        s2_minus=_frozen(s2_minus),
        s2_plus=_frozen(s2_minus.conj().T),
        s2_z=_frozen(kron_all([i_q, i_c, SZ_QUBIT])),
        identity=_frozen(np.eye(space.dim, dtype=np.complex128)),
    )
    logger.debug(f"Построено пространство N_c={n_cavity}, D={space.dim}")
    return space, ops


def basis_state(space: HilbertSpace, q1: int, n: int, q2: int) -> np.ndarray:
    """Единичен вектор |q1, n, q2>; q = 1 означава възбуден кубит."""
    if q1 not in (0, 1) or q2 not in (0, 1):
        raise ValueError(f"Кубитните етикети трябва да са 0 или 1, получени ({q1}, {q2})")
    if not 0 <= n < space.n_cavity:
        raise ValueError(f"n={n} е извън отрязването N_c={space.n_cavity}")
    psi = np.zeros(space.dim, dtype=np.complex128)
    psi[space.index(q1, n, q2)] = 1.0
    return psi
