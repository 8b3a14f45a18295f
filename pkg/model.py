"""
Модул за хамилтонианите и лиувилиана на модела
Пълен хамилтониан, ефективен дисперсионен 2×2 блок, хамилтониан във
въртящата се система на драйва и супероператор на Линдблад.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from hilbert import OperatorSet

logger = logging.getLogger(__name__)

DISPERSIVE_MARGIN = 10.0  # |δ| >= 10·max(g̃1, g̃2)


@dataclass(frozen=True)
class ModelParams:
    """Всички честоти и скорости в единици g1, ħ = 1."""
    omega: float = 50.0      # честота на резонатора
    epsilon: float = 10.0    # честота на кубитите
    g1: float = 1.0          # връзка кубит-1 / резонатор
    g2: float = 1.0          # връзка кубит-2 / резонатор
    omega_d: float = 9.99    # честота на драйва
    d: float = 0.0           # сила на драйва (само на кубит 2)
    kappa: float = 1.0       # затихване на резонатора
    gamma: float = 0.005     # затихване на кубитите

    def __post_init__(self):
        if not self.g1 > 0:
            raise ValueError(f"g1 трябва да е > 0, получено {self.g1}")
        for name in ("g2", "kappa", "gamma", "d"):
            value = getattr(self, name)
            if value < 0:
                raise ValueError(f"{name} трябва да е >= 0, получено {value}")

    @property
    def delta(self) -> float:
        return self.epsilon - self.omega

    @property
    def ratio(self) -> float:
        return self.g2 / self.g1

    def with_value(self, name: str, value: float) -> "ModelParams":
        """Копие с променен параметър; 'ratio' задава g2 = ratio·g1."""
        if name == "ratio":
            return replace(self, g2=value * self.g1)
        return replace(self, **{name: value})


@dataclass(frozen=True)
class EffectiveParams:
    """Производни величини на дисперсионния модел за N_ph фотона."""
    nph: int
    delta: float

    def __post_init__(self):
        if self.nph < 0:
            raise ValueError(f"N_ph трябва да е >= 0, получено {self.nph}")
        if self.delta == 0:
            raise ValueError("δ = 0: дисперсионният модел не е дефиниран при резонанс")

    @property
    def c(self) -> int:
        return 2 * self.nph + 1

    @property
    def delta_tilde(self) -> float:
        return self.delta * self.c

    def g_tilde(self, g: float) -> float:
        return g * math.sqrt(self.c)

    @classmethod
    def from_params(cls, p: ModelParams, nph: int) -> "EffectiveParams":
        eff = cls(nph=nph, delta=p.delta)
        eff.check_dispersive(p.g1, p.g2)
        return eff

    def check_dispersive(self, g1: float, g2: float) -> bool:
        g_max = max(self.g_tilde(g1), self.g_tilde(g2))
        ok = abs(self.delta) >= DISPERSIVE_MARGIN * g_max
        if not ok:
            logger.warning(
                f"Извън дисперсионния режим: |δ|={abs(self.delta):.4g} < "
                f"{DISPERSIVE_MARGIN:g}·g̃_max={DISPERSIVE_MARGIN * g_max:.4g}"
            )
        return ok


def _coupling(ops: OperatorSet, g1: float, g2: float) -> np.ndarray:
    term = g1 * ops.a_dag @ ops.s1_minus + g2 * ops.a_dag @ ops.s2_minus
    return term + term.conj().T


def _hermitize(h: np.ndarray) -> np.ndarray:
    return (h + h.conj().T) / 2


def h_model(p: ModelParams, ops: OperatorSet) -> np.ndarray:
    """H = ω a†a + ε Σ s_i^z + Σ g_i (a† s_i^- + h.c.)."""
    h = (
        p.omega * ops.n_phot
        + p.epsilon * (ops.s1_z + ops.s2_z)
        + _coupling(ops, p.g1, p.g2)
    )
    return _hermitize(h)


def effective_terms(eff: EffectiveParams, g1: float, g2: float) -> Tuple[float, float]:
    """Return (Δ, J): Stark half-splitting and exchange of the 2×2 block."""
    gt1, gt2 = eff.g_tilde(g1), eff.g_tilde(g2)
    splitting = (gt1 ** 2 - gt2 ** 2) / (2 * eff.delta)
    exchange = gt1 * gt2 / eff.delta_tilde
    return splitting, exchange


def h_effective(eff: EffectiveParams, g1: float, g2: float) -> np.ndarray:
    """
    Ефективен безследов блок в базиса {|10>_q, |01>_q}.

    Диагонал ±(g̃1² - g̃2²)/(2δ) от Σ (g̃_i²/δ) s_i^z при s^z = ±1/2,
    извъндиагонален обмен J = g̃1 g̃2 / δ̃ = g1 g2 / δ.
    """
    splitting, exchange = effective_terms(eff, g1, g2)
    return np.array(
        [[splitting, exchange], [exchange, -splitting]], dtype=np.complex128
    )


def h_rotating(p: ModelParams, ops: OperatorSet) -> np.ndarray:
    """H' във въртящата се система на драйва; драйвът действа само на кубит 2."""
    h = (
        (p.omega - p.omega_d) * ops.n_phot
        + (p.epsilon - p.omega_d) * (ops.s1_z + ops.s2_z)
        + _coupling(ops, p.g1, p.g2)
        + p.d * (ops.s2_plus + ops.s2_minus)
    )
    return _hermitize(h)


def _dissipator(o: np.ndarray, eye: np.ndarray) -> np.ndarray:
    """(1/2)(2 o ρ o† - o†o ρ - ρ o†o) при колонна векторизация."""
    o_dag_o = o.conj().T @ o
    return (
        np.kron(o.conj(), o)
        - 0.5 * np.kron(eye, o_dag_o)
        - 0.5 * np.kron(o_dag_o.T, eye)
    )


def liouvillian(p: ModelParams, ops: OperatorSet) -> np.ndarray:
    """
    Супероператор L върху vec(ρ) (колони една под друга):
    L = -i(I⊗H' - H'ᵀ⊗I) + κ D[a] + γ Σ_j D[s_j^-].
    """
    h = h_rotating(p, ops)
    eye = np.eye(h.shape[0], dtype=np.complex128)
    lv = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    if p.kappa > 0:
        lv = lv + p.kappa * _dissipator(ops.a, eye)
    if p.gamma > 0:
        lv = lv + p.gamma * (_dissipator(ops.s1_minus, eye) + _dissipator(ops.s2_minus, eye))
    return lv
