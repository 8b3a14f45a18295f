"""
Числово ядро за плътна комплексна линейна алгебра
Тензорни произведения, матрична експонента, ермитово разлагане,
нулево пространство и линейна регресия за всички останали модули.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import linalg

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Tolerances:
    """Единствената таблица с числови прагове в проекта."""
    hermitian: float = 1e-10          # max|M - M†| за ермитови входове
    eig_residual: float = 1e-9        # ||M v - λ v|| за eig_herm
    unitary: float = 1e-10            # отклонение от унитарност на expm
    null_rank: float = 1e-8           # сингулярна стойност / норма, под която посоката е нулева
    null_residual: float = 1e-10      # ||M v|| / ||M|| за null_vector
    kron: float = 1e-12               # смесено произведение на kron
    norm: float = 1e-9                # норма на вектора при затворена еволюция
    trace: float = 1e-9               # следа на матрица на плътността
    trace_drift: float = 1e-8         # дрейф на следата при RK4
    positivity: float = -1e-8         # минимално допустимо собствено число на ρ
    imag_discard: float = 1e-10       # имагинерна част на очаквана стойност
    correlation_floor: float = 1e-12  # знаменател на кроскорелацията
    steady_residual: float = 1e-10    # ||L vec(ρ_ss)||


TOL = Tolerances()


class NumericalError(RuntimeError):
    """Базова грешка за всички числови провали."""


class NonSquareError(NumericalError):
    """Операцията изисква квадратна матрица."""


class NotHermitianError(NumericalError):
    """Матрицата не е ермитова в рамките на толеранса."""


class FullRankError(NumericalError):
    """Матрицата няма числено нулево пространство."""


class DegenerateNullSpaceError(NumericalError):
    """Нулевото пространство е с размерност по-голяма от едно."""

    def __init__(self, message: str, directions: np.ndarray):
        super().__init__(message)
        self.directions = directions


class DegenerateFitError(NumericalError):
    """Линейната регресия няма поне две различни x стойности."""


def _as_square(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NonSquareError(f"{name} трябва да е квадратна, получена форма {m.shape}")
    return m


def hermiticity_error(m: np.ndarray) -> float:
    """Return max|M - M†|."""
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m - m.conj().T)))


def is_hermitian(m: np.ndarray, tol: float = TOL.hermitian) -> bool:
    return hermiticity_error(m) <= tol


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Кронекерово произведение на две квадратни матрици (индексът на a е старши)."""
    a = _as_square(a, "a")
    b = _as_square(b, "b")
    return np.kron(a, b)


def kron_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    result = _as_square(factors[0], "factor 0")
    for idx, factor in enumerate(factors[1:], start=1):
        result = kron(result, _as_square(factor, f"factor {idx}"))
    return result


def expm(m: np.ndarray) -> np.ndarray:
    """
    Матрична експонента.
    За ермитови и антиермитови входове се използва спектрално разлагане,
    иначе Padé scaling-and-squaring от scipy.
    """
    m = _as_square(m)
    if m.shape[0] == 0:
        return m.copy()

    if is_hermitian(m):
        w, v = linalg.eigh((m + m.conj().T) / 2)
        return (v * np.exp(w)) @ v.conj().T

    if hermiticity_error(1j * m) <= TOL.hermitian:
        # m = -i K с ермитово K
        k = 1j * m
        w, v = linalg.eigh((k + k.conj().T) / 2)
        return (v * np.exp(-1j * w)) @ v.conj().T

    return linalg.expm(m)


def eig_herm(m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix."""
    m = _as_square(m)
    err = hermiticity_error(m)
    if err > TOL.hermitian:
        raise NotHermitianError(f"Матрицата не е ермитова: max|M - M†| = {err:.3e}")
    w, v = linalg.eigh((m + m.conj().T) / 2)
    return w, v


def null_vector(m: np.ndarray) -> np.ndarray:
    """
    Единичен вектор v с ||M v|| <= 1e-10 ||M||, получен чрез SVD.

    Ако нулевото пространство има повече от една посока, се вдига
    DegenerateNullSpaceError с всички намерени посоки в атрибута directions.
    """
    m = _as_square(m)
    _, s, vh = linalg.svd(m)
    scale = s[0] if s.size and s[0] > 0 else 1.0
    null_mask = s <= TOL.null_rank * scale
    nullity = int(np.count_nonzero(null_mask))
    logger.debug(f"null_vector: n={m.shape[0]}, s_min={s[-1]:.3e}, s_max={scale:.3e}, nullity={nullity}")

    if nullity == 0:
        raise FullRankError(
            f"Матрицата е с пълен ранг: s_min/s_max = {s[-1] / scale:.3e}"
        )

    directions = vh[null_mask].conj().T
    if nullity > 1:
        raise DegenerateNullSpaceError(
            f"Нулевото пространство е {nullity}-мерно", directions
        )

    v = directions[:, 0]
    v = v / np.linalg.norm(v)
    residual = np.linalg.norm(m @ v)
    if residual > TOL.null_residual * scale:
        raise FullRankError(
            f"Остатъкът на нулевия вектор {residual:.3e} надвишава {TOL.null_residual * scale:.3e}"
        )
    return v


def line_fit(xs: Sequence[float], ys: Sequence[float]) -> Tuple[float, float, float]:
    """Least-squares straight line; returns (slope, intercept, rms_residual)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"Различна дължина на xs ({x.size}) и ys ({y.size})")
    if np.unique(x).size < 2:
        raise DegenerateFitError("Нужни са поне две различни x стойности")

    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    residuals = y - (slope * x + intercept)
    rms = float(np.sqrt(np.mean(residuals ** 2)))
    return float(slope), float(intercept), rms


def vec(rho: np.ndarray) -> np.ndarray:
    """Векторизация по колони (column-major)."""
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape((dim, dim), order="F")


def spectral_radius(m: np.ndarray) -> float:
    m = _as_square(m)
    if is_hermitian(m):
        w = linalg.eigvalsh((m + m.conj().T) / 2)
    else:
        w = linalg.eigvals(m)
    return float(np.max(np.abs(w))) if w.size else 0.0


def parabolic_peak(xs: Sequence[float], ys: Sequence[float], index: int) -> Tuple[float, float]:
    """
    Parabola through the three samples around ``index``; returns (x_peak, y_peak).
    Falls back to the sample itself at the grid edges or for a non-concave triple.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if index <= 0 or index >= x.size - 1:
        return float(x[index]), float(y[index])
    if not np.all(np.isfinite(y[index - 1:index + 2])):
        return float(x[index]), float(y[index])

    # центрирани координати около средната точка
    u0, u2 = x[index - 1] - x[index], x[index + 1] - x[index]
    v0, v2 = y[index - 1] - y[index], y[index + 1] - y[index]
    det = u0 * u2 * (u0 - u2)
    if det == 0:
        return float(x[index]), float(y[index])
    a = (v0 * u2 - v2 * u0) / det
    b = (u0 ** 2 * v2 - u2 ** 2 * v0) / det
    if a >= 0:
        return float(x[index]), float(y[index])
    u_peak = -b / (2 * a)
    if not (u0 <= u_peak <= u2):
        return float(x[index]), float(y[index])
    y_peak = y[index] - b ** 2 / (4 * a)
    return float(x[index] + u_peak), float(y_peak)


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


def random_density_matrix(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real
