"""
Централен конфигурационен файл за симулациите на кубити в резонатор
Съдържа всички настройки за всички модули и четенето на key = value документи
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Tuple

from model import ModelParams

MODELS = ("effective", "full")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class ConfigError(ValueError):
    """Грешка в конфигурацията; line е номер на ред (1-базиран), 0 за --set."""

    def __init__(self, message: str, line: int = 0, source: Optional[str] = None):
        self.line = line
        self.source = source
        where = f"ред {line}" if line else f"--set '{source}'" if source else "конфигурация"
        super().__init__(f"{where}: {message}")


@dataclass
class PhysicsConfig:
    """Параметри на модела в единици g1; по подразбиране κ = g1, γ = 0.005 g1."""
    omega: float = 50.0      # честота на резонатора ω
    epsilon: float = 10.0    # честота на кубитите ε
    g1: float = 1.0          # връзка кубит-1 / резонатор
    g2: float = 1.0          # връзка кубит-2 / резонатор
    omega_d: float = 9.99    # честота на драйва ω_d
    d: float = 0.0           # сила на драйва на кубит 2
    kappa: float = 1.0       # затихване на резонатора κ
    gamma: float = 0.005     # затихване на кубитите γ

    def to_params(self) -> ModelParams:
        return ModelParams(**asdict(self))


@dataclass
class SimulationConfig:
    """Начално състояние, отрязване и времева мрежа."""
    nph: int = 1                      # брой фотони N_ph в началното състояние
    nc: int = 6                       # отрязване на резонатора N_c
    t_max: Optional[float] = None     # None: 4π/Ω за closed, 20/γ за open
    n_steps: int = 2000               # брой точки на изходната мрежа
    model: str = "effective"          # effective или full (само за closed)
    step: Optional[float] = None      # RK4 стъпка; None: 0.01 / max(ρ(H'), κ, γ, d)


@dataclass
class SweepConfig:
    """Мрежи за сканиранията и извличането на характеристики."""
    sweep_min: Optional[float] = None   # None: стойност по подразбиране на командата
    sweep_max: Optional[float] = None
    sweep_steps: Optional[int] = None
    nph_max: int = 3                    # за threshold и peak-curve
    grid_step: float = 0.01             # стъпка на грубото търсене на прага
    zero_tol: float = 1e-4              # праг за E_ss = 0
    feature_d_min: float = 0.004        # мрежа по d за features
    feature_d_max: float = 0.06
    feature_d_steps: int = 15
    fit_d_min: Optional[float] = None   # прозорец за линейната апроксимация; None: цялата мрежа
    fit_d_max: Optional[float] = None


@dataclass
class OutputConfig:
    out: Optional[str] = None   # None: стандартен изход
    precision: int = 12         # значещи цифри в CSV


@dataclass
class LoggingConfig:
    """Конфигурации за системата за логиране."""
    log_level: str = "INFO"
    log_file: Optional[str] = None   # None: без лог файл
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    enable_console_logging: bool = True


@dataclass
class PerformanceConfig:
    """Паралелна обработка на сканиранията."""
    enable_multiprocessing: bool = True
    workers: int = 1      # -1: всички ядра без едно
    show_progress: bool = True


@dataclass
class RunConfig:
    """Главна конфигурация, която обединява всички секции."""
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)
    performance: PerformanceConfig = field(default_factory=PerformanceConfig)

    @property
    def params(self) -> ModelParams:
        return self.physics.to_params()


# Ключ в документа -> (секция, тип, допуска ли None)
KEY_TABLE: Dict[str, Tuple[str, type, bool]] = {
    "omega": ("physics", float, False),
    "epsilon": ("physics", float, False),
    "g1": ("physics", float, False),
    "g2": ("physics", float, False),
    "omega_d": ("physics", float, False),
    "d": ("physics", float, False),
    "kappa": ("physics", float, False),
    "gamma": ("physics", float, False),
    "nph": ("simulation", int, False),
    "nc": ("simulation", int, False),
    "t_max": ("simulation", float, True),
    "n_steps": ("simulation", int, False),
    "model": ("simulation", str, False),
    "step": ("simulation", float, True),
    "sweep_min": ("sweep", float, True),
    "sweep_max": ("sweep", float, True),
    "sweep_steps": ("sweep", int, True),
    "nph_max": ("sweep", int, False),
    "grid_step": ("sweep", float, False),
    "zero_tol": ("sweep", float, False),
    "feature_d_min": ("sweep", float, False),
    "feature_d_max": ("sweep", float, False),
    "feature_d_steps": ("sweep", int, False),
    "fit_d_min": ("sweep", float, True),
    "fit_d_max": ("sweep", float, True),
    "out": ("output", str, True),
    "precision": ("output", int, False),
    "log_level": ("logging", str, False),
    "log_file": ("logging", str, True),
    "workers": ("performance", int, False),
}

NONE_LITERALS = ("", "auto", "none")


def _parse_value(key: str, raw: str) -> Any:
    _, kind, nullable = KEY_TABLE[key]
    if nullable and raw.lower() in NONE_LITERALS:
        return None
    if kind is str:
        return raw
    try:
        value = kind(raw)
    except ValueError:
        raise ValueError(f"'{key}': стойността '{raw}' не е {kind.__name__}") from None
    if kind is float and not math.isfinite(value):
        raise ValueError(f"'{key}': стойността '{raw}' не е крайно число")
    return value


def _split_line(line: str) -> Optional[Tuple[str, str]]:
    """'key = value  # коментар' -> (key, value); празни редове и коментари -> None."""
    content = line.split("#", 1)[0].strip()
    if not content:
        return None
    if "=" not in content:
        raise ValueError(f"очаква се 'key = value', получено '{content}'")
    key, value = content.split("=", 1)
    return key.strip(), value.strip()


class ConfigManager:
    """Мениджър за зареждане, презаписване и проверка на конфигурацията."""

    def __init__(self):
        self.config = RunConfig()
        self._origin: Dict[str, Tuple[int, Optional[str]]] = {}

    def load_text(self, text: str) -> RunConfig:
        """Чете key = value документ; непознати ключове и лоши стойности -> ConfigError с ред."""
        for number, line in enumerate(text.splitlines(), start=1):
            try:
                pair = _split_line(line)
                if pair is None:
                    continue
                self._set(*pair)
            except ValueError as e:
                raise ConfigError(str(e), line=number) from None
            self._origin[pair[0]] = (number, None)
        return self.validate()

    def load_file(self, path: str) -> RunConfig:
        try:
            with open(path, "r", encoding="utf-8") as f:
                text = f.read()
        except (OSError, UnicodeDecodeError) as e:
            raise ConfigError(f"не може да се прочете '{path}': {e}") from None
        return self.load_text(text)

    def apply_overrides(self, overrides: Iterable[str]) -> RunConfig:
        """--set key=value; презаписва стойностите от файла."""
        for item in overrides:
            try:
                pair = _split_line(item)
                if pair is None:
                    raise ValueError("празно презаписване")
                self._set(*pair)
            except ValueError as e:
                raise ConfigError(str(e), source=item) from None
            self._origin[pair[0]] = (0, item)
        return self.validate()

    def _set(self, key: str, raw: str) -> None:
        if key not in KEY_TABLE:
            raise ValueError(f"непознат ключ '{key}'")
        section = getattr(self.config, KEY_TABLE[key][0])
        setattr(section, key, _parse_value(key, raw))

    def _fail(self, key: str, message: str) -> ConfigError:
        line, source = self._origin.get(key, (0, None))
        return ConfigError(message, line=line, source=source)

    def validate(self) -> RunConfig:
        """Инварианти: скорости >= 0, N_c >= N_ph + 3, брой стъпки >= 2."""
        cfg = self.config
        phys, sim, sw = cfg.physics, cfg.simulation, cfg.sweep

        for key in ("g2", "d", "kappa", "gamma"):
            if getattr(phys, key) < 0:
                raise self._fail(key, f"{key} трябва да е >= 0, получено {getattr(phys, key)}")
        if phys.g1 <= 0:
            raise self._fail("g1", f"g1 трябва да е > 0, получено {phys.g1}")

        if sim.nph < 0:
            raise self._fail("nph", f"nph трябва да е >= 0, получено {sim.nph}")
        if sim.nc < sim.nph + 3:
            key = "nc" if "nc" in self._origin else "nph"
            raise self._fail(key, f"nc={sim.nc} трябва да е >= nph+3={sim.nph + 3}")
        for key, section in (("n_steps", sim), ("sweep_steps", sw), ("feature_d_steps", sw)):
            value = getattr(section, key)
            if value is not None and value < 2:
                raise self._fail(key, f"{key} трябва да е >= 2, получено {value}")
        for key, section in (("t_max", sim), ("step", sim), ("zero_tol", sw)):
            value = getattr(section, key)
            if value is not None and value <= 0:
                raise self._fail(key, f"{key} трябва да е > 0, получено {value}")
        if sim.model not in MODELS:
            raise self._fail("model", f"model трябва да е {' или '.join(MODELS)}, получено '{sim.model}'")

        if not 0 < sw.grid_step <= 0.01:
            raise self._fail("grid_step", f"grid_step трябва да е в (0, 0.01], получено {sw.grid_step}")
        if sw.nph_max < 0:
            raise self._fail("nph_max", f"nph_max трябва да е >= 0, получено {sw.nph_max}")
        if sw.sweep_min is not None and sw.sweep_max is not None and sw.sweep_min > sw.sweep_max:
            raise self._fail("sweep_max", f"sweep_max={sw.sweep_max} < sweep_min={sw.sweep_min}")
        if sw.feature_d_min < 0 or sw.feature_d_min > sw.feature_d_max:
            raise self._fail("feature_d_max", "нужно е 0 <= feature_d_min <= feature_d_max")

        if not 1 <= cfg.output.precision <= 17:
            raise self._fail("precision", f"precision трябва да е в [1, 17], получено {cfg.output.precision}")
        level = cfg.logging.log_level.upper()
        if level not in LOG_LEVELS:
            raise self._fail("log_level", f"непознато ниво '{cfg.logging.log_level}'")
        cfg.logging.log_level = level
        if cfg.performance.workers == 0 or cfg.performance.workers < -1:
            raise self._fail("workers", f"workers трябва да е -1 или >= 1, получено {cfg.performance.workers}")
        return cfg

    def to_items(self) -> List[Tuple[str, Any]]:
        """Разрешените стойности на всички ключове в реда на KEY_TABLE."""
        return config_items(self.config)

    def get_config(self) -> RunConfig:
        return self.config


def parse_config(text: str) -> RunConfig:
    """Документ key = value -> RunConfig; липсващите ключове приемат стойностите по подразбиране."""
    return ConfigManager().load_text(text)


def config_items(cfg: RunConfig) -> List[Tuple[str, Any]]:
    return [(key, getattr(getattr(cfg, section), key)) for key, (section, _, _) in KEY_TABLE.items()]


# Глобална инстанция на конфигурацията
config_manager = ConfigManager()


def get_config() -> RunConfig:
    """Връща главната конфигурация"""
    return config_manager.get_config()

