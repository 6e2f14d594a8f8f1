"""
src/config.py

Configuration loader for the directional-modulation precoding simulator.
Loads the YAML scenario file into typed, validated dataclasses.

File layout:

    solver:    {mu, eps1, eps2, eps0, bt_alpha, bt_beta, max_outer, max_inner, step_mode}
    logging:   {level, file}
    scenarios:
      <name>:  {M, nt, nr, snr_db, mode, d0, design, benchmark, trials, frames, seed}

List-valued keys (snr_db, d0, nt) accept a YAML list or a comma-separated
string. A list-valued nt expands into one scenario per Nt sharing a sweep group.
"""

import math
import yaml
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple
from dataclasses import dataclass, field, fields, replace
import logging

from constants import (
    SUPPORTED_ORDERS, SOLVER_MU, SOLVER_EPS1, SOLVER_EPS2, SOLVER_EPS0,
    SOLVER_BT_ALPHA, SOLVER_BT_BETA, SOLVER_MAX_OUTER, SOLVER_MAX_INNER,
    TIGHT_EPS, TIGHT_MU, DEFAULT_TRIALS, DEFAULT_FRAMES_PER_CHANNEL, DEFAULT_SEED,
    Benchmark, DesignKind, RegionMode, StepMode, snr_to_gamma
)

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """
    Invalid configuration.

    Attributes:
        key: Offending key (semantic errors)
        line, column: 1-based position (YAML syntax errors)
    """

    def __init__(self, message: str, key: Optional[str] = None,
                 line: Optional[int] = None, column: Optional[int] = None):
        where = ""
        if line is not None:
            where = f" (line {line}, column {column})"
        elif key is not None:
            where = f" (key '{key}')"
        super().__init__(message + where)
        self.key = key
        self.line = line
        self.column = column

# ============================================================================
# DATA CLASSES FOR TYPE-SAFE CONFIG
# ============================================================================

@dataclass(frozen=True)
class SolverConfig:
    """Interior-point solver parameters."""
    mu: float = SOLVER_MU
    eps1: float = SOLVER_EPS1
    eps2: float = SOLVER_EPS2
    eps0: float = SOLVER_EPS0
    bt_alpha: float = SOLVER_BT_ALPHA
    bt_beta: float = SOLVER_BT_BETA
    max_outer: int = SOLVER_MAX_OUTER
    max_inner: int = SOLVER_MAX_INNER
    step_mode: StepMode = StepMode.JOINT_NEWTON
    trace: bool = False

    @classmethod
    def tight(cls, **overrides) -> "SolverConfig":
        """eps1 = eps2 = 1e-6, mu = 10."""
        base = dict(eps1=TIGHT_EPS, eps2=TIGHT_EPS, mu=TIGHT_MU)
        base.update(overrides)
        return cls(**base)

    def validate(self) -> "SolverConfig":
        if not self.mu > 1:
            raise ConfigError(f"mu must exceed 1, got {self.mu}", key="mu")
        for name in ("eps1", "eps2"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive", key=name)
        if self.eps0 < 0:
            raise ConfigError("eps0 must be non-negative", key="eps0")
        if not 0 < self.bt_alpha < 0.5:
            raise ConfigError("bt_alpha must lie in (0, 0.5)", key="bt_alpha")
        if not 0 < self.bt_beta < 1:
            raise ConfigError("bt_beta must lie in (0, 1)", key="bt_beta")
        for name in ("max_outer", "max_inner"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1", key=name)
        return self


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulated scenario (a grid over SNR and d0)."""
    name: str
    order: int
    nt: int
    nr: int
    snr_db: Tuple[float, ...] = (10.0,)
    mode: RegionMode = RegionMode.FIXED
    d0: Tuple[float, ...] = (0.0,)
    design: DesignKind = DesignKind.TOTAL
    benchmark: Benchmark = Benchmark.NONE
    trials: int = DEFAULT_TRIALS
    frames: int = DEFAULT_FRAMES_PER_CHANNEL
    seed: int = DEFAULT_SEED
    group: str = ""

    def __post_init__(self):
        if not self.group:
            object.__setattr__(self, "group", self.name)

    @property
    def gammas(self) -> Tuple[float, ...]:
        return tuple(snr_to_gamma(s) for s in self.snr_db)

    def validate(self) -> "ScenarioConfig":
        if self.order not in SUPPORTED_ORDERS:
            raise ConfigError(
                f"M must be one of {', '.join(map(str, SUPPORTED_ORDERS))}, got {self.order}",
                key="M")
        if self.nt < 1:
            raise ConfigError("nt must be at least 1", key="nt")
        if self.nr < 1:
            raise ConfigError("nr must be at least 1", key="nr")
        if self.nr > self.nt:
            raise ConfigError(f"nr={self.nr} exceeds nt={self.nt}", key="nr")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1", key="trials")
        if self.frames < 1:
            raise ConfigError("frames must be at least 1", key="frames")
        if not self.snr_db:
            raise ConfigError("snr_db grid is empty", key="snr_db")
        if not self.d0:
            raise ConfigError("d0 grid is empty", key="d0")
        if not all(math.isfinite(s) for s in self.snr_db):
            raise ConfigError("snr_db values must be finite", key="snr_db")

        if self.mode == RegionMode.RELAXED:
            if self.order in (4, 8):
                raise ConfigError(
                    f"relaxed mode needs inner points; {self.order}-QAM has none", key="mode")
            if min(self.d0) < 0:
                raise ConfigError("d0 must be non-negative", key="d0")
            limit = math.sqrt(min(self.gammas))
            if max(self.d0) >= limit:
                raise ConfigError(
                    f"d0={max(self.d0)} must stay below sqrt(gamma)={limit:.6g} "
                    f"at the lowest SNR", key="d0")
        elif any(d != 0.0 for d in self.d0):
            raise ConfigError("d0 only applies in relaxed mode", key="d0")
        return self


@dataclass(frozen=True)
class LoggingConfig:
    """Logging configuration."""
    level: str = "INFO"
    file: Optional[str] = None

    def validate(self) -> "LoggingConfig":
        if self.level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ConfigError(f"unknown log level {self.level}", key="level")
        return self


@dataclass
class RunConfig:
    """Master configuration object."""
    solver: SolverConfig = field(default_factory=SolverConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)
    scenarios: List[ScenarioConfig] = field(default_factory=list)

    def with_seed(self, seed: int) -> "RunConfig":
        """Copy with every scenario reseeded."""
        return RunConfig(self.solver, self.logging,
                         [replace(s, seed=seed) for s in self.scenarios])

    def to_dict(self) -> Dict[str, Any]:
        """Convert configuration to plain data (for the manifest)."""
        def _plain(value):
            if hasattr(value, "__dataclass_fields__"):
                return {f.name: _plain(getattr(value, f.name)) for f in fields(value)}
            if isinstance(value, (list, tuple)):
                return [_plain(v) for v in value]
            if hasattr(value, "value") and not isinstance(value, (int, float)):
                return value.value
            return value

        return _plain(self)

# ============================================================================
# PARSING
# ============================================================================

_SCENARIO_KEYS = ("M", "nt", "nr", "snr_db", "mode", "d0", "design",
                  "benchmark", "trials", "frames", "seed")
_LOGGING_KEYS = {"level": "level", "file": "file"}


def _as_list(value: Any, key: str, cast: Callable[[Any], Any]) -> Tuple:
    """YAML list, comma-separated string or scalar -> tuple of cast values."""
    if isinstance(value, str):
        items = [v.strip() for v in value.split(",") if v.strip()]
    elif isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = [value]
    try:
        return tuple(cast(v) for v in items)
    except (TypeError, ValueError):
        raise ConfigError(f"cannot parse {value!r}", key=key)


def _as_int(value: Any, key: str) -> int:
    if isinstance(value, bool):
        raise ConfigError(f"expected an integer, got {value!r}", key=key)
    try:
        as_float = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected an integer, got {value!r}", key=key)
    if not as_float.is_integer():
        raise ConfigError(f"expected an integer, got {value!r}", key=key)
    return int(as_float)


def _as_enum(enum_cls, value: Any, key: str):
    try:
        return enum_cls(str(value).strip().lower())
    except ValueError:
        allowed = ", ".join(e.value for e in enum_cls)
        raise ConfigError(f"expected one of {allowed}, got {value!r}", key=key)


def _parse_scenario(name: str, data: Any) -> List[ScenarioConfig]:
    if not isinstance(data, dict):
        raise ConfigError(f"scenario '{name}' must be a mapping", key=name)
    unknown = [k for k in data if k not in _SCENARIO_KEYS]
    if unknown:
        raise ConfigError(f"unknown key in scenario '{name}'", key=str(unknown[0]))
    for required in ("M", "nt", "nr"):
        if required not in data:
            raise ConfigError(f"scenario '{name}' is missing a value", key=required)

    nts = _as_list(data["nt"], "nt", lambda v: _as_int(v, "nt"))
    if not nts:
        raise ConfigError("nt list is empty", key="nt")
    common = dict(
        order=_as_int(data["M"], "M"),
        nr=_as_int(data["nr"], "nr"),
        snr_db=_as_list(data.get("snr_db", 10.0), "snr_db", float),
        mode=_as_enum(RegionMode, data.get("mode", "fixed"), "mode"),
        d0=_as_list(data.get("d0", 0.0), "d0", float),
        design=_as_enum(DesignKind, data.get("design", "total"), "design"),
        benchmark=_as_enum(Benchmark, data.get("benchmark", "none"), "benchmark"),
        trials=_as_int(data.get("trials", DEFAULT_TRIALS), "trials"),
        frames=_as_int(data.get("frames", DEFAULT_FRAMES_PER_CHANNEL), "frames"),
        seed=_as_int(data.get("seed", DEFAULT_SEED), "seed"),
    )
    if len(nts) == 1:
        return [ScenarioConfig(name=name, nt=nts[0], **common).validate()]
    return [ScenarioConfig(name=f"{name}_nt{nt}", nt=nt, group=name, **common).validate()
            for nt in nts]


def _parse_solver(data: Any) -> SolverConfig:
    if not isinstance(data, dict):
        raise ConfigError("solver section must be a mapping", key="solver")
    known = {f.name: f for f in fields(SolverConfig)}
    values = {}
    for key, value in data.items():
        if key not in known or key == "trace":
            raise ConfigError("unknown solver key", key=str(key))
        if key == "step_mode":
            values[key] = _as_enum(StepMode, value, key)
        elif key in ("max_outer", "max_inner"):
            values[key] = _as_int(value, key)
        else:
            try:
                values[key] = float(value)
            except (TypeError, ValueError):
                raise ConfigError(f"expected a number, got {value!r}", key=str(key))
    return SolverConfig(**values).validate()


def _parse_logging(data: Any) -> LoggingConfig:
    if not isinstance(data, dict):
        raise ConfigError("logging section must be a mapping", key="logging")
    unknown = [k for k in data if k not in _LOGGING_KEYS]
    if unknown:
        raise ConfigError("unknown logging key", key=str(unknown[0]))
    return LoggingConfig(
        level=str(data.get("level", "INFO")).upper(),
        file=data.get("file"),
    ).validate()


def parse_config(text: str) -> RunConfig:
    """
    Parse and validate scenario-file text.

    Raises:
        ConfigError: YAML syntax error (with line/column) or invalid value
            (with key)
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        if mark is not None:
            raise ConfigError(f"YAML syntax error: {getattr(e, 'problem', e)}",
                              line=mark.line + 1, column=mark.column + 1)
        raise ConfigError(f"YAML syntax error: {e}")

    if not data:
        raise ConfigError("configuration is empty")
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping of sections")
    unknown = [k for k in data if k not in ("solver", "logging", "scenarios")]
    if unknown:
        raise ConfigError("unknown section", key=str(unknown[0]))

    config = RunConfig()
    if "solver" in data:
        config.solver = _parse_solver(data["solver"])
    if "logging" in data:
        config.logging = _parse_logging(data["logging"])

    scenarios = data.get("scenarios")
    if not isinstance(scenarios, dict) or not scenarios:
        raise ConfigError("at least one scenario is required", key="scenarios")
    for name, body in scenarios.items():
        config.scenarios.extend(_parse_scenario(str(name), body))
    return config

# ============================================================================
# CONFIGURATION LOADER
# ============================================================================

class ConfigLoader:
    """Loads and validates the scenario file."""

    def __init__(self, config_file: Optional[str] = None):
        """
        Initialize config loader.

        Args:
            config_file: Path to YAML config file. If None, uses default.
        """
        self.config_file = config_file or self._find_default_config()
        self.config: RunConfig = self._load_config()

    @staticmethod
    def _find_default_config() -> str:
        """Find the default config file in project structure."""
        candidates = [
            Path(__file__).parent.parent / "config" / "scenarios.yaml",
            Path.cwd() / "config" / "scenarios.yaml",
        ]
        for path in candidates:
            if path.exists():
                logger.info(f"Found config file: {path}")
                return str(path)
        raise FileNotFoundError(
            "Could not find scenarios.yaml. "
            "Please ensure it exists in ./config/ directory."
        )

    def _load_config(self) -> RunConfig:
        """Load configuration from YAML file."""
        if not Path(self.config_file).exists():
            raise FileNotFoundError(f"Config file not found: {self.config_file}")

        with open(self.config_file, "r", encoding="utf-8") as f:
            text = f.read()

        config = parse_config(text)
        logger.info(f"Loaded {len(config.scenarios)} scenario(s) from {self.config_file}")
        return config

    def get_config(self) -> RunConfig:
        """Return loaded configuration."""
        return self.config

    def to_dict(self) -> Dict[str, Any]:
        """Convert configuration to dictionary (for serialization)."""
        data = self.config.to_dict()
        data["config_file"] = str(self.config_file)
        return data
