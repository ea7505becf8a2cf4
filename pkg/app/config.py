"""Configuration management: environment settings and JSON run files."""
import hashlib
import json
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from dotenv import load_dotenv
from loguru import logger

from app.defaults_loader import DefaultsLoader, get_defaults_loader
from app.domain.models import DefaultLaw, GridPolicy, SetDescriptor, parse_number
from app.exceptions import ConfigurationError
from app.utils.report_formatter import compact_json

load_dotenv()


@dataclass
class LabSettings:
    """Process-wide settings read from the environment."""

    log_level: str = "INFO"
    log_file: str = "./logs/lab.log"
    workers: int = 1
    defaults_file: Optional[str] = None

    VALID_LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}

    def __post_init__(self):
        """Validate settings after initialization."""
        self._validate()

    def _validate(self):
        """Validate settings values."""
        if self.log_level not in self.VALID_LOG_LEVELS:
            raise ConfigurationError(
                f"Invalid LAB_LOG_LEVEL: {self.log_level}. "
                f"Valid options: {', '.join(sorted(self.VALID_LOG_LEVELS))}"
            )
        if self.workers < 1:
            raise ConfigurationError(f"LAB_WORKERS must be >= 1, got: {self.workers}")

    @classmethod
    def from_env(cls) -> "LabSettings":
        """Load settings from environment variables."""
        log_level = os.getenv("LAB_LOG_LEVEL", "INFO").upper()
        log_file = os.getenv("LAB_LOG_FILE", "./logs/lab.log")

        workers_str = os.getenv("LAB_WORKERS", "1")
        try:
            workers = int(workers_str)
        except ValueError:
            raise ConfigurationError(f"LAB_WORKERS must be an integer, got: {workers_str}")

        defaults_file = os.getenv("LAB_DEFAULTS_FILE") or None

        return cls(log_level=log_level, log_file=log_file, workers=workers, defaults_file=defaults_file)


def _as_int(value: Any, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"'{key}' must be an integer, got: {value!r}")
    return value


@dataclass(frozen=True)
class RunConfig:
    """One validated run file."""

    command: str
    seed: int
    law: Optional[DefaultLaw] = None
    target: Optional[SetDescriptor] = None
    levels: Tuple[int, ...] = (2, 4, 6, 8)
    n_paths: int = 10000
    s: float = 0.5
    tolerance: float = 1e-8
    r: Optional[float] = None
    output_dir: str = "results"
    scales: Optional[Tuple[float, ...]] = None
    n_grid: int = 200
    threshold: float = 0.05
    max_iter: int = 100000
    grid_policy: GridPolicy = GridPolicy.GEOMETRIC
    pin_margin: float = 0.01

    VALID_COMMANDS = ("simulate", "capacity", "hitting", "experiment")
    KEYS = (
        "command", "seed", "law", "set", "levels", "n_paths", "s", "tolerance", "r",
        "output_dir", "scales", "n_grid", "threshold", "max_iter", "grid_policy", "pin_margin",
    )

    def __post_init__(self):
        """Validate the run file."""
        self._validate()

    def _validate(self):
        """Validate field values and per-command requirements."""
        if self.command not in self.VALID_COMMANDS:
            raise ConfigurationError(
                f"Invalid command: {self.command}. Valid options: {', '.join(self.VALID_COMMANDS)}"
            )
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigurationError(f"'seed' must be an unsigned 64-bit integer, got: {self.seed}")
        if self.n_paths < 1:
            raise ConfigurationError(f"'n_paths' must be >= 1, got: {self.n_paths}")
        if not self.levels or any(k < 0 for k in self.levels):
            raise ConfigurationError(f"'levels' must be a non-empty list of levels >= 0, got: {list(self.levels)}")
        if not 0 < self.s < 1:
            raise ConfigurationError(f"'s' must lie in (0, 1), got: {self.s}")
        if not self.tolerance > 0:
            raise ConfigurationError(f"'tolerance' must be positive, got: {self.tolerance}")
        if self.max_iter < 1:
            raise ConfigurationError(f"'max_iter' must be >= 1, got: {self.max_iter}")
        if self.n_grid < 1:
            raise ConfigurationError(f"'n_grid' must be >= 1, got: {self.n_grid}")
        if not 0 < self.threshold < 1:
            raise ConfigurationError(f"'threshold' must lie in (0, 1), got: {self.threshold}")
        if not self.pin_margin >= 0:
            raise ConfigurationError(f"'pin_margin' must be >= 0, got: {self.pin_margin}")
        if self.scales is not None and len(self.scales) < 3:
            raise ConfigurationError("'scales' needs at least 3 box sizes")

        if self.command in ("simulate", "experiment") and self.law is None:
            raise ConfigurationError(f"'{self.command}' requires 'law'")
        if self.command in ("capacity", "hitting") and self.target is None:
            raise ConfigurationError(f"'{self.command}' requires 'set'")
        if self.command == "hitting":
            if self.r is None:
                raise ConfigurationError("'hitting' requires 'r'")
            if not self.r > 0:
                raise ConfigurationError(f"'r' must be positive, got: {self.r}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any], defaults: Optional[DefaultsLoader] = None) -> "RunConfig":
        """
        Build a config from a parsed run file; omitted keys take the YAML defaults.

        Args:
            data: Parsed JSON object
            defaults: Defaults loader (the shared one if None)

        Returns:
            RunConfig

        Raises:
            ConfigurationError: Naming the offending key
        """
        if not isinstance(data, dict):
            raise ConfigurationError("run file must contain a JSON object")
        unknown = sorted(set(data) - set(cls.KEYS))
        if unknown:
            raise ConfigurationError(f"Unknown key(s) in run file: {', '.join(unknown)}")
        if "command" not in data:
            raise ConfigurationError("run file is missing 'command'")
        if "seed" not in data:
            raise ConfigurationError("run file is missing 'seed' (no wall-clock default)")

        defaults = defaults or get_defaults_loader()
        energy = defaults.section("energy")
        experiment = defaults.section("experiment")
        grid = defaults.section("grid")

        raw_policy = data.get("grid_policy", grid["policy"])
        try:
            policy = GridPolicy(raw_policy)
        except ValueError:
            raise ConfigurationError(
                f"Invalid grid_policy: {raw_policy}. Valid options: {', '.join(p.value for p in GridPolicy)}"
            )

        levels = data.get("levels", experiment["levels"])
        if not isinstance(levels, list):
            raise ConfigurationError(f"'levels' must be a list, got: {levels!r}")
        scales = data.get("scales")
        if scales is not None and not isinstance(scales, list):
            raise ConfigurationError(f"'scales' must be a list, got: {scales!r}")
        output_dir = data.get("output_dir", "results")
        if not isinstance(output_dir, str):
            raise ConfigurationError(f"'output_dir' must be a string, got: {output_dir!r}")

        return cls(
            command=data["command"],
            seed=_as_int(data["seed"], "seed"),
            law=DefaultLaw.from_dict(data["law"]) if data.get("law") is not None else None,
            target=SetDescriptor.from_dict(data["set"]) if data.get("set") is not None else None,
            levels=tuple(_as_int(k, "levels") for k in levels),
            n_paths=_as_int(data.get("n_paths", experiment["n_paths"]), "n_paths"),
            s=parse_number(data.get("s", energy["s"]), "s"),
            tolerance=parse_number(data.get("tolerance", energy["tolerance"]), "tolerance"),
            r=parse_number(data["r"], "r") if data.get("r") is not None else None,
            output_dir=output_dir,
            scales=tuple(parse_number(x, "scales") for x in scales) if scales is not None else None,
            n_grid=_as_int(data.get("n_grid", grid["n_base"]), "n_grid"),
            threshold=parse_number(data.get("threshold", experiment["threshold"]), "threshold"),
            max_iter=_as_int(data.get("max_iter", energy["max_iter"]), "max_iter"),
            grid_policy=policy,
            pin_margin=parse_number(data.get("pin_margin", experiment["pin_margin"]), "pin_margin"),
        )

    def to_dict(self) -> Dict[str, Any]:
        """Full JSON echo (every key, defaults filled in)."""
        return {
            "command": self.command,
            "seed": self.seed,
            "law": self.law.to_dict() if self.law else None,
            "set": self.target.to_dict() if self.target else None,
            "levels": list(self.levels),
            "n_paths": self.n_paths,
            "s": self.s,
            "tolerance": self.tolerance,
            "r": self.r,
            "output_dir": self.output_dir,
            "scales": list(self.scales) if self.scales is not None else None,
            "n_grid": self.n_grid,
            "threshold": self.threshold,
            "max_iter": self.max_iter,
            "grid_policy": self.grid_policy.value,
            "pin_margin": self.pin_margin,
        }

    def echo(self) -> Dict[str, Any]:
        """Config echo written into reports (unset optional keys left out)."""
        return {k: v for k, v in self.to_dict().items() if v is not None}

    def canonical(self) -> str:
        """Compact canonical JSON of the echo, the input of config_hash."""
        return compact_json(self.echo())

    @property
    def config_hash(self) -> str:
        """SHA-256 of the canonical echo."""
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()

    def with_overrides(
        self,
        seed: Optional[int] = None,
        output_dir: Optional[str] = None,
        n_paths: Optional[int] = None,
        level: Optional[int] = None,
    ) -> "RunConfig":
        """Apply command-line overrides (None leaves a value unchanged)."""
        changes: Dict[str, Any] = {}
        if seed is not None:
            changes["seed"] = seed
        if output_dir is not None:
            changes["output_dir"] = output_dir
        if n_paths is not None:
            changes["n_paths"] = n_paths
        if level is not None:
            changes["levels"] = (level,)
        return replace(self, **changes) if changes else self


def load_config(path: Union[str, Path], defaults: Optional[DefaultsLoader] = None) -> RunConfig:
    """
    Load and validate a JSON run file.

    Args:
        path: Run file path
        defaults: Defaults loader (the shared one if None)

    Returns:
        RunConfig

    Raises:
        ConfigurationError: Missing file, invalid JSON or schema violation
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Run file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Run file {path} is not valid JSON: {e}")
    except OSError as e:
        raise ConfigurationError(f"Cannot read run file {path}: {e}")

    config = RunConfig.from_dict(data, defaults)
    logger.info(f"Loaded {config.command} run file {path} (hash {config.config_hash[:12]})")
    return config
