"""
Configuration for polar arcs computations.

This module holds the RunConfig dataclass with every numerical tolerance,
grid size and tracing parameter, plus the getters that read overrides from
config files and environment variables.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Optional

from .errors import ConfigError

# Configure logging
logger = logging.getLogger(__name__)

THREADS_ENV = "POLAR_ARC_THREADS"
CONFIG_ENV = "POLAR_ARC_CONFIG"

MIN_GRID_1D = 256
MIN_GRID_2D = 64
OUTPUT_FORMATS = ("json", "csv")


@dataclass(frozen=True)
class RunConfig:
    """Every knob of a run. Instances are immutable; use ``with_overrides``."""

    # root location and classification
    tol: float = 1e-11
    tol_hyp: float = 1e-6
    tol_touch: float = 1e-9
    tol_sn: float = 1e-6
    tol_coeff: float = 1e-4
    # grids
    grid_n: int = 8192
    grid_2d: int = 64
    t_grid: int = 512
    # finite differences
    h_d: float = 1e-5
    h_J: float = 1e-6
    # separatrix tracing
    eps0: float = 1e-8
    eps_node: float = 1e-4
    h_sep: float = 1e-2
    max_iter: int = 200
    newton_max_iter: int = 50
    tol_newton_inverse: float = 1e-12
    # noncriticality probe
    angle_min: float = 0.05
    tube_radius: float = 0.1
    # execution and output
    threads: int = 1
    output_format: str = "json"
    output_path: Optional[str] = None

    def validate(self) -> "RunConfig":
        """
        Check ranges.

        Returns:
            self, so calls can be chained

        Raises:
            ConfigError: on any out-of-range value
        """
        positive = (
            "tol", "tol_hyp", "tol_touch", "tol_sn", "tol_coeff", "h_d", "h_J",
            "eps0", "eps_node", "h_sep", "tol_newton_inverse", "angle_min", "tube_radius",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive", {"key": name, "value": getattr(self, name)})
        if self.grid_n < MIN_GRID_1D:
            raise ConfigError(f"grid_n must be >= {MIN_GRID_1D}", {"grid_n": self.grid_n})
        if self.grid_2d < MIN_GRID_2D:
            raise ConfigError(f"grid_2d must be >= {MIN_GRID_2D}", {"grid_2d": self.grid_2d})
        if self.t_grid < 2:
            raise ConfigError("t_grid must be >= 2", {"t_grid": self.t_grid})
        if self.max_iter < 1 or self.newton_max_iter < 1:
            raise ConfigError("iteration caps must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1", {"threads": self.threads})
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(
                f"output_format must be one of {OUTPUT_FORMATS}",
                {"output_format": self.output_format},
            )
        return self

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Return a validated copy with the non-None overrides applied."""
        clean = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **_coerce(clean)).validate()

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _coerce(values: Dict[str, Any]) -> Dict[str, Any]:
    """Convert raw values to the field types of RunConfig."""
    types = {f.name: f.type for f in fields(RunConfig)}
    out: Dict[str, Any] = {}
    for key, raw in values.items():
        if key not in types:
            raise ConfigError(f"Unknown config key: {key}", {"key": key})
        kind = types[key]
        try:
            if kind in (int, "int"):
                out[key] = int(raw)
            elif kind in (float, "float"):
                out[key] = float(raw)
            elif kind in (str, "str"):
                out[key] = str(raw)
            else:
                out[key] = None if raw in (None, "", "none", "None") else str(raw)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Bad value for {key}: {raw!r}", {"key": key}) from e
    return out


def parse_config_text(text: str) -> Dict[str, Any]:
    """
    Parse a flat key-value document.

    Accepts either a JSON object or ``key = value`` lines with ``#`` comments.

    Args:
        text: Document contents

    Returns:
        Mapping of raw values keyed by RunConfig field name
    """
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Invalid JSON config: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError("JSON config must be an object")
        return data

    values: Dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise ConfigError(f"Line {lineno}: expected 'key = value'", {"line": lineno})
        key, value = line.split(sep, 1)
        values[key.strip()] = value.strip().strip("\"'")
    return values


def get_thread_count() -> Optional[int]:
    """
    Get the worker pool cap from the environment.

    Returns:
        Thread count, or None if the variable is unset or unusable
    """
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {THREADS_ENV}={raw!r}")
        return None
    return max(1, value)


def get_default_config_path() -> Optional[str]:
    """
    Get the default config file path from the environment.

    Returns:
        Expanded path, or None if not configured
    """
    env_path = os.environ.get(CONFIG_ENV)
    if env_path:
        return os.path.expanduser(env_path)
    return None


def load_config(path: Optional[str] = None, **overrides: Any) -> RunConfig:
    """
    Build a RunConfig from defaults, a config file, the environment and overrides.

    Args:
        path: Optional config file; falls back to POLAR_ARC_CONFIG
        **overrides: Highest-precedence values (None entries are ignored)

    Returns:
        Validated RunConfig
    """
    config = RunConfig()
    path = path or get_default_config_path()
    if path:
        path = os.path.expanduser(path)
        if not os.path.exists(path):
            raise ConfigError(f"Config file not found: {path}", {"path": path})
        with open(path, "r") as f:
            file_values = parse_config_text(f.read())
        logger.debug(f"Loaded {len(file_values)} config values from {path}")
        config = replace(config, **_coerce(file_values))

    threads = get_thread_count()
    if threads is not None:
        config = replace(config, threads=threads)

    return config.with_overrides(**overrides)
