"""Configuration loading and validation for cluster-search."""

import dataclasses
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

from .errors import ConfigurationError, ParseError
from .search import SYSTEMS

logger = logging.getLogger(__name__)

# Environment variable naming a default config file
CONFIG_ENV = "CLUSTER_SEARCH_CONFIG"

# Default paths to search for config
CONFIG_PATHS = [
    Path("cluster-search.json"),
    Path.home() / ".config" / "cluster-search" / "config.json",
]

METRIC_COLUMNS = ("ap", "r_prec", "rr")


@dataclass
class PathsConfig:
    """Input and output locations. Unset paths are only an error for commands that need them."""

    embeddings: Optional[str] = None
    corpus: Optional[str] = None
    queries: Optional[str] = None
    qrels: Optional[str] = None
    stopwords: Optional[str] = None
    gazetteer: Optional[str] = None
    lexicon: Optional[str] = None
    synonym_pairs: Optional[str] = None
    index_dir: Optional[str] = None
    run: Optional[str] = None
    # Second run for compare
    run_b: Optional[str] = None
    output: Optional[str] = None

    def validate(self) -> list[str]:
        errors = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value is not None and (not isinstance(value, str) or not value):
                errors.append(f"Invalid path for {f.name}: {value!r}")
        return errors

    def require(self, *names: str) -> None:
        """Raise ConfigurationError naming every unset path among names."""
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            flags = ", ".join("--" + n.replace("_", "-") for n in missing)
            raise ConfigurationError(f"missing required paths: {flags}")


@dataclass
class ParametersConfig:
    """Retrieval, evaluation and reformulation parameters."""

    # None: estimate from synonym pairs, else the documented default
    epsilon: Optional[float] = None
    # None: 1.0 when building, the index's value when searching
    gamma: Optional[float] = None
    # None: the BM25 defaults when building, the index's values when searching
    k1: Optional[float] = None
    b: Optional[float] = None
    k: int = 50
    fusion_n: int = 100
    # None: 1 when building, the index's value when searching
    rw_threshold: Optional[int] = None
    p: float = 0.5
    seed: int = 0
    system: str = "combined"
    metric: str = "ap"
    k_values: list[int] = field(default_factory=lambda: [5, 10, 20, 50])
    curve_depth: int = 0
    workers: int = 4

    def validate(self) -> list[str]:
        errors = []
        if self.epsilon is not None and not 0.0 < self.epsilon < 1.0:
            errors.append(f"Invalid epsilon {self.epsilon}: must be in (0, 1)")
        if self.gamma is not None and self.gamma <= 0:
            errors.append(f"Invalid gamma {self.gamma}: must be > 0")
        if self.k1 is not None and self.k1 < 0:
            errors.append(f"Invalid k1 {self.k1}: must be >= 0")
        if self.b is not None and not 0.0 <= self.b <= 1.0:
            errors.append(f"Invalid b {self.b}: must be in [0, 1]")
        if self.k < 1:
            errors.append(f"Invalid k {self.k}: must be >= 1")
        if self.fusion_n < 1:
            errors.append(f"Invalid fusion_n {self.fusion_n}: must be >= 1")
        if self.rw_threshold is not None and self.rw_threshold < 0:
            errors.append(f"Invalid rw_threshold {self.rw_threshold}: must be >= 0")
        if not 0.0 <= self.p <= 1.0:
            errors.append(f"Invalid p {self.p}: must be in [0, 1]")
        if self.system not in SYSTEMS:
            errors.append(f"Invalid system '{self.system}': must be one of {', '.join(SYSTEMS)}")
        if not self.k_values or any(k < 1 for k in self.k_values):
            errors.append(f"Invalid k_values {self.k_values}: need positive integers")
        if self.metric not in METRIC_COLUMNS and not _is_cutoff_metric(self.metric):
            errors.append(f"Invalid metric '{self.metric}': use ap, r_prec, rr, p@k or r@k")
        if self.curve_depth < 0:
            errors.append(f"Invalid curve_depth {self.curve_depth}: must be >= 0")
        if self.workers < 1:
            errors.append(f"Invalid workers {self.workers}: must be >= 1")
        return errors

    def metric_cutoff(self) -> Optional[int]:
        return int(self.metric[2:]) if _is_cutoff_metric(self.metric) else None


def _is_cutoff_metric(metric: str) -> bool:
    return metric[:2] in ("p@", "r@") and metric[2:].isdigit() and int(metric[2:]) >= 1


@dataclass
class RunConfig:
    """Main configuration container."""

    paths: PathsConfig = field(default_factory=PathsConfig)
    parameters: ParametersConfig = field(default_factory=ParametersConfig)

    def validate(self) -> list[str]:
        """Validate all configuration sections. Returns list of errors."""
        errors = []
        errors.extend(self.paths.validate())
        errors.extend(self.parameters.validate())
        return errors


def _dataclass_from_dict(cls, data: Mapping[str, Any], section: str):
    """Create a dataclass instance from a dict, using field defaults for missing keys."""
    if not isinstance(data, Mapping):
        raise ConfigurationError(f"Section '{section}' must be a JSON object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigurationError(f"Unknown keys in '{section}': {', '.join(unknown)}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in data:
            kwargs[f.name] = data[f.name]
        elif f.default is not dataclasses.MISSING:
            kwargs[f.name] = f.default
        elif f.default_factory is not dataclasses.MISSING:
            kwargs[f.name] = f.default_factory()
    return cls(**kwargs)


# Mapping from config JSON keys to their dataclass types
_CONFIG_SECTIONS = {
    "paths": ("paths", PathsConfig),
    "parameters": ("parameters", ParametersConfig),
}


def _dict_to_config(data: Mapping[str, Any]) -> RunConfig:
    """Convert a dictionary to a RunConfig object."""
    if not isinstance(data, Mapping):
        raise ConfigurationError("Config file must hold a JSON object")
    unknown = sorted(set(data) - set(_CONFIG_SECTIONS))
    if unknown:
        raise ConfigurationError(f"Unknown config sections: {', '.join(unknown)}")
    config = RunConfig()
    for key, (attr, cls) in _CONFIG_SECTIONS.items():
        if key in data:
            setattr(config, attr, _dataclass_from_dict(cls, data[key], key))
    return config


def _check(config: RunConfig) -> RunConfig:
    errors = config.validate()
    if errors:
        error_msg = "Config validation errors:\n" + "\n".join(f"  - {e}" for e in errors)
        raise ConfigurationError(error_msg)
    return config


def load_config(config_path: Optional[Path] = None) -> RunConfig:
    """
    Load configuration from a JSON file.

    Args:
        config_path: Explicit path to config file. If None, the path in
            CLUSTER_SEARCH_CONFIG is used, then the default paths.

    Returns:
        RunConfig with loaded settings, or defaults when no file is found.

    Raises:
        FileNotFoundError: If an explicit or environment-named file is missing.
        ParseError: If the file is not valid JSON.
        ConfigurationError: Unknown keys or validation errors.
    """
    env_path = os.environ.get(CONFIG_ENV)
    if config_path is not None:
        paths_to_try = [Path(config_path)]
    elif env_path:
        paths_to_try = [Path(env_path)]
    else:
        paths_to_try = CONFIG_PATHS

    found_path = next((p for p in paths_to_try if p.exists()), None)
    if found_path is None:
        if config_path is not None or env_path:
            raise FileNotFoundError(f"Config file not found: {paths_to_try[0]}")
        logger.debug("No config file found, using defaults")
        return RunConfig()

    logger.info(f"Loading config from {found_path}")
    try:
        with open(found_path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON in config file: {e.msg}", found_path, e.lineno) from e

    return _check(_dict_to_config(data))


def apply_overrides(config: RunConfig, overrides: Mapping[str, Any]) -> RunConfig:
    """
    Overwrite config fields with command-line values. None values are ignored.

    Keys are field names of either section.
    """
    for name, value in overrides.items():
        if value is None:
            continue
        for section in (config.paths, config.parameters):
            if name in {f.name for f in dataclasses.fields(section)}:
                setattr(section, name, value)
                break
        else:
            raise ConfigurationError(f"Unknown option '{name}'")
    return _check(config)
