"""
Run configuration from TOML files and command-line overrides.

Sections: [data], [model], [train], [fla]. Unknown sections or keys are
rejected. Precedence is flag > file > built-in defaults.
"""

import logging
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from fla_analysis import DEFAULT_N_SUB
from link_training import TrainConfig
from temporal_graph import DEFAULT_RATIOS, StglError
from tgl_models import ModelConfig

logger = logging.getLogger(__name__)

DATA_DIR_ENV = "STGL_DATA_DIR"
CACHE_DIR_ENV = "STGL_CACHE_DIR"
DEFAULT_SEEDS = (0, 1, 2, 3, 4, 5)


class ConfigError(StglError, ValueError):
    """Unknown TOML section or key, or a value of the wrong kind."""


@dataclass(frozen=True)
class DataConfig:
    csv: Optional[str] = None
    snapshot: Optional[str] = None
    node_feats: Optional[str] = None
    schema: str = "default"
    normalize: bool = True
    ratios: Tuple[float, float, float] = DEFAULT_RATIOS
    name: Optional[str] = None

    def __post_init__(self):
        if self.schema not in ("default", "jodie"):
            raise ConfigError(f"unknown CSV schema {self.schema!r}")
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))

    @property
    def dataset_name(self) -> str:
        if self.name:
            return self.name
        source = self.snapshot or self.csv
        return Path(source).stem if source else "unnamed"


@dataclass(frozen=True)
class FlaConfig:
    n_sub: int = DEFAULT_N_SUB
    jitter: float = 0.0
    tau: float = 1.0
    chunk: int = 256

    def __post_init__(self):
        if self.n_sub < 2:
            raise ConfigError(f"n_sub must be >= 2, got {self.n_sub}")
        if self.jitter < 0 or self.tau < 1 or self.chunk < 1:
            raise ConfigError("jitter must be >= 0, tau >= 1 and chunk >= 1")


@dataclass(frozen=True)
class RunConfig:
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    fla: FlaConfig = field(default_factory=FlaConfig)
    seeds: Tuple[int, ...] = DEFAULT_SEEDS

    def to_dict(self) -> Dict[str, Any]:
        return {
            "data": _section_dict(self.data),
            "model": self.model.to_dict(),
            "train": self.train.to_dict(),
            "fla": _section_dict(self.fla),
            "seeds": list(self.seeds),
        }


SECTIONS = {"data": DataConfig, "model": ModelConfig, "train": TrainConfig, "fla": FlaConfig}


def _section_dict(obj) -> Dict[str, Any]:
    out = {}
    for f in fields(obj):
        value = getattr(obj, f.name)
        out[f.name] = list(value) if isinstance(value, tuple) else value
    return out


def _build_section(name: str, values: Dict[str, Any], base=None):
    cls = SECTIONS[name]
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(unknown)}")
    try:
        return replace(base, **values) if base is not None else cls(**values)
    except StglError as e:
        raise ConfigError(f"[{name}] {e}") from e
    except TypeError as e:
        raise ConfigError(f"[{name}] {e}") from e


def config_from_dict(raw: Dict[str, Any]) -> RunConfig:
    raw = dict(raw)
    seeds = raw.pop("seeds", None)
    unknown = sorted(set(raw) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    parts = {}
    for name in SECTIONS:
        values = raw.get(name, {})
        if not isinstance(values, dict):
            raise ConfigError(f"[{name}] must be a table")
        parts[name] = _build_section(name, values)
    cfg = RunConfig(**parts)
    if seeds is not None:
        cfg = replace(cfg, seeds=tuple(int(s) for s in seeds))
    return cfg


def load_config(path=None) -> RunConfig:
    """Read a TOML file; None gives the built-in defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e
    logger.debug(f"Loaded configuration from {path}")
    return config_from_dict(raw)


def with_overrides(cfg: RunConfig, section: str, **overrides) -> RunConfig:
    """Apply flag values to one section; None means the flag was not given."""
    values = {k: v for k, v in overrides.items() if v is not None}
    if not values:
        return cfg
    if section == "seeds":
        return replace(cfg, seeds=tuple(values["seeds"]))
    if section not in SECTIONS:
        raise ConfigError(f"unknown section {section!r}")
    return replace(cfg, **{section: _build_section(section, values, getattr(cfg, section))})


def parse_seeds(text: str) -> Tuple[int, ...]:
    """'3' → (3,), '0..5' → (0, 1, 2, 3, 4, 5), '1,4,7' → (1, 4, 7)."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = (int(part) for part in text.split("..", 1))
            if hi < lo:
                raise ConfigError(f"empty seed range {text!r}")
            return tuple(range(lo, hi + 1))
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"cannot parse seeds {text!r}") from None


def resolve_data_path(path) -> Path:
    """Relative paths that do not exist locally are looked up under STGL_DATA_DIR."""
    path = Path(path).expanduser()
    root = os.environ.get(DATA_DIR_ENV)
    if not path.is_absolute() and not path.exists() and root:
        return Path(root).expanduser() / path
    return path


def cache_root() -> Path:
    return Path(os.environ.get(CACHE_DIR_ENV, Path.home() / ".stgl_cache")).expanduser()
