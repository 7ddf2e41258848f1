"""Run configuration: flat key=value files with CLI-flag override precedence.

Every subcommand embeds the fully resolved configuration and the tool version
in its report, so any output can be traced back to the exact settings that
produced it. Values are validated before any stage runs.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .ingest import Platform


def parse_config_file(path: str | Path) -> dict[str, str]:
    """key=value per line; blank lines and # comments ignored."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{ln}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values


def _parse_month(text: str) -> tuple[int, int]:
    year, _, month = text.partition("-")
    return int(year), int(month)


def _parse_bool(text: str) -> bool:
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    grid_start: str = "2016-05"
    grid_end: str = "2019-04"
    platforms: str = "ios,android,web"
    require_emoji: bool = True
    collapse_skin_tones: bool = False
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    alpha: float = 0.025
    subsample: float = 1e-4
    min_count: int = 5
    seed: int = 1
    workers: int = 1
    beta: float = 2.0
    k: int = 10
    epsilon: float = 0.05
    slope_threshold: float = 0.01
    r2_floor: float = 0.5
    analogy_gate: float = 0.3
    analogy_top_k: int = 10
    shapiro_max_n: int = 5000
    distance: str = "cosine"

    @classmethod
    def from_sources(cls, config_path: str | Path | None = None, **overrides) -> "RunConfig":
        """File values first, explicit overrides on top; unknown keys rejected."""
        values: dict = {}
        if config_path is not None:
            values.update(parse_config_file(config_path))
        values.update({k: v for k, v in overrides.items() if v is not None})

        known = {f.name: f.type for f in fields(cls)}
        coerced: dict = {}
        for key, raw in values.items():
            if key not in known:
                raise ValueError(f"unknown configuration key: {key!r}")
            default = getattr(cls(), key)
            if isinstance(default, bool):
                coerced[key] = raw if isinstance(raw, bool) else _parse_bool(raw)
            elif isinstance(default, int):
                coerced[key] = int(raw)
            elif isinstance(default, float):
                coerced[key] = float(raw)
            else:
                coerced[key] = str(raw)
        cfg = cls(**coerced)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        start, end = _parse_month(self.grid_start), _parse_month(self.grid_end)
        if not (1 <= start[1] <= 12 and 1 <= end[1] <= 12):
            raise ValueError("grid months must be 1..12")
        if end < start:
            raise ValueError("grid_end precedes grid_start")
        self.platform_list()
        for name in ("dim", "window", "negatives", "epochs", "min_count", "k",
                     "analogy_top_k", "shapiro_max_n", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.subsample < 0:
            raise ValueError("subsample must be >= 0")
        if self.distance not in ("cosine", "similarity"):
            raise ValueError("distance must be cosine or similarity")

    def platform_list(self) -> tuple[Platform, ...]:
        return tuple(Platform.parse(p) for p in self.platforms.split(",") if p.strip())

    def grid(self):
        from .ingest import SliceGrid

        return SliceGrid(
            start=_parse_month(self.grid_start),
            end=_parse_month(self.grid_end),
            platforms=self.platform_list(),
        )

    def hyperparams(self):
        from .trainer import Hyperparams

        return Hyperparams(
            dim=self.dim, window=self.window, negatives=self.negatives,
            epochs=self.epochs, alpha=self.alpha, subsample=self.subsample,
            min_count=self.min_count, seed=self.seed,
        )

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}
