"""Pipeline configuration: a flat key=value file plus command-line overrides."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .basis import BasisSpec
from .ingest import FD001_INFORMATIVE, ScreenConfig, sensor_id


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    """Every key of the config file, with defaults that run the FD001 study.

    ``sensors`` is ``auto`` (screen the training data), ``fd001`` (the fixed
    nine-channel list) or a comma-separated list of names / ids.
    ``mfpca_q`` is ``auto``, a component count, or a variance target in (0, 1].
    ``compare_scale`` is ``original`` (cycle axis of the test engine) or
    ``registered``.
    """

    train_path: str = "data/train_FD001.txt"
    test_path: str = "data/test_FD001.txt"
    rul_path: str = "data/RUL_FD001.txt"
    output_dir: str = "out"

    sensors: str = "auto"
    screen_const_tol: float = 1e-9
    screen_consistency: float = 0.9
    screen_rel_tol: float = 1e-4
    screen_max_levels: int = 20

    degree: int = 3
    n_interior: int = 19
    penalty_order: int = 2
    lambda_min: float = 1e-6
    lambda_max: float = 1e2
    lambda_count: int = 25
    knot_grid: tuple[int, ...] = ()
    selector: str = "gcv"

    mfpca_q: str = "auto"
    mfpca_scaling: str = "none"
    orient: str = "lifetime"

    vote_rule: float = 0.5
    use_groups: bool = True
    group_fallback: bool = True

    k: int = 6
    aggregate: str = "mean"
    compare_scale: str = "original"
    alarm_fraction: float = 0.8

    eval_fractions: tuple[float, ...] = (0.35, 0.5, 0.8, 0.9)
    eval_units: tuple[int, ...] = (20, 31, 34, 35, 42, 68, 76, 81, 82)
    plot_units: tuple[int, ...] = (82, 49)
    deterministic: bool = True
    log_level: str = "INFO"

    def __post_init__(self):
        checks = [
            (self.selector in ("gcv", "loocv"), "selector", "gcv or loocv"),
            (self.mfpca_scaling in ("none", "pointwise"), "mfpca_scaling", "none or pointwise"),
            (self.orient in ("lifetime", "none"), "orient", "lifetime or none"),
            (self.aggregate in ("mean", "median"), "aggregate", "mean or median"),
            (self.compare_scale in ("original", "registered"), "compare_scale", "original or registered"),
            (1 <= self.k <= 20, "k", "an integer in 1..20"),
            (0 < self.alarm_fraction < 1, "alarm_fraction", "in (0, 1)"),
            (0 <= self.vote_rule < 1, "vote_rule", "in [0, 1)"),
            (self.lambda_count >= 1 and 0 <= self.lambda_min <= self.lambda_max, "lambda_*", "a valid grid"),
            (all(0 < f <= 1 for f in self.eval_fractions), "eval_fractions", "values in (0, 1]"),
        ]
        for ok, key, want in checks:
            if not ok:
                raise ConfigError(f"config key {key!r} must be {want}")
        self.sensor_ids()
        self.q()

    # derived settings
    def basis(self) -> BasisSpec:
        return BasisSpec(self.degree, self.n_interior, self.penalty_order)

    def lambda_grid(self) -> tuple[float, ...]:
        if self.lambda_count == 1:
            return (float(self.lambda_min),)
        if self.lambda_min == 0:
            return (0.0,) + tuple(np.logspace(-12, np.log10(self.lambda_max), self.lambda_count - 1))
        return tuple(np.logspace(np.log10(self.lambda_min), np.log10(self.lambda_max), self.lambda_count))

    def screen(self) -> ScreenConfig:
        return ScreenConfig(self.screen_const_tol, self.screen_consistency,
                            self.screen_rel_tol, self.screen_max_levels)

    def sensor_ids(self) -> tuple[int, ...] | None:
        """Explicit sensor list, or None when the screener decides."""
        s = self.sensors.strip().lower()
        if s == "auto":
            return None
        if s == "fd001":
            return FD001_INFORMATIVE
        try:
            ids = tuple(sensor_id(tok) for tok in self.sensors.split(",") if tok.strip())
        except ValueError as e:
            raise ConfigError(f"config key 'sensors': {e}") from None
        if not ids:
            raise ConfigError("config key 'sensors' selects no sensors")
        return ids

    def q(self) -> int | float | None:
        s = str(self.mfpca_q).strip().lower()
        if s == "auto":
            return None
        try:
            x = float(s)
        except ValueError:
            raise ConfigError("config key 'mfpca_q' must be auto, an integer or a fraction") from None
        if x <= 0:
            raise ConfigError("config key 'mfpca_q' must be positive")
        return x if x <= 1 and "." in s else int(x)

    def paths(self) -> dict[str, Path]:
        return {"train": Path(self.train_path), "test": Path(self.test_path),
                "rul": Path(self.rul_path), "out": Path(self.output_dir)}


_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


def _coerce(key: str, default, raw: str):
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            if raw.lower() not in _BOOL:
                raise ValueError(raw)
            return _BOOL[raw.lower()]
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            toks = [t for t in raw.replace(";", ",").split(",") if t.strip()]
            f = PipelineConfig.__dataclass_fields__[key]
            conv = float if "float" in str(f.type) else int
            return tuple(conv(t) for t in toks)
        return raw
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r}") from None


def parse_pairs(lines: Iterable[str], source: str = "<config>") -> dict[str, str]:
    out = {}
    for n, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}: expected key=value, got {line!r}")
        key, val = (x.strip() for x in line.split("=", 1))
        out[key] = val
    return out


def build_config(pairs: dict[str, str], base: PipelineConfig | None = None) -> PipelineConfig:
    base = base or PipelineConfig()
    known = {f.name: f for f in dataclasses.fields(PipelineConfig)}
    updates = {}
    for key, raw in pairs.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        updates[key] = _coerce(key, getattr(base, key), raw)
    return dataclasses.replace(base, **updates)


def load_config(path: str | Path | None = None, overrides: Iterable[str] = ()) -> PipelineConfig:
    """Read a config file (optional) and apply ``key=value`` overrides; the last one wins."""
    pairs: dict[str, str] = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file {p} not found")
        pairs.update(parse_pairs(p.read_text().splitlines(), str(p)))
        base_dir = p.parent
    else:
        base_dir = None
    pairs.update(parse_pairs(overrides, "--set"))
    cfg = build_config(pairs)
    if base_dir is not None:
        # relative data paths in a config file are relative to that file
        fixes = {}
        for key in ("train_path", "test_path", "rul_path", "output_dir"):
            if key in pairs and not Path(getattr(cfg, key)).is_absolute():
                fixes[key] = str(base_dir / getattr(cfg, key))
        cfg = dataclasses.replace(cfg, **fixes)
    return cfg


def dump_config(cfg: PipelineConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
