"""Run configuration: plain ``key = value`` files with typed defaults."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    dataset: str = ""
    output: str = "run"
    patch_size: int = 15
    step: int = 2
    scales: tuple = (1, 2, 3, 4)
    n_per_scale: int = 4
    K: int = 128
    encoder: str = "vlad"
    fv_normalization: str = "fisher"
    fv_pi_scaling: bool = False
    # None means 1 / (#classes * #training images)
    svm_lambda: float | None = None
    # SVM iteration budget = factor * #training images
    svm_iters_factor: int = 100
    protocol: str = "random_half"
    repetitions: int = 10
    max_descriptors: int = 500_000
    kmeans_iters: int = 100
    gmm_iters: int = 100
    resize: tuple | None = None
    resize_method: str = "bilinear"
    seed_pattern: int = 0
    seed_splits: int = 0
    seed_codebook: int = 0
    seed_svm: int = 0
    jobs: int = 1

    def validate(self) -> "RunConfig":
        if self.patch_size < 1 or self.patch_size % 2 == 0:
            raise ConfigError(f"patch_size must be a positive odd integer, got {self.patch_size}")
        if self.step < 1:
            raise ConfigError(f"step must be >= 1, got {self.step}")
        if not self.scales or any(s < 1 or s > self.patch_size for s in self.scales):
            raise ConfigError(f"scales must lie in 1..patch_size, got {self.scales}")
        if self.n_per_scale < 1:
            raise ConfigError(f"n_per_scale must be >= 1, got {self.n_per_scale}")
        if self.K < 1:
            raise ConfigError(f"K must be >= 1, got {self.K}")
        if self.encoder not in ("vlad", "ifv"):
            raise ConfigError(f"encoder must be 'vlad' or 'ifv', got {self.encoder!r}")
        if self.fv_normalization not in ("fisher", "none"):
            raise ConfigError(f"fv_normalization must be 'fisher' or 'none', got {self.fv_normalization!r}")
        if self.svm_lambda is not None and self.svm_lambda <= 0:
            raise ConfigError(f"svm_lambda must be positive, got {self.svm_lambda}")
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.max_descriptors < 1 or self.svm_iters_factor < 1 or self.jobs < 1:
            raise ConfigError("max_descriptors, svm_iters_factor and jobs must be >= 1")
        if self.resize_method not in ("bilinear", "bicubic"):
            raise ConfigError(f"resize_method must be bilinear or bicubic, got {self.resize_method!r}")
        from .harness import parse_protocol

        try:
            parse_protocol(self.protocol, self.repetitions, self.seed_splits)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_lines(self) -> list[str]:
        return [f"{f.name} = {_format(f.name, getattr(self, f.name))}" for f in dataclasses.fields(self)]


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _format(key: str, value) -> str:
    if value is None:
        return "none"
    if key == "resize":
        return f"{value[0]}x{value[1]}"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def parse_value(key: str, text: str):
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    text = text.strip()
    try:
        if key in ("svm_lambda",):
            return None if text.lower() in ("none", "formula", "") else float(text)
        if key == "resize":
            if text.lower() in ("none", ""):
                return None
            w, h = text.lower().split("x")
            return (int(w), int(h))
        if key == "scales":
            # '+' is accepted so sweep grids can list several scale sets
            return tuple(int(v) for v in text.replace(" ", "").replace("+", ",").split(",") if v)
        if key == "fv_pi_scaling":
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        default = _FIELDS[key].default
        if isinstance(default, int):
            return int(text)
        return text
    except ValueError:
        raise ConfigError(f"invalid value {text!r} for config key {key!r}") from None


def parse_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    cfg = RunConfig() if base is None else dataclasses.replace(base)
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        setattr(cfg, key, parse_value(key, value))
    return cfg


def load_config(path, overrides: dict | None = None) -> RunConfig:
    cfg = parse_config_text(Path(path).read_text()) if path else RunConfig()
    for key, value in (overrides or {}).items():
        setattr(cfg, key, parse_value(key, value) if isinstance(value, str) else value)
    return cfg.validate()
