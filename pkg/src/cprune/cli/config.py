"""Run configuration files.

Example::

    {
      "model": "resnet18.json",
      "device_profile": "cpu-narrow.json",
      "a_g": 0.85,
      "alpha": 0.95,
      "beta": 0.97,
      "multiplier": 3,
      "tuner": {"budget": 100000, "max_depth": 3},
      "oracle": {"kind": "synthetic", "baseline": 0.94, "kappa": 0.01},
      "output_dir": "out",
      "seed": null
    }

Relative ``model`` and ``device_profile`` paths are resolved against the
config file's directory; ``output_dir`` against the working directory. An external
oracle is configured as ``{"kind": "external", "command": [...], "timeout":
600, "epochs": {"short": 5, "final": 100}}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from ..orchestrator.oracle import AccuracyOracle, ExternalOracle, SyntheticOracle
from ..tuner.search import DEFAULT_BUDGET, DEFAULT_MAX_DEPTH

__all__ = ["ConfigError", "OracleConfig", "RunConfig", "load_config"]

TRACE_FILE = "trace.jsonl"
MODEL_FILE = "final_model.json"
TABLE_FILE = "final_tasks.json"
SUMMARY_FILE = "summary.json"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class OracleConfig:
    kind: str = "synthetic"
    baseline: float = 0.94
    kappa: float = 0.01
    command: Optional[List[str]] = None
    timeout: float = 3600.0
    epochs: Dict[str, int] = field(default_factory=lambda: {"short": 5, "final": 100})

    def build(self) -> AccuracyOracle:
        if self.kind == "synthetic":
            return SyntheticOracle(self.baseline, self.kappa)
        return ExternalOracle(tuple(self.command), self.timeout, dict(self.epochs))

    def as_dict(self) -> Dict[str, Any]:
        if self.kind == "synthetic":
            return {"kind": "synthetic", "baseline": self.baseline, "kappa": self.kappa}
        return {"kind": "external", "command": list(self.command), "timeout": self.timeout, "epochs": dict(self.epochs)}

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "OracleConfig":
        kind = d.get("kind", "synthetic")
        if kind == "synthetic":
            cfg = cls("synthetic", float(d.get("baseline", 0.94)), float(d.get("kappa", 0.01)))
            if not 0 <= cfg.baseline <= 1:
                raise ConfigError("oracle.baseline must lie in [0, 1]")
            if cfg.kappa < 0:
                raise ConfigError("oracle.kappa must be >= 0")
            return cfg
        if kind == "external":
            cmd = d.get("command")
            if isinstance(cmd, str):
                cmd = [cmd]
            if not cmd:
                raise ConfigError("external oracle needs a command")
            epochs = {"short": 5, "final": 100, **d.get("epochs", {})}
            return cls("external", command=[str(c) for c in cmd], timeout=float(d.get("timeout", 3600.0)), epochs=epochs)
        raise ConfigError(f"unknown oracle kind {kind!r}")


@dataclass(frozen=True)
class RunConfig:
    model: str
    device_profile: str
    a_g: float
    alpha: float = 0.95
    beta: float = 0.97
    multiplier: int = 1
    budget: int = DEFAULT_BUDGET
    max_depth: int = DEFAULT_MAX_DEPTH
    oracle: OracleConfig = field(default_factory=OracleConfig)
    output_dir: str = "out"
    seed: Optional[int] = None
    base_dir: Path = field(default=Path("."), compare=False)

    def __post_init__(self):
        if not 0 < self.a_g < 1:
            raise ConfigError("a_g must lie in (0, 1)")
        if not 0 < self.alpha <= 1:
            raise ConfigError("alpha must lie in (0, 1]")
        if not 0 < self.beta < 1:
            raise ConfigError("beta must lie in (0, 1)")
        if self.multiplier < 1 or self.budget < 1 or self.max_depth < 1:
            raise ConfigError("multiplier, budget and max_depth must be >= 1")

    def resolve(self, p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else self.base_dir / path

    @property
    def model_path(self) -> Path:
        return self.resolve(self.model)

    @property
    def profile_path(self) -> Path:
        return self.resolve(self.device_profile)

    @property
    def out_dir(self) -> Path:
        # outputs land relative to the working directory, inputs relative to the file
        return Path(self.output_dir)

    def output(self, name: str) -> Path:
        return self.out_dir / name

    def as_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model,
            "device_profile": self.device_profile,
            "a_g": self.a_g,
            "alpha": self.alpha,
            "beta": self.beta,
            "multiplier": self.multiplier,
            "tuner": {"budget": self.budget, "max_depth": self.max_depth},
            "oracle": self.oracle.as_dict(),
            "output_dir": self.output_dir,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any], base_dir: Union[str, Path] = ".") -> "RunConfig":
        try:
            tuner = d.get("tuner", {})
            return cls(
                model=str(d["model"]),
                device_profile=str(d["device_profile"]),
                a_g=float(d["a_g"]),
                alpha=float(d.get("alpha", 0.95)),
                beta=float(d.get("beta", 0.97)),
                multiplier=int(d.get("multiplier", 1)),
                budget=int(tuner.get("budget", DEFAULT_BUDGET)),
                max_depth=int(tuner.get("max_depth", DEFAULT_MAX_DEPTH)),
                oracle=OracleConfig.from_dict(d.get("oracle", {})),
                output_dir=str(d.get("output_dir", "out")),
                seed=None if d.get("seed") is None else int(d["seed"]),
                base_dir=Path(base_dir),
            )
        except KeyError as exc:
            raise ConfigError(f"config missing required field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad config value: {exc}") from None


def load_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return RunConfig.from_dict(data, base_dir=path.parent)
