"""Accuracy oracles: a deterministic penalty model and a subprocess hook."""

from __future__ import annotations

import json
import subprocess
from dataclasses import dataclass, field
from typing import Dict, Protocol, Sequence

import numpy as np

from ..graph.io import model_to_dict
from ..graph.ir import ModelGraph

__all__ = ["OracleError", "AccuracyOracle", "synthetic_accuracy", "SyntheticOracle", "ExternalOracle", "MODES"]

MODES = ("short", "final")


class OracleError(RuntimeError):
    pass


class AccuracyOracle(Protocol):
    def __call__(self, model: ModelGraph, mode: str) -> float: ...


def pruned_mass_fractions(model: ModelGraph) -> Dict[str, float]:
    """Per conv, the share of its original l1 mass that pruning removed."""
    out = {}
    for n in model.nodes:
        if not n.is_conv or not n.original_l1:
            continue
        remaining = float(np.abs(n.weights).sum())
        out[n.id] = (n.original_l1 - remaining) / n.original_l1
    return out


def synthetic_accuracy(model: ModelGraph, baseline_accuracy: float, kappa: float) -> float:
    """``baseline - kappa * sum(pruned l1 fraction per conv)``, clamped to [0, 1]."""
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    penalty = 0.0
    for frac in pruned_mass_fractions(model).values():
        penalty += frac
    return min(1.0, max(0.0, baseline_accuracy - kappa * penalty))


@dataclass(frozen=True)
class SyntheticOracle:
    """Penalty model standing in for training; ``mode`` has no effect."""

    baseline: float
    kappa: float

    def __call__(self, model: ModelGraph, mode: str) -> float:
        if mode not in MODES:
            raise OracleError(f"unknown oracle mode {mode!r}")
        return synthetic_accuracy(model, self.baseline, self.kappa)


@dataclass(frozen=True)
class ExternalOracle:
    """Runs ``command`` once per query.

    The request ``{"model": <model spec>, "mode": "short"|"final", "epochs": n}``
    goes to the child's stdin as JSON; the child must print
    ``{"accuracy": <fraction>}`` and exit 0.
    """

    command: Sequence[str]
    timeout: float = 3600.0
    epochs: Dict[str, int] = field(default_factory=lambda: {"short": 5, "final": 100})

    def __call__(self, model: ModelGraph, mode: str) -> float:
        if mode not in MODES:
            raise OracleError(f"unknown oracle mode {mode!r}")
        request = json.dumps({"model": model_to_dict(model), "mode": mode, "epochs": self.epochs[mode]})
        try:
            proc = subprocess.run(
                list(self.command), input=request, capture_output=True, text=True, timeout=self.timeout, check=False
            )
        except subprocess.TimeoutExpired:
            raise OracleError(f"oracle timed out after {self.timeout}s") from None
        except OSError as exc:
            raise OracleError(f"cannot start oracle: {exc}") from None
        if proc.returncode != 0:
            raise OracleError(f"oracle exited with status {proc.returncode}: {proc.stderr.strip()[:500]}")
        try:
            acc = float(json.loads(proc.stdout)["accuracy"])
        except (ValueError, KeyError, TypeError):
            raise OracleError(f"oracle reply is not {{\"accuracy\": x}}: {proc.stdout[:200]!r}") from None
        if not 0.0 <= acc <= 1.0:
            raise OracleError(f"oracle accuracy {acc} outside [0, 1]")
        return acc
