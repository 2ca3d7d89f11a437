from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Union

__all__ = ["DeviceProfile", "load_profile", "profile_from_dict"]


def _exact(v) -> Fraction:
    # str() keeps the decimal the user wrote instead of the binary float
    return v if isinstance(v, Fraction) else Fraction(str(v))


@dataclass(frozen=True)
class DeviceProfile:
    """Analytical hardware parameters for the latency model.

    Costs are held as exact fractions so schedule comparison never depends
    on floating-point rounding.
    """

    name: str
    cores: int
    vector_width: int
    l1_bytes: int
    mac_cost: Fraction
    parallel_overhead: Fraction
    tile_penalty: Fraction
    vector_registers: int = 4

    def __post_init__(self):
        for f in ("mac_cost", "parallel_overhead", "tile_penalty"):
            object.__setattr__(self, f, _exact(getattr(self, f)))
        for f in ("cores", "vector_width", "l1_bytes", "vector_registers", "mac_cost", "parallel_overhead", "tile_penalty"):
            if getattr(self, f) <= 0:
                raise ValueError(f"device profile {self.name!r}: {f} must be positive")

    def as_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "cores": self.cores,
            "vector_width": self.vector_width,
            "l1_bytes": self.l1_bytes,
            "mac_cost": str(self.mac_cost),
            "parallel_overhead": str(self.parallel_overhead),
            "tile_penalty": str(self.tile_penalty),
            "vector_registers": self.vector_registers,
        }


def profile_from_dict(d: Dict[str, Any]) -> DeviceProfile:
    try:
        return DeviceProfile(
            name=str(d["name"]),
            cores=int(d["cores"]),
            vector_width=int(d["vector_width"]),
            l1_bytes=int(d["l1_bytes"]),
            mac_cost=d["mac_cost"],
            parallel_overhead=d["parallel_overhead"],
            tile_penalty=d["tile_penalty"],
            vector_registers=int(d.get("vector_registers", 4)),
        )
    except KeyError as exc:
        raise ValueError(f"device profile missing field {exc.args[0]!r}") from None


def load_profile(path: Union[str, Path]) -> DeviceProfile:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"device profile not found: {path}")
    return profile_from_dict(json.loads(path.read_text()))
