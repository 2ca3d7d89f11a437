from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from ..intmath import ceil_div, prod

__all__ = ["ScheduleError", "Program", "fit_splits", "fits"]


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class Program:
    """A loop-split schedule for one conv task.

    ``ff_splits`` splits the conv's filter loop and ``ax3_splits`` the filter
    axis of the fused epilogue, both listed outermost first.
    """

    ff_splits: Tuple[int, ...]
    ax3_splits: Tuple[int, ...]
    aux_splits: Optional[Tuple[int, ...]] = None
    estimated_latency: Optional[Fraction] = None

    def __post_init__(self):
        object.__setattr__(self, "ff_splits", tuple(int(f) for f in self.ff_splits))
        object.__setattr__(self, "ax3_splits", tuple(int(f) for f in self.ax3_splits))
        if self.aux_splits is not None:
            object.__setattr__(self, "aux_splits", tuple(int(f) for f in self.aux_splits))
        for axis in (self.ff_splits, self.ax3_splits):
            if any(f < 1 for f in axis):
                raise ScheduleError(f"split factors must be >= 1, got {axis}")

    @property
    def key(self) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        return (self.ff_splits, self.ax3_splits)

    def exact_for(self, filters: int) -> bool:
        return prod(self.ff_splits) == filters and prod(self.ax3_splits) == filters

    def with_latency(self, latency) -> "Program":
        return Program(self.ff_splits, self.ax3_splits, self.aux_splits, latency)

    def as_dict(self) -> dict:
        return {
            "ff_splits": list(self.ff_splits),
            "ax3_splits": list(self.ax3_splits),
            "aux_splits": None if self.aux_splits is None else list(self.aux_splits),
            "latency": None if self.estimated_latency is None else float(self.estimated_latency),
        }


def fit_splits(splits: Sequence[int], filters: int) -> Tuple[int, ...]:
    """Keep the inner factors and size the outermost one to cover ``filters``."""
    if not splits:
        raise ScheduleError("empty split list")
    if len(splits) == 1:
        return (filters,)
    inner = prod(splits[1:])
    return (ceil_div(filters, inner),) + tuple(splits[1:])


def fits(splits: Sequence[int], filters: int) -> bool:
    """True when ``splits`` equals ``fit_splits(splits, filters)``.

    Exact factorizations always fit; a padded split covers ``filters`` with
    the smallest possible outer factor.
    """
    return bool(splits) and tuple(splits) == fit_splits(splits, filters)
