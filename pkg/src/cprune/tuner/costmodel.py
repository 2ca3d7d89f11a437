"""Analytical conv latency model.

For a task with ``F`` filters, ``C`` input channels, kernel ``KH x KW`` and
output size ``OH x OW`` (input size divided by stride, rounded up), a program
with filter splits ``ff`` and epilogue splits ``ax3`` costs::

    latency = conv(ff) + epilogue(ax3) + parallel_overhead * (p + q) / cores

    conv(ff)      = OH * OW * KH * KW * C * chunk(ff) * mac_cost * pen(t) * spill
    epilogue(ax3) = OH * OW * chunk(ax3) * mac_cost * E * pen(u)

where, for a split list ``s`` (outermost first):

* ``t``/``u``: innermost factor of ``ff``/``ax3`` (the vector tile)
* ``p``/``q``: outermost factor when the list has two or more factors,
  otherwise 1 (an unsplit loop runs serially)
* ``pen(x)``: 1 when ``x`` is a multiple of ``vector_width`` no larger than
  ``vector_width * vector_registers``, else ``tile_penalty``
* ``chunk(s) = ceil(p / cores) * block(s)``: filters on the busiest core
  when the ``p`` outer iterations are spread over ``cores``, with
  ``block(s)`` the product of the inner factors (``F`` for an unsplit loop)
* ``spill``: ``tile_penalty`` when the per-chunk working set
  ``4 * block(ff) * (OW + KH * KW)`` bytes exceeds ``l1_bytes``, else 1
* ``E = 1 + has_bn + has_relu + has_add``: epilogue ops per output element

A padded split covers ``F`` with ``p = ceil(F / block)``, so for a fixed
inner shape latency is a step function of ``F``. All arithmetic is exact (``Fraction``).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from ..tasks import Task, TaskSignature
from ..intmath import ceil_div, prod
from .profile import DeviceProfile
from .program import Program, ScheduleError, fits

__all__ = ["estimate_latency", "ff_cost", "ax3_cost", "output_spatial"]

WORD_BYTES = 4


def output_spatial(sig: TaskSignature) -> tuple[int, int]:
    return (ceil_div(sig.input_spatial[0], sig.stride[0]), ceil_div(sig.input_spatial[1], sig.stride[1]))


def _penalty(tile: int, prof: DeviceProfile) -> Fraction:
    vw = prof.vector_width
    if tile % vw == 0 and tile <= vw * prof.vector_registers:
        return Fraction(1)
    return prof.tile_penalty


def _outer(splits: Sequence[int]) -> int:
    return splits[0] if len(splits) > 1 else 1


def _block(splits: Sequence[int]) -> int:
    return prod(splits[1:]) if len(splits) > 1 else splits[0]


def _chunk(splits: Sequence[int], cores: int) -> int:
    return ceil_div(_outer(splits), cores) * _block(splits)


def ff_cost(ff: Sequence[int], sig: TaskSignature, prof: DeviceProfile) -> Fraction:
    """Conv loop nest cost plus its share of parallel-region overhead."""
    oh, ow = output_spatial(sig)
    kh, kw = sig.kernel
    macs = oh * ow * kh * kw * sig.input_channels * _chunk(ff, prof.cores)
    spill = prof.tile_penalty if WORD_BYTES * _block(ff) * (ow + kh * kw) > prof.l1_bytes else 1
    conv = macs * prof.mac_cost * _penalty(ff[-1], prof) * spill
    return conv + prof.parallel_overhead * Fraction(_outer(ff), prof.cores)


def ax3_cost(ax3: Sequence[int], sig: TaskSignature, prof: DeviceProfile) -> Fraction:
    """Fused epilogue cost plus its share of parallel-region overhead."""
    oh, ow = output_spatial(sig)
    ops = 1 + sum(sig.fused_ops)
    epi = oh * ow * _chunk(ax3, prof.cores) * prof.mac_cost * ops * _penalty(ax3[-1], prof)
    return epi + prof.parallel_overhead * Fraction(_outer(ax3), prof.cores)


def estimate_latency(program: Program, task: Task | TaskSignature, profile: DeviceProfile) -> Fraction:
    """Modelled latency in seconds, exact.

    Accepts exact factorizations of the task's filter count and padded splits
    whose outer factor is the smallest that covers it.
    """
    sig = task.signature if isinstance(task, Task) else task
    for name, axis in (("ff", program.ff_splits), ("ax3", program.ax3_splits)):
        if not fits(axis, sig.filters):
            raise ScheduleError(f"{name} splits {list(axis)} do not match {sig.filters} filters")
    return ff_cost(program.ff_splits, sig, profile) + ax3_cost(program.ax3_splits, sig, profile)
