from .costmodel import ax3_cost, estimate_latency, ff_cost
from ..intmath import divisors, lcm, ordered_factorizations
from .profile import DeviceProfile, load_profile, profile_from_dict
from .program import Program, ScheduleError, fit_splits, fits
from .search import DEFAULT_BUDGET, DEFAULT_MAX_DEPTH, enumerate_schedules, model_latency, tune_table, tune_task

__all__ = [
    "ax3_cost",
    "estimate_latency",
    "ff_cost",
    "divisors",
    "lcm",
    "ordered_factorizations",
    "DeviceProfile",
    "load_profile",
    "profile_from_dict",
    "Program",
    "ScheduleError",
    "fit_splits",
    "fits",
    "DEFAULT_BUDGET",
    "DEFAULT_MAX_DEPTH",
    "enumerate_schedules",
    "model_latency",
    "tune_table",
    "tune_task",
]
