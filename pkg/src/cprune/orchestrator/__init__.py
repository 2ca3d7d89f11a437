from .loop import (
    ACCEPTED,
    EXHAUSTED,
    OUTCOMES,
    REJECTED_ACCURACY,
    REJECTED_LATENCY,
    CPruneResult,
    PruneState,
    TraceRecord,
    build_table,
    initialize,
    run_cprune,
)
from .oracle import AccuracyOracle, ExternalOracle, OracleError, SyntheticOracle, synthetic_accuracy

__all__ = [
    "ACCEPTED",
    "EXHAUSTED",
    "OUTCOMES",
    "REJECTED_ACCURACY",
    "REJECTED_LATENCY",
    "CPruneResult",
    "PruneState",
    "TraceRecord",
    "build_table",
    "initialize",
    "run_cprune",
    "AccuracyOracle",
    "ExternalOracle",
    "OracleError",
    "SyntheticOracle",
    "synthetic_accuracy",
]
