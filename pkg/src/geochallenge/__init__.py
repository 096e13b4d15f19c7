"""Location-history challenge questions for fallback authentication.

Subpackages by concern: `geo` (geodesic primitives), `trace` (fix ->
dwell -> logged-location pipeline), `challenge` (question generation and
verification), `analysis` (key space, throttled guessing, ROC),
`sim` (Monte Carlo experiments), `service`/`store` (HTTP verifier with
file-backed persistence), `cli` (the `geochallenge` command).
"""

from .geo import GeoPoint, haversine_distance, within_margin, disc_cell_count
from .trace import (
    LocationFix,
    DwellEvent,
    LoggedLocation,
    PipelineParams,
    ingest_trace,
    detect_dwells,
    select_unique,
    filter_predictable,
    run_pipeline,
)
from .challenge import (
    Answer,
    ChallengeSession,
    Question,
    generate_challenge,
    submit_answer,
    decide,
    score,
)
from .analysis import (
    KeySpaceEstimate,
    ResponseRecord,
    RocCurve,
    estimate_keyspace,
    throttled_attack_success,
    compute_roc,
    criteria_report,
)
from .sim import BehaviorModel, MobilityProfile, SimulationReport, run_experiment

__version__ = "0.1.0"

__all__ = [
    "GeoPoint",
    "haversine_distance",
    "within_margin",
    "disc_cell_count",
    "LocationFix",
    "DwellEvent",
    "LoggedLocation",
    "PipelineParams",
    "ingest_trace",
    "detect_dwells",
    "select_unique",
    "filter_predictable",
    "run_pipeline",
    "Answer",
    "ChallengeSession",
    "Question",
    "generate_challenge",
    "submit_answer",
    "decide",
    "score",
    "KeySpaceEstimate",
    "ResponseRecord",
    "RocCurve",
    "estimate_keyspace",
    "throttled_attack_success",
    "compute_roc",
    "criteria_report",
    "BehaviorModel",
    "MobilityProfile",
    "SimulationReport",
    "run_experiment",
    "__version__",
]
