"""Monte Carlo laboratory: synthetic mobility traces, recall/guess behavior
models, and full challenge-session experiments through the real engine.

Determinism contract: every random draw comes from generators derived from
the experiment seed by stable string keys (one stream per subject), so a
report is byte-identical across reruns and across worker counts, and
adding subjects never reshuffles earlier ones.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timedelta, timezone
from typing import Sequence

from .analysis import ResponseRecord, RocCurve, compute_roc
from .challenge import Answer, ChallengeSession, generate_challenge, score, submit_answer
from .config import parse_kv
from .errors import InsufficientLocationsError
from .geo import GeoPoint, destination_point
from .trace import LocationFix, PipelineParams, run_pipeline

#: Offsets used to place simulated answers relative to the logged point:
#: just inside the margin for a correct answer, well outside for a miss.
CORRECT_OFFSET_M = 1.0
INCORRECT_OFFSET_M = 50.0

FIX_INTERVAL_S = 150
FIX_JITTER_M = 30.0


@dataclass(frozen=True)
class MobilityProfile:
    """Synthetic commuter: long anchor stays at home and work (so the
    predictability filter provably removes them) plus short excursions
    within `excursion_radius_km` of home."""

    home: GeoPoint
    work: GeoPoint
    excursion_radius_km: float = 12.0
    excursions_per_day: float = 2.0
    dwell_minutes_range: tuple[int, int] = (15, 60)
    seed: int = 0


@dataclass(frozen=True)
class BehaviorModel:
    """Per-question response rates. With per_subject_variation = 0 each
    question is an independent coin at the subject-kind rate (pure
    binomial scores); a positive variation draws a per-subject rate from a
    Beta distribution with that standard deviation."""

    p_user_recall: float = 0.506
    p_adversary_guess: float = 0.35
    per_subject_variation: float = 0.0

    def __post_init__(self):
        for name in ("p_user_recall", "p_adversary_guess"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.per_subject_variation < 0:
            raise ValueError("per_subject_variation must be non-negative")


@dataclass(frozen=True)
class SimulationReport:
    sessions: int
    roc: RocCurve
    mean_user_score: float
    mean_adv_score: float
    records: tuple[ResponseRecord, ...]

    def accept_rates(self) -> tuple[tuple[int, float, float], ...]:
        """(threshold, user accept rate, adversary accept rate) rows."""

        return self.roc.points

    def to_csv(self) -> str:
        lines = ["threshold,user_accept_rate,adv_accept_rate"]
        lines += [f"{t},{u:.6f},{a:.6f}" for t, u, a in self.roc.points]
        return "\n".join(lines) + "\n"


def _rng(seed: int | str) -> random.Random:
    # str seeds hash via sha512 inside Random, stable across processes
    return random.Random(str(seed))


def _sample_in_disc(rng: random.Random, center: GeoPoint, radius_km: float) -> GeoPoint:
    distance = radius_km * 1000.0 * math.sqrt(rng.random())
    return destination_point(center, rng.uniform(0.0, 360.0), distance)


def _pick_destination(
    rng: random.Random,
    profile: MobilityProfile,
    taken: list[GeoPoint],
    min_separation_m: float = 600.0,
) -> GeoPoint | None:
    from .geo import haversine_distance

    for _ in range(200):
        candidate = _sample_in_disc(rng, profile.home, profile.excursion_radius_km)
        if all(haversine_distance(candidate, p) >= min_separation_m for p in taken):
            return candidate
    return None


def synthesize_trace(
    profile: MobilityProfile,
    days: int,
    start: datetime = datetime(2024, 3, 4, tzinfo=timezone.utc),
) -> list[LocationFix]:
    """Emit a fix every 2.5 minutes while the subject dwells somewhere.

    Daily schedule: home until 09:00, work 09:30-17:00, excursions from
    17:30 (each followed by a 20-minute travel gap), home again from
    23:00. Travel emits no fixes, so gaps close dwell runs instead of
    fabricating stays. Fixes are jittered up to 30 m around the anchor.
    """

    if days < 1:
        raise ValueError("days must be >= 1")
    rng = _rng(f"trace:{profile.seed}")
    taken = [profile.home, profile.work]
    fixes: list[LocationFix] = []

    def emit(anchor: GeoPoint, t0: datetime, t1: datetime) -> None:
        t = t0
        while t < t1:
            point = destination_point(
                anchor, rng.uniform(0.0, 360.0), rng.uniform(0.0, FIX_JITTER_M)
            )
            fixes.append(LocationFix(t, point))
            t += timedelta(seconds=FIX_INTERVAL_S)

    lo, hi = profile.dwell_minutes_range
    for day in range(days):
        midnight = start + timedelta(days=day)
        emit(profile.home, midnight, midnight + timedelta(hours=9))
        emit(profile.work, midnight + timedelta(hours=9, minutes=30), midnight + timedelta(hours=17))

        whole = int(profile.excursions_per_day)
        n_exc = whole + (1 if rng.random() < profile.excursions_per_day - whole else 0)
        cursor = midnight + timedelta(hours=17, minutes=30)
        day_end = midnight + timedelta(hours=22, minutes=40)
        for _ in range(n_exc):
            minutes = rng.randint(lo, hi)
            if cursor + timedelta(minutes=minutes) > day_end:
                break
            destination = _pick_destination(rng, profile, taken)
            if destination is None:
                break
            taken.append(destination)
            emit(destination, cursor, cursor + timedelta(minutes=minutes))
            cursor += timedelta(minutes=minutes + 20)
        emit(profile.home, midnight + timedelta(hours=23), midnight + timedelta(hours=24))
    return fixes


def _subject_rate(rng: random.Random, mean: float, spread: float) -> float:
    if spread <= 0.0 or mean in (0.0, 1.0):
        return mean
    variance_cap = mean * (1.0 - mean)
    if spread * spread >= variance_cap:
        raise ValueError(
            f"per_subject_variation {spread} infeasible for mean {mean} "
            f"(must be < {math.sqrt(variance_cap):.4f})"
        )
    nu = variance_cap / (spread * spread) - 1.0
    return rng.betavariate(mean * nu, (1.0 - mean) * nu)


def simulate_session(
    model: BehaviorModel,
    subject_kind: str,
    session_template: ChallengeSession,
    seed: int | str,
) -> ResponseRecord:
    """Play one fresh session through the real challenge engine.

    Per question the subject recalls/guesses correctly with the model
    rate; the answer point is constructed just inside or outside the
    session margin, and correctness, completion, and the decision all come
    from the engine. Returns the engine-scored record.
    """

    if session_template.answered_count != 0 or session_template.state != "open":
        raise ValueError("session template must be fresh and open")
    rng = _rng(seed)
    base = model.p_user_recall if subject_kind == "legitimate" else model.p_adversary_guess
    rate = _subject_rate(rng, base, model.per_subject_variation)

    session = session_template
    when = datetime(2024, 6, 1, tzinfo=timezone.utc)
    for question in session_template.questions:
        if rng.random() < rate:
            distance = session.margin_m - CORRECT_OFFSET_M
        else:
            distance = session.margin_m + INCORRECT_OFFSET_M
        point = destination_point(question.location_point, rng.uniform(0.0, 360.0), distance)
        session = submit_answer(session, Answer(question.index, point, when))
    assert session.state == "complete"
    return ResponseRecord(subject_kind=subject_kind, score=score(session))


def simulate_sessions(
    model: BehaviorModel,
    session_template: ChallengeSession,
    n_user: int,
    n_adversary: int,
    seed: int | str,
) -> list[ResponseRecord]:
    """Batch of independent sessions, one derived seed per session."""

    records = [
        simulate_session(model, "legitimate", session_template, f"{seed}:u{i}")
        for i in range(n_user)
    ]
    records += [
        simulate_session(model, "adversary", session_template, f"{seed}:a{i}")
        for i in range(n_adversary)
    ]
    return records


@dataclass(frozen=True)
class _SubjectTask:
    index: int
    profile: MobilityProfile
    model: BehaviorModel
    seed: int | str
    days: int
    params: PipelineParams
    questions: int
    required_correct: int
    margin_m: float


def _run_subject(task: _SubjectTask) -> tuple[int, ResponseRecord, ResponseRecord]:
    trace = synthesize_trace(task.profile, task.days)
    result = run_pipeline(trace, task.params)
    template = generate_challenge(
        result.eligible,
        count=task.questions,
        margin_m=task.margin_m,
        threshold=task.required_correct,
        session_id=f"sim-{task.index}",
    )
    user = simulate_session(task.model, "legitimate", template, f"{task.seed}:s{task.index}:user")
    adv = simulate_session(task.model, "adversary", template, f"{task.seed}:s{task.index}:adv")
    return task.index, user, adv


def run_experiment(
    profiles: MobilityProfile | Sequence[MobilityProfile],
    model: BehaviorModel,
    n_subjects: int,
    seed: int | str,
    days: int = 7,
    params: PipelineParams = PipelineParams(),
    questions: int = 10,
    required_correct: int = 7,
    margin_m: float = 200.0,
    workers: int = 1,
) -> SimulationReport:
    """Full pipeline per subject: synthetic trace -> logged locations ->
    one challenge answered by the legitimate user and once more by their
    paired adversary. Results merge by subject index, so reports are
    identical for any `workers` count.
    """

    if n_subjects < 2:
        raise ValueError("need at least 2 subjects")
    profile_list = [profiles] if isinstance(profiles, MobilityProfile) else list(profiles)
    if not profile_list:
        raise ValueError("need at least one profile")

    tasks = [
        _SubjectTask(
            index=i,
            profile=replace(
                profile_list[i % len(profile_list)],
                seed=_rng(f"{seed}:profile:{i}").getrandbits(63),
            ),
            model=model,
            seed=seed,
            days=days,
            params=params,
            questions=questions,
            required_correct=required_correct,
            margin_m=margin_m,
        )
        for i in range(n_subjects)
    ]

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_subject, tasks, chunksize=8))
    else:
        outcomes = [_run_subject(t) for t in tasks]
    outcomes.sort(key=lambda item: item[0])

    records: list[ResponseRecord] = []
    for _, user, adv in outcomes:
        records.append(user)
        records.append(adv)
    user_scores = [r.score for r in records if r.subject_kind == "legitimate"]
    adv_scores = [r.score for r in records if r.subject_kind == "adversary"]
    return SimulationReport(
        sessions=len(records),
        roc=compute_roc(records),
        mean_user_score=sum(user_scores) / len(user_scores),
        mean_adv_score=sum(adv_scores) / len(adv_scores),
        records=tuple(records),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """File-configurable experiment (key = value), see `from_text`."""

    seed: int = 1
    n_subjects: int = 40
    days: int = 7
    workers: int = 1
    p_user_recall: float = 0.506
    p_adversary_guess: float = 0.35
    per_subject_variation: float = 0.0
    home_lat: float = 45.4215
    home_lon: float = -75.6972
    work_lat: float = 45.3876
    work_lon: float = -75.6960
    excursion_radius_km: float = 12.0
    excursions_per_day: float = 2.0
    dwell_minutes_min: int = 15
    dwell_minutes_max: int = 60
    questions: int = 10
    required_correct: int = 7
    margin_m: float = 200.0

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        raw = parse_kv(text)
        defaults = cls()
        values = {}
        for key, value in raw.items():
            if not hasattr(defaults, key):
                raise ValueError(f"unknown experiment key {key!r}")
            current = getattr(defaults, key)
            values[key] = type(current)(value)
        return cls(**values)

    def profile(self) -> MobilityProfile:
        return MobilityProfile(
            home=GeoPoint(self.home_lat, self.home_lon),
            work=GeoPoint(self.work_lat, self.work_lon),
            excursion_radius_km=self.excursion_radius_km,
            excursions_per_day=self.excursions_per_day,
            dwell_minutes_range=(self.dwell_minutes_min, self.dwell_minutes_max),
            seed=self.seed,
        )

    def model(self) -> BehaviorModel:
        return BehaviorModel(
            p_user_recall=self.p_user_recall,
            p_adversary_guess=self.p_adversary_guess,
            per_subject_variation=self.per_subject_variation,
        )


def run_configured_experiment(config: ExperimentConfig) -> SimulationReport:
    return run_experiment(
        config.profile(),
        config.model(),
        n_subjects=config.n_subjects,
        seed=config.seed,
        days=config.days,
        questions=config.questions,
        required_correct=config.required_correct,
        margin_m=config.margin_m,
        workers=config.workers,
    )
