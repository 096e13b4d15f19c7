"""Challenge engine: build ten-question location challenges, verify map
answers against the margin, and decide authentication by the 7-of-10 rule.

Sessions are immutable values; `submit_answer` returns an updated copy, so
the engine itself is pure and the owning store serializes writers.
"""

from __future__ import annotations

import calendar
import uuid
from dataclasses import dataclass, replace
from datetime import datetime, timedelta, timezone
from typing import Iterable, Literal, Sequence

from .errors import InsufficientLocationsError, SessionClosedError, SingleAttemptError
from .geo import GeoPoint, within_margin
from .trace import LoggedLocation

DEFAULT_QUESTION_COUNT = 10
DEFAULT_MARGIN_M = 200.0
DEFAULT_THRESHOLD = 7

Correctness = Literal["unanswered", "correct", "incorrect"]
Decision = Literal["pending", "authenticated", "rejected"]


def render_prompt(asked_about: datetime, include_weekday: bool = False) -> str:
    """Render "Where were you on the {day} of {month} at {time}?".

    The time is rounded to the nearest quarter hour and shown on a
    12-hour clock (a rounded 16:00 renders as "4:00 PM"). Rounding can
    roll the date forward, in which case the rolled date is shown.
    `include_weekday` prefixes the weekday name; it is off by default to
    match the deployed question format.
    """

    base = asked_about.replace(minute=0, second=0, microsecond=0)
    quarters = int((asked_about.minute + asked_about.second / 60.0) / 15.0 + 0.5)
    rounded = base + timedelta(minutes=15 * quarters)

    hour12 = rounded.hour % 12 or 12
    ampm = "AM" if rounded.hour < 12 else "PM"
    when = f"{hour12}:{rounded.minute:02d} {ampm}"
    day_phrase = f"the {rounded.day} of {calendar.month_name[rounded.month]}"
    if include_weekday:
        day_phrase = f"{calendar.day_name[rounded.weekday()]} {day_phrase}"
    return f"Where were you on {day_phrase} at {when}?"


@dataclass(frozen=True, slots=True)
class Question:
    """One location question. `location_point` is the verification target;
    it never appears in outward payloads (see `outward_questions`)."""

    index: int
    location_id: str
    location_point: GeoPoint
    asked_about: datetime
    prompt_text: str


@dataclass(frozen=True, slots=True)
class Answer:
    question_index: int
    point: GeoPoint
    submitted_at: datetime


@dataclass(frozen=True, slots=True)
class ChallengeSession:
    """Ten ordered questions (most recent location first), the answers so
    far, per-question correctness, and the final decision."""

    session_id: str
    questions: tuple[Question, ...]
    answers: tuple[Answer, ...]
    per_question_correct: tuple[Correctness, ...]
    state: Literal["open", "complete"]
    decision: Decision
    margin_m: float = DEFAULT_MARGIN_M
    threshold: int = DEFAULT_THRESHOLD

    @property
    def answered_count(self) -> int:
        return sum(1 for c in self.per_question_correct if c != "unanswered")


def generate_challenge(
    locations: Sequence[LoggedLocation],
    count: int = DEFAULT_QUESTION_COUNT,
    margin_m: float = DEFAULT_MARGIN_M,
    threshold: int = DEFAULT_THRESHOLD,
    exclude_ids: Iterable[str] = (),
    include_weekday: bool = False,
    session_id: str | None = None,
) -> ChallengeSession:
    """Build a session over the `count` most recently logged locations.

    Locations named in `exclude_ids` (consumed by earlier sessions) are
    skipped, so challenges are single-use: a fresh session never repeats a
    question a previous session already asked. Raises
    InsufficientLocationsError if fewer than `count` locations remain.
    """

    if count < 1:
        raise ValueError("count must be positive")
    if not 0 < threshold <= count:
        raise ValueError("threshold must be within 1..count")
    excluded = set(exclude_ids)
    pool = [loc for loc in locations if loc.id not in excluded]
    if len(pool) < count:
        raise InsufficientLocationsError(required=count, available=len(pool))

    newest_first = sorted(pool, key=lambda loc: loc.logged_at, reverse=True)[:count]
    questions = tuple(
        Question(
            index=i,
            location_id=loc.id,
            location_point=loc.point,
            asked_about=loc.logged_at,
            prompt_text=render_prompt(loc.logged_at, include_weekday=include_weekday),
        )
        for i, loc in enumerate(newest_first)
    )
    return ChallengeSession(
        session_id=session_id or uuid.uuid4().hex[:16],
        questions=questions,
        answers=(),
        per_question_correct=("unanswered",) * count,
        state="open",
        decision="pending",
        margin_m=margin_m,
        threshold=threshold,
    )


def submit_answer(session: ChallengeSession, answer: Answer) -> ChallengeSession:
    """Record a map answer for one question; single attempt per question.

    Returns the updated session. When the last answer lands the session
    completes and the decision is computed. Raises SessionClosedError on a
    completed session and SingleAttemptError on an already-answered index.
    """

    if session.state != "open":
        raise SessionClosedError(f"session {session.session_id} is complete")
    idx = answer.question_index
    if not 0 <= idx < len(session.questions):
        raise ValueError(f"question index {idx} out of range")
    if session.per_question_correct[idx] != "unanswered":
        raise SingleAttemptError(f"question {idx} already answered; one attempt allowed")

    question = session.questions[idx]
    ok = within_margin(answer.point, question.location_point, session.margin_m)
    flags = list(session.per_question_correct)
    flags[idx] = "correct" if ok else "incorrect"

    session = replace(
        session,
        answers=session.answers + (answer,),
        per_question_correct=tuple(flags),
    )
    if session.answered_count == len(session.questions):
        session = replace(session, state="complete", decision=_decide(session))
    return session


def _decide(session: ChallengeSession) -> Decision:
    correct = sum(1 for c in session.per_question_correct if c == "correct")
    return "authenticated" if correct >= session.threshold else "rejected"


def decide(session: ChallengeSession) -> Decision:
    """Final decision: authenticated iff at least `threshold` questions are
    correct. Returns "pending" while any question is unanswered."""

    if session.answered_count < len(session.questions):
        return "pending"
    return _decide(session)


def score(session: ChallengeSession) -> int:
    """Count of correctly answered questions so far."""

    return sum(1 for c in session.per_question_correct if c == "correct")


def consumed_location_ids(session: ChallengeSession) -> frozenset[str]:
    """Location ids a completed session used up (single-use challenges)."""

    return frozenset(q.location_id for q in session.questions)


def outward_questions(session: ChallengeSession) -> list[dict]:
    """The question payload shown to the answering party: index, prompt,
    and whether it is already answered. No coordinates, ids, or timestamps
    leave the verifier."""

    return [
        {
            "index": q.index,
            "prompt": q.prompt_text,
            "answered": session.per_question_correct[q.index] != "unanswered",
        }
        for q in session.questions
    ]
