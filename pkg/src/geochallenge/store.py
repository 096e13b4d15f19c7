"""File-backed persistence for the challenge service.

One directory per deployment holds an append-only `events.log` (one JSON
record per line, fsynced per append) plus an optional `snapshot.json`
written atomically (write-rename) on clean shutdown. Startup loads the
snapshot, then replays whatever the log accumulated after it, so a crash
at any point between two operations reconstructs the same state.

Replay re-submits recorded answers through the challenge engine rather
than trusting stored correctness: the engine stays the only decision path.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterator

from . import challenge
from .challenge import Answer, ChallengeSession, Question
from .geo import GeoPoint
from .trace import LoggedLocation, parse_timestamp

LOG_NAME = "events.log"
SNAPSHOT_NAME = "snapshot.json"


def utc_str(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def location_to_dict(loc: LoggedLocation) -> dict:
    return {
        "id": loc.id,
        "lat": loc.point.latitude_deg,
        "lon": loc.point.longitude_deg,
        "logged_at": utc_str(loc.logged_at),
        "cumulative_dwell_s": loc.cumulative_dwell_s,
    }


def location_from_dict(d: dict) -> LoggedLocation:
    return LoggedLocation(
        id=d["id"],
        point=GeoPoint(d["lat"], d["lon"]),
        logged_at=parse_timestamp(d["logged_at"]),
        cumulative_dwell_s=d["cumulative_dwell_s"],
    )


def session_to_dict(session: ChallengeSession) -> dict:
    """Full internal session, including verification targets. Disk is
    verifier-side storage; outward payloads are built elsewhere."""

    return {
        "session_id": session.session_id,
        "margin_m": session.margin_m,
        "threshold": session.threshold,
        "questions": [
            {
                "index": q.index,
                "location_id": q.location_id,
                "lat": q.location_point.latitude_deg,
                "lon": q.location_point.longitude_deg,
                "asked_about": utc_str(q.asked_about),
                "prompt": q.prompt_text,
            }
            for q in session.questions
        ],
    }


def session_from_dict(d: dict) -> ChallengeSession:
    questions = tuple(
        Question(
            index=q["index"],
            location_id=q["location_id"],
            location_point=GeoPoint(q["lat"], q["lon"]),
            asked_about=parse_timestamp(q["asked_about"]),
            prompt_text=q["prompt"],
        )
        for q in d["questions"]
    )
    return ChallengeSession(
        session_id=d["session_id"],
        questions=questions,
        answers=(),
        per_question_correct=("unanswered",) * len(questions),
        state="open",
        decision="pending",
        margin_m=d["margin_m"],
        threshold=d["threshold"],
    )


@dataclass
class AccountState:
    account_id: str
    locations: list[LoggedLocation] = field(default_factory=list)
    consumed_ids: set[str] = field(default_factory=set)
    open_session: ChallengeSession | None = None
    open_session_started: datetime | None = None
    open_session_last_activity: datetime | None = None
    completed: list[dict] = field(default_factory=list)


class ServiceState:
    """In-memory state reconstructed from the event log.

    `apply` mutates state from one event; the service appends the event to
    the log first, then applies it, so the log is always ahead of memory.
    """

    def __init__(self):
        self.accounts: dict[str, AccountState] = {}

    def account(self, account_id: str) -> AccountState:
        if account_id not in self.accounts:
            self.accounts[account_id] = AccountState(account_id=account_id)
        return self.accounts[account_id]

    def apply(self, event: dict) -> None:
        op = event["op"]
        acct = self.account(event["account_id"])
        if op == "enrolled":
            acct.locations = [location_from_dict(d) for d in event["locations"]]
        elif op == "session_opened":
            session = session_from_dict(event["session"])
            acct.open_session = session
            acct.open_session_started = parse_timestamp(event["at"])
            acct.open_session_last_activity = parse_timestamp(event["at"])
        elif op == "answer_submitted":
            session = acct.open_session
            answer = Answer(
                question_index=event["question_index"],
                point=GeoPoint(event["lat"], event["lon"]),
                submitted_at=parse_timestamp(event["at"]),
            )
            session = challenge.submit_answer(session, answer)
            acct.open_session = session
            acct.open_session_last_activity = answer.submitted_at
            if session.state == "complete":
                self._close(acct, session, decision=session.decision, reason="completed")
        elif op == "session_expired":
            session = acct.open_session
            if session is not None:
                self._close(acct, session, decision="rejected", reason="expired")
        else:
            raise ValueError(f"unknown event op {op!r}")

    def _close(self, acct: AccountState, session: ChallengeSession, decision: str, reason: str) -> None:
        acct.consumed_ids |= challenge.consumed_location_ids(session)
        acct.completed.append(
            {
                "session_id": session.session_id,
                "decision": decision,
                "reason": reason,
                "score": challenge.score(session),
                "per_question_correct": list(session.per_question_correct),
                "prompts": [q.prompt_text for q in session.questions],
            }
        )
        acct.open_session = None
        acct.open_session_started = None
        acct.open_session_last_activity = None

    def snapshot_dict(self) -> dict:
        return {
            "accounts": {
                aid: {
                    "locations": [location_to_dict(l) for l in a.locations],
                    "consumed_ids": sorted(a.consumed_ids),
                    "completed": a.completed,
                    "open_session": None
                    if a.open_session is None
                    else {
                        "session": session_to_dict(a.open_session),
                        "answers": [
                            {
                                "question_index": ans.question_index,
                                "lat": ans.point.latitude_deg,
                                "lon": ans.point.longitude_deg,
                                "at": utc_str(ans.submitted_at),
                            }
                            for ans in a.open_session.answers
                        ],
                        "started": utc_str(a.open_session_started),
                        "last_activity": utc_str(a.open_session_last_activity),
                    },
                }
                for aid, a in self.accounts.items()
            }
        }

    @classmethod
    def from_snapshot_dict(cls, data: dict) -> "ServiceState":
        state = cls()
        for aid, blob in data.get("accounts", {}).items():
            acct = state.account(aid)
            acct.locations = [location_from_dict(d) for d in blob["locations"]]
            acct.consumed_ids = set(blob["consumed_ids"])
            acct.completed = list(blob["completed"])
            open_blob = blob.get("open_session")
            if open_blob:
                session = session_from_dict(open_blob["session"])
                for ans in open_blob["answers"]:
                    session = challenge.submit_answer(
                        session,
                        Answer(ans["question_index"], GeoPoint(ans["lat"], ans["lon"]),
                               parse_timestamp(ans["at"])),
                    )
                acct.open_session = session
                acct.open_session_started = parse_timestamp(open_blob["started"])
                acct.open_session_last_activity = parse_timestamp(open_blob["last_activity"])
        return state


class EventLog:
    """Append-only JSON-lines log with per-record fsync."""

    def __init__(self, path: Path):
        self.path = path
        self._fh = open(path, "a", encoding="utf-8")
        self._lock = threading.Lock()

    def append(self, event: dict) -> None:
        line = json.dumps(event, separators=(",", ":"), sort_keys=True)
        with self._lock:
            self._fh.write(line + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        self._fh.close()

    @staticmethod
    def read_events(path: Path) -> Iterator[dict]:
        if not path.exists():
            return
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    yield json.loads(line)


class Store:
    """Durable state: snapshot + log in one deployment directory."""

    def __init__(self, data_dir: str | Path):
        self.dir = Path(data_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.state = self._load()
        self.log = EventLog(self.dir / LOG_NAME)

    def _load(self) -> ServiceState:
        snapshot_path = self.dir / SNAPSHOT_NAME
        if snapshot_path.exists():
            state = ServiceState.from_snapshot_dict(json.loads(snapshot_path.read_text()))
        else:
            state = ServiceState()
        for event in EventLog.read_events(self.dir / LOG_NAME):
            state.apply(event)
        return state

    def record(self, event: dict) -> None:
        """Durably append, then apply to memory."""

        self.log.append(event)
        self.state.apply(event)

    def close(self, snapshot: bool = True) -> None:
        """Clean shutdown: write the snapshot atomically and truncate the
        replayed log. Skipping the snapshot simulates a crash."""

        self.log.close()
        if not snapshot:
            return
        tmp = self.dir / (SNAPSHOT_NAME + ".tmp")
        tmp.write_text(json.dumps(self.state.snapshot_dict(), sort_keys=True))
        with open(tmp, "r+b") as fh:
            os.fsync(fh.fileno())
        os.replace(tmp, self.dir / SNAPSHOT_NAME)
        (self.dir / LOG_NAME).unlink(missing_ok=True)
