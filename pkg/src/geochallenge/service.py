"""HTTP challenge/response service.

Endpoints (JSON unless noted):

    GET  /health
    POST /accounts/{id}/traces     raw CSV or GPX body -> enrollment summary
    POST /accounts/{id}/sessions   -> outward session view (prompts only)
    GET  /accounts/{id}/sessions/{sid}
    POST /accounts/{id}/sessions/{sid}/answers  {question_index, lat, lon}
    GET  /accounts/{id}/sessions/{sid}/decision

Errors are structured: {"code", "message", "detail"}. Outward payloads
never contain a logged coordinate; per-question correctness is withheld
until the session completes (partial feedback would hand an adversary a
per-question oracle). Requests for one account are serialized; accounts
proceed independently.
"""

from __future__ import annotations

import threading
import uuid
from contextlib import asynccontextmanager
from datetime import datetime, timedelta, timezone
from typing import Callable

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import challenge
from .config import CliConfig
from .errors import (
    GeoChallengeError,
    InsufficientLocationsError,
    NotFoundError,
    SessionClosedError,
    SessionConflictError,
    TraceParseError,
)
from .trace import filter_predictable
from .geo import GeoPoint
from .store import AccountState, Store, location_to_dict, session_to_dict, utc_str
from .trace import ingest_trace, run_pipeline

_STATUS_BY_CODE = {
    "parse_error": 400,
    "not_found": 404,
    "insufficient_locations": 409,
    "session_conflict": 409,
    "single_attempt_violation": 409,
    "session_closed": 409,
    "domain_error": 400,
    "insufficient_data": 400,
}


class AnswerBody(BaseModel):
    question_index: int
    lat: float
    lon: float


class ChallengeService:
    def __init__(
        self,
        data_dir: str,
        config: CliConfig | None = None,
        clock: Callable[[], datetime] | None = None,
    ):
        self.config = config or CliConfig()
        self.store = Store(data_dir)
        self.clock = clock or (lambda: datetime.now(timezone.utc).replace(microsecond=0))
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock(self, account_id: str) -> threading.Lock:
        with self._locks_guard:
            if account_id not in self._locks:
                self._locks[account_id] = threading.Lock()
            return self._locks[account_id]

    def _expire_if_idle(self, acct: AccountState) -> None:
        if acct.open_session is None:
            return
        idle = self.clock() - acct.open_session_last_activity
        if idle > timedelta(minutes=self.config.session_expiry_min):
            self.store.record(
                {
                    "op": "session_expired",
                    "account_id": acct.account_id,
                    "session_id": acct.open_session.session_id,
                    "at": utc_str(self.clock()),
                }
            )

    def enroll(self, account_id: str, body: bytes) -> dict:
        with self._lock(account_id):
            # Read without creating: the account must only come into being
            # through a logged event, or crash replay would diverge.
            acct = self.store.state.accounts.get(account_id)
            existing = acct.locations if acct is not None else []
            consumed = acct.consumed_ids if acct is not None else set()
            fixes = ingest_trace(body)
            result = run_pipeline(
                fixes, self.config.pipeline_params(), existing=existing
            )
            self.store.record(
                {
                    "op": "enrolled",
                    "account_id": account_id,
                    "locations": [location_to_dict(l) for l in result.locations],
                    "at": utc_str(self.clock()),
                }
            )
            eligible = [loc for loc in result.eligible if loc.id not in consumed]
            return {
                "account_id": account_id,
                "fixes": len(fixes),
                "locations_logged": len(result.locations),
                "eligible": len(eligible),
                "challenge_ready": len(eligible) >= self.config.questions,
            }

    def open_session(self, account_id: str) -> dict:
        with self._lock(account_id):
            acct = self._existing_account(account_id)
            self._expire_if_idle(acct)
            if acct.open_session is not None:
                raise SessionConflictError(
                    f"account {account_id} already has an open session",
                    open_session_id=acct.open_session.session_id,
                )
            eligible = self._eligible(acct)
            session = challenge.generate_challenge(
                eligible,
                count=self.config.questions,
                margin_m=self.config.margin_m,
                threshold=self.config.required_correct,
                exclude_ids=acct.consumed_ids,
                session_id=uuid.uuid4().hex[:16],
            )
            self.store.record(
                {
                    "op": "session_opened",
                    "account_id": account_id,
                    "session": session_to_dict(session),
                    "at": utc_str(self.clock()),
                }
            )
            return self._session_view(acct, session.session_id)

    def _eligible(self, acct: AccountState):
        if not acct.locations:
            raise InsufficientLocationsError(required=self.config.questions, available=0)
        return filter_predictable(acct.locations, self.config.max_dwell_s)

    def _existing_account(self, account_id: str) -> AccountState:
        if account_id not in self.store.state.accounts:
            raise NotFoundError(f"unknown account {account_id}")
        return self.store.state.accounts[account_id]

    def _find_completed(self, acct: AccountState, session_id: str) -> dict | None:
        for record in acct.completed:
            if record["session_id"] == session_id:
                return record
        return None

    def _session_view(self, acct: AccountState, session_id: str) -> dict:
        session = acct.open_session
        if session is not None and session.session_id == session_id:
            return {
                "session_id": session.session_id,
                "state": "open",
                "questions": challenge.outward_questions(session),
                "answered_count": session.answered_count,
            }
        record = self._find_completed(acct, session_id)
        if record is None:
            raise NotFoundError(f"unknown session {session_id}")
        return {
            "session_id": session_id,
            "state": "complete",
            "questions": [
                {"index": i, "prompt": p, "answered": True}
                for i, p in enumerate(record["prompts"])
            ],
            "answered_count": sum(
                1 for c in record["per_question_correct"] if c != "unanswered"
            ),
            "decision": record["decision"],
        }

    def session_view(self, account_id: str, session_id: str) -> dict:
        with self._lock(account_id):
            acct = self._existing_account(account_id)
            self._expire_if_idle(acct)
            return self._session_view(acct, session_id)

    def submit_answer(self, account_id: str, session_id: str, body: AnswerBody) -> dict:
        with self._lock(account_id):
            acct = self._existing_account(account_id)
            self._expire_if_idle(acct)
            session = acct.open_session
            if session is None or session.session_id != session_id:
                if self._find_completed(acct, session_id) is not None:
                    raise SessionClosedError(f"session {session_id} is complete")
                raise NotFoundError(f"unknown session {session_id}")

            point = GeoPoint(body.lat, body.lon)  # validates the answer coordinates
            # Validate through the engine before persisting so a rejected
            # submission (duplicate index, bad index) leaves no event behind.
            challenge.submit_answer(
                session,
                challenge.Answer(body.question_index, point, self.clock()),
            )
            self.store.record(
                {
                    "op": "answer_submitted",
                    "account_id": account_id,
                    "session_id": session_id,
                    "question_index": body.question_index,
                    "lat": point.latitude_deg,
                    "lon": point.longitude_deg,
                    "at": utc_str(self.clock()),
                }
            )
            ack = {
                "recorded": True,
                "question_index": body.question_index,
                "session_id": session_id,
            }
            if acct.open_session is not None and acct.open_session.session_id == session_id:
                ack["answered_count"] = acct.open_session.answered_count
                ack["state"] = "open"
            else:
                record = self._find_completed(acct, session_id)
                ack["answered_count"] = len(record["per_question_correct"])
                ack["state"] = "complete"
                ack["decision"] = record["decision"]
            return ack

    def decision_view(self, account_id: str, session_id: str) -> dict:
        with self._lock(account_id):
            acct = self._existing_account(account_id)
            self._expire_if_idle(acct)
            session = acct.open_session
            if session is not None and session.session_id == session_id:
                return {"session_id": session_id, "decision": "pending"}
            record = self._find_completed(acct, session_id)
            if record is None:
                raise NotFoundError(f"unknown session {session_id}")
            return {
                "session_id": session_id,
                "decision": record["decision"],
                "reason": record["reason"],
                "score": record["score"],
                "per_question_correct": record["per_question_correct"],
            }

    def close(self, snapshot: bool = True) -> None:
        self.store.close(snapshot=snapshot)


def create_app(
    data_dir: str,
    config: CliConfig | None = None,
    clock: Callable[[], datetime] | None = None,
) -> FastAPI:
    service = ChallengeService(data_dir, config=config, clock=clock)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        service.close(snapshot=True)  # clean shutdown writes the snapshot

    app = FastAPI(title="geochallenge", docs_url=None, redoc_url=None, lifespan=lifespan)
    app.state.service = service

    @app.exception_handler(GeoChallengeError)
    async def domain_error_handler(_request: Request, exc: GeoChallengeError):
        status = _STATUS_BY_CODE.get(exc.code, 400)
        detail = {}
        if isinstance(exc, TraceParseError) and exc.row is not None:
            detail["row"] = exc.row
        if isinstance(exc, InsufficientLocationsError):
            detail["required"] = exc.required
            detail["available"] = exc.available
        if isinstance(exc, SessionConflictError) and exc.open_session_id:
            detail["open_session_id"] = exc.open_session_id
        return JSONResponse(
            status_code=status,
            content={"code": exc.code, "message": str(exc), "detail": detail},
        )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/accounts/{account_id}/traces")
    async def enroll(account_id: str, request: Request):
        return service.enroll(account_id, await request.body())

    @app.post("/accounts/{account_id}/sessions", status_code=201)
    def open_session(account_id: str):
        return service.open_session(account_id)

    @app.get("/accounts/{account_id}/sessions/{session_id}")
    def session_view(account_id: str, session_id: str):
        return service.session_view(account_id, session_id)

    @app.post("/accounts/{account_id}/sessions/{session_id}/answers")
    def submit_answer(account_id: str, session_id: str, body: AnswerBody):
        return service.submit_answer(account_id, session_id, body)

    @app.get("/accounts/{account_id}/sessions/{session_id}/decision")
    def decision(account_id: str, session_id: str):
        return service.decision_view(account_id, session_id)

    return app
