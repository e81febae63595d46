"""HTTP backend for the two-phase plan-authoring study.

Participants move through an example walkthrough and a main instance, each
with a free-text write step followed by a translation step over the
instance's grounded actions. Assisted sessions may fetch a pre-computed
plan suggestion and rate it. Every interaction is appended to a JSON-lines
event log that carries enough payload to recompute all verdicts offline
(see replay_log).
"""

from __future__ import annotations

import json
import random
import threading
import time
import uuid
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import nl
from .core import Domain, GroundAction, Plan, Problem, ground_all, validate
from .pddl import parse_domain, parse_problem
from .tasks import TestInstance, load_instances

EVENTS_FILENAME = "events.jsonl"
CONDITIONS = ("assisted", "unassisted")
PHASES = ("example", "main", "done")
SUB_PHASES = ("write", "translate")
NUM_TLX_SCALES = 6


@dataclass
class StudySession:
    session_id: str
    condition: str
    instance_id: str  # assigned main instance; the example is shared
    phase: str
    sub_phase: str | None
    created_at: float
    ended: bool = False
    tlx_load: float | None = None


@dataclass(frozen=True)
class StudyEvent:
    session_id: str
    seq: int
    ts: float
    kind: str
    payload: dict[str, Any]


@dataclass
class _StudyInstance:
    """Pool record unpacked into the pieces the endpoints serve."""

    instance_id: str
    domain: Domain
    problem: Problem
    templates: nl.TemplateSet
    description: str
    solution: str | None
    actions: list[GroundAction]


def _study_instance(record: TestInstance) -> _StudyInstance:
    payload = record.payload
    if payload.get("scoring_kind") not in ("validate", "validate_optimal"):
        raise ValueError(
            f"instance {record.id} is not a plan-authoring instance"
        )
    domain = parse_domain(payload["domain_pddl"])
    problem = parse_problem(payload["problem_pddl"], domain)
    if payload.get("templates") == "neutral":
        templates = nl.neutral_templates(domain)
    else:
        templates = nl.blocksworld_templates()
    description = nl.problem_to_nl(problem, templates)
    solution = None
    reference = payload.get("reference")
    if reference:
        lines = [
            line
            for line in reference.splitlines()
            if line.strip() and line.strip() != templates.plan_end_tag
        ]
        solution = "\n".join(lines)
    actions = ground_all(domain, problem.objects)
    return _StudyInstance(
        instance_id=record.id,
        domain=domain,
        problem=problem,
        templates=templates,
        description=description,
        solution=solution,
        actions=actions,
    )


def load_pool(pool_path: str | Path) -> list[_StudyInstance]:
    records = load_instances(pool_path)
    if len(records) < 2:
        raise ValueError("instance pool needs one example plus at least one main instance")
    return [_study_instance(r) for r in records]


def load_suggestions(path: str | Path | None) -> dict[str, str]:
    if path is None:
        return {}
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError("suggestions file must map instance id to suggestion text")
    return {str(k): str(v) for k, v in data.items()}


class _FreeformBody(BaseModel):
    text: str


class _TranslationBody(BaseModel):
    action_ids: list[str]


class _TlxBody(BaseModel):
    scales: list[float]


class _FeedbackBody(BaseModel):
    correct: bool


class _CreateBody(BaseModel):
    condition: str | None = None  # pins the condition; default alternates


class _State:
    def __init__(
        self,
        pool: list[_StudyInstance],
        suggestions: dict[str, str],
        log_path: Path,
        seed: int,
        reuse: bool,
    ) -> None:
        self.example = pool[0]
        self.main = {inst.instance_id: inst for inst in pool[1:]}
        self.main_order = [inst.instance_id for inst in pool[1:]]
        self.suggestions = suggestions
        self.log_path = log_path
        self.reuse = reuse
        self.rng = random.Random(seed)
        self.queue = self.rng.sample(self.main_order, len(self.main_order))
        self.sessions: dict[str, StudySession] = {}
        self.locks: dict[str, threading.Lock] = {}
        self.create_lock = threading.Lock()
        self.log_lock = threading.Lock()
        self.seq = 0
        self.session_count = 0

    def log(self, session_id: str, kind: str, payload: dict[str, Any]) -> None:
        with self.log_lock:
            self.seq += 1
            event = StudyEvent(
                session_id=session_id,
                seq=self.seq,
                ts=time.time(),
                kind=kind,
                payload=payload,
            )
            with self.log_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(asdict(event), sort_keys=True) + "\n")

    def create_session(self, condition: str | None) -> StudySession:
        with self.create_lock:
            if condition is None:
                condition = CONDITIONS[self.session_count % 2]
            elif condition not in CONDITIONS:
                raise HTTPException(status_code=422, detail=f"unknown condition {condition!r}")
            if self.queue:
                instance_id = self.queue.pop()
            elif self.reuse:
                instance_id = self.rng.choice(self.main_order)
            else:
                raise HTTPException(status_code=409, detail="instance pool exhausted")
            session = StudySession(
                session_id=uuid.uuid4().hex,
                condition=condition,
                instance_id=instance_id,
                phase="example",
                sub_phase="write",
                created_at=time.time(),
            )
            self.sessions[session.session_id] = session
            self.locks[session.session_id] = threading.Lock()
            self.session_count += 1
        self.log(
            session.session_id,
            "session_start",
            {
                "condition": session.condition,
                "instance_id": session.instance_id,
                "example_id": self.example.instance_id,
            },
        )
        return session

    def session(self, session_id: str) -> tuple[StudySession, threading.Lock]:
        session = self.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session, self.locks[session_id]

    def current_instance(self, session: StudySession) -> _StudyInstance:
        if session.phase == "example":
            return self.example
        return self.main[session.instance_id]


def _require(session: StudySession, *, phase: str | None = None, sub_phase: str | None = None) -> None:
    if session.ended:
        raise HTTPException(status_code=409, detail="session already ended")
    if phase is not None and session.phase != phase:
        raise HTTPException(
            status_code=409,
            detail=f"phase violation: expected {phase}, session is in {session.phase}",
        )
    if sub_phase is not None and session.sub_phase != sub_phase:
        raise HTTPException(
            status_code=409,
            detail=f"phase violation: expected {sub_phase} sub-phase, session is in {session.sub_phase}",
        )


def create_app(
    pool_path: str | Path,
    suggestions_path: str | Path | None = None,
    log_dir: str | Path = ".",
    seed: int = 0,
    reuse: bool = False,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    pool = load_pool(pool_path)
    suggestions = load_suggestions(suggestions_path)
    log_path = Path(log_dir) / EVENTS_FILENAME
    log_path.parent.mkdir(parents=True, exist_ok=True)
    state = _State(pool, suggestions, log_path, seed, reuse)

    app = FastAPI(title="plan study service")
    app.state.service = state

    @app.post("/session")
    def create_session(body: _CreateBody | None = None) -> dict[str, Any]:
        condition = body.condition if body is not None else None
        session = state.create_session(condition)
        return {
            "session_id": session.session_id,
            "condition": session.condition,
            "phase": session.phase,
            "sub_phase": session.sub_phase,
        }

    @app.get("/session/{session_id}/instance")
    def get_instance(session_id: str) -> dict[str, Any]:
        session, lock = state.session(session_id)
        with lock:
            if session.phase == "done":
                raise HTTPException(status_code=409, detail="phase violation: study phases complete")
            instance = state.current_instance(session)
            solution = instance.solution if session.phase == "example" else None
            return {
                "phase": session.phase,
                "sub_phase": session.sub_phase,
                "instance_id": instance.instance_id,
                "description": instance.description,
                "walkthrough": solution,
            }

    @app.get("/session/{session_id}/actions")
    def get_actions(session_id: str) -> dict[str, Any]:
        session, lock = state.session(session_id)
        with lock:
            if session.phase == "done":
                raise HTTPException(status_code=409, detail="phase violation: study phases complete")
            instance = state.current_instance(session)
            return {
                "instance_id": instance.instance_id,
                "actions": [
                    {"id": a.key, "text": nl.action_to_nl(a, instance.templates)}
                    for a in instance.actions
                ],
            }

    @app.get("/session/{session_id}/suggestion")
    def get_suggestion(session_id: str) -> dict[str, Any]:
        session, lock = state.session(session_id)
        with lock:
            if session.condition != "assisted":
                raise HTTPException(
                    status_code=409, detail="condition violation: suggestions are assisted-only"
                )
            if session.phase == "done":
                raise HTTPException(status_code=409, detail="phase violation: study phases complete")
            instance = state.current_instance(session)
            text = state.suggestions.get(instance.instance_id)
            if text is None:
                raise HTTPException(status_code=404, detail="suggestion unavailable")
            state.log(session_id, "suggestion_shown", {"instance_id": instance.instance_id})
            return {"instance_id": instance.instance_id, "suggestion": text}

    @app.post("/session/{session_id}/suggestion/feedback")
    def suggestion_feedback(session_id: str, body: _FeedbackBody) -> dict[str, Any]:
        session, lock = state.session(session_id)
        with lock:
            if session.condition != "assisted":
                raise HTTPException(
                    status_code=409, detail="condition violation: suggestions are assisted-only"
                )
            instance = state.current_instance(session)
            state.log(
                session_id,
                "suggestion_feedback",
                {"instance_id": instance.instance_id, "correct": body.correct},
            )
            return {"ok": True}

    @app.post("/session/{session_id}/plan/freeform")
    def submit_freeform(session_id: str, body: _FreeformBody) -> dict[str, Any]:
        session, lock = state.session(session_id)
        with lock:
            _require(session, sub_phase="write")
            instance = state.current_instance(session)
            state.log(
                session_id,
                "freeform_submitted",
                {"instance_id": instance.instance_id, "text": body.text},
            )
            session.sub_phase = "translate"
            return {"phase": session.phase, "sub_phase": session.sub_phase}

    @app.post("/session/{session_id}/plan/translation")
    def submit_translation(session_id: str, body: _TranslationBody) -> dict[str, Any]:
        session, lock = state.session(session_id)
        with lock:
            _require(session, sub_phase="translate")
            instance = state.current_instance(session)
            by_key = {a.key: a for a in instance.actions}
            steps = []
            for action_id in body.action_ids:
                action = by_key.get(action_id)
                if action is None:
                    raise HTTPException(
                        status_code=400, detail=f"unknown action id {action_id!r}"
                    )
                steps.append(action)
            report = validate(instance.problem, Plan(tuple(steps)))
            state.log(
                session_id,
                "translation_submitted",
                {
                    "instance_id": instance.instance_id,
                    "action_ids": list(body.action_ids),
                    "valid": report.valid,
                    "failure_step": report.failure_step,
                    "missing_preconditions": sorted(str(a) for a in report.missing_preconditions),
                    "unmet_goals": sorted(str(a) for a in report.unmet_goals),
                },
            )
            if session.phase == "example":
                session.phase, session.sub_phase = "main", "write"
            else:
                session.phase, session.sub_phase = "done", None
            return {
                "valid": report.valid,
                "failure_step": report.failure_step,
                "missing_preconditions": sorted(str(a) for a in report.missing_preconditions),
                "unmet_goals": sorted(str(a) for a in report.unmet_goals),
                "summary": report.summary(),
                "phase": session.phase,
                "sub_phase": session.sub_phase,
            }

    @app.post("/session/{session_id}/tlx")
    def submit_tlx(session_id: str, body: _TlxBody) -> dict[str, Any]:
        session, lock = state.session(session_id)
        with lock:
            _require(session, phase="done")
            if len(body.scales) != NUM_TLX_SCALES:
                raise HTTPException(
                    status_code=400, detail=f"expected {NUM_TLX_SCALES} scale values"
                )
            if any(not 0 <= v <= 100 for v in body.scales):
                raise HTTPException(status_code=400, detail="scale values must lie in [0, 100]")
            load = sum(body.scales) / NUM_TLX_SCALES
            session.tlx_load = load
            state.log(
                session_id,
                "tlx_submitted",
                {"scales": list(body.scales), "load": load},
            )
            return {"load": load}

    @app.post("/session/{session_id}/end")
    def end_session(session_id: str) -> dict[str, Any]:
        session, lock = state.session(session_id)
        with lock:
            if session.ended:
                raise HTTPException(status_code=409, detail="session already ended")
            session.ended = True
            state.log(session_id, "session_end", {"phase": session.phase})
            return {"ok": True}

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def replay_log(log_path: str | Path, pool_path: str | Path) -> dict[str, Any]:
    """Recompute every verdict and TLX load from the event log alone and
    compare against the logged values. Also checks condition isolation."""
    pool = load_pool(pool_path)
    instances = {inst.instance_id: inst for inst in pool}
    conditions: dict[str, str] = {}
    mismatches: list[str] = []
    events = 0
    checked = 0
    with Path(log_path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            event = json.loads(line)
            events += 1
            kind = event["kind"]
            payload = event["payload"]
            sid = event["session_id"]
            if kind == "session_start":
                conditions[sid] = payload["condition"]
            elif kind == "suggestion_shown":
                if conditions.get(sid) != "assisted":
                    mismatches.append(
                        f"seq {event['seq']}: suggestion shown to non-assisted session {sid}"
                    )
            elif kind == "translation_submitted":
                checked += 1
                instance = instances[payload["instance_id"]]
                by_key = {a.key: a for a in instance.actions}
                plan = Plan(tuple(by_key[k] for k in payload["action_ids"]))
                report = validate(instance.problem, plan)
                recomputed = {
                    "valid": report.valid,
                    "failure_step": report.failure_step,
                    "missing_preconditions": sorted(str(a) for a in report.missing_preconditions),
                    "unmet_goals": sorted(str(a) for a in report.unmet_goals),
                }
                logged = {k: payload[k] for k in recomputed}
                if recomputed != logged:
                    mismatches.append(
                        f"seq {event['seq']}: verdict mismatch, logged {logged}, replayed {recomputed}"
                    )
            elif kind == "tlx_submitted":
                checked += 1
                load = sum(payload["scales"]) / NUM_TLX_SCALES
                if abs(load - payload["load"]) > 1e-12:
                    mismatches.append(f"seq {event['seq']}: TLX load mismatch")
    return {"events": events, "checked": checked, "mismatches": mismatches}
