"""HTTP service: sessions, QA turns, question bank, events, static frontend.

Turns are long-running (the live pipeline takes on the order of a minute),
so `ask` returns immediately and clients poll the turn resource; a cancel
endpoint stops an in-flight turn at the next stage boundary. Condition
isolation is enforced at the API: baseline sessions never receive
provenance payloads and provenance sessions never receive the baseline
source panel.
"""

from __future__ import annotations

import json
import logging
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import llm
from .answers import AnswerRequest, TaggedAnswer, generate_answer
from .corpus import ClaimCorpus
from .embedding import EmbeddingProvider, cosine
from .errors import ClaimTraceError, TurnCancelled
from .matching import PipelineConfig
from .pipeline import run_qa_turn

log = logging.getLogger(__name__)

CONDITIONS = ("provenance", "baseline")


def _error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


@dataclass(frozen=True)
class TaskFixture:
    task_id: str
    title: str
    description: str
    initial_draft: str


@dataclass(frozen=True)
class QuestionBankEntry:
    question_id: str
    text: str
    task_id: str
    category: dict
    pregenerated: dict | None = None

    def public_view(self) -> dict:
        return {
            "question_id": self.question_id,
            "text": self.text,
            "task_id": self.task_id,
            "category": self.category,
            "pregenerated": self.pregenerated is not None,
        }


def load_tasks(path: str | Path) -> dict[str, TaskFixture]:
    docs = json.loads(Path(path).read_text(encoding="utf-8"))
    tasks = {}
    for doc in docs:
        task = TaskFixture(**doc)
        tasks[task.task_id] = task
    return tasks


def load_question_bank(path: str | Path) -> list[QuestionBankEntry]:
    docs = json.loads(Path(path).read_text(encoding="utf-8"))
    entries = []
    for doc in docs:
        entry = QuestionBankEntry(
            question_id=doc["question_id"],
            text=doc["text"],
            task_id=doc["task_id"],
            category=doc.get("category", {}),
            pregenerated=doc.get("pregenerated"),
        )
        if entry.pregenerated is not None:
            missing = {"answer", "answer_claims", "report"} - set(entry.pregenerated)
            if missing:
                raise ClaimTraceError(
                    f"question {entry.question_id!r}: pregenerated artifacts missing {sorted(missing)}"
                )
        entries.append(entry)
    return entries


@dataclass
class Turn:
    index: int
    question: str
    status: str = "pending"  # pending | running | complete | failed | cancelled
    payload: dict | None = None
    error: str | None = None
    cancel_event: threading.Event = field(default_factory=threading.Event)


@dataclass
class Session:
    session_id: str
    condition: str
    task_id: str
    created_at: float
    editor_versions: list[str] = field(default_factory=list)
    turns: list[Turn] = field(default_factory=list)
    last_event_ts: int = 0
    in_flight: bool = False

    def view(self, task: TaskFixture) -> dict:
        return {
            "session_id": self.session_id,
            "condition": self.condition,
            "task_id": self.task_id,
            "created_at": self.created_at,
            "task": {
                "title": task.title,
                "description": task.description,
            },
            "editor": {
                "version_count": len(self.editor_versions),
                "current_version": len(self.editor_versions) - 1,
                "text": self.editor_versions[-1],
            },
            "turns": [{"index": t.index, "question": t.question, "status": t.status} for t in self.turns],
        }


class SessionLog:
    """Append-only JSONL event log plus per-turn artifact files."""

    def __init__(self, root: Path, session_id: str):
        self.dir = root / session_id
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / "turns").mkdir(exist_ok=True)
        self._lock = threading.Lock()

    def append_event(self, event: dict) -> None:
        with self._lock:
            with open(self.dir / "events.jsonl", "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")

    def write_turn(self, index: int, payload: dict) -> None:
        (self.dir / "turns" / f"{index}.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


def replay_session(log_root: str | Path, session_id: str) -> dict:
    """Rebuild a session's turn sequence and editor versions from its log."""
    root = Path(log_root) / session_id
    events = []
    events_path = root / "events.jsonl"
    if events_path.exists():
        for line in events_path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                events.append(json.loads(line))
    editor_versions: list[str] = []
    turns: list[dict] = []
    condition = None
    task_id = None
    for event in events:
        kind = event["kind"]
        payload = event.get("payload", {})
        if kind == "session_created":
            condition = payload["condition"]
            task_id = payload["task_id"]
            editor_versions.append(payload["initial_draft"])
        elif kind == "editor_saved":
            editor_versions.append(payload["text"])
        elif kind == "question_sent":
            turns.append({"index": payload["turn_index"], "question": payload["question"],
                          "status": "pending"})
        elif kind == "turn_finished":
            for t in turns:
                if t["index"] == payload["turn_index"]:
                    t["status"] = payload["status"]
    for t in turns:
        artifact = root / "turns" / f"{t['index']}.json"
        if artifact.exists():
            t["payload"] = json.loads(artifact.read_text(encoding="utf-8"))
    return {
        "session_id": session_id,
        "condition": condition,
        "task_id": task_id,
        "editor_versions": editor_versions,
        "turns": turns,
    }


def build_source_view(
    answer: TaggedAnswer | dict,
    corpus: ClaimCorpus,
    embedder: EmbeddingProvider,
    top_sentences: int = 3,
) -> list[dict]:
    """Baseline condition payload: verbatim source paragraphs per sentence.

    For each answer sentence, each cited paper contributes the paragraphs
    containing its top 3 sentences by similarity, grouped by citation.
    """
    if isinstance(answer, TaggedAnswer):
        sentences = [
            {"text": span.text, "citations": list(keys)}
            for span, keys in answer.sentence_citations
        ]
    else:
        sentences = [
            {"text": s["text"], "citations": list(s.get("citations", []))}
            for s in answer["sentences"]
        ]
    view = []
    for idx, sentence in enumerate(sentences):
        entry = {"sentence_index": idx, "citations": sentence["citations"], "sources": []}
        if sentence["citations"]:
            sent_vec = embedder.embed(sentence["text"])
            for key in sentence["citations"]:
                paper = corpus.paper_by_citation(key)
                if paper is None:
                    continue
                scored = []
                for sec_name, p_idx, _s_idx, para, span in paper.iter_sentences():
                    scored.append(((sec_name, p_idx, para), cosine(sent_vec, embedder.embed(span.text))))
                scored.sort(key=lambda pair: -pair[1])
                chosen: list[tuple[str, int, Any]] = []
                for (sec_name, p_idx, para), _sim in scored[:top_sentences]:
                    if (sec_name, p_idx) not in [(s, p) for s, p, _ in chosen]:
                        chosen.append((sec_name, p_idx, para))
                by_section: dict[str, list[tuple[int, Any]]] = {}
                for sec_name, p_idx, para in chosen:
                    by_section.setdefault(sec_name, []).append((p_idx, para))
                entry["sources"].append({
                    "citation_key": key,
                    "paper_title": paper.title,
                    "sections": [
                        {
                            "section": sec_name,
                            "paragraphs": [para.text for _p, para in sorted(items, key=lambda x: x[0])],
                        }
                        for sec_name, items in by_section.items()
                    ],
                })
        view.append(entry)
    return view


@dataclass
class ServerContext:
    corpus: ClaimCorpus
    provider: llm.LLMProvider
    embedder: EmbeddingProvider
    cfg: PipelineConfig
    tasks: dict[str, TaskFixture]
    question_bank: list[QuestionBankEntry]
    log_root: Path
    retry: llm.RetryPolicy = field(default_factory=llm.RetryPolicy)
    default_condition: str = "provenance"
    turn_budget_seconds: float = 300.0
    turn_thread_join: bool = False  # run turns synchronously (tests)


def create_app(ctx: ServerContext, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="claimtrace server")
    sessions: dict[str, Session] = {}
    logs: dict[str, SessionLog] = {}
    store_lock = threading.Lock()
    bank_by_id = {e.question_id: e for e in ctx.question_bank}

    def now_ms() -> int:
        return int(time.time() * 1000)

    def get_session(session_id: str) -> Session:
        with store_lock:
            session = sessions.get(session_id)
        if session is None:
            raise _error(404, "SESSION_NOT_FOUND", f"unknown session {session_id!r}")
        return session

    def log_server_event(session: Session, kind: str, payload: dict) -> None:
        ts = max(now_ms(), session.last_event_ts)
        session.last_event_ts = ts
        logs[session.session_id].append_event(
            {"session_id": session.session_id, "timestamp": ts, "kind": kind, "payload": payload}
        )

    @app.exception_handler(HTTPException)
    async def http_error_handler(_request, exc: HTTPException):
        detail = exc.detail if isinstance(exc.detail, dict) else {"code": "ERROR", "message": str(exc.detail)}
        return JSONResponse(status_code=exc.status_code, content={"error": detail})

    # ----------------------------------------------------------------- sessions

    @app.post("/api/sessions", status_code=201)
    def create_session(body: dict):
        condition = body.get("condition") or ctx.default_condition
        task_id = body.get("task_id")
        if condition not in CONDITIONS:
            raise _error(400, "BAD_CONDITION", f"condition must be one of {CONDITIONS}")
        task = ctx.tasks.get(task_id)
        if task is None:
            raise _error(404, "TASK_NOT_FOUND", f"unknown task {task_id!r}")
        session = Session(
            session_id=uuid.uuid4().hex[:12],
            condition=condition,
            task_id=task_id,
            created_at=time.time(),
            editor_versions=[task.initial_draft],
        )
        with store_lock:
            sessions[session.session_id] = session
            logs[session.session_id] = SessionLog(ctx.log_root, session.session_id)
        log_server_event(session, "session_created", {
            "condition": condition, "task_id": task_id, "initial_draft": task.initial_draft,
        })
        return session.view(task)

    @app.get("/api/sessions/{session_id}")
    def get_session_view(session_id: str):
        session = get_session(session_id)
        return session.view(ctx.tasks[session.task_id])

    # --------------------------------------------------------------------- ask

    def build_turn_payload(session: Session, turn: Turn, result_kind: str, **parts) -> dict:
        """Assemble the condition-appropriate turn payload."""
        payload: dict[str, Any] = {"question": turn.question, "kind": result_kind}
        payload.update(parts)
        return payload

    def run_provenance_turn(session: Session, turn: Turn) -> dict:
        request = AnswerRequest(
            question=turn.question,
            task_description=ctx.tasks[session.task_id].description,
            editor_text=session.editor_versions[-1],
            history=tuple(
                (t.question, (t.payload or {}).get("answer", {}).get("clean_text", ""))
                for t in session.turns[: turn.index]
                if t.status == "complete"
            ),
            condition=session.condition,
        )
        result = run_qa_turn(
            turn_id=f"{session.session_id}:{turn.index}",
            request=request,
            corpus=ctx.corpus,
            cfg=ctx.cfg,
            provider=ctx.provider,
            embedder=ctx.embedder,
            retry=ctx.retry,
            should_cancel=turn.cancel_event.is_set,
            budget_seconds=ctx.turn_budget_seconds,
        )
        return build_turn_payload(
            session, turn, "provenance",
            answer=result.answer.to_dict(),
            answer_claims=[c.to_dict() for c in result.answer_claims],
            report=result.report.to_dict(),
        )

    def run_baseline_turn(session: Session, turn: Turn) -> dict:
        request = AnswerRequest(
            question=turn.question,
            task_description=ctx.tasks[session.task_id].description,
            editor_text=session.editor_versions[-1],
            history=tuple(
                (t.question, (t.payload or {}).get("answer", {}).get("clean_text", ""))
                for t in session.turns[: turn.index]
                if t.status == "complete"
            ),
            condition=session.condition,
        )
        if turn.cancel_event.is_set():
            raise TurnCancelled("cancelled before answer generation")
        answer = generate_answer(request, ctx.corpus, ctx.provider, ctx.retry)
        if turn.cancel_event.is_set():
            raise TurnCancelled("cancelled before source lookup")
        source_view = build_source_view(answer, ctx.corpus, ctx.embedder)
        return build_turn_payload(
            session, turn, "baseline",
            answer=answer.to_dict(),
            source_view=source_view,
        )

    def pregenerated_payload(session: Session, turn: Turn, entry: QuestionBankEntry) -> dict:
        arts = entry.pregenerated or {}
        if session.condition == "provenance":
            return build_turn_payload(
                session, turn, "provenance",
                answer=arts["answer"],
                answer_claims=arts["answer_claims"],
                report=arts["report"],
                pregenerated=True,
            )
        source_view = build_source_view(arts["answer"], ctx.corpus, ctx.embedder)
        return build_turn_payload(
            session, turn, "baseline",
            answer=arts["answer"],
            source_view=source_view,
            pregenerated=True,
        )

    def finish_turn(session: Session, turn: Turn, status: str,
                    payload: dict | None = None, error: str | None = None) -> None:
        turn.status = status
        turn.payload = payload
        turn.error = error
        session.in_flight = False
        if payload is not None:
            logs[session.session_id].write_turn(turn.index, payload)
        log_server_event(session, "turn_finished", {"turn_index": turn.index, "status": status})

    def execute_turn(session: Session, turn: Turn) -> None:
        try:
            if session.condition == "provenance":
                payload = run_provenance_turn(session, turn)
            else:
                payload = run_baseline_turn(session, turn)
            finish_turn(session, turn, "complete", payload=payload)
        except TurnCancelled:
            finish_turn(session, turn, "cancelled")
        except ClaimTraceError as exc:
            log.warning("turn %s:%d failed: %s", session.session_id, turn.index, exc)
            finish_turn(session, turn, "failed", error=str(exc))
        except Exception as exc:  # noqa: BLE001 - a turn crash must not kill the worker
            log.exception("turn %s:%d crashed", session.session_id, turn.index)
            finish_turn(session, turn, "failed", error=f"internal error: {exc}")

    @app.post("/api/sessions/{session_id}/ask", status_code=202)
    def ask(session_id: str, body: dict):
        session = get_session(session_id)
        question_id = body.get("question_id")
        text = body.get("text")
        entry = None
        if question_id is not None:
            entry = bank_by_id.get(question_id)
            if entry is None:
                raise _error(404, "QUESTION_NOT_FOUND", f"unknown question {question_id!r}")
            if entry.task_id != session.task_id:
                raise _error(400, "QUESTION_TASK_MISMATCH",
                             f"question {question_id!r} belongs to task {entry.task_id!r}")
            text = entry.text
        if not text or not str(text).strip():
            raise _error(400, "EMPTY_QUESTION", "provide 'text' or 'question_id'")

        with store_lock:
            if session.in_flight:
                raise _error(409, "TURN_IN_FLIGHT", "another turn is already running")
            session.in_flight = True
            turn = Turn(index=len(session.turns), question=str(text))
            session.turns.append(turn)
        log_server_event(session, "question_sent", {
            "turn_index": turn.index, "question": turn.question,
            "question_id": question_id,
        })

        if entry is not None and entry.pregenerated is not None:
            try:
                payload = pregenerated_payload(session, turn, entry)
            except Exception as exc:  # noqa: BLE001 - must release the in-flight slot
                log.exception("pregenerated turn %s:%d failed", session.session_id, turn.index)
                finish_turn(session, turn, "failed", error=f"pregenerated artifacts invalid: {exc}")
                return {"turn_index": turn.index, "status": turn.status}
            finish_turn(session, turn, "complete", payload=payload)
            return {"turn_index": turn.index, "status": turn.status}

        turn.status = "running"
        worker = threading.Thread(target=execute_turn, args=(session, turn), daemon=True)
        worker.start()
        if ctx.turn_thread_join:
            worker.join()
        return {"turn_index": turn.index, "status": turn.status}

    @app.get("/api/sessions/{session_id}/turns/{index}")
    def get_turn(session_id: str, index: int):
        session = get_session(session_id)
        if not 0 <= index < len(session.turns):
            raise _error(404, "TURN_NOT_FOUND", f"no turn {index}")
        turn = session.turns[index]
        view: dict[str, Any] = {"index": turn.index, "question": turn.question, "status": turn.status}
        if turn.status == "complete":
            view["result"] = turn.payload
        if turn.error:
            view["error"] = turn.error
        return view

    @app.post("/api/sessions/{session_id}/turns/{index}/cancel")
    def cancel_turn(session_id: str, index: int):
        session = get_session(session_id)
        if not 0 <= index < len(session.turns):
            raise _error(404, "TURN_NOT_FOUND", f"no turn {index}")
        turn = session.turns[index]
        if turn.status in ("complete", "failed", "cancelled"):
            return {"turn_index": index, "status": turn.status}
        turn.cancel_event.set()
        return {"turn_index": index, "status": "cancelling"}

    # ------------------------------------------------------------------ editor

    @app.post("/api/sessions/{session_id}/editor")
    def save_editor(session_id: str, body: dict):
        session = get_session(session_id)
        text = body.get("text")
        if not isinstance(text, str):
            raise _error(400, "BAD_EDITOR_TEXT", "'text' must be a string")
        session.editor_versions.append(text)
        version_id = len(session.editor_versions) - 1
        log_server_event(session, "editor_saved", {"version_id": version_id, "text": text})
        return {"version_id": version_id}

    # ------------------------------------------------------------------ events

    @app.post("/api/events")
    def log_event(body: dict):
        session = get_session(str(body.get("session_id")))
        kind = body.get("kind")
        timestamp = body.get("timestamp")
        if not isinstance(kind, str) or not kind:
            raise _error(400, "BAD_EVENT_KIND", "'kind' must be a non-empty string")
        if not isinstance(timestamp, int):
            raise _error(400, "BAD_TIMESTAMP", "'timestamp' must be an integer (ms epoch)")
        if timestamp < session.last_event_ts:
            raise _error(400, "OUT_OF_ORDER_EVENT",
                         f"timestamp {timestamp} precedes session clock {session.last_event_ts}")
        session.last_event_ts = timestamp
        logs[session.session_id].append_event({
            "session_id": session.session_id,
            "timestamp": timestamp,
            "kind": kind,
            "payload": body.get("payload", {}),
        })
        return {"ok": True}

    # ----------------------------------------------------------- question bank

    @app.get("/api/question-bank")
    def question_bank(task: str | None = Query(default=None)):
        entries = ctx.question_bank
        if task is not None:
            entries = [e for e in entries if e.task_id == task]
        return {"questions": [e.public_view() for e in entries]}

    # ------------------------------------------------------------------ corpus

    @app.get("/api/corpus/claims/{claim_id}")
    def get_claim(claim_id: str):
        try:
            claim = ctx.corpus.claim(claim_id)
        except KeyError:
            raise _error(404, "CLAIM_NOT_FOUND", f"unknown claim {claim_id!r}") from None
        return {
            "claim_id": claim.claim_id,
            "claim_text": claim.claim_text,
            "citation_key": claim.citation_key,
            "section_name": claim.section_name,
            "evidence": [
                {
                    "core_text": ev.core_text,
                    "context_text": ev.context_text,
                    "similarity": ev.similarity,
                    "location": {
                        "section": ev.location.section,
                        "paragraph": ev.location.paragraph,
                        "sentence": ev.location.sentence,
                    },
                }
                for ev in claim.evidence
            ],
        }

    @app.get("/api/papers/{paper_id}")
    def get_paper(paper_id: str):
        paper = ctx.corpus.papers.get(paper_id)
        if paper is None:
            raise _error(404, "PAPER_NOT_FOUND", f"unknown paper {paper_id!r}")
        return {
            "paper_id": paper.paper_id,
            "title": paper.title,
            "citation_key": paper.citation_key,
            "sections": [
                {"name": s.name, "paragraphs": [p.text for p in s.paragraphs]}
                for s in paper.sections
            ],
        }

    @app.get("/api/papers")
    def list_papers():
        return {
            "papers": [
                {"paper_id": p.paper_id, "title": p.title, "citation_key": p.citation_key}
                for p in ctx.corpus.papers.values()
            ]
        }

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="frontend")

    return app
