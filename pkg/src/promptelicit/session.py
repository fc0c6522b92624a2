"""Durable interactive sessions over the elicitation engine.

A session owns one specification, at most one active query, a prompt
history, and an append-only event log restricted to the five user-action
types. Every mutation appends exactly one event and rewrites the state
snapshot, so a crash can always resume from disk and a recorded session
can be replayed against its request journal and byte-compared.
"""

from __future__ import annotations

import json
import logging
import threading
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

from .engine import Budget, ElicitationEngine
from .errors import (OracleError, RenderError, ReplayMismatch,
                     RevisionConflict, SchemaError, WrongState)
from .intent import (FeatureRequirement, Origin, Specification,
                     delete_requirement, initialize_specification,
                     update_specification)
from .matching import normalize_value
from .journal import Journal, canonical_json, read_journal
from .oracles import (DemoOracle, JournalReplayBackend, OracleBackend,
                      RenderBackend, ScriptedBackend, ScriptedRenderer)
from .queries import Answer, CandidateQuery

log = logging.getLogger(__name__)


class SessionStatus(str, Enum):
    IDLE = "idle"
    ELICITING = "eliciting"
    AWAITING_ANSWER = "awaiting_answer"
    GENERATING = "generating"
    CLOSED = "closed"


class EventType(str, Enum):
    SELECT_ANSWER_OPTION = "select_answer_option"
    PROVIDE_OTHER_ANSWER = "provide_other_answer"
    GENERATE_PROMPT = "generate_prompt"
    ADD_REQUIREMENT = "add_requirement"
    MODIFY_REQUIREMENT = "modify_requirement"


@dataclass(frozen=True)
class InteractionEvent:
    type: EventType
    payload: dict
    seq: int
    timestamp: float

    def to_record(self) -> dict:
        return {"type": self.type.value, "payload": self.payload,
                "seq": self.seq, "timestamp": self.timestamp}


@dataclass
class RequirementEdit:
    """One add/modify/delete instruction for the requirements panel."""

    op: str  # add | modify | delete
    feature: str
    value: str | None = None

    def __post_init__(self):
        if self.op not in ("add", "modify", "delete"):
            raise ValueError(f"unknown edit op {self.op!r}")
        if self.op != "delete" and not (self.value or "").strip():
            raise ValueError(f"edit op {self.op!r} requires a value")


class Session:
    """Single-writer interactive session; all mutations serialize on a lock."""

    def __init__(self, session_id: str, initial_prompt: str,
                 oracle: OracleBackend, renderer: RenderBackend,
                 budget: Budget, seed: int, journal: Journal,
                 directory: Path | None = None):
        self.session_id = session_id
        self.initial_prompt = initial_prompt
        self.budget = budget
        self.seed = seed
        self.journal = journal
        self.directory = directory
        self.engine = ElicitationEngine(oracle, renderer, budget, seed=seed)
        self.spec = Specification()
        self.active_query: CandidateQuery | None = None
        self.active_entropy: float | None = None
        self.active_eaug: float | None = None
        self.status = SessionStatus.IDLE
        self.events: list[InteractionEvent] = []
        self.prompts: list[dict] = []
        self.queries: list[dict] = []  # history of asked queries, derived state
        self.error: str | None = None
        self.created_at = time.time()
        self._lock = threading.RLock()

    # -- lifecycle ----------------------------------------------------------

    @classmethod
    def create(cls, session_id: str, initial_prompt: str, oracle: OracleBackend,
               renderer: RenderBackend, budget: Budget, seed: int,
               journal: Journal, directory: Path | None = None) -> "Session":
        session = cls(session_id, initial_prompt, oracle, renderer, budget,
                      seed, journal, directory)
        try:
            session.spec = initialize_specification(initial_prompt, oracle)
        except OracleError as exc:
            # keep the session alive: a theme-only spec plus a noted error
            session.spec = Specification(
                requirements=(FeatureRequirement("theme", normalize_value(initial_prompt),
                                                 Origin.INITIAL_PROMPT, 1),),
                revision=1)
            session.error = f"feature extraction failed: {exc}"
            session.status = SessionStatus.IDLE
        if session.error is None:
            session._advance_to_next_query()
        session._write_meta()
        session._persist()
        return session

    @property
    def revision(self) -> int:
        """Optimistic-concurrency token: the number of logged events."""
        return len(self.events)

    def _advance_to_next_query(self) -> None:
        """Prepare the next query; sets awaiting_answer or idle."""
        self.status = SessionStatus.ELICITING
        try:
            prepared = self.engine.prepare_query(self.spec)
        except (OracleError, SchemaError) as exc:
            self.error = f"query preparation failed: {exc}"
            self.active_query = None
            self.active_entropy = self.active_eaug = None
            self.status = SessionStatus.IDLE
            return
        if prepared is None:
            self.active_query = None
            self.active_entropy = self.active_eaug = None
            self.status = SessionStatus.IDLE
            return
        self.active_query = prepared.query
        self.active_entropy = prepared.entropy
        self.active_eaug = prepared.eaug
        self.queries.append({"feature": prepared.query.feature,
                             "entropy": prepared.entropy, "eaug": prepared.eaug})
        self.status = SessionStatus.AWAITING_ANSWER

    def _append_event(self, type_: EventType, payload: dict) -> None:
        event = InteractionEvent(type=type_, payload=payload,
                                 seq=len(self.events) + 1, timestamp=time.time())
        self.events.append(event)
        if self.directory is not None:
            with (self.directory / "events.jsonl").open("a", encoding="utf-8") as fh:
                fh.write(canonical_json(event.to_record()) + "\n")

    def _check_revision(self, expected: int | None) -> None:
        if expected is not None and expected != self.revision:
            raise RevisionConflict(
                f"session revision is {self.revision}, request expected {expected}")

    def _check_open(self) -> None:
        if self.status is SessionStatus.CLOSED:
            raise WrongState("session is closed")

    # -- mutations ------------------------------------------------------------

    def answer_active_query(self, answer: Answer,
                            expected_revision: int | None = None) -> None:
        with self._lock:
            self._check_open()
            self._check_revision(expected_revision)
            if self.status is not SessionStatus.AWAITING_ANSWER or self.active_query is None:
                raise WrongState(f"cannot answer in status {self.status.value}")
            query = self.active_query
            self.spec = self.engine.apply_answer(self.spec, query, answer)
            if answer.option_index is not None:
                self._append_event(EventType.SELECT_ANSWER_OPTION, {
                    "option_index": answer.option_index,
                    "feature": query.feature,
                    "value": query.options[answer.option_index].label,
                })
            else:
                self._append_event(EventType.PROVIDE_OTHER_ANSWER, {
                    "other_text": answer.other_text,
                    "feature": query.feature,
                })
            self._advance_to_next_query()
            self._persist()

    def apply_edit(self, edit: RequirementEdit,
                   expected_revision: int | None = None) -> None:
        with self._lock:
            self._check_open()
            self._check_revision(expected_revision)
            if edit.op == "add":
                self.spec = update_specification(self.spec, edit.feature,
                                                 edit.value or "", Origin.MANUAL_ADD)
                self._append_event(EventType.ADD_REQUIREMENT,
                                   {"feature": edit.feature, "value": edit.value})
            elif edit.op == "modify":
                self.spec = update_specification(self.spec, edit.feature,
                                                 edit.value or "", Origin.MANUAL_EDIT)
                self._append_event(EventType.MODIFY_REQUIREMENT,
                                   {"feature": edit.feature, "value": edit.value})
            else:
                try:
                    self.spec = delete_requirement(self.spec, edit.feature)
                except KeyError as exc:
                    raise ValueError(str(exc)) from exc
                self._append_event(EventType.MODIFY_REQUIREMENT,
                                   {"feature": edit.feature, "delete": True})
            self._refresh_query_after_edit()
            self._persist()

    def _refresh_query_after_edit(self) -> None:
        """Keep the active query consistent with the edited specification."""
        if self.status is SessionStatus.AWAITING_ANSWER:
            if self.active_query is not None and self.spec.has_feature(self.active_query.feature):
                self._advance_to_next_query()
        elif self.status is SessionStatus.IDLE:
            # an edit (e.g. a delete) may have re-opened the feature space
            self._advance_to_next_query()

    def generate(self, expected_revision: int | None = None) -> dict:
        with self._lock:
            self._check_open()
            self._check_revision(expected_revision)
            if self.status not in (SessionStatus.AWAITING_ANSWER, SessionStatus.IDLE):
                raise WrongState(f"cannot generate in status {self.status.value}")
            if not self.spec.requirements:
                raise ValueError("cannot generate from an empty specification")
            prior = self.status
            self.status = SessionStatus.GENERATING
            try:
                prompt = self.engine.build_prompt(self.spec)
                handle: str | None = None
                try:
                    handle = self.engine.render_prompt(prompt.text,
                                                       f"gen-{len(self.prompts) + 1}")
                except RenderError as exc:
                    self.error = f"render failed: {exc}"
                entry = {"text": prompt.text, "source_revision": prompt.source_revision,
                         "image_handle": handle, "coverage": list(prompt.coverage)}
                self.prompts.append(entry)
                self._append_event(EventType.GENERATE_PROMPT,
                                   {"text": prompt.text, "image_handle": handle})
            finally:
                if prior is SessionStatus.AWAITING_ANSWER and self.active_query is not None:
                    self.status = SessionStatus.AWAITING_ANSWER
                else:
                    self._advance_to_next_query()
            self._persist()
            return entry

    def close(self) -> None:
        with self._lock:
            self.status = SessionStatus.CLOSED
            self.active_query = None
            self._persist()

    # -- views ---------------------------------------------------------------

    def snapshot(self) -> dict:
        """The client-facing state view; also the persisted snapshot body."""
        with self._lock:
            return {
                "session_id": self.session_id,
                "initial_prompt": self.initial_prompt,
                "revision": self.revision,
                "status": self.status.value,
                "specification": self.spec.to_record(),
                "active_query": self.active_query.to_record() if self.active_query else None,
                "active_entropy": self.active_entropy,
                "active_eaug": self.active_eaug,
                "prompts": list(self.prompts),
                "queries": list(self.queries),
                "error": self.error,
                "seed": self.seed,
                "engine": self.engine.snapshot_state(),
                "budget": self.budget.to_record(),
            }

    def essence(self) -> str:
        """Canonical record of everything replay must reproduce exactly."""
        with self._lock:
            return canonical_json(essence_from_snapshot(self.snapshot()))

    # -- persistence -----------------------------------------------------------

    def _write_meta(self) -> None:
        if self.directory is None:
            return
        meta = {"session_id": self.session_id, "initial_prompt": self.initial_prompt,
                "created_at": self.created_at, "seed": self.seed,
                "budget": self.budget.to_record()}
        (self.directory / "meta.json").write_text(canonical_json(meta) + "\n",
                                                  encoding="utf-8")

    def _persist(self) -> None:
        if self.directory is None:
            return
        snapshot = self.snapshot()
        tmp = self.directory / "state.json.tmp"
        tmp.write_text(canonical_json(snapshot) + "\n", encoding="utf-8")
        tmp.replace(self.directory / "state.json")


def essence_from_snapshot(snapshot: Mapping) -> dict:
    """Project a snapshot onto the replay-comparable core."""
    return {
        "specification": snapshot["specification"],
        "prompts": [{"text": p["text"], "image_handle": p["image_handle"],
                     "source_revision": p["source_revision"]} for p in snapshot["prompts"]],
        "queries": snapshot["queries"],
    }


class SessionStore:
    """Creates, caches, resumes, and closes sessions under one root directory."""

    def __init__(self, root: str | Path | None, budget: Budget | None = None,
                 seed: int = 0, backend_factory=None):
        self.root = Path(root) if root is not None else None
        self.budget = budget or Budget()
        self.seed = seed
        # backend_factory(session_id, journal, media_dir) -> (oracle, renderer)
        self.backend_factory = backend_factory or self._scripted_factory
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def _scripted_factory(self, session_id: str, journal: Journal,
                          media_dir: Path | None) -> tuple[OracleBackend, RenderBackend]:
        oracle = ScriptedBackend(default_provider=DemoOracle(seed=self.seed),
                                 journal=journal, seed=self.seed)
        renderer = ScriptedRenderer(media_dir=media_dir,
                                    handle_prefix=f"{session_id}/", journal=journal)
        return oracle, renderer

    def _session_dir(self, session_id: str) -> Path | None:
        if self.root is None:
            return None
        directory = self.root / session_id
        (directory / "media").mkdir(parents=True, exist_ok=True)
        return directory

    def create(self, initial_prompt: str, session_id: str | None = None) -> Session:
        session_id = session_id or uuid.uuid4().hex[:12]
        directory = self._session_dir(session_id)
        journal = Journal(directory / "journal.jsonl" if directory else None)
        media_dir = directory / "media" if directory else None
        oracle, renderer = self.backend_factory(session_id, journal, media_dir)
        session = Session.create(session_id, initial_prompt, oracle, renderer,
                                 self.budget, self.seed, journal, directory)
        with self._lock:
            self._sessions[session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            if session_id in self._sessions:
                return self._sessions[session_id]
        session = self._load(session_id)
        with self._lock:
            self._sessions.setdefault(session_id, session)
            return self._sessions[session_id]

    def _load(self, session_id: str) -> Session:
        if self.root is None:
            raise KeyError(f"unknown session {session_id!r}")
        directory = self.root / session_id
        state_path = directory / "state.json"
        if not state_path.exists():
            raise KeyError(f"unknown session {session_id!r}")
        snapshot = json.loads(state_path.read_text(encoding="utf-8"))
        journal = Journal(directory / "journal.jsonl")
        oracle, renderer = self.backend_factory(session_id, journal, directory / "media")
        budget = Budget(**snapshot["budget"])
        session = Session(session_id, snapshot["initial_prompt"], oracle, renderer,
                          budget, int(snapshot["seed"]), journal, directory)
        session.spec = Specification.from_record(snapshot["specification"])
        if snapshot.get("active_query"):
            session.active_query = CandidateQuery.from_record(snapshot["active_query"])
        session.active_entropy = snapshot.get("active_entropy")
        session.active_eaug = snapshot.get("active_eaug")
        session.status = SessionStatus(snapshot["status"])
        session.prompts = list(snapshot.get("prompts", []))
        session.queries = list(snapshot.get("queries", []))
        session.error = snapshot.get("error")
        session.engine.restore_state(snapshot.get("engine", {}))
        events_path = directory / "events.jsonl"
        if events_path.exists():
            for record in read_journal(events_path):
                session.events.append(InteractionEvent(
                    type=EventType(record["type"]), payload=record["payload"],
                    seq=int(record["seq"]), timestamp=float(record["timestamp"])))
        return session

    def list_ids(self) -> list[str]:
        with self._lock:
            ids = set(self._sessions)
        if self.root is not None and self.root.exists():
            ids.update(p.name for p in self.root.iterdir()
                       if (p / "state.json").exists())
        return sorted(ids)


@dataclass
class ReplayReport:
    session_id: str
    ok: bool
    expected: str
    actual: str
    detail: str = ""

    def diff(self) -> str:
        if self.ok:
            return ""
        import difflib

        expected = json.dumps(json.loads(self.expected), indent=2, sort_keys=True)
        actual = json.dumps(json.loads(self.actual), indent=2, sort_keys=True)
        lines = difflib.unified_diff(expected.splitlines(), actual.splitlines(),
                                     fromfile="recorded", tofile="replayed", lineterm="")
        return "\n".join(lines)


def replay_session(session_dir: str | Path) -> ReplayReport:
    """Re-execute a recorded session against its journal and byte-compare.

    The stored journal serves every oracle/render response, the event log
    supplies every user action, and the reconstructed essence must equal
    the persisted snapshot's essence exactly.
    """
    directory = Path(session_dir)
    meta_path, state_path = directory / "meta.json", directory / "state.json"
    journal_path, events_path = directory / "journal.jsonl", directory / "events.jsonl"
    for path in (meta_path, state_path, journal_path):
        if not path.exists():
            raise FileNotFoundError(f"session directory is missing {path.name}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    snapshot = json.loads(state_path.read_text(encoding="utf-8"))
    expected = canonical_json(essence_from_snapshot(snapshot))
    entries = list(read_journal(journal_path))
    events = list(read_journal(events_path)) if events_path.exists() else []

    backend = JournalReplayBackend(entries)
    session_id = meta["session_id"]
    try:
        session = Session.create(session_id, meta["initial_prompt"], backend, backend,
                                 Budget(**meta["budget"]), int(meta["seed"]),
                                 Journal(), directory=None)
        for record in events:
            event_type = EventType(record["type"])
            payload = record["payload"]
            if event_type is EventType.SELECT_ANSWER_OPTION:
                session.answer_active_query(Answer(option_index=payload["option_index"]))
            elif event_type is EventType.PROVIDE_OTHER_ANSWER:
                session.answer_active_query(Answer(other_text=payload["other_text"]))
            elif event_type is EventType.ADD_REQUIREMENT:
                session.apply_edit(RequirementEdit("add", payload["feature"], payload["value"]))
            elif event_type is EventType.MODIFY_REQUIREMENT:
                if payload.get("delete"):
                    session.apply_edit(RequirementEdit("delete", payload["feature"]))
                else:
                    session.apply_edit(RequirementEdit("modify", payload["feature"],
                                                       payload["value"]))
            elif event_type is EventType.GENERATE_PROMPT:
                session.generate()
    except (ReplayMismatch, WrongState, OracleError, RenderError) as exc:
        return ReplayReport(session_id=session_id, ok=False, expected=expected,
                            actual="{}", detail=f"replay aborted: {exc}")
    actual = session.essence()
    return ReplayReport(session_id=session_id, ok=actual == expected,
                        expected=expected, actual=actual)
