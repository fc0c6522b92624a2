from __future__ import annotations

import json

import pytest

from promptelicit.errors import (EmptyOtherText, EmptyPrompt, RevisionConflict,
                                 WrongState)
from promptelicit.intent import Origin
from promptelicit.journal import read_journal
from promptelicit.oracles import ScriptedBackend, ScriptedRenderer
from promptelicit.queries import Answer
from promptelicit.session import (EventType, RequirementEdit, ReplayReport,
                                  SessionStatus, SessionStore,
                                  essence_from_snapshot, replay_session)


@pytest.fixture()
def store(tmp_path):
    return SessionStore(tmp_path / "sessions", seed=7)


def _created(store, prompt="an app icon for hiking"):
    return store.create(prompt, session_id="sess-a")


# ---------------------------------------------------------------------------
# creation and the first query
# ---------------------------------------------------------------------------

def test_create_prepares_first_query(store):
    session = _created(store)
    assert session.status is SessionStatus.AWAITING_ANSWER
    assert session.revision == 0  # creation logs no user action
    assert session.events == []
    assert session.spec.value_of("theme") == "an app icon for hiking"
    query = session.active_query
    assert query is not None
    assert query.feature == "graphic motif"  # highest-utility catalog feature
    assert [o.label for o in query.options] == [
        "mountain silhouette", "hiking boots", "winding trail", "backpack"]
    assert all(o.exemplar_image for o in query.options)
    assert session.active_eaug == pytest.approx(0.9 * session.active_entropy)


def test_create_blank_prompt_raises(store):
    with pytest.raises(EmptyPrompt):
        store.create("   ")


def test_create_same_prompt_and_seed_yields_identical_first_query(tmp_path):
    a = SessionStore(tmp_path / "a", seed=3).create("a dragon tee", session_id="same")
    b = SessionStore(tmp_path / "b", seed=3).create("a dragon tee", session_id="same")
    assert a.active_query.to_record() == b.active_query.to_record()


def test_create_survives_oracle_failure_with_noted_error(tmp_path):
    def factory(session_id, journal, media_dir):
        return ScriptedBackend(strict=True, journal=journal), ScriptedRenderer(journal=journal)

    store = SessionStore(tmp_path / "s", backend_factory=factory)
    session = store.create("a dragon tee")
    assert session.status is SessionStatus.IDLE
    assert session.error is not None
    assert session.spec.value_of("theme") == "a dragon tee"


def test_session_files_laid_out_on_disk(store, tmp_path):
    session = _created(store)
    directory = tmp_path / "sessions" / session.session_id
    assert (directory / "meta.json").exists()
    assert (directory / "state.json").exists()
    assert (directory / "journal.jsonl").exists()
    assert (directory / "media").is_dir()
    assert any((directory / "media").iterdir())  # exemplar placeholders


# ---------------------------------------------------------------------------
# answering
# ---------------------------------------------------------------------------

def test_answer_option_logs_event_and_advances(store):
    session = _created(store)
    first_feature = session.active_query.feature
    session.answer_active_query(Answer(option_index=0))
    assert session.revision == 1
    event = session.events[-1]
    assert event.type is EventType.SELECT_ANSWER_OPTION
    assert event.payload == {"option_index": 0, "feature": "graphic motif",
                             "value": "mountain silhouette"}
    req = next(r for r in session.spec.requirements if r.feature == first_feature)
    assert req.value == "mountain silhouette"
    assert req.origin is Origin.QUERY_ANSWER
    assert session.status is SessionStatus.AWAITING_ANSWER
    assert session.active_query.feature == "color scheme"


def test_answer_other_text_logs_event(store):
    session = _created(store)
    session.answer_active_query(Answer(other_text="a paw print"))
    event = session.events[-1]
    assert event.type is EventType.PROVIDE_OTHER_ANSWER
    assert event.payload == {"other_text": "a paw print", "feature": "graphic motif"}
    req = next(r for r in session.spec.requirements if r.feature == "graphic motif")
    assert (req.value, req.origin) == ("a paw print", Origin.OTHER_ANSWER)


def test_answer_blank_other_text_rejected(store):
    session = _created(store)
    with pytest.raises(EmptyOtherText):
        session.answer_active_query(Answer(other_text="  "))
    assert session.revision == 0  # nothing logged


def test_answer_requires_awaiting_state(store):
    session = _created(store)
    session.close()
    with pytest.raises(WrongState):
        session.answer_active_query(Answer(option_index=0))


def test_answer_with_stale_revision_conflicts(store):
    session = _created(store)
    session.answer_active_query(Answer(option_index=0), expected_revision=0)
    with pytest.raises(RevisionConflict):
        session.answer_active_query(Answer(option_index=0), expected_revision=0)
    assert session.revision == 1


def test_elicitation_exhaustion_goes_idle(store):
    session = _created(store)
    for _ in range(10):
        if session.status is not SessionStatus.AWAITING_ANSWER:
            break
        session.answer_active_query(Answer(option_index=0))
    assert session.status is SessionStatus.IDLE
    assert session.active_query is None
    # all seven catalog features answered on top of the theme
    assert len(session.spec.requirements) == 8


# ---------------------------------------------------------------------------
# requirement edits
# ---------------------------------------------------------------------------

def test_edit_add_modify_delete_events(store):
    session = _created(store)
    session.apply_edit(RequirementEdit("add", "mood", "serene"))
    assert session.events[-1].type is EventType.ADD_REQUIREMENT
    assert session.spec.value_of("mood") == "serene"

    session.apply_edit(RequirementEdit("modify", "mood", "adventurous"))
    assert session.events[-1].type is EventType.MODIFY_REQUIREMENT
    assert session.events[-1].payload == {"feature": "mood", "value": "adventurous"}
    assert session.spec.value_of("mood") == "adventurous"

    session.apply_edit(RequirementEdit("delete", "mood"))
    assert session.events[-1].type is EventType.MODIFY_REQUIREMENT
    assert session.events[-1].payload == {"feature": "mood", "delete": True}
    assert not session.spec.has_feature("mood")
    assert session.revision == 3


def test_edit_validation():
    with pytest.raises(ValueError):
        RequirementEdit("rename", "mood", "x")
    with pytest.raises(ValueError):
        RequirementEdit("add", "mood", "  ")
    RequirementEdit("delete", "mood")  # delete needs no value


def test_edit_delete_missing_feature_is_value_error(store):
    session = _created(store)
    with pytest.raises(ValueError):
        session.apply_edit(RequirementEdit("delete", "mood"))


def test_edit_covering_active_query_advances_to_fresh_one(store):
    session = _created(store)
    assert session.active_query.feature == "graphic motif"
    session.apply_edit(RequirementEdit("add", "graphic motif", "a compass rose"))
    assert session.status is SessionStatus.AWAITING_ANSWER
    assert session.active_query.feature == "color scheme"
    assert session.spec.value_of("graphic motif") == "a compass rose"


def test_edit_delete_from_idle_reopens_elicitation(store):
    session = _created(store)
    while session.status is SessionStatus.AWAITING_ANSWER:
        session.answer_active_query(Answer(option_index=0))
    assert session.status is SessionStatus.IDLE
    session.apply_edit(RequirementEdit("delete", "mood"))
    assert session.status is SessionStatus.AWAITING_ANSWER
    assert session.active_query.feature == "mood"


def test_edit_after_close_rejected(store):
    session = _created(store)
    session.close()
    with pytest.raises(WrongState):
        session.apply_edit(RequirementEdit("add", "mood", "serene"))


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------

def test_generate_appends_prompt_and_event(store):
    session = _created(store)
    session.answer_active_query(Answer(option_index=0))
    entry = session.generate()
    assert entry["text"]
    assert entry["image_handle"].startswith(f"{session.session_id}/")
    assert session.prompts == [entry]
    assert session.events[-1].type is EventType.GENERATE_PROMPT
    assert session.events[-1].payload["text"] == entry["text"]
    # the active query survives a generate issued mid-elicitation
    assert session.status is SessionStatus.AWAITING_ANSWER
    assert session.active_query.feature == "color scheme"


def test_generate_includes_every_requirement_value(store):
    session = _created(store)
    session.answer_active_query(Answer(option_index=1))
    session.apply_edit(RequirementEdit("add", "mood", "serene"))
    entry = session.generate()
    for req in session.spec.requirements:
        assert req.value.lower() in entry["text"].lower()


def test_generate_with_empty_specification_rejected(store):
    session = _created(store)
    session.apply_edit(RequirementEdit("delete", "theme"))
    with pytest.raises(ValueError):
        session.generate()


def test_generate_render_failure_keeps_session_usable(tmp_path):
    def factory(session_id, journal, media_dir):
        from promptelicit.oracles import DemoOracle
        oracle = ScriptedBackend(default_provider=DemoOracle(seed=0), journal=journal)
        # exemplar prompts carry an appended option value, so only the final
        # theme-only prompt trips the failure
        renderer = ScriptedRenderer(
            journal=journal, fail_on=lambda req: req.prompt == "an icon for hiking")
        return oracle, renderer

    store = SessionStore(tmp_path / "s", backend_factory=factory)
    session = store.create("an icon for hiking")
    entry = session.generate()
    assert entry["image_handle"] is None
    assert "render failed" in session.error
    assert session.events[-1].type is EventType.GENERATE_PROMPT
    session.answer_active_query(Answer(option_index=0))  # still usable
    assert session.revision == 2


def test_generate_after_close_rejected(store):
    session = _created(store)
    session.close()
    with pytest.raises(WrongState):
        session.generate()


def test_repeated_generates_accumulate(store):
    session = _created(store)
    session.answer_active_query(Answer(option_index=0))
    session.generate()
    session.answer_active_query(Answer(option_index=0))
    session.generate()
    assert len(session.prompts) == 2
    generate_events = [e for e in session.events if e.type is EventType.GENERATE_PROMPT]
    assert len(generate_events) == 2


# ---------------------------------------------------------------------------
# persistence and resumption
# ---------------------------------------------------------------------------

def _exercise(session):
    session.answer_active_query(Answer(option_index=0))
    session.answer_active_query(Answer(other_text="glacier teal"))
    session.apply_edit(RequirementEdit("add", "mood", "serene"))
    session.generate()
    return session


def test_resume_from_disk_reconstructs_state(tmp_path):
    store = SessionStore(tmp_path / "sessions", seed=7)
    session = _exercise(store.create("an app icon for hiking", session_id="sess-r"))
    expected = session.essence()
    expected_revision = session.revision

    fresh_store = SessionStore(tmp_path / "sessions", seed=7)
    resumed = fresh_store.get("sess-r")
    assert resumed.essence() == expected
    assert resumed.revision == expected_revision
    assert resumed.status == session.status
    assert [e.to_record() for e in resumed.events] == [e.to_record() for e in session.events]


def test_resumed_session_accepts_further_mutations(tmp_path):
    store = SessionStore(tmp_path / "sessions", seed=7)
    _exercise(store.create("an app icon for hiking", session_id="sess-m"))
    resumed = SessionStore(tmp_path / "sessions", seed=7).get("sess-m")
    before = resumed.revision
    resumed.apply_edit(RequirementEdit("modify", "mood", "bold"))
    assert resumed.revision == before + 1
    assert resumed.spec.value_of("mood") == "bold"


def test_event_log_file_matches_memory(tmp_path):
    store = SessionStore(tmp_path / "sessions", seed=7)
    session = _exercise(store.create("an app icon for hiking", session_id="sess-e"))
    on_disk = list(read_journal(tmp_path / "sessions" / "sess-e" / "events.jsonl"))
    assert [r["type"] for r in on_disk] == [e.type.value for e in session.events]
    assert [r["seq"] for r in on_disk] == [1, 2, 3, 4]


def test_store_get_unknown_session(tmp_path):
    with pytest.raises(KeyError):
        SessionStore(tmp_path / "sessions").get("ghost")


def test_store_list_ids(tmp_path):
    store = SessionStore(tmp_path / "sessions", seed=1)
    store.create("a", session_id="one")
    store.create("b", session_id="two")
    assert SessionStore(tmp_path / "sessions").list_ids() == ["one", "two"]


def test_essence_projection_is_minimal(store):
    session = _created(store)
    essence = essence_from_snapshot(session.snapshot())
    assert set(essence) == {"specification", "prompts", "queries"}


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------

def test_replay_reconstructs_recorded_session(tmp_path):
    store = SessionStore(tmp_path / "sessions", seed=7)
    session = _exercise(store.create("an app icon for hiking", session_id="sess-p"))
    report = replay_session(tmp_path / "sessions" / "sess-p")
    assert report.ok, report.detail or report.diff()
    assert report.actual == session.essence()


def test_replay_detects_tampered_journal(tmp_path):
    store = SessionStore(tmp_path / "sessions", seed=7)
    _exercise(store.create("an app icon for hiking", session_id="sess-t"))
    journal_path = tmp_path / "sessions" / "sess-t" / "journal.jsonl"
    lines = journal_path.read_text(encoding="utf-8").splitlines()
    for i, line in enumerate(lines):
        entry = json.loads(line)
        if entry.get("event") == "response" and entry["kind"] == "rate_weight":
            entry["data"] = {"rating": 0.123}
            lines[i] = json.dumps(entry, sort_keys=True, separators=(",", ":"))
            break
    journal_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    report = replay_session(tmp_path / "sessions" / "sess-t")
    assert not report.ok
    assert report.diff() or report.detail


def test_replay_missing_files(tmp_path):
    empty = tmp_path / "not-a-session"
    empty.mkdir()
    with pytest.raises(FileNotFoundError):
        replay_session(empty)


def test_replay_report_diff_renders_unified(tmp_path):
    report = ReplayReport(session_id="x", ok=False,
                          expected='{"a":1}', actual='{"a":2}')
    diff = report.diff()
    assert "recorded" in diff and "replayed" in diff
    assert '-  "a": 1' in diff and '+  "a": 2' in diff
