import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpfusion.errors import DataFormatError, ValidationError
from helpfusion.events import AnnotationEvent, Session, load_sessions, save_sessions, session_from_json
from helpfusion.synthgen import GeneratorConfig, generate_rich_sessions

E = AnnotationEvent


def _doc(events, labels, spec=None, sid="a"):
    return {"session_id": sid, "task_spec": spec or [], "events": events, "labels": labels}


def test_single_session_file_loads_in_time_order(tmp_path):
    doc = _doc([{"t": 0.0, "kind": "Gaze", "direction": "robot"},
                {"t": 1.5, "kind": "UserSpeech", "transcript": "hmm"},
                {"t": 3.25, "kind": "Gaze", "direction": "grid"}], [0, 1, 0])
    p = tmp_path / "one.json"
    p.write_text(json.dumps(doc))
    [s] = load_sessions(p)
    assert [e.t for e in s.events] == [0.0, 1.5, 3.25]
    assert s.help == (False, True, False)
    assert [lab.event_index for lab in s.labels] == [0, 1, 2]


def test_label_count_mismatch_is_validation_error(tmp_path):
    doc = _doc([{"t": 0.0, "kind": "Gaze", "direction": "robot"},
                {"t": 1.0, "kind": "Gaze", "direction": "grid"}], [0, 1, 0])
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(ValidationError, match="2 events but 3 labels"):
        load_sessions(p)


def test_directory_of_sixteen_files(tmp_path):
    sessions = generate_rich_sessions(GeneratorConfig(n_sessions=16, events_per_session=5, seed=2))
    save_sessions(sessions, tmp_path)
    loaded = load_sessions(tmp_path)
    assert len(loaded) == 16
    assert [s.session_id for s in loaded] == sorted(s.session_id for s in loaded)


def test_out_of_order_events_rejected():
    with pytest.raises(ValidationError, match="precedes"):
        Session("x", (E.gaze(2.0, "robot"), E.gaze(1.0, "grid")), (False, False))


def test_task_events_need_task_spec():
    with pytest.raises(ValidationError, match="task_spec"):
        Session("x", (E.task(0.0, "mon-am", "A"),), (False,))


def test_malformed_file_names_file_and_field(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text(json.dumps(_doc([{"t": 0.0, "kind": "Gaze"}], [0])))
    with pytest.raises(DataFormatError) as exc:
        load_sessions(p)
    assert "broken.json" in str(exc.value) and "direction" in str(exc.value)


def test_invalid_json_and_bad_label(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    with pytest.raises(DataFormatError, match="invalid JSON"):
        load_sessions(p)
    with pytest.raises(DataFormatError, match="labels"):
        session_from_json(_doc([{"t": 0.0, "kind": "Gaze", "direction": "robot"}], [2]))
    with pytest.raises(DataFormatError, match="unknown value"):
        session_from_json(_doc([{"t": 0.0, "kind": "Blink"}], [0]))


def test_payload_rules():
    with pytest.raises(ValidationError):
        E(0.0, "Gaze", direction="robot", transcript="hi")
    with pytest.raises(ValidationError):
        E(-1.0, "Gaze", direction="robot")
    with pytest.raises(ValidationError):
        E.task(0.0, "c", "A", action="dropped")
    assert E.user_gesture(1.0).payload == {"moving": True}


def test_duplicate_ids_rejected(tmp_path):
    s = Session("dup", (E.gaze(0.0, "robot"),), (True,))
    save_sessions([s], tmp_path / "a.json")
    save_sessions([s], tmp_path / "b.json")
    with pytest.raises(ValidationError, match="duplicate"):
        load_sessions(tmp_path)


def test_empty_list_writes_empty_container(tmp_path):
    p = tmp_path / "none.json"
    save_sessions([], p)
    assert json.loads(p.read_text()) == []
    assert load_sessions(p) == []


def test_all_five_kinds_round_trip(tmp_path):
    s = Session("k5", (E.gaze(0.0, "robot"), E.user_speech(0.5, "where does this go"),
                       E.user_gesture(1.0, False), E.robot_speech(1.25, "try monday"),
                       E.task(2.0, "mon-am", "A", "removed")),
                (False, True, True, False, True), (("mon-am", "A"),))
    p = tmp_path / "s.json"
    save_sessions([s], p)
    assert load_sessions(p) == [s]


def test_generator_output_round_trips_exactly(tmp_path):
    sessions = generate_rich_sessions(GeneratorConfig(n_sessions=3, events_per_session=60, seed=11))
    save_sessions(sessions, tmp_path)
    assert load_sessions(tmp_path) == sessions


_kinds = st.sampled_from(["Gaze", "UserSpeech", "UserGesture", "RobotSpeech", "Task"])


@st.composite
def sessions(draw):
    n = draw(st.integers(0, 12))
    gaps = draw(st.lists(st.floats(0, 5, allow_nan=False), min_size=n, max_size=n))
    events, t = [], 0.0
    for g in gaps:
        t = round(t + g, 6)
        k = draw(_kinds)
        text = draw(st.text(min_size=0, max_size=8))
        events.append({"Gaze": lambda: E.gaze(t, text or "robot"),
                       "UserSpeech": lambda: E.user_speech(t, text),
                       "UserGesture": lambda: E.user_gesture(t, draw(st.booleans())),
                       "RobotSpeech": lambda: E.robot_speech(t, text),
                       "Task": lambda: E.task(t, "mon-am", "A", draw(st.sampled_from(["placed", "removed"])))}[k]())
    labels = draw(st.lists(st.booleans(), min_size=n, max_size=n))
    return Session(draw(st.from_regex(r"[a-z][a-z0-9]{0,5}", fullmatch=True)), tuple(events), tuple(labels),
                   (("mon-am", "A"),))


@given(sessions())
def test_round_trip_property(tmp_path_factory, s):
    p = tmp_path_factory.mktemp("rt") / "s.json"
    save_sessions([s], p)
    [back] = load_sessions(p)
    assert back == s
    assert len(back.labels) == len(back.events)
