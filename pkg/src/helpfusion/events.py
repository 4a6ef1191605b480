"""Interaction sessions: annotation events, help labels and their JSON files.

A session file holds either one session object or a JSON array of them::

    {"session_id": "s01",
     "task_spec": [{"cell": "mon-am", "med": "A"}],
     "events": [{"t": 0.0, "kind": "Gaze", "direction": "robot"},
                {"t": 1.2, "kind": "Task", "cell": "mon-am", "med": "A",
                 "action": "placed"}],
     "labels": [0, 1]}

Kind-specific fields: ``Gaze.direction``, ``UserSpeech.transcript``,
``UserGesture.moving``, ``RobotSpeech.utterance`` and
``Task.cell``/``Task.med``/``Task.action`` (``placed`` or ``removed``).
Timestamps are written with 6 decimals.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataFormatError, ValidationError

KINDS = ("Gaze", "UserSpeech", "UserGesture", "RobotSpeech", "Task")
TASK_ACTIONS = ("placed", "removed")
TIME_DECIMALS = 6

# kind -> ((field name, python type), ...)
_PAYLOAD_FIELDS = {
    "Gaze": (("direction", str),),
    "UserSpeech": (("transcript", str),),
    "UserGesture": (("moving", bool),),
    "RobotSpeech": (("utterance", str),),
    "Task": (("cell", str), ("med", str), ("action", str)),
}


@dataclass(frozen=True)
class AnnotationEvent:
    """One annotated event; only the fields belonging to ``kind`` are set."""

    t: float
    kind: str
    direction: str | None = None
    transcript: str | None = None
    moving: bool | None = None
    utterance: str | None = None
    cell: str | None = None
    med: str | None = None
    action: str | None = None

    def __post_init__(self):
        if self.kind not in _PAYLOAD_FIELDS:
            raise ValidationError(f"unknown event kind {self.kind!r}")
        if not (isinstance(self.t, (int, float)) and math.isfinite(self.t)) or self.t < 0:
            raise ValidationError(f"event time must be a finite non-negative number, got {self.t!r}")
        wanted = {name for name, _ in _PAYLOAD_FIELDS[self.kind]}
        for name, typ in _PAYLOAD_FIELDS[self.kind]:
            value = getattr(self, name)
            if not isinstance(value, typ):
                raise ValidationError(f"{self.kind} event needs {name!r} of type {typ.__name__}")
        for names in _PAYLOAD_FIELDS.values():
            for name, _ in names:
                if name not in wanted and getattr(self, name) is not None:
                    raise ValidationError(f"{self.kind} event must not carry {name!r}")
        if self.kind == "Task" and self.action not in TASK_ACTIONS:
            raise ValidationError(f"Task action must be one of {TASK_ACTIONS}, got {self.action!r}")

    @classmethod
    def gaze(cls, t, direction):
        return cls(t, "Gaze", direction=direction)

    @classmethod
    def user_speech(cls, t, transcript):
        return cls(t, "UserSpeech", transcript=transcript)

    @classmethod
    def user_gesture(cls, t, moving=True):
        return cls(t, "UserGesture", moving=moving)

    @classmethod
    def robot_speech(cls, t, utterance):
        return cls(t, "RobotSpeech", utterance=utterance)

    @classmethod
    def task(cls, t, cell, med, action="placed"):
        return cls(t, "Task", cell=cell, med=med, action=action)

    @property
    def payload(self) -> dict:
        return {name: getattr(self, name) for name, _ in _PAYLOAD_FIELDS[self.kind]}

    def to_json(self) -> dict:
        out = {"t": round(float(self.t), TIME_DECIMALS), "kind": self.kind}
        out.update(self.payload)
        return out


@dataclass(frozen=True)
class HelpLabel:
    event_index: int
    needs_help: bool


@dataclass(frozen=True)
class Session:
    """Events of one interaction in time order, with one help label per event.

    ``task_spec`` is the set of goal placements as ``(cell, med)`` pairs.
    """

    session_id: str
    events: tuple[AnnotationEvent, ...]
    help: tuple[bool, ...]
    task_spec: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "help", tuple(bool(h) for h in self.help))
        object.__setattr__(self, "task_spec", tuple((str(c), str(m)) for c, m in self.task_spec))
        if len(self.help) != len(self.events):
            raise ValidationError(
                f"session {self.session_id!r}: {len(self.events)} events but {len(self.help)} labels"
            )
        for i in range(1, len(self.events)):
            if self.events[i].t < self.events[i - 1].t:
                raise ValidationError(
                    f"session {self.session_id!r}: event {i} at t={self.events[i].t} "
                    f"precedes event {i - 1} at t={self.events[i - 1].t}"
                )
        if not self.task_spec and any(e.kind == "Task" for e in self.events):
            raise ValidationError(f"session {self.session_id!r} has Task events but an empty task_spec")

    @property
    def labels(self) -> list[HelpLabel]:
        return [HelpLabel(i, h) for i, h in enumerate(self.help)]

    @property
    def end_time(self) -> float:
        return self.events[-1].t if self.events else 0.0

    def to_json(self) -> dict:
        return {
            "session_id": self.session_id,
            "task_spec": [{"cell": c, "med": m} for c, m in self.task_spec],
            "events": [e.to_json() for e in self.events],
            "labels": [int(h) for h in self.help],
        }


def _require(obj, key, typ, where):
    if not isinstance(obj, dict) or key not in obj:
        raise DataFormatError(f"{where}: missing field {key!r}")
    value = obj[key]
    if typ is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    else:
        ok = isinstance(value, typ)
    if not ok:
        raise DataFormatError(f"{where}: field {key!r} has the wrong type")
    return value


def session_from_json(obj, source="<memory>") -> Session:
    where = f"{source}"
    sid = _require(obj, "session_id", str, where)
    where = f"{source} [session {sid}]"
    raw_spec = _require(obj, "task_spec", list, where)
    raw_events = _require(obj, "events", list, where)
    raw_labels = _require(obj, "labels", list, where)

    spec = []
    for j, item in enumerate(raw_spec):
        spec.append((_require(item, "cell", str, f"{where} task_spec[{j}]"),
                     _require(item, "med", str, f"{where} task_spec[{j}]")))

    events = []
    for j, item in enumerate(raw_events):
        ew = f"{where} events[{j}]"
        t = float(_require(item, "t", float, ew))
        kind = _require(item, "kind", str, ew)
        if kind not in _PAYLOAD_FIELDS:
            raise DataFormatError(f"{ew}: field 'kind' has unknown value {kind!r}")
        payload = {name: _require(item, name, typ, ew) for name, typ in _PAYLOAD_FIELDS[kind]}
        try:
            events.append(AnnotationEvent(t, kind, **payload))
        except ValidationError as exc:
            raise DataFormatError(f"{ew}: {exc}") from None

    labels = []
    for j, lab in enumerate(raw_labels):
        if isinstance(lab, (bool, float)) or lab not in (0, 1):
            raise DataFormatError(f"{where} labels[{j}]: expected 0 or 1, got {lab!r}")
        labels.append(bool(lab))

    try:
        return Session(sid, tuple(events), tuple(labels), tuple(spec))
    except ValidationError as exc:
        raise ValidationError(f"{source}: {exc}") from None


def _session_files(path: Path) -> list[Path]:
    if path.is_dir():
        return sorted(p for p in path.iterdir() if p.suffix == ".json" and p.is_file())
    return [path]


def load_sessions(path) -> list[Session]:
    """Read sessions from a JSON file or a directory of ``*.json`` files.

    Sessions are returned ordered by ``session_id``.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    sessions = []
    for file in _session_files(path):
        try:
            with open(file, encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{file}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
        docs = doc if isinstance(doc, list) else [doc]
        for k, obj in enumerate(docs):
            sessions.append(session_from_json(obj, f"{file}[{k}]" if isinstance(doc, list) else str(file)))
    ids = [s.session_id for s in sessions]
    if len(set(ids)) != len(ids):
        raise ValidationError(f"{path}: duplicate session ids")
    return sorted(sessions, key=lambda s: s.session_id)


def save_sessions(sessions: Iterable[Session], path) -> None:
    """Write sessions as one JSON array; an existing directory gets one file per session."""
    sessions = list(sessions)
    path = Path(path)
    if path.is_dir():
        for s in sessions:
            _dump(s.to_json(), path / f"{s.session_id}.json")
    else:
        _dump([s.to_json() for s in sessions], path)


def _dump(doc, path: Path):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


def total_events(sessions: Sequence[Session]) -> int:
    return sum(len(s.events) for s in sessions)
