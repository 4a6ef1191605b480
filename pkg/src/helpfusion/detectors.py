"""Rule-based stand-ins for the four per-event assistance detectors.

Each detector maps a session to one score in [0, 1] per event. The rules are
deliberately simple and replaceable; precomputed decision streams can be
ingested instead through :func:`load_decisions`.
"""

from __future__ import annotations

import csv
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import DETECTOR_NAMES
from .errors import DataFormatError, ValidationError
from .events import Session

DEFAULT_KEYWORDS = frozenset({"help", "what", "which", "where", "how", "confused", "right", "correct"})
DECISIONS_HEADER = ["session_id", "event_index", "t_seconds", *DETECTOR_NAMES, "help"]

_WORD = re.compile(r"[a-z0-9']+")


@dataclass(frozen=True)
class DecisionVector:
    m_gaze: float
    c_gaze: float
    lexical: float
    task: float

    def __post_init__(self):
        for name in DETECTOR_NAMES:
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"decision component {name}={v!r} outside [0, 1]")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.m_gaze, self.c_gaze, self.lexical, self.task)

    def __iter__(self):
        return iter(self.as_tuple())

    def __len__(self):
        return 4


@dataclass(frozen=True)
class DetectorConfig:
    mutual_gaze_min_duration: float = 1.0
    confirm_window: float = 2.0
    robot_tag: str = "robot"
    keywords: frozenset = field(default=DEFAULT_KEYWORDS)
    stall_score: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "keywords", frozenset(k.lower() for k in self.keywords))
        if self.mutual_gaze_min_duration <= 0 or self.confirm_window <= 0:
            raise ValidationError("detector durations must be positive")
        if not self.keywords:
            raise ValidationError("keyword set must not be empty")
        if not 0.0 <= self.stall_score <= 1.0:
            raise ValidationError("stall_score must lie in [0, 1]")


def mutual_gaze_scores(session: Session, config: DetectorConfig = DetectorConfig()) -> list[float]:
    """1.0 for a robot-directed Gaze held for at least the minimum dwell.

    Dwell runs until the next Gaze event, or the session's last timestamp.
    """
    events = session.events
    scores = [0.0] * len(events)
    gaze_idx = [i for i, e in enumerate(events) if e.kind == "Gaze"]
    for k, i in enumerate(gaze_idx):
        if events[i].direction != config.robot_tag:
            continue
        end = events[gaze_idx[k + 1]].t if k + 1 < len(gaze_idx) else session.end_time
        if end - events[i].t >= config.mutual_gaze_min_duration:
            scores[i] = 1.0
    return scores


def confirmatory_gaze_scores(session: Session, config: DetectorConfig = DetectorConfig()) -> list[float]:
    """1.0 for a robot-directed Gaze within ``confirm_window`` seconds after a Task event."""
    scores = [0.0] * len(session.events)
    last_task = None
    for i, e in enumerate(session.events):
        if e.kind == "Task":
            last_task = e.t
        elif (e.kind == "Gaze" and e.direction == config.robot_tag and last_task is not None
              and e.t - last_task <= config.confirm_window):
            scores[i] = 1.0
    return scores


def _words(text: str) -> set[str]:
    return set(_WORD.findall(text.lower()))


def lexical_scores(session: Session, config: DetectorConfig = DetectorConfig()) -> list[float]:
    """Whole-word keyword spotting on user speech."""
    return [
        1.0 if e.kind == "UserSpeech" and _words(e.transcript) & config.keywords else 0.0
        for e in session.events
    ]


class TaskState:
    """Placement bookkeeping for one pill organiser.

    ``remaining`` counts goal placements not currently satisfied. Pills in
    cells outside the goal set are tracked but never satisfy anything.
    """

    def __init__(self, task_spec):
        self.goals = frozenset(task_spec)
        self.placed = Counter()

    @property
    def remaining(self) -> int:
        return sum(1 for g in self.goals if self.placed[g] == 0)

    def apply(self, cell, med, action) -> int:
        """Apply a placement or removal and return the change in ``remaining``."""
        key = (cell, med)
        before = key in self.goals and self.placed[key] == 0
        if action == "placed":
            self.placed[key] += 1
        elif self.placed[key] > 0:
            self.placed[key] -= 1
        after = key in self.goals and self.placed[key] == 0
        return int(after) - int(before)


def task_scores(session: Session, config: DetectorConfig = DetectorConfig()) -> list[float]:
    scores = [0.0] * len(session.events)
    state = TaskState(session.task_spec)
    for i, e in enumerate(session.events):
        if e.kind != "Task":
            continue
        delta = state.apply(e.cell, e.med, e.action)
        if delta < 0:
            scores[i] = 0.0
        elif delta == 0:
            scores[i] = config.stall_score
        else:
            scores[i] = 1.0
    return scores


def run_all_detectors(session: Session, config: DetectorConfig = DetectorConfig()):
    """Per-event ``(DecisionVector, needs_help)`` pairs for one session."""
    columns = (
        mutual_gaze_scores(session, config),
        confirmatory_gaze_scores(session, config),
        lexical_scores(session, config),
        task_scores(session, config),
    )
    return [(DecisionVector(*vec), h) for vec, h in zip(zip(*columns), session.help)]


# -- decisions CSV ----------------------------------------------------------

def save_decisions(streams, path, times=None) -> None:
    """Write ``[(session_id, [(DecisionVector, help), ...]), ...]`` as CSV.

    ``times`` optionally maps session_id to per-event timestamps; missing
    timestamps are written as 0.
    """
    times = times or {}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DECISIONS_HEADER)
        for sid, stream in streams:
            ts = times.get(sid)
            for i, (vec, h) in enumerate(stream):
                t = ts[i] if ts is not None else 0.0
                w.writerow([sid, i, f"{t:.6f}", *(f"{v:.6f}" for v in vec), int(bool(h))])


def load_decisions(path) -> list[tuple[str, list[tuple[DecisionVector, bool]]]]:
    """Parse a decisions CSV; sessions keep their order of first appearance."""
    path = Path(path)
    out: list[tuple[str, list]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != DECISIONS_HEADER:
            raise DataFormatError(f"{path}: header must be {','.join(DECISIONS_HEADER)}")
        seen = set()
        current = None
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(DECISIONS_HEADER):
                raise DataFormatError(f"{path} row {rowno}: expected {len(DECISIONS_HEADER)} fields")
            sid = row[0]
            try:
                idx = int(row[1])
                float(row[2])
                values = [float(v) for v in row[3:7]]
                h = int(row[7])
            except ValueError:
                raise DataFormatError(f"{path} row {rowno}: non-numeric field") from None
            for name, v in zip(DETECTOR_NAMES, values):
                if not 0.0 <= v <= 1.0:
                    raise ValidationError(f"{path} row {rowno}: {name}={v} outside [0, 1]")
            if h not in (0, 1):
                raise ValidationError(f"{path} row {rowno}: help must be 0 or 1")
            if current is None or current[0] != sid:
                if sid in seen:
                    raise ValidationError(f"{path} row {rowno}: rows of session {sid!r} are not grouped")
                seen.add(sid)
                current = (sid, [])
                out.append(current)
            if idx != len(current[1]):
                raise ValidationError(
                    f"{path} row {rowno}: event_index {idx} breaks contiguity (expected {len(current[1])})"
                )
            current[1].append((DecisionVector(*values), bool(h)))
    return out


def stream_matrix(stream: Sequence) -> tuple[list[tuple[float, ...]], list[bool]]:
    return [tuple(v) for v, _ in stream], [bool(h) for _, h in stream]
