"""Synthetic labelled sessions and decision streams with calibrated detector rates.

The latent help state follows a two-state Markov chain: at each event the
state is kept with probability ``1 - 1/persistence`` and otherwise redrawn
from Bernoulli(prevalence). Its stationary positive fraction is the
prevalence, and ``persistence`` is the expected number of events between
redraws (1 gives i.i.d. labels).

Each detector fires (value 1.0) with probability ``r`` in the help state and
``q`` otherwise, where ``q`` inverts the precision identity
``p = r*pi / (r*pi + q*(1-pi))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import DETECTOR_NAMES
from .detectors import DecisionVector, DetectorConfig
from .errors import InfeasibleTargetError, ValidationError
from .events import TIME_DECIMALS, AnnotationEvent, Session

# reference precision, recall of the four detectors
DEFAULT_TARGETS = {
    "m_gaze": (0.59, 0.12),
    "c_gaze": (0.55, 0.10),
    "lexical": (0.52, 0.04),
    "task": (0.63, 0.44),
}

# annotation counts per kind over the original 16 recordings
KIND_COUNTS = {"Gaze": 956, "UserSpeech": 145, "UserGesture": 220, "RobotSpeech": 255, "Task": 402}

KEYWORD_PHRASES = (
    "I need help here", "which one goes here", "is this right", "where does this go",
    "what do I do now", "how many of these", "I'm confused", "is that correct",
    "wait what was the second one", "help me with this", "which day is this",
)
NEUTRAL_PHRASES = (
    "okay", "okay done", "got it", "that's it", "alright", "whatever", "done with this one",
    "thank you", "yes", "no problem", "one more", "let me see", "there we go",
)
ROBOT_UTTERANCES = (
    "Take your time.", "You are doing great.", "The blue pills go in the morning slots.",
    "Remember, one pill per slot.", "Check the label on the bottle.", "Nice work so far.",
    "That slot is for the evening dose.", "Let's look at Tuesday again.",
)
OTHER_GAZE = ("grid", "away", "bottle", "table")
DAYS = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")


@dataclass(frozen=True)
class EmissionParams:
    """Per-detector fire probabilities: ``fire_help[d]`` and ``fire_nohelp[d]``."""

    fire_help: dict
    fire_nohelp: dict

    def rates(self, name):
        return self.fire_help[name], self.fire_nohelp[name]


@dataclass(frozen=True)
class GeneratorConfig:
    n_sessions: int = 16
    events_per_session: int = 125
    mean_gap_seconds: float = 1.5
    prevalence: float = 0.45
    persistence: float = 20.0
    targets: dict = field(default_factory=lambda: dict(DEFAULT_TARGETS))
    seed: int = 0

    def __post_init__(self):
        if self.n_sessions < 0 or self.events_per_session < 0:
            raise ValidationError("session and event counts must be non-negative")
        if not self.mean_gap_seconds > 0:
            raise ValidationError("mean_gap_seconds must be positive")
        if not 0.0 < self.prevalence < 1.0:
            raise ValidationError("prevalence must lie strictly between 0 and 1")
        if not self.persistence >= 1.0:
            raise ValidationError("persistence must be at least 1 event")
        if set(self.targets) != set(DETECTOR_NAMES):
            raise ValidationError(f"targets must cover exactly {DETECTOR_NAMES}")
        for name, (p, r) in self.targets.items():
            if not (0.0 < p < 1.0 and 0.0 < r < 1.0):
                raise ValidationError(f"{name}: precision and recall must lie in (0, 1)")

    def with_(self, **kw) -> "GeneratorConfig":
        return replace(self, **kw)


def false_fire_rate(precision, recall, prevalence):
    return recall * prevalence * (1.0 - precision) / (precision * (1.0 - prevalence))


def solve_emissions(targets=None, prevalence=0.45) -> EmissionParams:
    """Fire probabilities that reproduce each detector's precision and recall exactly."""
    targets = DEFAULT_TARGETS if targets is None else targets
    if not 0.0 < prevalence < 1.0:
        raise ValidationError("prevalence must lie strictly between 0 and 1")
    help_, nohelp = {}, {}
    for name, (p, r) in targets.items():
        if not (0.0 < p <= 1.0 and 0.0 < r < 1.0):
            raise InfeasibleTargetError(name, f"precision {p} / recall {r} outside (0, 1)")
        q = false_fire_rate(p, r, prevalence)
        if not 0.0 <= q < 1.0 or (q == 0.0 and p < 1.0):
            raise InfeasibleTargetError(
                name, f"false-fire rate {q:.4f} not in (0, 1) for precision {p}, recall {r}, "
                      f"prevalence {prevalence}")
        help_[name] = r
        nohelp[name] = q
    return EmissionParams(help_, nohelp)


def implied_precision(r, q, prevalence):
    return r * prevalence / (r * prevalence + q * (1.0 - prevalence))


def latent_chain(n, prevalence, persistence, rng) -> np.ndarray:
    keep = 1.0 - 1.0 / persistence
    out = np.empty(n, dtype=bool)
    if n == 0:
        return out
    state = rng.random() < prevalence
    redraw = rng.random(n) >= keep
    fresh = rng.random(n) < prevalence
    for t in range(n):
        if t > 0 and redraw[t]:
            state = fresh[t]
        out[t] = state
    return out


def emit_stream(labels, emissions: EmissionParams, rng) -> list[tuple[DecisionVector, bool]]:
    u = rng.random((len(labels), len(DETECTOR_NAMES)))
    r = np.array([emissions.fire_help[d] for d in DETECTOR_NAMES])
    q = np.array([emissions.fire_nohelp[d] for d in DETECTOR_NAMES])
    p = np.where(labels[:, None], r[None, :], q[None, :])
    fired = (u < p).astype(np.float64)
    return [(DecisionVector(*row), bool(h)) for row, h in zip(fired.tolist(), labels)]


# -- rich sessions ------------------------------------------------------------

@dataclass(frozen=True)
class RichPlan:
    """State-conditional kind mix and per-kind fire probabilities for rich sessions."""

    kind_probs: dict          # state (bool) -> {kind: probability}
    fire: dict                # (detector, state) -> probability per eligible event
    task_recall: float        # task recall the mix can support
    eligible_rate: dict       # state -> approx. fraction of gazes with a Task in the previous 2 events


def plan_rich(config: GeneratorConfig) -> RichPlan:
    """Solve the kind mix and per-kind fire probabilities for the rule detectors.

    Only Task events can fire the task detector, so its recall is capped by
    ``precision * task_share / prevalence``; below that cap the target
    recall is used, above it 90% of the cap.
    """
    pi = config.prevalence
    em = solve_emissions(config.targets, pi)
    total = sum(KIND_COUNTS.values())
    share = {k: v / total for k, v in KIND_COUNTS.items()}
    f_task = share["Task"]
    p_task, r_task = config.targets["task"]
    cap = p_task * f_task / pi
    recall = min(r_task, 0.9 * cap, 1.0)
    a_help = recall
    false_mass = pi * recall * (1.0 - p_task) / p_task
    a_nohelp = (f_task - pi * a_help) / (1.0 - pi)
    u_nohelp = false_mass / ((1.0 - pi) * a_nohelp) if a_nohelp > 0 else 0.0

    non_task = 1.0 - f_task
    kind_probs = {}
    for state, a in ((True, a_help), (False, a_nohelp)):
        probs = {k: (1.0 - a) * share[k] / non_task for k in KIND_COUNTS if k != "Task"}
        probs["Task"] = a
        kind_probs[state] = probs

    fire, elig = {}, {}
    for state in (True, False):
        probs = kind_probs[state]
        idx = 0 if state else 1
        rates = {d: em.rates(d)[idx] for d in DETECTOR_NAMES}
        elig[state] = 1.0 - (1.0 - probs["Task"]) ** 2
        fire[("m_gaze", state)] = min(1.0, rates["m_gaze"] / probs["Gaze"])
        fire[("c_gaze", state)] = min(1.0, rates["c_gaze"] / (probs["Gaze"] * elig[state]))
        fire[("lexical", state)] = min(1.0, rates["lexical"] / probs["UserSpeech"])
    fire[("task", True)] = 1.0
    fire[("task", False)] = min(1.0, u_nohelp)
    return RichPlan(kind_probs, fire, recall, elig)


def task_spec_default():
    goals = [(f"{d}-{slot}", "A") for d in DAYS for slot in ("am", "pm")]
    goals += [(f"{d}-am", "B") for d in DAYS]
    return tuple(goals)


class _TaskBook:
    def __init__(self, spec):
        self.goals = list(spec)
        self.goal_set = set(spec)
        self.placed = {}

    def satisfied(self):
        return [g for g in self.goals if self.placed.get(g, 0) > 0]

    def open(self):
        return [g for g in self.goals if self.placed.get(g, 0) == 0]

    def event(self, fire, rng):
        """Pick a ``(cell, med, action)`` that progresses (fire=False) or stalls/regresses."""
        if not fire:
            options = self.open()
            if options:
                g = options[rng.integers(len(options))]
                self.placed[g] = self.placed.get(g, 0) + 1
                return g[0], g[1], "placed"
        done = self.satisfied()
        if done and rng.random() < 0.35:
            g = done[rng.integers(len(done))]
            self.placed[g] -= 1
            return g[0], g[1], "removed"
        if done and rng.random() < 0.5:
            g = done[rng.integers(len(done))]
            self.placed[g] += 1
            return g[0], g[1], "placed"
        cell = f"{DAYS[rng.integers(len(DAYS))]}-pm"
        key = (cell, "B")
        self.placed[key] = self.placed.get(key, 0) + 1
        return cell, "B", "placed"


_EPS = 1e-3


def _realise(labels, plan: RichPlan, config: GeneratorConfig, rng, det=DetectorConfig()):
    """Turn a label sequence into timed events whose payloads carry the planned firings."""
    n = len(labels)
    kinds_order = list(KIND_COUNTS)
    kinds = []
    for h in labels:
        probs = plan.kind_probs[bool(h)]
        kinds.append(kinds_order[rng.choice(len(kinds_order), p=[probs[k] for k in kinds_order])])

    # intents per event
    m_int = np.zeros(n, dtype=bool)
    c_int = np.zeros(n, dtype=bool)
    fire = np.zeros(n, dtype=bool)
    for i, (k, h) in enumerate(zip(kinds, labels)):
        h = bool(h)
        if k == "Gaze":
            m_int[i] = rng.random() < plan.fire[("m_gaze", h)]
            eligible = any(kinds[j] == "Task" for j in range(max(0, i - 2), i))
            c_int[i] = eligible and rng.random() < plan.fire[("c_gaze", h)]
        elif k == "UserSpeech":
            fire[i] = rng.random() < plan.fire[("lexical", h)]
        elif k == "Task":
            fire[i] = rng.random() < plan.fire[("task", h)]

    spec = task_spec_default()
    book = _TaskBook(spec)
    window = det.confirm_window
    dwell = det.mutual_gaze_min_duration
    events = []
    t_prev = 0.0
    last_task = None
    pending = None  # ("min" | "max", bound) on the next Gaze time
    last_robot_gaze = None
    gaps = rng.exponential(config.mean_gap_seconds, size=n)

    def next_gaze_index(i):
        for j in range(i + 1, n):
            if kinds[j] == "Gaze":
                return j
        return None

    for i, k in enumerate(kinds):
        base = t_prev + (gaps[i] if i > 0 else rng.random() * config.mean_gap_seconds)
        if k == "Gaze":
            m, c = bool(m_int[i]), bool(c_int[i])
            for _ in range(3):
                robot = m or c
                lo, hi = (t_prev + _EPS if i > 0 else 0.0), math.inf
                if pending is not None:
                    if pending[0] == "min":
                        lo = max(lo, pending[1] + _EPS)
                    else:
                        hi = min(hi, pending[1] - _EPS)
                if robot and c:
                    hi = min(hi, last_task + window - _EPS)
                elif robot and last_task is not None:
                    lo = max(lo, last_task + window + _EPS)
                if lo <= hi:
                    break
                if c:
                    c = False
                elif pending is not None:
                    pending = None
                else:
                    m = False
            t = min(max(base, lo), hi) if lo <= hi else lo
            robot = m or c
            direction = det.robot_tag if robot else OTHER_GAZE[rng.integers(len(OTHER_GAZE))]
            events.append(AnnotationEvent.gaze(round(t, TIME_DECIMALS), direction))
            if robot:
                pending = ("min" if m else "max", t + dwell)
                last_robot_gaze = len(events) - 1
            else:
                pending = None
        else:
            t = base
            if pending is not None and pending[0] == "max":
                room = pending[1] - _EPS - t_prev
                t = t_prev + max(min(gaps[i], room / 4.0), _EPS / 4)
            j = next_gaze_index(i)
            if j is not None and c_int[j] and k != "Task" and last_task is not None:
                # keep the upcoming confirmatory gaze inside the window
                t = max(min(t, last_task + window / 2.0), t_prev + _EPS / 4)
            if k == "Task":
                cell, med, action = book.event(bool(fire[i]), rng)
                events.append(AnnotationEvent.task(round(t, TIME_DECIMALS), cell, med, action))
                last_task = round(t, TIME_DECIMALS)
            elif k == "UserSpeech":
                pool = KEYWORD_PHRASES if fire[i] else NEUTRAL_PHRASES
                events.append(AnnotationEvent.user_speech(round(t, TIME_DECIMALS),
                                                          pool[rng.integers(len(pool))]))
            elif k == "UserGesture":
                moving = bool(rng.random() < (0.7 if labels[i] else 0.4))
                events.append(AnnotationEvent.user_gesture(round(t, TIME_DECIMALS), moving))
            else:
                events.append(AnnotationEvent.robot_speech(
                    round(t, TIME_DECIMALS), ROBOT_UTTERANCES[rng.integers(len(ROBOT_UTTERANCES))]))
        t_prev = events[-1].t

    # a trailing robot gaze that should dwell needs the session to run long enough
    if pending is not None and pending[0] == "min" and last_robot_gaze is not None \
            and last_robot_gaze < len(events) - 1 and events[-1].t < pending[1]:
        last = events[-1]
        events[-1] = replace(last, t=round(pending[1] + _EPS, TIME_DECIMALS))
    return events, spec


def _session_seeds(config: GeneratorConfig):
    return np.random.SeedSequence(int(config.seed)).spawn(config.n_sessions)


def _session_id(i):
    return f"s{i + 1:03d}"


def generate_rich_sessions(config: GeneratorConfig = GeneratorConfig()) -> list[Session]:
    """Sessions with full event payloads that drive the rule-based detectors."""
    plan = plan_rich(config)
    sessions = []
    for i, ss in enumerate(_session_seeds(config)):
        label_ss, rich_ss, _ = ss.spawn(3)
        labels = latent_chain(config.events_per_session, config.prevalence, config.persistence,
                              np.random.default_rng(label_ss))
        events, spec = _realise(labels, plan, config, np.random.default_rng(rich_ss))
        sessions.append(Session(_session_id(i), tuple(events), tuple(bool(h) for h in labels), spec))
    return sessions


@dataclass
class SyntheticCorpus:
    sessions: list
    streams: list           # [(session_id, [(DecisionVector, help), ...])]
    emissions: EmissionParams

    def times(self):
        return {s.session_id: [e.t for e in s.events] for s in self.sessions}


def generate(config: GeneratorConfig = GeneratorConfig()) -> SyntheticCorpus:
    """Labelled sessions plus calibrated decision streams sharing the same labels.

    The streams are drawn directly from the fire probabilities of
    :func:`solve_emissions`; the sessions are the rich rendering of the same
    label sequences (see :func:`generate_rich_sessions`).
    """
    emissions = solve_emissions(config.targets, config.prevalence)
    sessions = generate_rich_sessions(config)
    streams = []
    for session, ss in zip(sessions, _session_seeds(config)):
        _, _, emit_ss = ss.spawn(3)
        labels = np.array(session.help, dtype=bool)
        streams.append((session.session_id, emit_stream(labels, emissions, np.random.default_rng(emit_ss))))
    return SyntheticCorpus(sessions, streams, emissions)


def detector_precision_recall(streams, threshold=0.5):
    """Empirical ``{detector: (precision, recall)}`` over pooled streams."""
    rows = [(tuple(v), h) for _, stream in streams for v, h in stream]
    X = np.array([r[0] for r in rows], dtype=np.float64).reshape(-1, 4)
    y = np.array([r[1] for r in rows], dtype=bool)
    out = {}
    for j, name in enumerate(DETECTOR_NAMES):
        fired = X[:, j] >= threshold
        tp = int(np.count_nonzero(fired & y))
        fp = int(np.count_nonzero(fired & ~y))
        fn = int(np.count_nonzero(~fired & y))
        out[name] = (tp / (tp + fp) if tp + fp else 0.0, tp / (tp + fn) if tp + fn else 0.0)
    return out
