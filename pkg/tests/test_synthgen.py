import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpfusion import DETECTOR_NAMES
from helpfusion.detectors import run_all_detectors
from helpfusion.errors import InfeasibleTargetError, ValidationError
from helpfusion.synthgen import (
    DEFAULT_TARGETS,
    KIND_COUNTS,
    GeneratorConfig,
    detector_precision_recall,
    false_fire_rate,
    generate,
    generate_rich_sessions,
    implied_precision,
    latent_chain,
    plan_rich,
    solve_emissions,
)

KIND_SHARE = {k: v / sum(KIND_COUNTS.values()) for k, v in KIND_COUNTS.items()}


@pytest.fixture(scope="module")
def rich_sessions():
    # 80 x 125 = 10,000 events
    return generate_rich_sessions(GeneratorConfig(n_sessions=80, seed=21))


@pytest.fixture(scope="module")
def rich_pr(rich_sessions):
    streams = [(s.session_id, run_all_detectors(s)) for s in rich_sessions]
    return detector_precision_recall(streams)


# -- calibration algebra -----------------------------------------------------------------

def test_mutual_gaze_false_fire_rate():
    q = solve_emissions(prevalence=0.45).fire_nohelp["m_gaze"]
    assert q == pytest.approx(0.12 * 0.45 * 0.41 / (0.59 * 0.55), abs=1e-15)
    assert round(q, 4) == 0.0682
    assert implied_precision(0.12, q, 0.45) == pytest.approx(0.59, abs=1e-12)


def test_symmetric_and_limit_cases():
    assert false_fire_rate(0.5, 0.5, 0.5) == pytest.approx(0.5)
    assert false_fire_rate(1.0 - 1e-12, 0.3, 0.45) < 1e-11


@given(st.floats(0.05, 0.95), st.floats(0.01, 0.95), st.floats(0.05, 0.95))
def test_solve_emissions_inverts_the_precision_identity(p, r, pi):
    q = false_fire_rate(p, r, pi)
    if not 0 < q < 1:
        with pytest.raises(InfeasibleTargetError):
            solve_emissions({d: (p, r) for d in DETECTOR_NAMES}, pi)
        return
    em = solve_emissions({d: (p, r) for d in DETECTOR_NAMES}, pi)
    for d in DETECTOR_NAMES:
        fh, fq = em.rates(d)
        assert fh == r
        assert implied_precision(fh, fq, pi) == pytest.approx(p, abs=1e-12)


def test_infeasible_target_names_detector():
    targets = dict(DEFAULT_TARGETS, lexical=(0.2, 0.9))
    with pytest.raises(InfeasibleTargetError) as exc:
        solve_emissions(targets, 0.45)
    assert exc.value.detector == "lexical"


def test_config_validation():
    with pytest.raises(ValidationError):
        GeneratorConfig(prevalence=1.5)
    with pytest.raises(ValidationError):
        GeneratorConfig(persistence=0.5)
    with pytest.raises(ValidationError):
        GeneratorConfig(targets={"m_gaze": (0.5, 0.5)})


# -- latent chain and streams ------------------------------------------------------------

def test_two_thousand_instances_at_frozen_seed():
    corpus = generate(GeneratorConfig(seed=7))
    labels = [h for _, s in corpus.streams for _, h in s]
    assert len(labels) == 2000
    assert abs(np.mean(labels) - 0.45) <= 0.05


def test_stationary_fraction_across_seeds():
    means = [np.mean([h for _, s in generate(GeneratorConfig(seed=s)).streams for _, h in s]) for s in range(30)]
    assert abs(np.mean(means) - 0.45) < 0.03


def test_memoryless_chain_lag_one():
    y = latent_chain(200000, 0.45, 1.0, np.random.default_rng(0))
    after_pos = y[1:][y[:-1]]
    assert after_pos.mean() == pytest.approx(0.45, abs=0.01)
    assert np.corrcoef(y[:-1], y[1:])[0, 1] == pytest.approx(0.0, abs=0.01)


@pytest.mark.parametrize("persistence", [5.0, 20.0])
def test_persistent_chain_statistics(persistence):
    pi = 0.45
    y = latent_chain(400000, pi, persistence, np.random.default_rng(1))
    keep = 1 - 1 / persistence
    assert y.mean() == pytest.approx(pi, abs=0.02)
    stay = (y[1:] == y[:-1]).mean()
    assert stay == pytest.approx(keep + (1 - keep) * (pi ** 2 + (1 - pi) ** 2), abs=0.005)


def _plugin_mi(a, b):
    n = len(a)
    joint = Counter(zip(a, b))
    pa, pb = Counter(a), Counter(b)
    return sum(c / n * math.log((c / n) / (pa[x] / n * pb[y] / n)) for (x, y), c in joint.items())


def test_previous_decision_carries_information_about_current_label():
    def mi(persistence):
        c = generate(GeneratorConfig(n_sessions=40, events_per_session=500, persistence=persistence, seed=3))
        prev, cur = [], []
        for _, s in c.streams:
            for (v, _), (_, h) in zip(s, s[1:]):
                prev.append(tuple(v))
                cur.append(h)
        return _plugin_mi(prev, cur)

    assert mi(20.0) > 0.02
    assert mi(20.0) > 5 * mi(1.0)


def test_stream_calibration_over_ten_thousand_events():
    corpus = generate(GeneratorConfig(n_sessions=80, seed=13))
    assert sum(len(s) for _, s in corpus.streams) == 10000
    pr = detector_precision_recall(corpus.streams)
    for d, (p, r) in DEFAULT_TARGETS.items():
        assert pr[d][0] == pytest.approx(p, abs=0.05), d
        assert pr[d][1] == pytest.approx(r, abs=0.05), d


def test_generation_is_deterministic():
    a = generate(GeneratorConfig(n_sessions=3, events_per_session=40, seed=9))
    b = generate(GeneratorConfig(n_sessions=3, events_per_session=40, seed=9))
    assert a.sessions == b.sessions and a.streams == b.streams
    c = generate(GeneratorConfig(n_sessions=3, events_per_session=40, seed=10))
    assert c.streams != a.streams


def test_streams_and_sessions_share_labels():
    c = generate(GeneratorConfig(n_sessions=3, events_per_session=40, seed=4))
    for s, (sid, stream) in zip(c.sessions, c.streams):
        assert s.session_id == sid
        assert list(s.help) == [h for _, h in stream]


# -- rich sessions ----------------------------------------------------------------------------

def test_zero_sessions():
    assert generate_rich_sessions(GeneratorConfig(n_sessions=0)) == []


def test_kind_mix_matches_configured_counts(rich_sessions):
    kinds = Counter(e.kind for s in rich_sessions for e in s.events)
    total = sum(kinds.values())
    assert total == 10000
    for k, share in KIND_SHARE.items():
        assert kinds[k] / total == pytest.approx(share, abs=0.03), k


def test_gaps_are_positive_and_near_configured_mean(rich_sessions):
    gaps = np.concatenate([np.diff([e.t for e in s.events]) for s in rich_sessions])
    assert (gaps >= 0).all()
    # the detector timing constraints shorten some gaps; the mean stays within 25%
    assert gaps.mean() == pytest.approx(1.5, rel=0.25)


@pytest.mark.parametrize("detector", ["m_gaze", "c_gaze", "lexical"])
def test_rule_detectors_reproduce_calibration(rich_pr, detector):
    p, r = DEFAULT_TARGETS[detector]
    assert rich_pr[detector][0] == pytest.approx(p, abs=0.07)
    assert rich_pr[detector][1] == pytest.approx(r, abs=0.07)


def test_task_detector_precision_on_rich_sessions(rich_pr):
    assert rich_pr["task"][0] == pytest.approx(DEFAULT_TARGETS["task"][0], abs=0.07)


@pytest.mark.xfail(strict=True, reason="task recall .44 needs more Task events than the kind mix provides; "
                                       "see test_task_recall_target_is_unreachable_under_the_kind_mix")
def test_task_detector_recall_on_rich_sessions(rich_pr):
    assert rich_pr["task"][1] == pytest.approx(DEFAULT_TARGETS["task"][1], abs=0.07)


def test_task_recall_target_is_unreachable_under_the_kind_mix():
    # only Task events can score >= 0.5 on the task detector, so
    # fires <= task share and recall = precision * fires / prevalence
    # <= precision * task_share / prevalence
    p_hi = DEFAULT_TARGETS["task"][0] + 0.07
    share_hi = KIND_SHARE["Task"] + 0.03
    bound = p_hi * share_hi / 0.45
    assert bound < DEFAULT_TARGETS["task"][1] - 0.07
    assert plan_rich(GeneratorConfig()).task_recall < bound


def test_only_task_events_fire_the_task_detector(rich_sessions):
    for s in rich_sessions[:10]:
        for e, (v, _) in zip(s.events, run_all_detectors(s)):
            if v.task >= 0.5:
                assert e.kind == "Task"
