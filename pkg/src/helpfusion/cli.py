"""``helpfusion`` command line: generate, detect, sweep, report, train, apply.

Exit codes: 0 success, 1 usage or flag error, 2 data or validation error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import DETECTOR_NAMES, __version__
from .errors import HelpFusionError, InfeasibleTargetError
from .learners import ALGORITHMS, ALL_ALGORITHMS, BACKEND, LearnerParams, TrainSet

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

_ARGV: list = []


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- flag parsing helpers ------------------------------------------------------------

def parse_windows(text: str) -> tuple[int, ...]:
    """``"1..50"``, ``"1,5,10"`` or ``"1..20:5"`` (a step); items may be mixed."""
    out = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        try:
            if ".." in item:
                rng, _, step = item.partition(":")
                lo, hi = (int(x) for x in rng.split(".."))
                step = int(step) if step else 1
                if step < 1 or hi < lo:
                    raise ValueError
                vals = list(range(lo, hi + 1, step))
                if vals[-1] != hi:
                    vals.append(hi)
                out.extend(vals)
            else:
                out.append(int(item))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad window specification {item!r}") from None
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError("window sizes must be positive integers")
    return tuple(sorted(set(out)))


def parse_algos(text: str) -> tuple[str, ...]:
    if text == "all":
        return ALL_ALGORITHMS
    names = tuple(a.strip() for a in text.split(",") if a.strip())
    bad = [a for a in names if a not in ALL_ALGORITHMS]
    if bad or not names:
        raise argparse.ArgumentTypeError(
            f"unknown algorithm(s) {', '.join(bad) or text!r}; choose from {', '.join(ALL_ALGORITHMS)} or all")
    return names


def _unit_interval(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"{v} must lie strictly between 0 and 1")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"{v} must be at least 1")
    return v


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"{v} must be non-negative")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"{v} must be positive")
    return v


def _at_least_one(text):
    v = _positive_float(text)
    if v < 1.0:
        raise argparse.ArgumentTypeError(f"{v} must be at least 1")
    return v


def read_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"{path}:{n}: expected key=value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


_LEARNER_FIELDS = {f.name: f for f in dataclasses.fields(LearnerParams)}


def _coerce_param(name, text):
    default = _LEARNER_FIELDS[name].default
    if text.lower() == "none":
        return None
    if isinstance(default, bool):
        return text.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int) or name.endswith("max_features"):
        return int(text)
    return float(text)


def _apply_config(parser, sub, args, argv):
    """Re-parse with config values as defaults so explicit flags still win."""
    if not getattr(args, "config", None):
        return args, {}
    cfg = read_config(args.config)
    dests = {a.dest: a for a in sub._actions}
    defaults, params = {}, {}
    for key, value in cfg.items():
        if key in dests:
            action = dests[key]
            if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                defaults[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                defaults[key] = value
        elif key in _LEARNER_FIELDS:
            try:
                params[key] = _coerce_param(key, value)
            except ValueError:
                raise UsageError(f"{args.config}: bad value for {key}: {value!r}") from None
        else:
            raise UsageError(f"{args.config}: unknown key {key!r}")
    sub.set_defaults(**defaults)
    return parser.parse_args(argv), params


# -- manifest ------------------------------------------------------------------------

def file_digest(path) -> str:
    h = hashlib.sha256()
    p = Path(path)
    files = sorted(p.glob("*.json")) if p.is_dir() else [p]
    for f in files:
        h.update(f.name.encode())
        h.update(f.read_bytes())
    return h.hexdigest()


def _jsonable(obj):
    if dataclasses.is_dataclass(obj):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (set, frozenset)):
        return sorted(_jsonable(v) for v in obj)
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_manifest(outdir, command, config, seed, inputs=(), outputs=(), started=None, extra=None,
                   name="manifest.json"):
    doc = {
        "tool": "helpfusion",
        "version": __version__,
        "command": command,
        "argv": list(_ARGV),
        "config": _jsonable(config),
        "master_seed": seed,
        "inputs": {str(p): file_digest(p) for p in inputs},
        "outputs": {str(Path(p).name): file_digest(p) for p in outputs},
        "backend": BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "started_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started or time.time())),
        "finished_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    if extra:
        doc.update(_jsonable(extra))
    path = Path(outdir) / name
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# -- commands ------------------------------------------------------------------------

def cmd_generate(args, params):
    from .detectors import save_decisions
    from .events import save_sessions
    from .synthgen import GeneratorConfig, detector_precision_recall, generate, solve_emissions

    started = time.time()
    config = GeneratorConfig(n_sessions=args.sessions, events_per_session=args.events,
                             mean_gap_seconds=args.gap, prevalence=args.prevalence,
                             persistence=args.persistence, seed=args.seed)
    emissions = solve_emissions(config.targets, config.prevalence)
    out = Path(args.out)
    sess_dir = out / "sessions"
    sess_dir.mkdir(parents=True, exist_ok=True)
    corpus = generate(config)
    save_sessions(corpus.sessions, sess_dir)
    decisions = out / "decisions.csv"
    save_decisions(corpus.streams, decisions, corpus.times())

    empirical = detector_precision_recall(corpus.streams) if corpus.streams else {}
    print(f"wrote {len(corpus.sessions)} sessions to {sess_dir} and decisions to {decisions}")
    print(f"{'detector':<9} {'target P':>8} {'target R':>8} {'fire|help':>9} {'q_d':>8} {'emp P':>6} {'emp R':>6}")
    for name in DETECTOR_NAMES:
        p, r = config.targets[name]
        fh, q = emissions.rates(name)
        ep, er = empirical.get(name, (0.0, 0.0))
        print(f"{name:<9} {p:8.2f} {r:8.2f} {fh:9.4f} {q:8.4f} {ep:6.3f} {er:6.3f}")
    write_manifest(out, "generate", config, config.seed, outputs=[sess_dir, decisions], started=started,
                   extra={"emissions": emissions})
    return EXIT_OK


def cmd_detect(args, params):
    from .detectors import DetectorConfig, run_all_detectors, save_decisions
    from .events import load_sessions
    from .synthgen import detector_precision_recall

    started = time.time()
    sessions = load_sessions(args.sessions)
    config = DetectorConfig(mutual_gaze_min_duration=args.min_dwell, confirm_window=args.confirm_window)
    streams = [(s.session_id, run_all_detectors(s, config)) for s in sessions]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_decisions(streams, out, {s.session_id: [e.t for e in s.events] for s in sessions})
    rows = sum(len(st) for _, st in streams)
    print(f"wrote {rows} decision rows for {len(sessions)} sessions to {out}")
    if rows:
        for name, (p, r) in detector_precision_recall(streams).items():
            print(f"{name:<9} precision {p:.3f} recall {r:.3f}")
    write_manifest(out.parent, "detect", config, None, inputs=[args.sessions], outputs=[out], started=started,
                   name=f"{out.stem}.manifest.json")
    return EXIT_OK


def _learner_params(args, params):
    base = LearnerParams(**params)
    if getattr(args, "trees", None):
        base = dataclasses.replace(base, forest_n_estimators=args.trees)
    return base


def cmd_sweep(args, params):
    from .detectors import load_decisions
    from .harness import ExperimentConfig, quick_config, run_sweep

    started = time.time()
    streams = load_decisions(args.decisions)
    lp = _learner_params(args, params)
    chosen = {k: v for k, v in (("window_sizes", args.windows), ("algorithms", args.algos),
                                ("iterations", args.iters), ("folds", args.folds)) if v is not None}
    if args.quick:
        config = quick_config(master_seed=args.seed, params=lp, **chosen)
    else:
        config = ExperimentConfig(master_seed=args.seed, params=lp, **chosen)
    n = sum(len(s) for _, s in streams)
    if n < config.folds:
        raise HelpFusionError(f"corpus has {n} instances, fewer than the {config.folds} folds")

    total = len(config.cells())
    step = max(1, total // 20)

    def progress(done, of):
        if not args.quiet and (done % step == 0 or done == of):
            print(f"  {done}/{of} cells", file=sys.stderr)

    report = run_sweep(streams, config, threads=args.threads, progress=progress)
    out = Path(args.out)
    paths = report.write(out)
    print(f"{len(report.records)} records over {n} instances (prevalence {report.prevalence:.3f})")
    if report.skipped_folds:
        print(f"warning: {report.skipped_folds} folds had no training positives and were skipped", file=sys.stderr)
    if report.resampled_folds:
        print(f"note: {report.resampled_folds} folds drew negatives with replacement", file=sys.stderr)
    for name, p in paths.items():
        print(f"{name}: {p}")
    write_manifest(out, "sweep", config, config.master_seed, inputs=[args.decisions],
                   outputs=list(paths.values()), started=started,
                   extra={"threads": args.threads, "quick": args.quick, "corpus_size": n})
    return EXIT_OK


def cmd_report(args, params):
    from .harness import read_records
    from .report import render

    run = Path(args.run)
    records_path = run / "records.csv" if run.is_dir() else run
    try:
        records = read_records(records_path)
    except (OSError, ValueError) as exc:
        raise HelpFusionError(str(exc)) from None
    if not records:
        raise HelpFusionError(f"{records_path}: no records")
    out = Path(args.out) if args.out else (records_path.parent / "report")
    result = render(records, out, args.windows)
    print(result["grid"])
    print(result["auc"])
    for name, p in result["paths"].items():
        print(f"{name}: {p}")
    return EXIT_OK


def cmd_train(args, params):
    from .detectors import load_decisions
    from .harness import balance
    from .learners import fit, save_model
    from .windowing import build_corpus

    streams = load_decisions(args.decisions)
    corpus = build_corpus(streams, args.window)
    if len(corpus) == 0:
        raise HelpFusionError("decisions file has no rows")
    rng = np.random.default_rng(args.seed)
    bal = balance(np.arange(len(corpus)), corpus.targets, rng)
    lp = _learner_params(args, params)
    model = fit(args.algo, TrainSet(corpus.features[bal.indices], corpus.targets[bal.indices]), lp, args.seed)
    save_model(model, args.out)
    print(f"trained {args.algo} on {len(bal.indices)} balanced instances (window {args.window}); wrote {args.out}")
    return EXIT_OK


def cmd_apply(args, params):
    from .detectors import load_decisions
    from .learners import load_model
    from .windowing import build_corpus

    model = load_model(args.model)
    if model.feature_dim > 0:
        if model.feature_dim % 4:
            raise HelpFusionError(f"model feature dimension {model.feature_dim} is not a multiple of 4")
        window = model.feature_dim // 4
    elif args.window:
        window = args.window
    else:
        raise UsageError("--window is required for a model without a fixed feature dimension")
    corpus = build_corpus(load_decisions(args.decisions), window)
    scores = model.score_batch(corpus.features) if len(corpus) else np.zeros(0)
    out = Path(args.out)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["session_id", "event_index", "score", "prediction", "help"])
        for sid, idx, s, h in zip(corpus.session_ids, corpus.event_index, scores, corpus.targets):
            w.writerow([sid, int(idx), f"{s:.6f}", int(s >= 0.5), int(h)])
    print(f"scored {len(corpus)} events with window {window}; wrote {out}")
    return EXIT_OK


# -- parser --------------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="helpfusion", description="Late-fusion help detection over windowed detector outputs.")
    p.add_argument("--version", action="version", version=f"helpfusion {__version__}")
    subs = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    subs.required = True

    g = subs.add_parser("generate", help="write synthetic sessions and calibrated decision streams")
    g.add_argument("--sessions", type=_nonneg_int, default=16)
    g.add_argument("--events", type=_nonneg_int, default=125, help="events per session")
    g.add_argument("--gap", type=_positive_float, default=1.5, help="mean seconds between events")
    g.add_argument("--prevalence", type=_unit_interval, default=0.45)
    g.add_argument("--persistence", type=_at_least_one, default=20.0, help="expected events between state redraws")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--config")
    g.set_defaults(func=cmd_generate)

    d = subs.add_parser("detect", help="run the four detectors over session files")
    d.add_argument("sessions", help="session JSON file or directory")
    d.add_argument("--out", required=True, help="decisions CSV path")
    d.add_argument("--min-dwell", type=_positive_float, default=1.0)
    d.add_argument("--confirm-window", type=_positive_float, default=2.0)
    d.add_argument("--config")
    d.set_defaults(func=cmd_detect)

    s = subs.add_parser("sweep", help="cross-validate every (window, algorithm) cell")
    s.add_argument("decisions", help="decisions CSV")
    s.add_argument("--out", required=True, help="run directory")
    s.add_argument("--quick", action="store_true", help="windows 1,5,10,15,20; 5 iterations; 100 trees")
    s.add_argument("--windows", type=parse_windows, default=None)
    s.add_argument("--algos", type=parse_algos, default=None)
    s.add_argument("--iters", type=_positive_int, default=None)
    s.add_argument("--folds", type=_positive_int, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threads", type=_positive_int, default=1)
    s.add_argument("--trees", type=_positive_int, default=None, help="forest size override")
    s.add_argument("--quiet", action="store_true")
    s.add_argument("--config")
    s.set_defaults(func=cmd_sweep)

    r = subs.add_parser("report", help="F1 grid, AUC table and charts from a run")
    r.add_argument("run", help="run directory or records CSV")
    r.add_argument("--windows", type=parse_windows, default=None, help="grid columns")
    r.add_argument("--out")
    r.add_argument("--config")
    r.set_defaults(func=cmd_report)

    t = subs.add_parser("train", help="fit one learner on the balanced full corpus")
    t.add_argument("decisions")
    t.add_argument("--algo", choices=ALL_ALGORITHMS, default="forest")
    t.add_argument("--window", type=_positive_int, default=10)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--trees", type=_positive_int, default=None)
    t.add_argument("--out", required=True, help="model JSON path")
    t.add_argument("--config")
    t.set_defaults(func=cmd_train)

    a = subs.add_parser("apply", help="score a decisions CSV with a saved model")
    a.add_argument("model")
    a.add_argument("decisions")
    a.add_argument("--window", type=_positive_int, default=None, help="needed only for the baseline")
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_apply)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    _ARGV[:] = argv
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        args, params = _apply_config(parser, sub, args, argv)
        return args.func(args, params)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"helpfusion: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleTargetError as exc:
        print(f"helpfusion: infeasible calibration target for detector {exc.detector}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (HelpFusionError, ValueError, OSError) as exc:
        print(f"helpfusion: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())


__all__ = ["main", "build_parser", "parse_windows", "parse_algos", "read_config", "ALGORITHMS"]
