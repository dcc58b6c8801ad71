"""End-to-end orchestration: session logs -> feature files -> per-user reports."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import platform
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np
import sklearn

from . import __version__
from .dataset import SampleSet, assemble, build_pools, rng_for, standardize
from .events import discover_sessions, load_session, split_by_finger
from .features import feature_names, featurize_many
from .forest import RandomForestAuthenticator
from .knn import KNNAuthenticator
from .metrics import MetricsReport, det_curve, evaluate, summarize
from .segmentation import DEFAULT_WINDOW, segment

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ("User", "Game", "Model", "Accuracy", "FPR", "FNR", "EER")
FEATURE_SUFFIX = ".features.csv"
MODELS = ("rf", "knn")


class NoSessionsFound(FileNotFoundError):
    pass


class SessionError(RuntimeError):
    """A session file failed to load or featurize; the cause is chained."""


@dataclass
class RunConfig:
    data_dir: str = "."
    out_dir: str = "out"
    game: str | None = None
    window: int = DEFAULT_WINDOW
    ratio: float = 0.8
    chronological: bool = False
    model: str = "both"
    seed: int = 0
    n_estimators: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 1
    max_features: int | str | None = "sqrt"
    bootstrap: bool = True
    k: int = 5
    wrap_angles: bool = True
    include_ellipse: bool = False
    n_jobs: int | None = None
    report_format: str = "csv"
    extra: dict = field(default_factory=dict)

    def models(self) -> tuple[str, ...]:
        if self.model == "both":
            return MODELS
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        return (self.model,)


def _fmt(v) -> str:
    return repr(float(v))


def sha256(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def session_features(path, user_id, game, window=DEFAULT_WINDOW, wrap=True, include_ellipse=False):
    """Load one session and return (SampleSet, bookkeeping dict)."""
    session = load_session(path, user_id, game)
    streams = split_by_finger(session)
    parts, gestures_per_finger = [], []
    for finger, stream in enumerate(streams):
        gestures = segment(stream, window, user_id, game)
        gestures_per_finger.append(len(gestures))
        if gestures:
            parts.append(
                SampleSet(
                    featurize_many(gestures, wrap, include_ellipse),
                    np.full(len(gestures), user_id, dtype=object),
                    np.full(len(gestures), finger, dtype=np.int64),
                    np.array([g.gesture_id for g in gestures], dtype=object),
                )
            )
    n_feat = len(feature_names(include_ellipse))
    samples = (
        SampleSet.concat(parts)
        if parts
        else SampleSet(np.empty((0, n_feat)), np.empty(0, object), np.empty(0, np.int64), np.empty(0, object))
    )
    counts = {
        "user_id": user_id,
        "game": game,
        **session.summary.as_dict(),
        "events": len(session),
        "events_f0": len(streams[0]),
        "events_f1": len(streams[1]),
        "gestures_f0": gestures_per_finger[0],
        "gestures_f1": gestures_per_finger[1],
        "discarded_remainder": len(streams[0]) % window + len(streams[1]) % window,
    }
    return samples, counts


def write_features(path, samples: SampleSet, game: str, names) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*names, "user_id", "game", "finger", "gesture_id"])
        for i in range(len(samples)):
            w.writerow([*map(_fmt, samples.X[i]), samples.user[i], game, int(samples.finger[i]), samples.gesture_id[i]])


def read_features(path) -> tuple[str, str, SampleSet, list[str]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    n_feat = header.index("user_id")
    names = header[:n_feat]
    if rows:
        X = np.array([[float(v) for v in r[:n_feat]] for r in rows])
        user = rows[0][n_feat]
        game = rows[0][n_feat + 1]
    else:
        X = np.empty((0, n_feat))
        user, game = Path(path).name[: -len(FEATURE_SUFFIX)].rsplit("_", 1)
    samples = SampleSet(
        X,
        np.array([r[n_feat] for r in rows], dtype=object),
        np.array([int(r[n_feat + 2]) for r in rows], dtype=np.int64),
        np.array([r[n_feat + 3] for r in rows], dtype=object),
    )
    return user, game, samples, names


def run_extract(config: RunConfig) -> dict:
    """Featurize every session in ``config.data_dir`` into ``config.out_dir``."""
    sessions = discover_sessions(config.data_dir, config.game)
    if not sessions:
        raise NoSessionsFound(f"no <user>_<game>.csv session files found in {config.data_dir}")
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = feature_names(config.include_ellipse)
    summary_rows = []
    for path, user, game in sessions:
        try:
            samples, counts = session_features(
                path, user, game, config.window, config.wrap_angles, config.include_ellipse
            )
        except Exception as exc:
            raise SessionError(f"{path}: {type(exc).__name__}: {exc}") from exc
        write_features(out / f"{user}_{game}{FEATURE_SUFFIX}", samples, game, names)
        counts["digest"] = sha256(path)
        summary_rows.append(counts)
        logger.info("%s: %d events, %d gestures", path.name, counts["events"], len(samples))

    keys = [
        "user_id", "game", "rows_read", "rows_dropped", "duplicates_dropped", "events",
        "events_f0", "events_f1", "gestures_f0", "gestures_f1", "discarded_remainder",
    ]
    with open(out / "extract_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for r in summary_rows:
            w.writerow([r[k] for k in keys])

    totals: dict = defaultdict(lambda: defaultdict(int))
    for r in summary_rows:
        for k in keys[2:]:
            totals[r["game"]][k] += r[k]
        totals[r["game"]]["gestures"] += r["gestures_f0"] + r["gestures_f1"]
        totals[r["game"]]["sessions"] += 1
    totals = {g: dict(v) for g, v in sorted(totals.items())}
    _write_manifest(
        out / "extract_manifest.json",
        config,
        inputs={p.name: r["digest"] for (p, _, _), r in zip(sessions, summary_rows)},
        totals=totals,
    )
    return totals


def _write_manifest(path, config: RunConfig, **extra) -> None:
    manifest = {
        "config": {k: v for k, v in vars(config).items() if k != "extra"},
        "versions": {
            "touchauth": __version__,
            "numpy": np.__version__,
            "scikit-learn": sklearn.__version__,
            "numba": numba.__version__,
            "python": platform.python_version(),
        },
        **extra,
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")


def load_feature_dir(directory, game: str | None = None) -> dict[str, dict[str, SampleSet]]:
    """{game: {user: samples}} from a directory of feature files."""
    by_game: dict = defaultdict(dict)
    paths = sorted(Path(directory).glob(f"*{FEATURE_SUFFIX}"))
    for path in paths:
        user, g, samples, _ = read_features(path)
        if game is None or g.lower() == game.lower():
            by_game[g][user] = samples
    if not by_game:
        raise NoSessionsFound(f"no feature files found in {directory}")
    return dict(by_game)


def make_model(name: str, config: RunConfig, random_state: int):
    if name == "rf":
        return RandomForestAuthenticator(
            n_estimators=config.n_estimators,
            max_depth=config.max_depth,
            min_samples_leaf=config.min_samples_leaf,
            max_features=config.max_features,
            bootstrap=config.bootstrap,
            random_state=random_state,
            n_jobs=config.n_jobs,
        )
    if name == "knn":
        return KNNAuthenticator(n_neighbors=config.k)
    raise ValueError(f"unknown model {name!r}")


@dataclass
class CellResult:
    user: str
    game: str
    model: str
    report: MetricsReport | None = None
    error: str | None = None
    det: dict | None = None
    meta: dict | None = None


def evaluate_game(game: str, samples: dict[str, SampleSet], config: RunConfig) -> list[CellResult]:
    """Every (user, model) cell for one game."""
    usable = {u: s for u, s in samples.items() if len(s) >= 2}
    results = []
    pools = build_pools(usable, config.ratio, config.seed, game, config.chronological)
    for model_name in config.models():
        for user in sorted(samples):
            cell = CellResult(user, game, model_name)
            try:
                if user not in pools:
                    raise ValueError(f"user {user} has {len(samples[user])} gestures, need >= 2")
                ds = standardize(assemble(user, game, pools, config.seed))
                state = int(rng_for(config.seed, "model", game, user, model_name).integers(2**32))
                model = make_model(model_name, config, state).fit(ds.train.X, ds.train.y)
                scores = model.genuine_score(ds.test.X)
                cell.report = evaluate(scores, ds.test.y)
                thresholds, fpr, fnr = det_curve(scores, ds.test.y)
                cell.det = {"threshold": thresholds.tolist(), "fpr": fpr.tolist(), "fnr": fnr.tolist()}
                cell.meta = ds.meta
            except Exception as exc:  # recorded as a skipped row
                logger.warning("%s/%s/%s skipped: %s", game, user, model_name, exc)
                cell.error = f"{type(exc).__name__}: {exc}"
            results.append(cell)
    return results


def _row(user, game, model, values) -> list[str]:
    return [user, game, model.upper(), *(f"{values[k]:.4f}" for k in ("accuracy", "fpr", "fnr", "eer"))]


def report_rows(results: list[CellResult]) -> list[list[str]]:
    """Per-user rows followed by Avg and Stdv rows for every (game, model)."""
    rows, avg, std = [], [], []
    groups: dict = defaultdict(list)
    for r in results:
        groups[(r.game, r.model)].append(r)
    for (game, model), cells in groups.items():
        ok = []
        for c in cells:
            if c.report is None:
                rows.append([c.user, game, model.upper(), "NA", "NA", "NA", "NA"])
            else:
                ok.append(c.report)
                rows.append(_row(c.user, game, model, vars(c.report)))
        if ok:
            mean, sd = summarize(ok)
            avg.append(_row("Avg", game, model, mean))
            std.append(_row("Stdv", game, model, sd))
    return rows + avg + std


def write_report_csv(path, results: list[CellResult]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        w.writerows(report_rows(results))


def results_to_dict(results: list[CellResult]) -> dict:
    cells = []
    for r in results:
        entry = {"user": r.user, "game": r.game, "model": r.model}
        if r.report is None:
            entry["skipped"] = r.error
        else:
            entry["metrics"] = r.report.as_dict()
            entry["det"] = r.det
            entry["dataset"] = r.meta
        cells.append(entry)
    summary = []
    groups: dict = defaultdict(list)
    for r in results:
        if r.report is not None:
            groups[(r.game, r.model)].append(r.report)
    for (game, model), reports in groups.items():
        mean, sd = summarize(reports)
        summary.append({"game": game, "model": model, "users": len(reports), "mean": mean, "std": sd})
    return {"cells": cells, "summary": summary}


def run_evaluate(config: RunConfig) -> tuple[list[CellResult], int]:
    """Evaluate every user, game and model; returns results and an exit code."""
    by_game = load_feature_dir(config.data_dir, config.game)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = []
    for game in sorted(by_game):
        results.extend(evaluate_game(game, by_game[game], config))

    write_report_csv(out / "report.csv", results)
    if config.report_format == "structured":
        (out / "report.json").write_text(json.dumps(results_to_dict(results), indent=2, sort_keys=True) + "\n")
    inputs = {p.name: sha256(p) for p in sorted(Path(config.data_dir).glob(f"*{FEATURE_SUFFIX}"))}
    _write_manifest(out / "evaluate_manifest.json", config, inputs=inputs)

    failed = sum(r.report is None for r in results)
    return results, 0 if failed == 0 else 1
