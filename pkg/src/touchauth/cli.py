"""Command line interface.

    touchauth synth    --users 5 --duration 600 --seed 7 --out corpus/
    touchauth extract  --data corpus/ --out features/
    touchauth evaluate --data features/ --out results/ --model both
    touchauth report   results/report.json

Settings come from built-in defaults, then ``--config FILE`` (YAML or JSON
mapping of RunConfig fields), then command-line flags. Exit codes: 0 success,
1 partial failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import yaml

from .pipeline import RunConfig, report_rows, run_evaluate, run_extract, REPORT_COLUMNS
from .synth import write_corpus

DATA_ENV = "TOUCHAUTH_DATA_DIR"
EXIT_OK, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2

logger = logging.getLogger("touchauth")


class UsageError(Exception):
    pass


def _max_features(value: str):
    if value in ("sqrt", "none", "None"):
        return None if value.lower() == "none" else "sqrt"
    return int(value)


def _max_depth(value: str):
    return None if value.lower() in ("none", "0") else int(value)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML/JSON file with RunConfig fields")
    p.add_argument("--data", dest="data_dir", help=f"input directory (default ${DATA_ENV} or .)")
    p.add_argument("--out", dest="out_dir", help="output directory")
    p.add_argument("--game", help="only process this game")
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="touchauth", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic session corpus")
    p.add_argument("--users", type=int, default=5)
    p.add_argument("--duration", type=float, default=600.0, help="seconds per session")
    p.add_argument("--identical", action="store_true", help="give every user the same profile")
    p.add_argument("--out", dest="out_dir", default="corpus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("extract", help="session CSVs -> per-session feature files")
    _common(p)
    p.add_argument("--window", type=int, help="events per gesture (default 10)")
    p.add_argument("--no-wrap", dest="wrap_angles", action="store_const", const=False,
                   help="use literal path-tangent differences for angular velocity")
    p.add_argument("--ellipse", dest="include_ellipse", action="store_const", const=True,
                   help="append touch-ellipse statistics (8 extra columns)")

    p = sub.add_parser("evaluate", help="feature files -> per-user metrics report")
    _common(p)
    p.add_argument("--model", choices=("rf", "knn", "both"))
    p.add_argument("--ratio", type=float, help="train fraction (default 0.8)")
    p.add_argument("--chronological", action="store_const", const=True,
                   help="split each user's gestures in time order instead of at random")
    p.add_argument("--trees", dest="n_estimators", type=int)
    p.add_argument("--max-depth", type=_max_depth)
    p.add_argument("--min-leaf", dest="min_samples_leaf", type=int)
    p.add_argument("--max-features", type=_max_features)
    p.add_argument("--no-bootstrap", dest="bootstrap", action="store_const", const=False)
    p.add_argument("-k", type=int, dest="k")
    p.add_argument("--jobs", dest="n_jobs", type=int)
    p.add_argument("--format", dest="report_format", choices=("csv", "structured"))

    p = sub.add_parser("report", help="print a saved report as a table")
    p.add_argument("path", help="report.csv or report.json written by evaluate")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must be a mapping")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return data


def make_config(args: argparse.Namespace) -> RunConfig:
    values = {"data_dir": os.environ.get(DATA_ENV, ".")}
    values.update(load_config(getattr(args, "config", None)))
    for f in dataclasses.fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    config = RunConfig(**values)
    if config.window < 4:
        raise UsageError("--window must be at least 4")
    if not 0 < config.ratio < 1:
        raise UsageError("--ratio must lie in (0, 1)")
    if config.model not in ("rf", "knn", "both"):
        raise UsageError(f"unknown model {config.model!r}")
    if config.k < 1 or config.n_estimators < 1:
        raise UsageError("-k and --trees must be positive")
    return config


def cmd_synth(args) -> int:
    if args.users < 2:
        raise UsageError("--users must be at least 2")
    if args.duration <= 0:
        raise UsageError("--duration must be positive")
    paths = write_corpus(args.out_dir, args.users, args.duration, args.seed, args.identical)
    print(f"wrote {len(paths)} sessions and manifest.json to {args.out_dir}")
    return EXIT_OK


def cmd_extract(args) -> int:
    config = make_config(args)
    totals = run_extract(config)
    for game, t in totals.items():
        print(
            f"{game}: {t['sessions']} sessions, {t['rows_read']} rows read, "
            f"{t['rows_dropped']} dropped, {t['duplicates_dropped']} same-time duplicates, "
            f"{t['events']} events, {t['gestures']} gestures"
        )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    config = make_config(args)
    results, code = run_evaluate(config)
    if all(r.report is None for r in results):
        print("every user failed; see log", file=sys.stderr)
        return EXIT_PARTIAL
    _print_table(report_rows(results))
    return code


def _print_table(rows) -> None:
    widths = [max(len(str(r[i])) for r in [REPORT_COLUMNS, *rows]) for i in range(len(REPORT_COLUMNS))]
    for r in [REPORT_COLUMNS, *rows]:
        print("  ".join(str(v).ljust(w) for v, w in zip(r, widths)))


def cmd_report(args) -> int:
    path = Path(args.path)
    if not path.is_file():
        raise UsageError(f"no such report: {path}")
    if path.suffix == ".json":
        data = json.loads(path.read_text())
        rows = []
        for c in data["cells"]:
            m = c.get("metrics")
            rows.append(
                [c["user"], c["game"], c["model"].upper(),
                 *(f"{m[k]:.4f}" if m else "NA" for k in ("accuracy", "fpr", "fnr", "eer"))]
            )
        for label, key in (("Avg", "mean"), ("Stdv", "std")):
            for s in data["summary"]:
                rows.append([label, s["game"], s["model"].upper(),
                             *(f"{s[key][k]:.4f}" for k in ("accuracy", "fpr", "fnr", "eer"))])
    else:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            rows = list(reader)
    _print_table(rows)
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "extract": cmd_extract, "evaluate": cmd_evaluate, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"touchauth {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"touchauth {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
