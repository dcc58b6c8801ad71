"""Parsing and cleaning of raw multi-finger touch event logs.

Each CSV record is one touch event for one finger::

    Timestamp,X,Y,BTN_TOUCH,TOUCH_MAJOR,TOUCH_MINOR,FINGER
    55.021863,1721,458,HELD,27,19,0
"""

from __future__ import annotations

import csv
import enum
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

HEADER = ("Timestamp", "X", "Y", "BTN_TOUCH", "TOUCH_MAJOR", "TOUCH_MINOR", "FINGER")
GAMES = ("Snake", "Minecraft")


class TouchState(str, enum.Enum):
    DOWN = "DOWN"
    HELD = "HELD"
    UP = "UP"


_STATES = {s.value: s for s in TouchState}
_NULLS = frozenset({"", "null", "NULL", "Null", "none", "None", "NONE", "nan", "NaN", "NAN"})


class ParseError(ValueError):
    """A log record could not be turned into a TouchEvent."""

    reason = "parse_error"


class MissingField(ParseError):
    reason = "missing_field"


class MalformedNumber(ParseError):
    reason = "malformed_number"


class UnknownTouchState(ParseError):
    reason = "unknown_touch_state"


class UnknownFinger(ParseError):
    reason = "unknown_finger"


class InvalidEvent(ParseError):
    reason = "invalid_event"


class EmptyLog(ValueError):
    """A session file produced zero valid events."""


@dataclass(frozen=True)
class TouchEvent:
    timestamp: float
    x: int
    y: int
    touch_state: TouchState
    touch_major: int
    touch_minor: int
    finger: int

    def to_row(self) -> list[str]:
        # repr() of a float round-trips exactly through float()
        return [
            repr(self.timestamp),
            str(self.x),
            str(self.y),
            self.touch_state.value,
            str(self.touch_major),
            str(self.touch_minor),
            str(self.finger),
        ]

    def to_line(self) -> str:
        return ",".join(self.to_row())


@dataclass
class CleaningSummary:
    rows_read: int = 0
    rows_dropped: int = 0
    reasons: Counter = field(default_factory=Counter)
    duplicates_dropped: int = 0

    def as_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_dropped": self.rows_dropped,
            "duplicates_dropped": self.duplicates_dropped,
            **{f"dropped_{k}": v for k, v in sorted(self.reasons.items())},
        }


@dataclass(frozen=True)
class SessionLog:
    user_id: str
    game: str
    events: tuple[TouchEvent, ...]
    summary: CleaningSummary = field(default_factory=CleaningSummary, compare=False)

    def __len__(self) -> int:
        return len(self.events)


def _parse_int(token: str, name: str) -> int:
    try:
        return int(token)
    except ValueError:
        pass
    # tolerate integral floats such as "1721.0"
    try:
        value = float(token)
    except ValueError:
        raise MalformedNumber(f"{name}: {token!r} is not a number") from None
    if not math.isfinite(value) or value != int(value):
        raise MalformedNumber(f"{name}: {token!r} is not an integer")
    return int(value)


def parse_fields(fields: Sequence[str]) -> TouchEvent:
    if len(fields) < 7:
        raise MissingField(f"expected 7 fields, got {len(fields)}")
    if len(fields) > 7 and any(f.strip() for f in fields[7:]):
        raise ParseError(f"expected 7 fields, got {len(fields)}")
    tokens = [f.strip() for f in fields[:7]]
    for name, token in zip(HEADER, tokens):
        if token in _NULLS:
            raise MissingField(f"{name} is empty")

    try:
        timestamp = float(tokens[0])
    except ValueError:
        raise MalformedNumber(f"Timestamp: {tokens[0]!r} is not a number") from None
    if not math.isfinite(timestamp) or timestamp < 0:
        raise InvalidEvent(f"timestamp {timestamp} must be finite and non-negative")

    x = _parse_int(tokens[1], "X")
    y = _parse_int(tokens[2], "Y")
    state = _STATES.get(tokens[3].upper())
    if state is None:
        raise UnknownTouchState(f"unknown touch state {tokens[3]!r}")
    major = _parse_int(tokens[4], "TOUCH_MAJOR")
    minor = _parse_int(tokens[5], "TOUCH_MINOR")
    if not major >= minor >= 0:
        raise InvalidEvent(f"touch ellipse axes must satisfy major >= minor >= 0, got {major}, {minor}")
    try:
        finger = _parse_int(tokens[6], "FINGER")
    except MalformedNumber:
        raise UnknownFinger(f"unknown finger {tokens[6]!r}") from None
    if finger not in (0, 1):
        raise UnknownFinger(f"unknown finger {finger}")
    return TouchEvent(timestamp, x, y, state, major, minor, finger)


def parse_line(line: str) -> TouchEvent:
    """Parse one non-header CSV record.

    Raises a ``ParseError`` subclass naming what was wrong with the record.
    """
    return parse_fields(line.rstrip("\r\n").split(","))


def _is_header(fields: Sequence[str]) -> bool:
    if not fields or not fields[0].strip():
        return False
    try:
        float(fields[0])
    except ValueError:
        return True
    return False


def parse_events(
    rows: Iterable[Sequence[str]], summary: CleaningSummary | None = None
) -> list[TouchEvent]:
    """Parse CSV rows, dropping bad records and counting them in ``summary``."""
    if summary is None:
        summary = CleaningSummary()
    events = []
    first = True
    for fields in rows:
        if first:
            first = False
            if _is_header(fields):
                continue
        if not fields or not any(f.strip() for f in fields):
            continue
        summary.rows_read += 1
        try:
            events.append(parse_fields(fields))
        except ParseError as exc:
            summary.rows_dropped += 1
            summary.reasons[exc.reason] += 1
    return events


def load_session(path: str | os.PathLike, user_id: str, game: str) -> SessionLog:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such session file: {path}")
    summary = CleaningSummary()
    with path.open(newline="") as fh:
        events = parse_events(csv.reader(fh), summary)
    if not events:
        raise EmptyLog(f"{path}: no valid touch events")
    return SessionLog(str(user_id), game, tuple(events), summary)


def parse_session_filename(path: str | os.PathLike) -> tuple[str, str]:
    """``<user_id>_<game>.csv`` -> (user_id, game). The user id may contain underscores."""
    stem = Path(path).stem
    user_id, sep, game = stem.rpartition("_")
    if not sep or not user_id or not game:
        raise ValueError(f"session file name {Path(path).name!r} is not <user_id>_<game>.csv")
    return user_id, game


def discover_sessions(directory: str | os.PathLike, game: str | None = None) -> list[tuple[Path, str, str]]:
    """List ``(path, user_id, game)`` for every session CSV in ``directory``, sorted."""
    found = []
    for path in sorted(Path(directory).glob("*.csv")):
        try:
            user_id, file_game = parse_session_filename(path)
        except ValueError:
            continue
        if game is None or file_game.lower() == game.lower():
            found.append((path, user_id, file_game))
    return found


def split_by_finger(session: SessionLog) -> tuple[list[TouchEvent], list[TouchEvent]]:
    """Separate a session into finger-0 and finger-1 streams.

    Relative order is preserved. An event whose timestamp does not exceed its
    predecessor on the same finger is dropped, so every within-finger time
    step is strictly positive. The drop count is recorded on the session summary.
    """
    streams: tuple[list[TouchEvent], list[TouchEvent]] = ([], [])
    dropped = 0
    for event in session.events:
        stream = streams[event.finger]
        if stream and event.timestamp <= stream[-1].timestamp:
            dropped += 1
            continue
        stream.append(event)
    session.summary.duplicates_dropped = dropped
    return streams


def write_session(path: str | os.PathLike, events: Iterable[TouchEvent], header: bool = True) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header:
            writer.writerow(HEADER)
        for event in events:
            writer.writerow(event.to_row())
