"""Fixed-size gesture windows over single-finger event streams."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .events import TouchEvent

DEFAULT_WINDOW = 10
# jerk is a third difference, so a window needs at least four events
MIN_WINDOW = 4


class WindowTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class Gesture:
    user_id: str
    game: str
    finger: int
    index: int
    events: tuple[TouchEvent, ...]

    @property
    def gesture_id(self) -> str:
        return f"{self.user_id}:{self.game}:{self.finger}:{self.index}"

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Timestamps, x and y as float arrays."""
        t = np.array([e.timestamp for e in self.events], dtype=float)
        x = np.array([e.x for e in self.events], dtype=float)
        y = np.array([e.y for e in self.events], dtype=float)
        return t, x, y


def segment(
    stream: Sequence[TouchEvent],
    window: int = DEFAULT_WINDOW,
    user_id: str = "",
    game: str = "",
) -> list[Gesture]:
    """Cut a cleaned single-finger stream into consecutive, non-overlapping windows.

    The trailing ``len(stream) % window`` events are discarded.
    """
    if window < MIN_WINDOW:
        raise WindowTooSmall(f"window must be >= {MIN_WINDOW}, got {window}")
    if not stream:
        return []
    finger = stream[0].finger
    if any(e.finger != finger for e in stream):
        raise ValueError("segment() expects a single-finger stream")
    return [
        Gesture(user_id, game, finger, i, tuple(stream[i * window : (i + 1) * window]))
        for i in range(len(stream) // window)
    ]
