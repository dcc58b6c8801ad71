"""Synthetic two-finger touch sessions for exercising the pipeline end to end.

Finger 0 behaves like a virtual joystick: one long press whose position
follows a correlated random walk (Gaussian heading increments, mean-reverting
speed). Finger 1 produces intermittent bursts, each a DOWN, HELD..., UP
episode that is either a short tap or a slide. Coordinates live on a
4000 x 4000 grid with reflecting walls; finger 0 stays in the lower half of
the y range and finger 1 in the upper half.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .dataset import rng_for
from .events import SessionLog, TouchEvent, TouchState, write_session

GRID = 4000
REGIONS = {0: (0.0, GRID / 2), 1: (GRID / 2, float(GRID))}
GAME_INTENSITY = {"Snake": 1.8, "Minecraft": 1.0}
# mean-reversion rate of speed towards its base value, per second
SPEED_REVERSION = 8.0


@dataclass(frozen=True)
class FingerProfile:
    base_speed: float  # units/s
    speed_jitter: float  # fraction of base speed, per sqrt(s)
    turn_rate: float  # mean heading drift, rad/s
    turn_jitter: float  # heading diffusion, rad/sqrt(s)
    tap_probability: float  # chance that a finger-1 burst is a tap rather than a slide
    period_mean: float  # s
    period_jitter: float  # fraction of the mean, uniform +/-
    ellipse: tuple[int, int]  # touch_major range

    def __post_init__(self):
        if self.period_mean <= 0:
            raise ValueError("period_mean must be positive")
        if min(self.speed_jitter, self.turn_jitter, self.period_jitter) < 0:
            raise ValueError("jitters must be non-negative")
        if not 0 <= self.tap_probability <= 1:
            raise ValueError("tap_probability must lie in [0, 1]")
        if self.period_jitter >= 1:
            raise ValueError("period_jitter must be < 1")


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    fingers: tuple[FingerProfile, FingerProfile]

    def scaled(self, intensity: float) -> "UserProfile":
        """Faster motion and denser sampling, as for a more hectic game."""
        return replace(
            self,
            fingers=tuple(
                replace(f, base_speed=f.base_speed * intensity, period_mean=f.period_mean / intensity)
                for f in self.fingers
            ),
        )


def _timeline(n: int, p: FingerProfile, rng) -> np.ndarray:
    steps = p.period_mean * (1 + p.period_jitter * rng.uniform(-1, 1, n))
    return np.cumsum(steps)


def _walk(n, dt, p: FingerProfile, rng, start, heading, region):
    """Correlated random walk; returns float x, y arrays of length n."""
    ylo, yhi = region
    xs = np.empty(n)
    ys = np.empty(n)
    x, y = start
    speed = p.base_speed
    speed_noise = rng.standard_normal(n)
    turn_noise = rng.standard_normal(n)
    for i in range(n):
        xs[i] = x
        ys[i] = y
        if i == n - 1:
            break
        h = dt[i]
        speed += SPEED_REVERSION * (p.base_speed - speed) * h
        speed += p.base_speed * p.speed_jitter * math.sqrt(h) * speed_noise[i]
        speed = max(speed, 0.0)
        heading += p.turn_rate * h + p.turn_jitter * math.sqrt(h) * turn_noise[i]
        x += speed * h * math.cos(heading)
        y += speed * h * math.sin(heading)
        if x < 0 or x > GRID - 1:
            x = -x if x < 0 else 2 * (GRID - 1) - x
            heading = math.pi - heading
        if y < ylo or y > yhi - 1:
            y = 2 * ylo - y if y < ylo else 2 * (yhi - 1) - y
            heading = -heading
    return xs, ys


def _ellipses(n, p: FingerProfile, rng):
    lo, hi = p.ellipse
    major = rng.integers(lo, hi + 1, n)
    minor = np.maximum(1, np.round(major * rng.uniform(0.6, 1.0, n))).astype(int)
    return major, np.minimum(minor, major)


def _finger0(duration, p, rng):
    n = max(int(duration / p.period_mean), 2)
    t = _timeline(n, p, rng)
    t = t[t <= duration] if t[-1] > duration else t
    n = t.size
    dt = np.diff(t)
    start = (rng.uniform(500, GRID - 500), rng.uniform(*REGIONS[0]))
    x, y = _walk(n, dt, p, rng, start, rng.uniform(-math.pi, math.pi), REGIONS[0])
    states = [TouchState.HELD] * n
    states[0] = TouchState.DOWN
    states[-1] = TouchState.UP
    return t, x, y, states


def _finger1(duration, p, rng):
    ts, xs, ys, states = [], [], [], []
    clock = rng.exponential(0.5)
    while True:
        n = int(rng.integers(2, 6)) if rng.random() < p.tap_probability else int(rng.integers(10, 41))
        t = clock + _timeline(n, p, rng) - p.period_mean
        if t[-1] > duration:
            break
        start = (rng.uniform(200, GRID - 200), rng.uniform(REGIONS[1][0] + 200, REGIONS[1][1] - 200))
        x, y = _walk(n, np.diff(t), p, rng, start, rng.uniform(-math.pi, math.pi), REGIONS[1])
        ts.append(t)
        xs.append(x)
        ys.append(y)
        states.extend([TouchState.DOWN] + [TouchState.HELD] * (n - 2) + [TouchState.UP])
        clock = t[-1] + p.period_mean + rng.exponential(0.3)
    if not ts:
        return np.empty(0), np.empty(0), np.empty(0), []
    return np.concatenate(ts), np.concatenate(xs), np.concatenate(ys), states


def generate_session(profile: UserProfile, duration: float, seed: int, game: str = "Snake") -> SessionLog:
    """One session of both fingers, interleaved by timestamp (finger 0 first on ties)."""
    if duration <= 0:
        raise ValueError("duration must be positive")
    rows = []
    for finger, make in ((0, _finger0), (1, _finger1)):
        p = profile.fingers[finger]
        rng = rng_for(seed, "synth", profile.user_id, game, finger)
        t, x, y, states = make(duration, p, rng)
        major, minor = _ellipses(t.size, p, rng)
        # microsecond timestamps as in the logs; sampling periods are far above 1 us
        t = np.round(t, 6)
        x = np.clip(np.round(x), 0, GRID - 1).astype(int)
        y = np.clip(np.round(y), 0, GRID - 1).astype(int)
        for i in range(t.size):
            rows.append(
                TouchEvent(float(t[i]), int(x[i]), int(y[i]), states[i], int(major[i]), int(minor[i]), finger)
            )
    rows.sort(key=lambda e: (e.timestamp, e.finger))
    return SessionLog(profile.user_id, game, tuple(rows))


def _spread(n: int, rng) -> np.ndarray:
    """n evenly spaced points of [0, 1] in random order."""
    return rng.permutation(np.linspace(0, 1, n)) if n > 1 else np.array([0.5])


def make_profiles(n_users: int, seed: int, identical: bool = False) -> list[UserProfile]:
    """Pairwise distinct profiles spread over the parameter ranges.

    Each parameter gets its own random assignment of evenly spaced levels, so
    users differ along several axes at once. With ``identical`` every user
    shares the first user's parameters.
    """
    if n_users < 2:
        raise ValueError("need at least 2 users")
    rng = rng_for(seed, "profiles")
    fingers = []
    for finger in (0, 1):
        lv = {k: _spread(n_users, rng) for k in ("speed", "sj", "turn", "tj", "tap", "period", "ell")}
        fingers.append(
            [
                FingerProfile(
                    base_speed=(300 + 1500 * lv["speed"][i]) * (1.0 if finger == 0 else 1.5),
                    speed_jitter=0.2 + 0.6 * lv["sj"][i],
                    turn_rate=(-1.5 + 3.0 * lv["turn"][i]) * (1.0 if finger == 0 else 2.0),
                    turn_jitter=0.5 + 2.5 * lv["tj"][i],
                    tap_probability=0.05 + 0.35 * lv["tap"][i],
                    period_mean=0.018 + 0.016 * lv["period"][i],
                    period_jitter=0.15,
                    ellipse=(int(8 + 14 * lv["ell"][i]), int(16 + 14 * lv["ell"][i])),
                )
                for i in range(n_users)
            ]
        )
    profiles = [
        UserProfile(f"{i + 1:02d}", (fingers[0][i], fingers[1][i])) for i in range(n_users)
    ]
    if identical:
        profiles = [replace(profiles[0], user_id=p.user_id) for p in profiles]
    return profiles


def make_corpus(
    n_users: int, duration: float, seed: int, identical: bool = False, games=tuple(GAME_INTENSITY)
) -> dict[tuple[str, str], SessionLog]:
    """Sessions keyed by (user_id, game), one per user per game."""
    corpus = {}
    for profile in make_profiles(n_users, seed, identical):
        for game in games:
            scaled = profile.scaled(GAME_INTENSITY.get(game, 1.0))
            corpus[(profile.user_id, game)] = generate_session(scaled, duration, seed, game)
    return corpus


def write_corpus(
    directory: str | os.PathLike,
    n_users: int,
    duration: float,
    seed: int,
    identical: bool = False,
    games=tuple(GAME_INTENSITY),
) -> list[Path]:
    """Write ``<user>_<game>.csv`` files and a ``manifest.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    corpus = make_corpus(n_users, duration, seed, identical, games)
    paths = []
    for (user, game), session in sorted(corpus.items()):
        path = directory / f"{user}_{game}.csv"
        write_session(path, session.events)
        paths.append(path)
    manifest = {
        "generator": "touchauth.synth",
        "seed": seed,
        "n_users": n_users,
        "duration": duration,
        "identical": identical,
        "game_intensity": GAME_INTENSITY,
        "sessions": [
            {"user_id": u, "game": g, "file": f"{u}_{g}.csv", "events": len(s)}
            for (u, g), s in sorted(corpus.items())
        ],
        "profiles": [asdict(p) for p in make_profiles(n_users, seed, identical)],
    }
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return paths
