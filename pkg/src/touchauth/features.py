"""Kinematic series of a gesture and their 36-value summary vector.

Nine series are derived from positions and timestamps, each summarised by
mean, population standard deviation, minimum and maximum.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .segmentation import Gesture

SERIES_NAMES = (
    "x_speed",
    "y_speed",
    "speed",
    "x_accel",
    "y_accel",
    "accel",
    "jerk",
    "path_tangent",
    "angular_velocity",
)
STAT_NAMES = ("mean", "std", "min", "max")
FEATURE_NAMES = tuple(f"{s}_{stat}" for s in SERIES_NAMES for stat in STAT_NAMES)
ELLIPSE_FEATURE_NAMES = tuple(f"{s}_{stat}" for s in ("touch_major", "touch_minor") for stat in STAT_NAMES)
N_FEATURES = len(FEATURE_NAMES)


class DegenerateSeries(ValueError):
    pass


@dataclass(frozen=True)
class KinematicSeries:
    x_speed: np.ndarray
    y_speed: np.ndarray
    speed: np.ndarray
    x_accel: np.ndarray
    y_accel: np.ndarray
    accel: np.ndarray
    jerk: np.ndarray
    path_tangent: np.ndarray
    angular_velocity: np.ndarray

    def __iter__(self):
        return (getattr(self, f.name) for f in fields(self))


def finite_diff(values, times) -> np.ndarray:
    """``(v[i+1] - v[i]) / (t[i+1] - t[i])`` along the last axis."""
    values = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)
    if values.shape != times.shape or values.ndim < 1:
        raise ValueError("values and times must have the same shape")
    if values.shape[-1] < 2:
        raise DegenerateSeries(f"need at least 2 points, got {values.shape[-1]}")
    dt = np.diff(times, axis=-1)
    if np.any(dt <= 0):
        raise ValueError("times must be strictly increasing")
    return np.diff(values, axis=-1) / dt


def wrap_angle(a):
    """Map angles into (-pi, pi]."""
    return -np.remainder(np.pi - np.asarray(a, dtype=float), 2 * np.pi) + np.pi


def kinematic_series(t, x, y, wrap: bool = True) -> KinematicSeries:
    """Derivative chain for one window of samples.

    Every derived series is anchored at the end time of the interval it was
    computed over, so a series that starts at ``t[k]`` is differentiated
    against ``t[k:]``. Inputs may be 2-d, one window per row.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.ndim == 0 or t.shape[-1] < 4:
        raise DegenerateSeries(f"need at least 4 samples, got {t.shape[-1:] or 0}")

    x_speed = finite_diff(x, t)
    y_speed = finite_diff(y, t)
    speed = np.hypot(x_speed, y_speed)
    x_accel = finite_diff(x_speed, t[..., 1:])
    y_accel = finite_diff(y_speed, t[..., 1:])
    accel = finite_diff(speed, t[..., 1:])
    jerk = finite_diff(accel, t[..., 2:])

    tangent = np.arctan2(np.diff(y, axis=-1), np.diff(x, axis=-1))
    # arctan2(-0.0, -1) gives -pi; keep the half-open range
    tangent[tangent == -np.pi] = np.pi
    turn = np.diff(tangent, axis=-1)
    if wrap:
        turn = wrap_angle(turn)
    angular_velocity = turn / np.diff(t[..., 1:], axis=-1)

    return KinematicSeries(
        x_speed, y_speed, speed, x_accel, y_accel, accel, jerk, tangent, angular_velocity
    )


def compute_series(gesture: Gesture, wrap: bool = True) -> KinematicSeries:
    return kinematic_series(*gesture.arrays(), wrap=wrap)


def _stats(values: np.ndarray) -> list[np.ndarray]:
    if values.shape[-1] == 0:
        raise DegenerateSeries("cannot summarise an empty series")
    lo, hi = values.min(axis=-1), values.max(axis=-1)
    # summation rounding can push the mean of a near-constant series past its extremes
    mean = np.clip(values.mean(axis=-1), lo, hi)
    return [mean, values.std(axis=-1), lo, hi]


def aggregate(series: Iterable[np.ndarray]) -> np.ndarray:
    """Mean, population std, min, max of each series, concatenated in order.

    For 2-d series (one window per row) the result has one row per window.
    """
    out = []
    for values in series:
        out.extend(_stats(np.asarray(values, dtype=float)))
    return np.stack(out, axis=-1)


def featurize(gesture: Gesture, wrap: bool = True, include_ellipse: bool = False) -> np.ndarray:
    return featurize_many([gesture], wrap, include_ellipse)[0]


def featurize_many(
    gestures: Sequence[Gesture], wrap: bool = True, include_ellipse: bool = False
) -> np.ndarray:
    """Feature matrix for gestures of a common window size."""
    n_out = len(feature_names(include_ellipse))
    if len(gestures) == 0:
        return np.empty((0, n_out))
    rows = [
        [(e.timestamp, e.x, e.y, e.touch_major, e.touch_minor) for e in g.events]
        for g in gestures
    ]
    raw = np.array(rows, dtype=float)
    if raw.ndim != 3:
        raise ValueError("gestures must share one window size")
    mat = aggregate(kinematic_series(raw[..., 0], raw[..., 1], raw[..., 2], wrap=wrap))
    if include_ellipse:
        mat = np.hstack([mat, aggregate([raw[..., 3], raw[..., 4]])])
    return mat


def feature_names(include_ellipse: bool = False) -> tuple[str, ...]:
    return FEATURE_NAMES + (ELLIPSE_FEATURE_NAMES if include_ellipse else ())


class GestureFeaturizer(BaseEstimator, TransformerMixin):
    """Stateless transformer turning a sequence of gestures into a feature matrix.

    Parameters
    ----------
    wrap_angles : bool
        Wrap path-tangent differences into (-pi, pi] before dividing by the
        time step. Disable to use the literal difference.
    include_ellipse : bool
        Append summary statistics of the touch ellipse axes (8 extra columns).
    """

    def __init__(self, wrap_angles: bool = True, include_ellipse: bool = False):
        self.wrap_angles = wrap_angles
        self.include_ellipse = include_ellipse

    def fit(self, gestures=None, y=None):
        self.n_features_out_ = len(feature_names(self.include_ellipse))
        return self

    def transform(self, gestures: Sequence[Gesture]) -> np.ndarray:
        return featurize_many(gestures, self.wrap_angles, self.include_ellipse)

    def get_feature_names_out(self, input_features=None):
        return np.array(feature_names(self.include_ellipse), dtype=object)
