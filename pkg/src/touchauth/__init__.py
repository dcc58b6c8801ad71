"""Continuous authentication from multi-finger touch dynamics."""

__version__ = "0.1.0"

from .dataset import AuthDataset, SampleSet, Standardizer, assemble, split_user, standardize
from .events import SessionLog, TouchEvent, TouchState, load_session, parse_line, split_by_finger
from .features import FEATURE_NAMES, GestureFeaturizer, aggregate, compute_series, finite_diff
from .forest import RandomForestAuthenticator
from .knn import KNNAuthenticator
from .metrics import MetricsReport, confusion, eer, evaluate, summarize
from .segmentation import Gesture, segment

__all__ = [
    "AuthDataset",
    "FEATURE_NAMES",
    "Gesture",
    "GestureFeaturizer",
    "KNNAuthenticator",
    "MetricsReport",
    "RandomForestAuthenticator",
    "SampleSet",
    "SessionLog",
    "Standardizer",
    "TouchEvent",
    "TouchState",
    "aggregate",
    "assemble",
    "compute_series",
    "confusion",
    "eer",
    "evaluate",
    "finite_diff",
    "load_session",
    "parse_line",
    "segment",
    "split_by_finger",
    "split_user",
    "standardize",
    "summarize",
]
