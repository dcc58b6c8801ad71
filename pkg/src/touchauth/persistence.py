"""JSON model files: hyperparameters, seed, scaler and the full fitted state.

Floats are written with their shortest round-tripping repr, so a reloaded
model reproduces its scores bit for bit.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .dataset import Standardizer
from .forest import RandomForestAuthenticator
from .knn import KNNAuthenticator

FORMAT_VERSION = 1
_KINDS = {"random_forest": RandomForestAuthenticator, "knn": KNNAuthenticator}


def model_to_dict(model, scaler: Standardizer | None = None, **meta) -> dict:
    d = {"format_version": FORMAT_VERSION, "model": model.to_dict(), "meta": meta}
    if scaler is not None:
        d["scaler"] = {"mean": scaler.mean_.tolist(), "scale": scaler.scale_.tolist()}
    return d


def model_from_dict(d: dict):
    if d.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format {d.get('format_version')!r}")
    model = _KINDS[d["model"]["kind"]].from_dict(d["model"])
    scaler = None
    if "scaler" in d:
        scaler = Standardizer()
        scaler.mean_ = np.asarray(d["scaler"]["mean"], dtype=float)
        scaler.scale_ = np.asarray(d["scaler"]["scale"], dtype=float)
        scaler.n_features_in_ = scaler.mean_.size
    return model, scaler


def save_model(path: str | os.PathLike, model, scaler: Standardizer | None = None, **meta) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model, scaler, **meta), fh)


def load_model(path: str | os.PathLike):
    """Returns ``(model, scaler)``; ``scaler`` is None if none was saved."""
    with open(path) as fh:
        return model_from_dict(json.load(fh))
