"""Per-user genuine/imposter datasets.

For a target user, every training (testing) gesture of that user is labelled
0 and an equal number of imposter gestures, spread as evenly as possible over
all other users, is labelled 1. Train and test are balanced separately and
imposters are drawn from their own train/test pools, so no gesture crosses
the split.
"""

from __future__ import annotations

import csv
import os
import warnings
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .features import FEATURE_NAMES

GENUINE = 0
IMPOSTER = 1


class TooFewSamples(ValueError):
    pass


class InsufficientImposterData(UserWarning):
    pass


def rng_for(seed: int, *keys) -> np.random.Generator:
    """Independent generator for one named stage of the pipeline.

    ``keys`` (stage name, game, user, ...) are hashed into the spawn key of a
    ``SeedSequence`` rooted at ``seed``, so each stage can be replayed alone.
    """
    spawn_key = tuple(
        k if isinstance(k, int) else zlib.crc32(str(k).encode()) for k in keys
    )
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=spawn_key))


@dataclass(frozen=True)
class SampleSet:
    """Feature rows with per-row provenance."""

    X: np.ndarray
    user: np.ndarray
    finger: np.ndarray
    gesture_id: np.ndarray
    y: np.ndarray | None = None

    def __len__(self) -> int:
        return self.X.shape[0]

    def take(self, idx) -> "SampleSet":
        idx = np.asarray(idx, dtype=int)
        return SampleSet(
            self.X[idx],
            self.user[idx],
            self.finger[idx],
            self.gesture_id[idx],
            None if self.y is None else self.y[idx],
        )

    def with_labels(self, label: int) -> "SampleSet":
        return replace(self, y=np.full(len(self), label, dtype=np.int64))

    @classmethod
    def concat(cls, parts: list["SampleSet"]) -> "SampleSet":
        if not parts:
            raise ValueError("nothing to concatenate")
        labelled = all(p.y is not None for p in parts)
        return cls(
            np.vstack([p.X for p in parts]),
            np.concatenate([p.user for p in parts]),
            np.concatenate([p.finger for p in parts]),
            np.concatenate([p.gesture_id for p in parts]),
            np.concatenate([p.y for p in parts]) if labelled else None,
        )

    @classmethod
    def from_matrix(cls, X, user: str, fingers=None, gesture_ids=None) -> "SampleSet":
        X = np.asarray(X, dtype=float)
        n = X.shape[0]
        if fingers is None:
            fingers = np.zeros(n, dtype=np.int64)
        if gesture_ids is None:
            gesture_ids = np.array([f"{user}:{i}" for i in range(n)], dtype=object)
        return cls(
            X,
            np.full(n, user, dtype=object),
            np.asarray(fingers, dtype=np.int64),
            np.asarray(gesture_ids, dtype=object),
        )


def split_user(
    samples: SampleSet, ratio: float = 0.8, seed: int = 0, chronological: bool = False
) -> tuple[SampleSet, SampleSet]:
    """Cut one user's samples into train and test pools at ``floor(ratio * n)``.

    The cut is applied to a seeded random permutation, or to the original
    order when ``chronological`` is set. Both pools are non-empty.
    """
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    n = len(samples)
    if n < 2:
        raise TooFewSamples(f"need at least 2 samples to split, got {n}")
    order = np.arange(n) if chronological else np.random.default_rng(seed).permutation(n)
    cut = min(max(int(np.floor(ratio * n)), 1), n - 1)
    return samples.take(order[:cut]), samples.take(order[cut:])


def allocate_imposters(needed: int, available: Mapping[str, int], rng: np.random.Generator) -> dict[str, int]:
    """Spread ``needed`` draws over imposter users as evenly as their supply allows.

    Users with enough samples get ``needed // k`` or one more, the extra ones
    chosen in random order; a user who cannot reach the level gives everything.
    """
    users = sorted(available)
    quota = {u: 0 for u in users}
    active = [u for u in users if available[u] > 0]
    remaining = needed
    while active and remaining > 0:
        level = remaining // len(active)
        capped = [u for u in active if available[u] <= level]
        if not capped:
            break
        for u in capped:
            quota[u] = available[u]
            remaining -= available[u]
        active = [u for u in active if u not in capped]
    if active and remaining > 0:
        level, extra = divmod(remaining, len(active))
        for u in active:
            quota[u] = level
        for i in rng.permutation(len(active))[:extra]:
            quota[active[i]] += 1
        remaining = 0
    return quota


class Standardizer(BaseEstimator, TransformerMixin):
    """Z-score features with population statistics; zero-variance columns map to 0."""

    def fit(self, X, y=None):
        X = check_array(X)
        self.mean_ = X.mean(axis=0)
        self.scale_ = X.std(axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        safe = np.where(self.scale_ > 0, self.scale_, 1.0)
        return np.where(self.scale_ > 0, (X - self.mean_) / safe, 0.0)


@dataclass(frozen=True)
class AuthDataset:
    target_user: str
    game: str
    train: SampleSet
    test: SampleSet
    scaler: Standardizer
    seed: int
    standardized: bool = False
    meta: dict = field(default_factory=dict, compare=False)


def _draw_imposters(
    pools: Mapping[str, SampleSet], needed: int, rng: np.random.Generator
) -> tuple[SampleSet | None, dict[str, int]]:
    quota = allocate_imposters(needed, {u: len(p) for u, p in pools.items()}, rng)
    parts = []
    for user in sorted(pools):
        if quota[user]:
            idx = rng.choice(len(pools[user]), size=quota[user], replace=False)
            parts.append(pools[user].take(np.sort(idx)))
    return (SampleSet.concat(parts) if parts else None), quota


def assemble(
    target_user: str,
    game: str,
    pools: Mapping[str, tuple[SampleSet, SampleSet]],
    seed: int = 0,
) -> AuthDataset:
    """Build the balanced, shuffled dataset for one target user.

    ``pools`` maps every user of the game to its ``(train_pool, test_pool)``.
    """
    if target_user not in pools:
        raise KeyError(f"no pools for target user {target_user!r}")
    others = sorted(u for u in pools if u != target_user)
    if not others:
        raise ValueError("need at least one imposter user")

    for side, k in (("train", 0), ("test", 1)):
        if len(pools[target_user][k]) == 0:
            raise TooFewSamples(f"user {target_user!r} has an empty {side} pool")

    sides = {}
    meta: dict = {"target_user": target_user, "game": game, "seed": seed, "imposter_users": len(others)}
    for side, k in (("train", 0), ("test", 1)):
        genuine = pools[target_user][k]
        imposter_pools = {u: pools[u][k] for u in others}
        draw_rng = rng_for(seed, "assemble", game, target_user, side)
        imposters, quota = _draw_imposters(imposter_pools, len(genuine), draw_rng)
        n_imp = 0 if imposters is None else len(imposters)
        if n_imp < len(genuine):
            warnings.warn(
                f"{game}/{target_user} {side}: imposters supply {n_imp} of {len(genuine)} samples",
                InsufficientImposterData,
                stacklevel=2,
            )
        parts = [genuine.with_labels(GENUINE)]
        if imposters is not None:
            parts.append(imposters.with_labels(IMPOSTER))
        merged = SampleSet.concat(parts)
        order = rng_for(seed, "shuffle", game, target_user, side).permutation(len(merged))
        sides[side] = merged.take(order)
        meta[f"{side}_genuine"] = len(genuine)
        meta[f"{side}_imposter"] = n_imp
        meta[f"{side}_shortfall"] = len(genuine) - n_imp
        meta[f"{side}_quota"] = quota

    scaler = Standardizer().fit(sides["train"].X)
    return AuthDataset(target_user, game, sides["train"], sides["test"], scaler, seed, meta=meta)


def standardize(dataset: AuthDataset) -> AuthDataset:
    """Apply the train-fitted scaler to both train and test features."""
    if dataset.standardized:
        return dataset
    scaler = dataset.scaler
    return replace(
        dataset,
        train=replace(dataset.train, X=scaler.transform(dataset.train.X)),
        test=replace(dataset.test, X=scaler.transform(dataset.test.X)),
        standardized=True,
    )


def build_pools(
    samples: Mapping[str, SampleSet], ratio: float = 0.8, seed: int = 0, game: str = "", chronological: bool = False
) -> dict[str, tuple[SampleSet, SampleSet]]:
    """Split every user once; the same pools are reused for every target."""
    return {
        user: split_user(s, ratio, int(rng_for(seed, "split", game, user).integers(2**63)), chronological)
        for user, s in sorted(samples.items())
    }


def _fmt(v: float) -> str:
    return repr(float(v))


def write_dataset(dataset: AuthDataset, path: str | os.PathLike, feature_names=FEATURE_NAMES) -> None:
    """Write the dataset as CSV plus a ``.meta`` key-value sidecar."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*feature_names, "label", "user_id", "game", "finger", "gesture_id", "split"])
        for side, s in (("train", dataset.train), ("test", dataset.test)):
            for i in range(len(s)):
                w.writerow(
                    [*map(_fmt, s.X[i]), int(s.y[i]), s.user[i], dataset.game, int(s.finger[i]), s.gesture_id[i], side]
                )
    lines = [
        f"target_user={dataset.target_user}",
        f"game={dataset.game}",
        f"seed={dataset.seed}",
        f"standardized={dataset.standardized}",
    ]
    for key, value in dataset.meta.items():
        if key in ("target_user", "game", "seed"):
            continue
        if isinstance(value, dict):
            value = ";".join(f"{k}:{v}" for k, v in sorted(value.items()))
        lines.append(f"{key}={value}")
    lines.append("scaler_mean=" + ",".join(map(_fmt, dataset.scaler.mean_)))
    lines.append("scaler_std=" + ",".join(map(_fmt, dataset.scaler.scale_)))
    path.with_suffix(path.suffix + ".meta").write_text("\n".join(lines) + "\n")
