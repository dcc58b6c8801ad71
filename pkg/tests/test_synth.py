import json
from dataclasses import replace

import numpy as np
import pytest

from touchauth.events import TouchState, load_session, split_by_finger
from touchauth.features import FEATURE_NAMES, featurize_many
from touchauth.segmentation import segment
from touchauth.synth import (
    GRID,
    REGIONS,
    FingerProfile,
    UserProfile,
    generate_session,
    make_profiles,
    write_corpus,
)

BASE = FingerProfile(
    base_speed=500.0,
    speed_jitter=0.3,
    turn_rate=0.5,
    turn_jitter=1.0,
    tap_probability=0.2,
    period_mean=0.01,
    period_jitter=0.15,
    ellipse=(10, 20),
)


def profile(speed=500.0, uid="01"):
    f = replace(BASE, base_speed=speed)
    return UserProfile(uid, (f, f))


def test_session_shape():
    session = generate_session(profile(), 30.0, seed=1)
    streams = split_by_finger(session)
    f0, f1 = streams[0], streams[1]
    # finger 0 samples continuously, finger 1 only during bursts
    assert len(f0) == pytest.approx(30.0 / BASE.period_mean, rel=0.05)
    assert 0 < len(f1) < len(f0)
    assert f0[0].touch_state is TouchState.DOWN and f0[-1].touch_state is TouchState.UP
    assert all(e.touch_state is TouchState.HELD for e in f0[1:-1])
    for finger, stream in enumerate(streams):
        lo, hi = REGIONS[finger]
        assert all(0 <= e.x < GRID and lo <= e.y < hi for e in stream)
        assert all(e.touch_minor <= e.touch_major for e in stream)
    ts = [e.timestamp for e in session.events]
    assert ts == sorted(ts) and ts[-1] <= 30.0


def test_generation_is_deterministic():
    a = generate_session(profile(), 5.0, seed=3)
    b = generate_session(profile(), 5.0, seed=3)
    c = generate_session(profile(), 5.0, seed=4)
    assert a.events == b.events and a.events != c.events


def test_speed_profiles_are_separable():
    means = []
    for speed in (200.0, 800.0):
        stream = split_by_finger(generate_session(profile(speed), 60.0, seed=2))[0]
        X = featurize_many(segment(stream))
        means.append(X[:, FEATURE_NAMES.index("speed_mean")])
    slow, fast = means
    gap = fast.mean() - slow.mean()
    spread = np.hypot(slow.std(), fast.std())
    assert gap > 3 * spread / np.sqrt(min(len(slow), len(fast)))
    assert gap > 0


def test_profiles():
    profiles = make_profiles(6, seed=0)
    assert [p.user_id for p in profiles] == ["01", "02", "03", "04", "05", "06"]
    assert len({p.fingers for p in profiles}) == 6
    same = make_profiles(6, seed=0, identical=True)
    assert len({p.fingers for p in same}) == 1
    with pytest.raises(ValueError):
        make_profiles(1, seed=0)
    with pytest.raises(ValueError):
        replace(BASE, tap_probability=1.5)


def test_written_corpus_loads_cleanly(tmp_path):
    paths = write_corpus(tmp_path, n_users=2, duration=5.0, seed=9)
    assert sorted(p.name for p in paths) == [
        "01_Minecraft.csv", "01_Snake.csv", "02_Minecraft.csv", "02_Snake.csv"
    ]
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == 9 and len(manifest["sessions"]) == 4
    for entry in manifest["sessions"]:
        session = load_session(tmp_path / entry["file"], entry["user_id"], entry["game"])
        assert session.summary.rows_dropped == 0
        assert len(session) == entry["events"]
        split_by_finger(session)
        assert session.summary.duplicates_dropped == 0
    # the faster game yields more events for the same user and duration
    counts = {(e["user_id"], e["game"]): e["events"] for e in manifest["sessions"]}
    assert counts[("01", "Snake")] > counts[("01", "Minecraft")]
