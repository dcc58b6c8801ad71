from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from touchauth.dataset import (
    GENUINE,
    IMPOSTER,
    InsufficientImposterData,
    SampleSet,
    Standardizer,
    TooFewSamples,
    allocate_imposters,
    assemble,
    build_pools,
    rng_for,
    split_user,
    standardize,
    write_dataset,
)


def user_samples(user, n, rng, d=36):
    return SampleSet.from_matrix(rng.normal(size=(n, d)), user)


def corpus(rng, sizes):
    return {u: user_samples(u, n, rng) for u, n in sizes.items()}


def test_split_ratio(rng):
    train, test = split_user(user_samples("a", 100, rng), 0.8, seed=1)
    assert (len(train), len(test)) == (80, 20)
    train, test = split_user(user_samples("a", 5, rng), 0.8, seed=1)
    assert (len(train), len(test)) == (4, 1)


def test_split_is_deterministic_and_partitions(rng):
    s = user_samples("a", 50, rng)
    a = split_user(s, 0.8, seed=3)
    b = split_user(s, 0.8, seed=3)
    assert np.array_equal(a[0].gesture_id, b[0].gesture_id)
    ids = set(a[0].gesture_id) | set(a[1].gesture_id)
    assert len(ids) == 50 and not set(a[0].gesture_id) & set(a[1].gesture_id)
    c = split_user(s, 0.8, seed=4)
    assert not np.array_equal(a[0].gesture_id, c[0].gesture_id)


def test_split_chronological(rng):
    train, test = split_user(user_samples("a", 10, rng), 0.8, chronological=True)
    assert list(test.gesture_id) == ["a:8", "a:9"]


def test_split_errors(rng):
    with pytest.raises(TooFewSamples):
        split_user(user_samples("a", 1, rng))
    with pytest.raises(ValueError):
        split_user(user_samples("a", 10, rng), 1.0)


def test_split_two_samples_keeps_both_pools_nonempty(rng):
    train, test = split_user(user_samples("a", 2, rng), 0.99)
    assert len(train) == 1 and len(test) == 1


def test_allocate_exact_division(rng):
    quota = allocate_imposters(240, {f"u{i}": 1000 for i in range(24)}, rng)
    assert set(quota.values()) == {10}


def test_allocate_remainder(rng):
    quota = allocate_imposters(250, {f"u{i}": 1000 for i in range(24)}, rng)
    assert sum(quota.values()) == 250
    assert Counter(quota.values()) == {11: 10, 10: 14}


@given(
    st.integers(0, 300),
    st.lists(st.integers(0, 60), min_size=1, max_size=12),
    st.integers(0, 2**32 - 1),
)
def test_allocate_properties(needed, supply, seed):
    available = {f"u{i:02d}": n for i, n in enumerate(supply)}
    quota = allocate_imposters(needed, available, np.random.default_rng(seed))
    assert sum(quota.values()) == min(needed, sum(supply))
    assert all(0 <= quota[u] <= available[u] for u in available)
    # nobody with samples to spare sits more than one below the largest contribution
    top = max(quota.values())
    assert all(quota[u] >= top - 1 for u in available if quota[u] < available[u])


def _check_dataset(ds, target):
    for side in (ds.train, ds.test):
        genuine = side.y == GENUINE
        assert np.all(side.user[genuine] == target)
        assert np.all(side.user[~genuine] != target)
        assert genuine.sum() == (side.y == IMPOSTER).sum()
        per_user = Counter(side.user[~genuine])
        assert max(per_user.values()) - min(per_user.values()) <= 1
    assert not set(ds.train.gesture_id) & set(ds.test.gesture_id)


def test_assemble_balanced(rng):
    samples = corpus(rng, {"a": 300, "b": 200, "c": 220, "d": 250, "e": 400})
    pools = build_pools(samples, 0.8, seed=5, game="Snake")
    for target in samples:
        ds = assemble(target, "Snake", pools, seed=5)
        _check_dataset(ds, target)
        assert ds.meta["train_shortfall"] == 0 and ds.meta["test_shortfall"] == 0
    ds = assemble("a", "Snake", pools, seed=5)
    assert len(ds.train) == 2 * 240 and len(ds.test) == 2 * 60


def test_assemble_matches_worked_example(rng):
    samples = corpus(rng, {"t": 300, **{f"i{k:02d}": 100 for k in range(24)}})
    pools = build_pools(samples, 0.8, seed=0)
    ds = assemble("t", "Snake", pools, seed=0)
    counts = Counter(ds.train.user[ds.train.y == IMPOSTER])
    assert len(ds.train) == 480 and set(counts.values()) == {10}


def test_shuffle_preserves_multiset(rng):
    samples = corpus(rng, {"a": 50, "b": 60, "c": 70})
    pools = build_pools(samples, 0.8, seed=2)
    ds = assemble("b", "Snake", pools, seed=2)
    train_pool = pools["b"][0]
    assert Counter(ds.train.gesture_id[ds.train.y == 0]) == Counter(train_pool.gesture_id)
    # features travel with their ids
    lookup = {g: x for g, x in zip(samples["c"].gesture_id, samples["c"].X)}
    for g, x in zip(ds.train.gesture_id, ds.train.X):
        if g in lookup:
            assert np.array_equal(lookup[g], x)
    # labels are not left in blocks
    assert 0 < np.abs(np.diff(ds.train.y)).sum()


def test_assemble_shortfall_is_recorded(rng):
    samples = corpus(rng, {"a": 500, "b": 20, "c": 30})
    pools = build_pools(samples, 0.8, seed=1)
    with pytest.warns(InsufficientImposterData):
        ds = assemble("a", "Snake", pools, seed=1)
    assert ds.meta["train_shortfall"] == 400 - 16 - 24
    assert (ds.train.y == IMPOSTER).sum() == 40


def test_assemble_empty_test_pool(rng):
    s = user_samples("a", 10, rng)
    pools = {"a": (s, s.take([])), "b": split_user(user_samples("b", 10, rng))}
    with pytest.raises(TooFewSamples):
        assemble("a", "Snake", pools)


def test_assemble_needs_imposters(rng):
    pools = {"a": split_user(user_samples("a", 10, rng))}
    with pytest.raises(ValueError):
        assemble("a", "Snake", pools)


def test_standardizer_examples():
    s = Standardizer().fit(np.array([[1.0, 5.0], [3.0, 5.0]]))
    assert s.transform(np.array([[1.0, 5.0], [3.0, 5.0]])).tolist() == [[-1, 0], [1, 0]]
    assert s.transform(np.array([[5.0, 9.0]])).tolist() == [[3.0, 0.0]]
    const = Standardizer().fit(np.full((3, 1), 5.0))
    assert const.transform(np.full((3, 1), 5.0)).tolist() == [[0], [0], [0]]


def test_standardize_uses_train_statistics(rng):
    samples = corpus(rng, {"a": 100, "b": 100, "c": 100})
    ds = assemble("a", "Snake", build_pools(samples, 0.8, seed=0), seed=0)
    z = standardize(ds)
    assert np.allclose(z.train.X.mean(axis=0), 0) and np.allclose(z.train.X.std(axis=0), 1)
    assert np.allclose(z.test.X, (ds.test.X - ds.scaler.mean_) / ds.scaler.scale_)
    assert standardize(z) is z


def test_rng_streams_are_independent_and_replayable():
    a = rng_for(7, "split", "Snake", "u1").integers(1 << 30, size=4)
    assert np.array_equal(a, rng_for(7, "split", "Snake", "u1").integers(1 << 30, size=4))
    assert not np.array_equal(a, rng_for(7, "split", "Snake", "u2").integers(1 << 30, size=4))
    assert not np.array_equal(a, rng_for(8, "split", "Snake", "u1").integers(1 << 30, size=4))


def test_serialized_dataset_is_byte_identical(rng, tmp_path):
    samples = corpus(rng, {"a": 40, "b": 40, "c": 40})
    paths = []
    for run in range(2):
        ds = assemble("a", "Snake", build_pools(samples, 0.8, seed=9), seed=9)
        path = tmp_path / f"run{run}.csv"
        write_dataset(ds, path)
        paths.append(path)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    meta0 = paths[0].with_suffix(".csv.meta").read_text()
    assert meta0 == paths[1].with_suffix(".csv.meta").read_text()
    assert "seed=9" in meta0 and "train_genuine=32" in meta0
    header = paths[0].read_text().splitlines()[0].split(",")
    assert header[:2] == ["x_speed_mean", "x_speed_std"] and header[36] == "label"
