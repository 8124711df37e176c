import random
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hopcroft_lab.errors import DuplicateKey, KeyNotFound, MissingKey
from hopcroft_lab.hiskip import (HEAD, NIL, SkipList, ceil_log2, digest, level_of, mix64,
                                 swap_tails)


def np_mix64(x):
    """Independent vectorized finalizer, used as the level oracle."""
    x = x.astype(np.uint64)
    with np.errstate(over="ignore"):
        x ^= x >> np.uint64(33)
        x *= np.uint64(0xFF51AFD7ED558CCD)
        x ^= x >> np.uint64(33)
        x *= np.uint64(0xC4CEB9FE1A85EC53)
        x ^= x >> np.uint64(33)
    return x


def test_mix64_matches_numpy_oracle():
    keys = np.arange(0, 5000, dtype=np.uint64) * np.uint64(0x9E3779B97F4A7C15 % (1 << 40))
    expect = np_mix64(keys).tolist()
    assert [mix64(int(k)) for k in keys.tolist()] == expect


def test_level_fraction_over_2_16_keys():
    seed = 12345
    h = np_mix64(np.arange(1 << 16, dtype=np.uint64) ^ np.uint64(seed))
    odd = (h & np.uint64(1)) == np.uint64(1)
    frac = 1.0 - odd.mean()
    assert abs(frac - 0.5) <= 0.01
    sample = random.Random(0).sample(range(1 << 16), 2000)
    for k in sample:
        assert (level_of(k, seed, 16) >= 1) == (not odd[k])


@given(st.integers(0, (1 << 64) - 1), st.integers(0, (1 << 64) - 1), st.integers(0, 40))
def test_level_in_range_and_pure(key, seed, lmax):
    lv = level_of(key, seed, lmax)
    assert 0 <= lv <= lmax
    assert lv == level_of(key, seed, lmax)


def test_empty_search():
    sl = SkipList(1 << 10, seed=3)
    res = sl.search(17)
    assert not res.found
    assert res.preds == [HEAD] * (sl.lmax + 1)
    assert res.steps <= sl.lmax + 1


def test_insert_then_search():
    sl = SkipList(1 << 10)
    sl.insert(5)
    assert sl.search(5).found
    assert sl.layer(0) == [5]
    assert 5 in sl and 6 not in sl


def test_duplicate_and_missing_keys():
    sl = SkipList(64)
    sl.insert(1)
    with pytest.raises(DuplicateKey):
        sl.insert(1)
    with pytest.raises(MissingKey):
        sl.remove(2)


def test_search_1000_keys_step_bound():
    N = 1000
    sl = SkipList.from_sorted(range(1, N + 1), N + 1, seed=9)
    steps = []
    for k in range(1, N + 1):
        res = sl.search(k)
        assert res.found
        steps.append(res.steps)
    assert np.mean(steps) <= 4 * np.log2(N) ** 2


def test_six_orders_same_fingerprint():
    fps = set()
    for order in permutations([3, 1, 2]):
        sl = SkipList(16, seed=7)
        for k in order:
            sl.insert(k)
        fps.add(sl.fingerprint())
    assert len(fps) == 1
    assert fps == {SkipList.from_sorted([1, 2, 3], 16, seed=7).fingerprint()}


def test_empty_lists_share_digest():
    assert SkipList(256, seed=1).fingerprint() == SkipList(256, seed=1).fingerprint()


def test_two_orders_of_pair():
    a, b = SkipList(8), SkipList(8)
    a.insert(1); a.insert(2)
    b.insert(2); b.insert(1)
    assert a.serialize() == b.serialize()


@given(st.sets(st.integers(0, 1023), max_size=60), st.randoms(use_true_random=False))
def test_structure_depends_only_on_set(keys, rnd):
    order = list(keys)
    rnd.shuffle(order)
    sl = SkipList(1024, seed=5)
    for k in order:
        sl.insert(k)
    extra = [k for k in range(1024) if k not in keys][:10]
    for k in extra:
        sl.insert(k)
    for k in extra:
        sl.remove(k)
    assert sl.validate() == []
    assert list(sl) == sorted(keys)
    assert sl.fingerprint() == SkipList.from_sorted(sorted(keys), 1024, seed=5).fingerprint()


def test_1000_insert_remove_pairs_restore_fingerprint():
    rng = random.Random(4)
    sl = SkipList.from_sorted(sorted(rng.sample(range(1 << 12), 300)), 1 << 12, seed=11)
    before = sl.fingerprint()
    for _ in range(1000):
        k = rng.randrange(1 << 12)
        if k in sl:
            sl.remove(k); sl.insert(k)
        else:
            sl.insert(k); sl.remove(k)
    assert sl.fingerprint() == before


def _shared(a_keys, b_keys, universe=64, seed=0):
    store = {}
    a = SkipList.from_sorted(a_keys, universe, seed, store=store, head=-10)
    b = SkipList.from_sorted(b_keys, universe, seed, store=store, head=-11)
    return a, b


def test_swap_tails_example_and_involution():
    a, b = _shared([1, 3, 5], [2, 4, 6])
    fa, fb = a.fingerprint(), b.fingerprint()
    swap_tails(a, 3, b, 4)
    assert list(a) == [1, 3, 6] and list(b) == [2, 4, 5]
    swap_tails(a, 3, b, 4)
    assert (a.fingerprint(), b.fingerprint()) == (fa, fb)


def test_swap_tails_at_head():
    a, b = _shared([1, 3, 5], [2, 4, 6])
    swap_tails(a, a.head, b, b.head)
    assert list(a) == [2, 4, 6] and list(b) == [1, 3, 5]


def test_swap_tails_rejects_unknown_cut_and_separate_stores():
    a, b = _shared([1, 3], [2, 4])
    with pytest.raises(KeyNotFound):
        swap_tails(a, 7, b, 2)
    c = SkipList.from_sorted([9], 64)
    with pytest.raises(ValueError):
        swap_tails(a, 1, c, 9)


def test_swap_tails_random_512():
    rng = random.Random(2)
    universe = 1 << 16
    for trial in range(20):
        ks = rng.sample(range(universe), 1024)
        a_keys, b_keys = sorted(ks[:512]), sorted(ks[512:])
        a, b = _shared(a_keys, b_keys, universe, seed=trial)
        # cut both lists at one split value so both results stay sorted
        v = rng.randrange(universe)
        ia = sum(k < v for k in a_keys) - 1
        ib = sum(k < v for k in b_keys) - 1
        a_t = a_keys[ia] if ia >= 0 else a.head
        b_t = b_keys[ib] if ib >= 0 else b.head
        writes = swap_tails(a, a_t, b, b_t)
        assert writes <= 2 * (a.lmax + 1)
        assert a.validate() == [] and b.validate() == []
        assert list(a) == a_keys[:ia + 1] + b_keys[ib + 1:]
        assert list(b) == b_keys[:ib + 1] + a_keys[ia + 1:]
        assert a.fingerprint() == SkipList.from_sorted(list(a), universe, trial, head=-10).fingerprint()


def test_digest_distinguishes_random_sets():
    rng = random.Random(8)
    universe = 1 << 20
    seen = {}
    for _ in range(10 ** 4):
        keys = tuple(sorted(rng.sample(range(universe), 64)))
        fp = SkipList.from_sorted(keys, universe, seed=1).fingerprint()
        if fp in seen:
            assert seen[fp] == keys
        seen[fp] = keys


def test_digest_order_sensitive():
    assert digest([1, 2]) != digest([2, 1])
    assert digest([]) == 0x243F6A8885A308D3


def test_ceil_log2():
    assert [ceil_log2(n) for n in (0, 1, 2, 3, 4, 5, 1024, 1025)] == [0, 0, 1, 2, 2, 3, 10, 11]


def test_custom_key_order():
    sl = SkipList(64, key=lambda k: -k)
    for k in (1, 5, 3):
        sl.insert(k)
    assert list(sl) == [5, 3, 1]
    assert sl.layer(0)[-1] == 1 and sl.store[1][0] is NIL
