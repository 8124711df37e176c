"""History-independent skip lists.

The level of every key is a pure hash of ``(key, seed)``, so the link
structure depends only on the stored set.  Successors are stored as key
values in an associative store shared by any number of lists; each list is
identified by its head key, whose entry holds ``lmax + 1`` links.
"""
from __future__ import annotations

import struct
from typing import Callable, Hashable, Iterator, NamedTuple, Optional

from .errors import DuplicateKey, KeyNotFound, MissingKey

MASK64 = (1 << 64) - 1
NIL = None
HEAD = -2

_NIL_WORD = MASK64


def mix64(x: int) -> int:
    x &= MASK64
    x ^= x >> 33
    x = (x * 0xFF51AFD7ED558CCD) & MASK64
    x ^= x >> 33
    x = (x * 0xC4CEB9FE1A85EC53) & MASK64
    x ^= x >> 33
    return x


def ceil_log2(n: int) -> int:
    return (n - 1).bit_length() if n > 1 else 0


def encode(key) -> int:
    if key is NIL:
        return _NIL_WORD
    return int(key) & MASK64


def level_of(key, seed: int, lmax: int) -> int:
    """min(trailing zeros of mix64(seed xor key), lmax)."""
    h = mix64((seed ^ encode(key)) & MASK64)
    if h == 0:
        return lmax
    tz = (h & -h).bit_length() - 1
    return tz if tz < lmax else lmax


def digest(words, h: int = 0x243F6A8885A308D3) -> int:
    """Chain ``h = mix64((h ^ w) + golden)`` over 64-bit words (mix64 inlined)."""
    M = MASK64
    for w in words:
        x = ((h ^ (w & M)) + 0x9E3779B97F4A7C15) & M
        x ^= x >> 33
        x = (x * 0xFF51AFD7ED558CCD) & M
        x ^= x >> 33
        x = (x * 0xC4CEB9FE1A85EC53) & M
        h = x ^ (x >> 33)
    return h


class SearchResult(NamedTuple):
    found: bool
    preds: list
    steps: int


class SkipList:
    """Ordered set over an integer key universe of size ``universe``.

    ``key`` maps stored keys to sort keys (identity by default).  Passing an
    existing ``store`` makes several lists share one node store, which is
    what :func:`swap_tails` requires.
    """

    def __init__(self, universe: int, seed: int = 0, *, key: Optional[Callable] = None,
                 store: Optional[dict] = None, head: Hashable = HEAD, lmax: Optional[int] = None):
        self.universe = universe
        self.lmax = ceil_log2(universe) if lmax is None else lmax
        self.seed = seed
        self.key = key if key is not None else _identity
        self.store = {} if store is None else store
        self.head = head
        if head not in self.store:
            self.store[head] = [NIL] * (self.lmax + 1)
        self.writes = 0

    @classmethod
    def from_sorted(cls, keys, universe: int, seed: int = 0, **kw) -> "SkipList":
        """Bulk-build from keys already in comparator order."""
        sl = cls(universe, seed, **kw)
        sl.writes += link_sorted(sl.store, sl.head, list(keys), sl.lmax, sl.seed)
        return sl

    def level(self, key) -> int:
        return level_of(key, self.seed, self.lmax)

    def __iter__(self) -> Iterator:
        k = self.store[self.head][0]
        while k is not NIL:
            yield k
            k = self.store[k][0]

    def __len__(self) -> int:
        return sum(1 for _ in self)

    def __contains__(self, key) -> bool:
        return key in self.store and self.search(key).found

    def layer(self, k: int) -> list:
        out = []
        node = self.store[self.head][k]
        budget = len(self.store)
        while node is not NIL and budget > 0:
            out.append(node)
            links = self.store[node]
            node = links[k] if k < len(links) else NIL
            budget -= 1
        return out

    def search(self, target=NIL, *, before: Optional[Callable] = None) -> SearchResult:
        """Per-layer predecessors of ``target`` (or of the first key failing ``before``).

        ``before(k)`` must be true exactly on a prefix of the list.
        """
        if before is None:
            tkey = self.key(target)
            keyf = self.key

            def before(k):
                return keyf(k) < tkey
        store = self.store
        preds = [NIL] * (self.lmax + 1)
        node = self.head
        links = store[node]
        steps = 0
        for l in range(self.lmax, -1, -1):
            while True:
                nxt = links[l]
                steps += 1
                if nxt is NIL or not before(nxt):
                    break
                node = nxt
                links = store[node]
            preds[l] = node
        found = target is not NIL and links[0] == target
        return SearchResult(found, preds, steps)

    def insert(self, key) -> int:
        if key in self.store:
            raise DuplicateKey(key)
        res = self.search(key)
        lvl = self.level(key)
        store = self.store
        links = [NIL] * (lvl + 1)
        for l in range(lvl + 1):
            p = store[res.preds[l]]
            links[l] = p[l]
            p[l] = key
        store[key] = links
        self.writes += 2 * (lvl + 1)
        return res.steps

    def remove(self, key) -> int:
        res = self.search(key)
        if not res.found:
            raise MissingKey(key)
        store = self.store
        links = store.pop(key)
        for l in range(len(links)):
            store[res.preds[l]][l] = links[l]
        self.writes += len(links)
        return res.steps

    def validate(self) -> list[str]:
        """Layer invariant: layer k is exactly the keys of level >= k, in order."""
        problems = []
        base = self.layer(0)
        keyf = self.key
        for a, b in zip(base, base[1:]):
            if not keyf(a) < keyf(b):
                problems.append("order violated between %r and %r" % (a, b))
        for k in range(self.lmax + 1):
            expect = [x for x in base if self.level(x) >= k]
            got = self.layer(k)
            if got != expect:
                problems.append("layer %d mismatch" % k)
        for x in base:
            if len(self.store[x]) != self.level(x) + 1:
                problems.append("key %r stores %d links, level %d" % (x, len(self.store[x]), self.level(x)))
        return problems

    def words(self):
        """Canonical serialization as 64-bit words: head first, then keys in order."""
        store = self.store
        head_links = store[self.head]
        yield encode(self.head)
        yield self.lmax
        for k in head_links:
            yield encode(k)
        node = head_links[0]
        while node is not NIL:
            links = store[node]
            yield encode(node)
            yield len(links) - 1
            for k in links:
                yield encode(k)
            node = links[0]

    def serialize(self) -> bytes:
        return b"".join(struct.pack("<Q", w) for w in self.words())

    def fingerprint(self) -> int:
        return digest(self.words())


def _identity(k):
    return k


def link_sorted(store: dict, head, keys: list, lmax: int, seed: int) -> int:
    """Write canonical links for ``keys`` (already ordered) after ``head``.

    Returns the number of link writes.
    """
    last = [head] * (lmax + 1)
    head_links = store[head]
    writes = 0
    for key in keys:
        lvl = level_of(key, seed, lmax)
        store[key] = [NIL] * (lvl + 1)
        for l in range(lvl + 1):
            prev = last[l]
            (head_links if prev == head else store[prev])[l] = key
            last[l] = key
            writes += 1
    for l in range(lmax + 1):
        prev = last[l]
        (head_links if prev == head else store[prev])[l] = NIL
        writes += 1
    return writes


def swap_tails(sla: SkipList, a_t, slb: SkipList, b_t) -> int:
    """Exchange the suffixes of ``sla`` after ``a_t`` and ``slb`` after ``b_t``.

    ``a_t`` / ``b_t`` may be the respective heads.  Returns the number of
    link writes, at most ``2 * (lmax + 1)``.
    """
    if sla.store is not slb.store:
        raise ValueError("tail swap needs lists sharing one node store")
    if sla.lmax != slb.lmax or sla.seed != slb.seed:
        raise ValueError("tail swap needs equal lmax and seed")
    pa = cut_preds(sla, a_t)
    pb = cut_preds(slb, b_t)
    return swap_links(sla.store, pa, pb)


def cut_preds(sl: SkipList, t) -> list:
    """Per-layer last node at or before ``t`` (``t`` itself on its own layers)."""
    if t == sl.head:
        return [sl.head] * (sl.lmax + 1)
    if t not in sl.store:
        raise KeyNotFound(t)
    tkey = sl.key(t)
    keyf = sl.key
    res = sl.search(before=lambda k: k == t or keyf(k) < tkey)
    if res.preds[0] != t:
        raise KeyNotFound(t)
    return res.preds


def swap_links(store: dict, pa: list, pb: list) -> int:
    writes = 0
    for l in range(len(pa)):
        la, lb = store[pa[l]], store[pb[l]]
        if la[l] != lb[l]:
            la[l], lb[l] = lb[l], la[l]
            writes += 2
    return writes
