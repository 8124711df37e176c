"""Dynamic arrangement of lines stored as k-levels in history-independent skip lists.

Every vertex ``P_ij`` of the arrangement appears as two *path points*:
``Cross(i, j)`` on the level that arrives along line i and leaves along line
j, and ``Cross(j, i)`` on the adjacent level.  A level chain starts at
``Head(h)`` (line h is its first edge) and ends at ``NULL``.  All chains share
one node store keyed by path point; ``Start`` orders the heads by slope, which
at x = -inf is the top-to-bottom order of the lines, so the k-th head starts
the k-level.

Keys are packed integers ``(i << 32) | j``; ``Head(i)`` is ``(i << 32) | i``.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional

from .errors import (DuplicateLine, MissingLine, SlopeCollision, TripleConcurrence,
                     UnknownLine)
from .geom import Line2, PointD, intersection_x, line_intersection
from .hiskip import NIL, SkipList, ceil_log2, digest, link_sorted, swap_links

MASK32 = 0xFFFFFFFF
START = -3
# Crossing x's have denominators below 2^21, so two distinct ones differ by at
# least 2^-42; floor(x * 2^XSHIFT) is then strictly order preserving on them.
XSHIFT = 46


class PathPoint(NamedTuple):
    i: int
    j: int

    @property
    def is_head(self) -> bool:
        return self.i == self.j and self.i >= 0

    @property
    def is_null(self) -> bool:
        return self.i < 0

    def __repr__(self):
        if self.is_null:
            return "Null"
        if self.is_head:
            return "Head(%d)" % self.i
        return "Cross(%d,%d)" % (self.i, self.j)


NULL = PathPoint(-1, -1)


def Head(i: int) -> PathPoint:
    return PathPoint(i, i)


def Cross(i: int, j: int) -> PathPoint:
    if i == j:
        raise ValueError("Cross needs two distinct lines")
    return PathPoint(i, j)


def _key(pp: PathPoint):
    return NIL if pp.is_null else (pp.i << 32) | pp.j


def _pp(key) -> PathPoint:
    return NULL if key is NIL else PathPoint(key >> 32, key & MASK32)


NEG_INF = "-inf"
POS_INF = "+inf"


# -- point location results ---------------------------------------------------

@dataclass(frozen=True)
class Location:
    steps: int


@dataclass(frozen=True)
class AboveAll(Location):
    pass


@dataclass(frozen=True)
class BelowAll(Location):
    pass


@dataclass(frozen=True)
class Between(Location):
    k: int  # strictly below level k, strictly above level k + 1


@dataclass(frozen=True)
class OnLevel(Location):
    k: int
    head: PathPoint
    pred: PathPoint
    succ: PathPoint
    line: int


@dataclass(frozen=True)
class OnVertex(Location):
    k: int
    head: PathPoint
    lines: tuple


class _Hit(NamedTuple):
    head: object   # START when p is strictly above every level
    sign: int      # sign of p.y - level(p.x) on ``head``
    node: object   # last chain node with x < p.x on ``head``
    after: object  # next head in Start
    steps: int


class Arrangement:
    """The k-levels of the arrangement of a subset S of ``lines``.

    ``lines`` is the universe of lines that may be inserted; lmax is
    ``ceil(log2 n^2)`` for a universe of n lines.  With ``locate_each`` the
    update sweep runs a point location at every crossing instead of only the
    first one; the resulting structure is identical, only the cost differs.
    """

    def __init__(self, lines: Iterable[Line2] = (), seed: int = 0, universe: Optional[int] = None,
                 locate_each: bool = False):
        self.locate_each = locate_each
        self.lines: dict[int, Line2] = {}
        self._a: dict[int, int] = {}
        self._b: dict[int, int] = {}
        for l in lines:
            self.register(l)
        n = universe if universe is not None else max(2, len(self.lines))
        self.lmax = ceil_log2(n * n)
        self._layers = tuple(range(self.lmax, -1, -1))
        self.seed = seed
        self.store: dict = {}
        self._x: dict = {}
        self._xk: dict = {}
        self.start = SkipList(n * n, seed, key=self._head_slope, head=START, lmax=self.lmax)
        self._slopes: list[int] = []
        self._by_slope: dict[int, int] = {}
        self.steps = {"locate": 0, "insert": 0, "remove": 0}

    @classmethod
    def build(cls, lines: Iterable[Line2], seed: int = 0, order: Optional[Iterable[int]] = None,
              universe: Optional[int] = None, locate_each: bool = False) -> "Arrangement":
        lines = list(lines)
        arr = cls(lines, seed, universe, locate_each)
        for i in (order if order is not None else [l.id for l in lines]):
            arr.insert_line(i)
        return arr

    def register(self, line: Line2) -> None:
        if line.id in self.lines and self.lines[line.id] != line:
            raise ValueError("line id %d already registered with other data" % line.id)
        self.lines[line.id] = line
        self._a[line.id] = line.a
        self._b[line.id] = line.b

    def _head_slope(self, key) -> int:
        return self._a[key & MASK32]

    # -- queries ----------------------------------------------------------

    @property
    def S(self) -> list[int]:
        return [self._by_slope[a] for a in self._slopes]

    def __len__(self) -> int:
        return len(self._slopes)

    def __contains__(self, i: int) -> bool:
        line = self.lines.get(i)
        return line is not None and self._by_slope.get(line.a) == i

    def coord(self, pp: PathPoint):
        if pp.is_null:
            return POS_INF
        for k in (pp.i, pp.j):
            if k not in self.lines:
                raise UnknownLine(k)
        if pp.is_head:
            return NEG_INF
        return line_intersection(self.lines[pp.i], self.lines[pp.j])

    def level_chain(self, k: int) -> list[PathPoint]:
        if not 0 <= k < len(self._slopes):
            raise IndexError("level %d out of range for %d lines" % (k, len(self._slopes)))
        h = self._by_slope[self._slopes[k]]
        out = [Head(h)]
        node = self.store[_key(Head(h))][0]
        while node is not NIL:
            out.append(_pp(node))
            node = self.store[node][0]
        out.append(NULL)
        return out

    def chains(self) -> list[list[PathPoint]]:
        return [self.level_chain(k) for k in range(len(self))]

    def _rank(self, head_key) -> int:
        return bisect.bisect_left(self._slopes, self._a[head_key & MASK32])

    def _find(self, qn: int, qd: int, yn: int, yd: int) -> _Hit:
        """Binary search over Start for the lowest level not strictly below p.

        ``p = (qn/qd, yn/yd)`` with positive denominators.  For each probed
        head the level is evaluated at p.x by searching its chain for the last
        path point left of p.x; the edge after it lies on that point's second
        line.
        """
        store = self.store
        X = self._x
        XK = self._xk
        qk = (qn << XSHIFT) // qd
        A = self._a
        B = self._b
        layers = self._layers
        memo = {}
        adv = 0     # link follows that advanced; every layer also ends with one failed check
        probes = 1  # the outer search counts as one full layer sweep
        sstore = self.start.store
        node = START
        links = sstore[START]
        for l in layers:
            h = links[l]
            while h is not NIL:
                hit = memo.get(h)
                if hit is None:
                    probes += 1
                    cur = h
                    clinks = store[h]
                    for cl in layers:
                        nxt = clinks[cl]
                        while nxt is not NIL:
                            k = XK[nxt]
                            if k > qk:
                                break
                            if k == qk:
                                xn, xd = X[nxt]
                                if xn * qd >= qn * xd:
                                    break
                            cur = nxt
                            clinks = store[nxt]
                            adv += 1
                            nxt = clinks[cl]
                    sup = cur & MASK32
                    v = yn * qd - (A[sup] * qn + B[sup] * qd) * yd
                    hit = memo[h] = ((v > 0) - (v < 0), cur)
                if hit[0] > 0:
                    break
                node = h
                links = sstore[h]
                adv += 1
                h = links[l]
        steps = adv + probes * len(layers)
        self.steps["locate"] += steps
        if node == START:
            return _Hit(START, 1, NIL, links[0], steps)
        sign, cur = memo[node]
        return _Hit(node, sign, cur, links[0], steps)

    def locate_point(self, p: PointD) -> Location:
        if not self._slopes:
            raise ValueError("point location needs at least one line")
        x, y = Fraction(p.x), Fraction(p.y)
        qn, qd, yn, yd = x.numerator, x.denominator, y.numerator, y.denominator
        hit = self._find(qn, qd, yn, yd)
        steps = hit.steps
        if hit.head == START:
            return AboveAll(steps)
        k = self._rank(hit.head)
        if hit.sign < 0:
            if hit.after is NIL:
                return BelowAll(steps)
            return Between(steps, k)
        succ = self.store[hit.node][0]
        if succ is not NIL:
            sn, sd = self._x[succ]
            if sn * qd == qn * sd:
                # the search stops on the lower of the two levels through the vertex
                top = Head(self._by_slope[self._slopes[k - 1]])
                return OnVertex(steps, k - 1, top, tuple(sorted(_pp(succ))))
        return OnLevel(steps, k, _pp(hit.head), _pp(hit.node), _pp(succ), hit.node & MASK32)

    def incidence(self, p: PointD) -> Optional[int]:
        loc = self.locate_point(p)
        if isinstance(loc, OnLevel):
            return loc.line
        if isinstance(loc, OnVertex):
            return min(loc.lines)
        return None

    # -- updates ----------------------------------------------------------

    def _cut(self, head, qn: int, qd: int, target=NIL):
        """Per-layer last node of chain ``head`` left of x = qn/qd, or at ``target``."""
        store = self.store
        X = self._x
        XK = self._xk
        qk = (qn << XSHIFT) // qd
        layers = self._layers
        preds = [head] * len(layers)
        node = head
        links = store[head]
        adv = 0
        for l in layers:
            nxt = links[l]
            while nxt is not NIL:
                k = XK[nxt]
                if (k > qk or (k == qk and X[nxt][0] * qd >= qn * X[nxt][1])) and nxt != target:
                    break
                node = nxt
                links = store[nxt]
                adv += 1
                nxt = links[l]
            preds[l] = node
        return preds, adv + len(layers)

    def _crossings(self, i: int, others: Iterable[int]) -> list:
        li = self.lines[i]
        rows = []
        for j in others:
            num, den = intersection_x(li, self.lines[j])
            rows.append((num, den, j))
        keyed = sorted(((num << XSHIFT) // den, j, num, den) for num, den, j in rows)
        for r0, r1 in zip(keyed, keyed[1:]):
            if r0[0] == r1[0]:
                raise TripleConcurrence("lines %d, %d, %d meet at one point" % (i, r0[1], r1[1]))
        return keyed

    def _sweep_point(self, i: int, j: int, num: int, den: int):
        li = self.lines[i]
        yn = li.a * num + li.b * den
        hit = self._find(num, den, yn, den)
        if hit.head == START or hit.sign != 0 or (hit.node & MASK32) != j:
            raise RuntimeError("sweep lost the edge of line %d through P(%d,%d)" % (j, i, j))
        return hit

    def _sweep(self, i: int, hi: int, rows, left_to_right: bool) -> int:
        """Swap tails at every crossing of line ``i``; returns steps.

        Only the first crossing is found by point location.  Walking along
        line i past one more crossing changes the number of old lines above
        the current crossing by at most one, so the level through the next
        crossing is the same head or a neighbour of it in Start.
        """
        A = self._a
        ai = A[i]
        store = self.store
        steps = 0
        head = prev = None
        for _, j, num, den in rows:
            if head is None or self.locate_each:
                hit = self._sweep_point(i, j, num, den)
                steps += hit.steps
                head = hit.head
            else:
                if left_to_right:
                    delta = (A[prev] > ai) - (A[j] < ai)
                else:
                    delta = (A[prev] < ai) - (A[j] > ai)
                if delta > 0:
                    head = self.start.store[head][0]
                    steps += 1
                elif delta < 0:
                    res = self.start.search(head)
                    head = res.preds[0]
                    steps += res.steps
            pa, sa = self._cut(hi, num, den, (i << 32) | j)
            pb, sb = self._cut(head, num, den)
            if head is NIL or head == START or (pb[0] & MASK32) != j:
                raise RuntimeError("sweep lost the edge of line %d through P(%d,%d)" % (j, i, j))
            steps += sa + sb + swap_links(store, pa, pb)
            prev = j
        return steps

    def insert_line(self, i: int) -> int:
        """Insert line ``i`` by a right-to-left sweep of tail swaps; returns steps."""
        if i not in self.lines:
            raise UnknownLine(i)
        if i in self:
            raise DuplicateLine(i)
        li = self.lines[i]
        if li.a in self._by_slope:
            raise SlopeCollision("slope %d already used by line %d" % (li.a, self._by_slope[li.a]))
        steps = 0
        others = [h & MASK32 for h in self.start]
        steps += len(others)
        rows = self._crossings(i, others)

        # new-line chain: Head(i), Cross(i,j1), Cross(j1,i), ..., Null
        hi = (i << 32) | i
        keys = []
        for xk, j, num, den in rows:
            a, b = (i << 32) | j, (j << 32) | i
            self._x[a] = self._x[b] = (num, den)
            self._xk[a] = self._xk[b] = xk
            keys.append(a)
            keys.append(b)
        self.store[hi] = [NIL] * (self.lmax + 1)
        steps += link_sorted(self.store, hi, keys, self.lmax, self.seed)

        steps += self._sweep(i, hi, reversed(rows), left_to_right=False)
        steps += self.start.insert(hi)
        bisect.insort(self._slopes, li.a)
        self._by_slope[li.a] = i
        self.steps["insert"] += steps
        return steps

    def remove_line(self, i: int) -> int:
        """Exact inverse of :meth:`insert_line`: the same swaps, left to right."""
        if i not in self:
            raise MissingLine(i)
        li = self.lines[i]
        hi = (i << 32) | i
        steps = self.start.remove(hi)
        self._slopes.pop(bisect.bisect_left(self._slopes, li.a))
        del self._by_slope[li.a]
        others = [h & MASK32 for h in self.start]
        steps += len(others)
        rows = self._crossings(i, others)
        steps += self._sweep(i, hi, rows, left_to_right=True)
        node = self.store.pop(hi)[0]
        while node is not NIL:
            nxt = self.store.pop(node)[0]
            del self._x[node]
            del self._xk[node]
            node = nxt
            steps += 1
        self.steps["remove"] += steps
        return steps

    # -- canonical form and self-check --------------------------------------

    def _chain_view(self, head_key) -> SkipList:
        X = self._x
        return SkipList(1, self.seed, store=self.store, head=head_key, lmax=self.lmax,
                        key=lambda k: Fraction(*X[k]))

    def words(self):
        yield from self.start.words()
        for h in self.start:
            yield from self._chain_view(h).words()

    def fingerprint(self) -> int:
        return digest(self.words())

    def verify(self) -> list[str]:
        """Check every structural invariant; an empty list means healthy."""
        report: list[str] = []
        heads = []
        node = self.start.store[START][0]
        guard = len(self.lines) + 1
        while node is not NIL and guard:
            heads.append(node)
            node = self.start.store.get(node, [NIL])[0]
            guard -= 1
        if node is not NIL:
            return ["Start list does not terminate"]
        report += ["Start: " + msg for msg in self.start.validate()]
        S = [h & MASK32 for h in heads]
        if sorted(self._a[i] for i in S) != self._slopes or len(S) != len(self._slopes):
            report.append("Start disagrees with slope index")
        inS = set(S)
        seen_cross: dict = {}
        budget = len(self.store) + 1
        for k, h in enumerate(heads):
            i = h & MASK32
            if h not in self.store:
                report.append("head %r missing from store" % (_pp(h),))
                continue
            chain = []
            node = self.store[h][0]
            while node is not NIL and budget > 0:
                if node not in self.store or node not in self._x:
                    report.append("level %d links to unknown path point %r" % (k, _pp(node)))
                    break
                chain.append(node)
                node = self.store[node][0]
                budget -= 1
            if budget <= 0:
                return report + ["level chains do not terminate"]
            view = self._chain_view(h)
            try:
                report += ["level %d: %s" % (k, msg) for msg in view.validate()]
            except KeyError as exc:
                report.append("level %d: dangling link %r" % (k, exc))
            if len(self.store[h]) != self.lmax + 1:
                report.append("head of level %d has %d links" % (k, len(self.store[h])))
            report += self._check_chain(k, i, chain, inS, seen_cross)
        expected = {(a, b) for a in inS for b in inS if a != b}
        got = set(seen_cross)
        if got != expected:
            report.append("chains hold %d crossings, expected %d" % (len(got), len(expected)))
        for key, count in seen_cross.items():
            if count > 1:
                report.append("crossing %r appears %d times" % (PathPoint(*key), count))
        stray = set(self.store) - set(heads) - {(a << 32) | b for a, b in got}
        if stray:
            report.append("%d stray path points in store" % len(stray))
        return report

    def _check_chain(self, k, i, chain, inS, seen_cross) -> list[str]:
        report = []
        A, B, X = self._a, self._b, self._x
        sup = i
        prev_x = None
        for node in chain:
            a, b = node >> 32, node & MASK32
            seen_cross[(a, b)] = seen_cross.get((a, b), 0) + 1
            if a not in inS or b not in inS or a == b:
                report.append("level %d holds %r with absent lines" % (k, _pp(node)))
            if a != sup:
                report.append("level %d: edge on line %d arrives at %r" % (k, sup, _pp(node)))
            if prev_x is not None and not prev_x[0] * X[node][1] < X[node][0] * prev_x[1]:
                report.append("level %d not x-monotone at %r" % (k, _pp(node)))
            prev_x = X[node]
            sup = b
        # exactly k lines strictly above the midpoint of every edge
        xs = [None] + [X[node] for node in chain] + [None]
        sups = [i] + [node & MASK32 for node in chain]
        for e in range(len(sups)):
            left, right = xs[e], xs[e + 1]
            if left is None and right is None:
                mn, md = 0, 1
            elif left is None:
                mn, md = right[0] - right[1], right[1]
            elif right is None:
                mn, md = left[0] + left[1], left[1]
            else:
                mn, md = left[0] * right[1] + right[0] * left[1], 2 * left[1] * right[1]
            s = sups[e]
            sa, sb = A[s], B[s]
            above = 0
            for t in inS:
                if (A[t] - sa) * mn + (B[t] - sb) * md > 0:
                    above += 1
            if above != k:
                report.append("level %d: edge %d on line %d has %d lines above" % (k, e, s, above))
        return report
