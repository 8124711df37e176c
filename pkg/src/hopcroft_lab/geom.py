"""Exact geometric primitives, instance generation and point-line duality.

All predicates run on Python integers and :class:`fractions.Fraction`.  The
one use of floating point is a screen in the collinearity check that can only
rule rows out; every reported violation is confirmed with integers.  Lines are ``y = a*x + b`` with integer
coefficients and pairwise distinct slopes, hyperplanes are ``sum(a_k x_k) = c``.
"""
from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DualDegenerate, EqualSlopes, ExhaustedRetries

Rat = Fraction

COORD_LIMIT = 1 << 20
MAX_ROUNDS = 10_000

# above this magnitude the int64 fast paths could overflow
_NUMPY_SAFE = 1 << 20


def rat(num: int, den: int = 1) -> Fraction:
    return Fraction(num, den)


@dataclass(frozen=True)
class PointD:
    coords: tuple

    def __init__(self, *coords):
        if len(coords) == 1 and isinstance(coords[0], (tuple, list)):
            coords = tuple(coords[0])
        object.__setattr__(self, "coords", tuple(Fraction(c) for c in coords))

    @property
    def d(self) -> int:
        return len(self.coords)

    @property
    def x(self) -> Fraction:
        return self.coords[0]

    @property
    def y(self) -> Fraction:
        return self.coords[1]

    def __iter__(self):
        return iter(self.coords)

    def __len__(self):
        return len(self.coords)

    def __getitem__(self, k):
        return self.coords[k]

    def __repr__(self):
        return "PointD(%s)" % ", ".join(str(c) for c in self.coords)


@dataclass(frozen=True)
class Line2:
    id: int
    a: int
    b: int

    def __post_init__(self):
        if not isinstance(self.a, int) or not isinstance(self.b, int):
            raise TypeError("line coefficients must be integers")
        if abs(self.a) > COORD_LIMIT or abs(self.b) > COORD_LIMIT:
            raise ValueError("line coefficients exceed 2^20: %r" % (self,))

    def as_hyperplane(self) -> "Hyperplane":
        # y = a x + b  <=>  -a*x + 1*y = b
        return Hyperplane(self.id, (-self.a, 1), self.b)


@dataclass(frozen=True)
class Hyperplane:
    id: int
    coeffs: tuple
    c: int

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(int(v) for v in self.coeffs))
        if len(self.coeffs) < 2:
            raise ValueError("hyperplanes need d >= 2")
        if not any(self.coeffs):
            raise ValueError("hyperplane coefficient vector is zero")

    @property
    def d(self) -> int:
        return len(self.coeffs)


Flat = Union[Line2, Hyperplane]


@dataclass
class Instance:
    d: int
    lines: list
    points: list
    seed: int = 0
    planted: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.lines)

    @property
    def m(self) -> int:
        return len(self.points)

    def hyperplanes(self) -> list:
        return [h.as_hyperplane() if isinstance(h, Line2) else h for h in self.lines]

    def to_json(self) -> dict:
        out = {"d": self.d, "seed": self.seed}
        if self.d == 2:
            out["lines"] = [[str(l.a), str(l.b)] for l in self.lines]
        else:
            out["hyperplanes"] = [[[str(v) for v in h.coeffs], str(h.c)] for h in self.lines]
        out["points"] = [
            [[str(c.numerator), str(c.denominator)] for c in p.coords] for p in self.points
        ]
        out["planted"] = [[int(li), int(pi)] for li, pi in self.planted]
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))

    @classmethod
    def from_json(cls, data: dict) -> "Instance":
        d = int(data["d"])
        if d == 2:
            lines = [Line2(k, int(a), int(b)) for k, (a, b) in enumerate(data["lines"])]
        else:
            lines = [
                Hyperplane(k, tuple(int(v) for v in coeffs), int(c))
                for k, (coeffs, c) in enumerate(data["hyperplanes"])
            ]
        points = [PointD(*(Fraction(int(n), int(q)) for n, q in p)) for p in data["points"]]
        planted = [(int(li), int(pi)) for li, pi in data.get("planted", [])]
        return cls(d, lines, points, int(data.get("seed", 0)), planted)

    @classmethod
    def loads(cls, text: str) -> "Instance":
        return cls.from_json(json.loads(text))


# -- primitives ---------------------------------------------------------------

def line_intersection(l1: Line2, l2: Line2) -> PointD:
    if l1.a == l2.a:
        raise EqualSlopes("lines %d and %d have equal slope %d" % (l1.id, l2.id, l1.a))
    x = Fraction(l2.b - l1.b, l1.a - l2.a)
    return PointD(x, l1.a * x + l1.b)


def eval_at(l: Line2, x) -> Fraction:
    return l.a * Fraction(x) + l.b


def incident(h: Flat, p: PointD) -> bool:
    if isinstance(h, Line2):
        if p.d != 2:
            raise ValueError("dimension mismatch")
        return p.y == h.a * p.x + h.b
    if p.d != h.d:
        raise ValueError("dimension mismatch")
    return sum(a * c for a, c in zip(h.coeffs, p.coords)) == h.c


def intersection_x(l1: Line2, l2: Line2) -> tuple[int, int]:
    """Unreduced ``(num, den)`` with ``den > 0`` for the x of the crossing."""
    num, den = l2.b - l1.b, l1.a - l2.a
    if den < 0:
        num, den = -num, -den
    return num, den


# -- general position ---------------------------------------------------------

def _all_small_ints(values: Iterable) -> bool:
    for v in values:
        if isinstance(v, Fraction):
            if v.denominator != 1:
                return False
            v = v.numerator
        if abs(v) > _NUMPY_SAFE:
            return False
    return True


def _collinear_groups(xs: Sequence, ys: Sequence) -> list[tuple[int, ...]]:
    """Maximal sets of >= 3 collinear points, each reported once.

    Works by normalising the direction from every point to all later points;
    repeated directions from the same anchor are collinear with it.
    """
    m = len(xs)
    groups: list[tuple[int, ...]] = []
    seen: list[frozenset] = []

    def record(members):
        s = frozenset(members)
        if any(s <= t for t in seen):
            return
        seen.append(s)
        groups.append(tuple(sorted(s)))

    if m < 3:
        return groups
    if _all_small_ints(xs) and _all_small_ints(ys):
        X = np.array([int(v) for v in xs], dtype=np.int64)
        Y = np.array([int(v) for v in ys], dtype=np.int64)
        # Screen each anchor's row of directions with float slopes: equal
        # rationals give bit-identical correctly rounded quotients, so every
        # collinear triple shows up as adjacent equal floats after sorting.
        # Only rows that trip the screen get the exact reduced-direction check.
        block = max(1, (1 << 21) // m)
        for s in range(0, m - 2, block):
            I = np.arange(s, min(m - 2, s + block))
            cols = np.arange(s + 1, m)
            dx = X[cols][None, :] - X[I][:, None]
            dy = Y[cols][None, :] - Y[I][:, None]
            with np.errstate(divide="ignore", invalid="ignore"):
                f = np.where(dx == 0, np.inf, dy / dx)
            f = np.where(cols[None, :] > I[:, None], f, np.nan)
            srt = np.sort(f, axis=1)
            for row in np.nonzero((srt[:, 1:] == srt[:, :-1]).any(axis=1))[0].tolist():
                i = s + row
                ddx = X[i + 1:] - X[i]
                ddy = Y[i + 1:] - Y[i]
                flip = (ddx < 0) | ((ddx == 0) & (ddy < 0))
                ddx = np.where(flip, -ddx, ddx)
                ddy = np.where(flip, -ddy, ddy)
                g = np.gcd(ddx, ddy)
                g[g == 0] = 1
                key = ((ddx // g) << 24) + (ddy // g)
                uniq, counts = np.unique(key, return_counts=True)
                for v in uniq[counts >= 2].tolist():
                    record([i, *(np.nonzero(key == v)[0] + i + 1).tolist()])
        return groups
    for i in range(m - 2):
        buckets: dict = {}
        for j in range(i + 1, m):
            dx, dy = Fraction(xs[j]) - xs[i], Fraction(ys[j]) - ys[i]
            key = "inf" if dx == 0 else dy / dx
            buckets.setdefault(key, []).append(j)
        for js in buckets.values():
            if len(js) >= 2:
                record([i, *js])
    return groups


def _incidence_counts(lines: Sequence[Line2], points: Sequence[PointD]) -> list[int]:
    """Number of lines through each point."""
    if not lines or not points:
        return [0] * len(points)
    coords = [c for p in points for c in p.coords]
    if _all_small_ints(coords):
        a = np.array([l.a for l in lines], dtype=np.int64)
        b = np.array([l.b for l in lines], dtype=np.int64)
        px = np.array([int(p.x) for p in points], dtype=np.int64)
        py = np.array([int(p.y) for p in points], dtype=np.int64)
        out = np.empty(len(points), dtype=np.int64)
        step = max(1, (1 << 22) // len(lines))
        for s in range(0, len(points), step):
            blk = a[None, :] * px[s:s + step, None] + b[None, :] == py[s:s + step, None]
            out[s:s + step] = blk.sum(axis=1)
        return out.tolist()
    return [sum(1 for l in lines if p.y == l.a * p.x + l.b) for p in points]


def _hyper_incidence_counts(hyps: Sequence[Hyperplane], points: Sequence[PointD]) -> list[int]:
    if not hyps or not points:
        return [0] * len(points)
    coords = [c for p in points for c in p.coords]
    coefs = [v for h in hyps for v in (*h.coeffs, h.c)]
    if _all_small_ints(coords) and _all_small_ints(coefs):
        A = np.array([h.coeffs for h in hyps], dtype=np.int64)
        C = np.array([h.c for h in hyps], dtype=np.int64)
        P = np.array([[int(c) for c in p.coords] for p in points], dtype=np.int64)
        out = np.empty(len(points), dtype=np.int64)
        step = max(1, (1 << 22) // len(hyps))
        for s in range(0, len(points), step):
            out[s:s + step] = (P[s:s + step] @ A.T == C[None, :]).sum(axis=1)
        return out.tolist()
    return [sum(1 for h in hyps if incident(h, p)) for p in points]


def validate_general_position(inst: Instance) -> list[str]:
    """Every general-position violation in ``inst``; empty means valid.

    For d >= 3 only duplicate points, points on several hyperplanes and
    non-incident planted pairs are checked.
    """
    report: list[str] = []
    for li, pi in inst.planted:
        if not incident(inst.lines[li], inst.points[pi]):
            report.append("planted pair (%d, %d) is not incident" % (li, pi))
    if inst.d == 2:
        lines = inst.lines
        for slope, cnt in sorted(Counter(l.a for l in lines).items()):
            if cnt > 1:
                ids = [l.id for l in lines if l.a == slope]
                report.append("duplicate slope %d on lines %s" % (slope, ids))
        # concurrent lines <=> collinear dual points (a, b)
        for grp in _collinear_groups([l.a for l in lines], [l.b for l in lines]):
            if len({lines[k].a for k in grp}) < len(grp):
                continue
            report.append("concurrent lines %s" % (tuple(lines[k].id for k in grp),))
        for grp in _collinear_groups([p.x for p in inst.points], [p.y for p in inst.points]):
            report.append("collinear points %s" % (grp,))
        for pid, cnt in enumerate(_incidence_counts(lines, inst.points)):
            if cnt >= 2:
                report.append("point %d coincides with an arrangement vertex" % pid)
    else:
        for pt, cnt in Counter(inst.points).items():
            if cnt > 1:
                report.append("duplicate point %r" % (pt,))
        for pid, cnt in enumerate(_hyper_incidence_counts(inst.lines, inst.points)):
            if cnt >= 2:
                report.append("point %d lies on %d hyperplanes" % (pid, cnt))
    return report


# -- generation ---------------------------------------------------------------

def _planted_x_range(a: int, b: int, X: int, Y: int) -> tuple[int, int]:
    # integer x in [-X, X] with |a x + b| <= Y; always contains 0 since |b| <= Y
    if a == 0:
        return -X, X
    lo_f, hi_f = Fraction(-Y - b, a), Fraction(Y - b, a)
    if a < 0:
        lo_f, hi_f = hi_f, lo_f
    return max(-X, math.ceil(lo_f)), min(X, math.floor(hi_f))


def gen_instance(d: int, n_lines: int, m_points: int, planted_count: int = 0,
                 coord_bound: int = 1 << 10, seed: int = 0) -> Instance:
    """Random instance in general position with exactly ``planted_count`` incidences.

    Slopes are distinct integers in ``[-A, A]`` with ``A = max(coord_bound, n)``;
    points have distinct integer x in ``[-X, X]`` with ``X = max(coord_bound, m)``
    and y, like the intercepts, within ``2^20``.  Integer points keep the dual
    instance integral.
    """
    if planted_count > min(n_lines, m_points) or planted_count < 0:
        raise ValueError("planted_count must be in [0, min(n_lines, m_points)]")
    if d < 2:
        raise ValueError("d must be >= 2")
    if n_lines > COORD_LIMIT:
        raise ValueError("at most 2^20 lines")
    rng = random.Random(seed)
    if d == 2:
        return _gen_planar(n_lines, m_points, planted_count, coord_bound, seed, rng)
    return _gen_spatial(d, n_lines, m_points, planted_count, coord_bound, seed, rng)


def _gen_planar(n, m, planted_count, bound, seed, rng) -> Instance:
    A = min(COORD_LIMIT, max(bound, n))
    X = min(COORD_LIMIT, max(bound, m))
    Y = min(COORD_LIMIT, max(bound, A * X))

    slopes = rng.sample(range(-A, A + 1), n)
    intercepts = [rng.randint(-Y, Y) for _ in range(n)]
    for rounds in range(MAX_ROUNDS + 1):
        bad = {grp[-1] for grp in _collinear_groups(slopes, intercepts)}
        if not bad:
            break
        if rounds == MAX_ROUNDS:
            raise ExhaustedRetries("could not place lines in general position")
        for k in sorted(bad):
            intercepts[k] = rng.randint(-Y, Y)
    lines = [Line2(k, slopes[k], intercepts[k]) for k in range(n)]

    planted_lines = rng.sample(range(n), planted_count)
    planted_points = rng.sample(range(m), planted_count)
    owner = dict(zip(planted_points, planted_lines))
    used: set[int] = set()

    def fresh_x(lo: int, hi: int, forbidden=()) -> int:
        for _ in range(MAX_ROUNDS):
            x = rng.randint(lo, hi)
            if x not in used and x not in forbidden:
                used.add(x)
                return x
        raise ExhaustedRetries("no free x coordinate left")

    def crossing_xs(li: int) -> set:
        l = lines[li]
        out = set()
        for o in lines:
            if o.id != li:
                num, den = intersection_x(l, o)
                if num % den == 0:
                    out.add(num // den)
        return out

    forbidden_cache: dict[int, set] = {}
    xs = [0] * m
    ys = [0] * m

    def place(pid: int) -> None:
        if pid in owner:
            li = owner[pid]
            l = lines[li]
            if li not in forbidden_cache:
                forbidden_cache[li] = crossing_xs(li)
            lo, hi = _planted_x_range(l.a, l.b, X, Y)
            x = fresh_x(lo, hi, forbidden_cache[li])
            xs[pid], ys[pid] = x, l.a * x + l.b
        else:
            xs[pid], ys[pid] = fresh_x(-X, X), rng.randint(-Y, Y)

    for pid in range(m):
        place(pid)
    for rounds in range(MAX_ROUNDS + 1):
        pts = [PointD(xs[k], ys[k]) for k in range(m)]
        bad = set()
        for pid, cnt in enumerate(_incidence_counts(lines, pts)):
            if cnt != (1 if pid in owner else 0):
                bad.add(pid)
        bad.update(grp[-1] for grp in _collinear_groups(xs, ys))
        if not bad:
            break
        if rounds == MAX_ROUNDS:
            raise ExhaustedRetries("could not place points in general position")
        for pid in sorted(bad):
            used.discard(xs[pid])
            place(pid)
    planted = sorted((li, pi) for pi, li in owner.items())
    return Instance(2, lines, [PointD(xs[k], ys[k]) for k in range(m)], seed, planted)


def _gen_spatial(d, n, m, planted_count, bound, seed, rng) -> Instance:
    # hyperplanes sum_{k<d} a_k x_k + x_d = c, never vertical
    A = min(COORD_LIMIT, max(bound, n))
    X = min(COORD_LIMIT, max(bound, m))
    Y = min(COORD_LIMIT, max(bound, A * X))
    hyps = []
    seen = set()
    while len(hyps) < n:
        coeffs = tuple(rng.randint(-A, A) for _ in range(d - 1)) + (1,)
        c = rng.randint(-Y, Y)
        if (coeffs, c) in seen:
            continue
        seen.add((coeffs, c))
        hyps.append(Hyperplane(len(hyps), coeffs, c))
    planted_lines = rng.sample(range(n), planted_count)
    planted_points = rng.sample(range(m), planted_count)
    owner = dict(zip(planted_points, planted_lines))

    def place(pid):
        base = [rng.randint(-X, X) for _ in range(d - 1)]
        if pid in owner:
            h = hyps[owner[pid]]
            last = h.c - sum(a * v for a, v in zip(h.coeffs, base))
        else:
            last = rng.randint(-Y, Y)
        return PointD(*base, last)

    pts = [place(pid) for pid in range(m)]
    for rounds in range(MAX_ROUNDS + 1):
        bad = set()
        for pid, cnt in enumerate(_hyper_incidence_counts(hyps, pts)):
            if cnt != (1 if pid in owner else 0):
                bad.add(pid)
        first: dict = {}
        for pid, p in enumerate(pts):
            if p in first:
                bad.add(pid)
            first.setdefault(p, pid)
        if not bad:
            break
        if rounds == MAX_ROUNDS:
            raise ExhaustedRetries("could not place points in general position")
        for pid in bad:
            pts[pid] = place(pid)
    planted = sorted((li, pi) for pi, li in owner.items())
    return Instance(d, hyps, pts, seed, planted)


# -- duality ------------------------------------------------------------------

def dualize(inst: Instance) -> Instance:
    """Swap the roles of points and lines: ``(p, q) -> y = p x - q``, ``y = a x + b -> (a, -b)``.

    Point k becomes line k and line t becomes point t, so an incident pair
    ``(t, k)`` maps to ``(k, t)``.
    """
    if inst.d != 2:
        raise ValueError("duality is only implemented in the plane")
    xs = Counter(p.x for p in inst.points)
    if any(c > 1 for c in xs.values()):
        raise DualDegenerate("two points share an x-coordinate; dual lines would be parallel")
    lines = []
    for k, p in enumerate(inst.points):
        if p.x.denominator != 1 or p.y.denominator != 1:
            raise DualDegenerate("point %d is not integral; its dual has a rational slope" % k)
        lines.append(Line2(k, p.x.numerator, -p.y.numerator))
    points = [PointD(l.a, -l.b) for l in inst.lines]
    planted = sorted((pi, li) for li, pi in inst.planted)
    return Instance(2, lines, points, inst.seed, planted)
