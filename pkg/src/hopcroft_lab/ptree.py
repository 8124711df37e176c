"""kd-median partition tree for hyperplane emptiness queries.

Cells are closed axis-aligned boxes whose bounds may be infinite (``None``);
the root cell is the whole space.  A hyperplane crosses a cell when the
linear form ``sum a_k x_k - c`` takes both signs (or zero) on the box.

:func:`emptiness_classical` is the reference traversal.
:func:`emptiness_batch` answers many hyperplanes at once with numpy int64
arithmetic when every value fits, and falls back to the reference otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .geom import Hyperplane, Line2, PointD
from .qcost import CostLedger

LEAF_CAPACITY = 4
_INT64_SAFE = 1 << 62


def _exact(v):
    """Fraction with denominator 1 becomes int, which keeps the hot paths integral."""
    if isinstance(v, Fraction) and v.denominator == 1:
        return v.numerator
    return v


@dataclass
class PTNode:
    cell: tuple                      # per axis (lo, hi); None = unbounded
    children: list = field(default_factory=list)
    points: list = field(default_factory=list)  # point ids, leaves only
    axis: int = -1
    split: object = None
    depth: int = 0

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class PTree:
    root: PTNode
    n: int
    d: int
    leaf_capacity: int
    coords: dict                     # point id -> tuple of int/Fraction
    depth: int
    build_steps: int = 0             # points handled summed over all nodes
    _flat: Optional["_Flat"] = None

    def nodes(self):
        stack = [self.root]
        while stack:
            v = stack.pop()
            yield v
            stack.extend(reversed(v.children))

    def leaves(self):
        return [v for v in self.nodes() if v.is_leaf]

    @property
    def height(self) -> int:
        """Height used in backtracking charges (at least 1)."""
        return max(1, self.depth)

    def serialize(self) -> str:
        """Preorder, one node per line, rational bounds as strings."""
        out = []

        def fmt(v):
            return "inf" if v is None else str(Fraction(v))

        for v in self.nodes():
            cell = ";".join("%s,%s" % (fmt(lo), fmt(hi)) for lo, hi in v.cell)
            if v.is_leaf:
                pts = "|".join(",".join(str(Fraction(c)) for c in self.coords[p]) for p in v.points)
                out.append("L %d [%s] %s" % (v.depth, cell, pts))
            else:
                out.append("I %d [%s] axis=%d split=%s" % (v.depth, cell, v.axis, Fraction(v.split)))
        return "\n".join(out)


def build(points: Sequence[PointD], d: Optional[int] = None, leaf_capacity: int = LEAF_CAPACITY,
          ids: Optional[Sequence[int]] = None) -> PTree:
    """kd-median tree: split on the lower median, equal coordinates go left.

    The split axis is depth mod d; when the median split would leave one side
    empty the next axis is tried, and if every axis ties that way the split
    moves to the largest value below the axis maximum.  Points are sorted
    first so the tree does not depend on input order.
    """
    if leaf_capacity < 1:
        raise ValueError("leaf_capacity must be positive")
    if ids is None:
        ids = range(len(points))
    coords = {}
    for pid, p in zip(ids, points):
        coords[pid] = tuple(_exact(c) for c in p.coords)
    if d is None:
        d = len(next(iter(coords.values()))) if coords else 2
    for c in coords.values():
        if len(c) != d:
            raise ValueError("point dimension %d does not match d=%d" % (len(c), d))
    order = sorted(coords, key=lambda pid: (coords[pid], pid))
    depth = [0]
    work = [0]

    def rec(pids, cell, level):
        depth[0] = max(depth[0], level)
        work[0] += len(pids)
        if len(pids) <= leaf_capacity:
            return PTNode(cell, [], list(pids), depth=level)
        # lower median on each axis in turn; if ties put every point left,
        # fall back to the largest value below the axis maximum
        for shift in range(2 * d):
            axis = (level + shift) % d
            pids = sorted(pids, key=lambda pid: (coords[pid][axis], coords[pid]))
            if shift < d:
                med = coords[pids[(len(pids) - 1) // 2]][axis]
            else:
                top = coords[pids[-1]][axis]
                below = [coords[q][axis] for q in pids if coords[q][axis] < top]
                if not below:
                    continue
                med = below[-1]
            cut = len(pids)
            while cut > 0 and coords[pids[cut - 1]][axis] > med:
                cut -= 1
            if cut < len(pids):
                break
        else:  # only reachable with duplicate points
            return PTNode(cell, [], list(pids), depth=level)
        lcell = cell[:axis] + ((cell[axis][0], med),) + cell[axis + 1:]
        rcell = cell[:axis] + ((med, cell[axis][1]),) + cell[axis + 1:]
        left = rec(pids[:cut], lcell, level + 1)
        right = rec(pids[cut:], rcell, level + 1)
        return PTNode(cell, [left, right], [], axis, med, level)

    root = rec(order, tuple((None, None) for _ in range(d)), 0)
    return PTree(root, len(coords), d, leaf_capacity, coords, depth[0], work[0])


# -- hyperplane tests ------------------------------------------------------------

def as_hyperplane(h) -> Hyperplane:
    return h.as_hyperplane() if isinstance(h, Line2) else h


def crosses(cell, coeffs, c) -> bool:
    """Does the hyperplane meet the closed box?  Exact interval of the linear form."""
    lo_sum = hi_sum = -c
    lo_inf = hi_inf = False
    for (lo, hi), a in zip(cell, coeffs):
        if a == 0:
            continue
        small, big = (lo, hi) if a > 0 else (hi, lo)
        if small is None:
            lo_inf = True
        else:
            lo_sum += a * small
        if big is None:
            hi_inf = True
        else:
            hi_sum += a * big
    return (lo_inf or lo_sum <= 0) and (hi_inf or hi_sum >= 0)


def _on(coords, coeffs, c) -> bool:
    return sum(a * x for a, x in zip(coeffs, coords)) == c


def _prepare(t: PTree, h):
    h = as_hyperplane(h)
    if len(h.coeffs) != t.d:
        raise ValueError("hyperplane dimension %d does not match tree dimension %d" % (len(h.coeffs), t.d))
    return tuple(_exact(a) for a in h.coeffs), _exact(h.c)


def crossing_count(t: PTree, h, node: Optional[PTNode] = None) -> int:
    """Number of nodes (in the subtree of ``node``) whose closed cell meets ``h``."""
    coeffs, c = _prepare(t, h)
    count = 0
    stack = [t.root if node is None else node]
    while stack:
        v = stack.pop()
        if crosses(v.cell, coeffs, c):
            count += 1
            stack.extend(v.children)
    return count


def emptiness_classical(t: PTree, h) -> tuple[bool, int]:
    """(some stored point lies on h, visited) where visited = crossed nodes + leaves inspected.

    The traversal does not stop at the first hit: the pruned tree it walks is
    the search tree whose size the backtracking charge uses.
    """
    coeffs, c = _prepare(t, h)
    found = False
    visited = 0
    stack = [t.root]
    while stack:
        v = stack.pop()
        if not crosses(v.cell, coeffs, c):
            continue
        visited += 1
        if v.is_leaf:
            visited += 1
            if not found:
                found = any(_on(t.coords[p], coeffs, c) for p in v.points)
        else:
            stack.extend(v.children)
    return found, visited


def emptiness_charged(t: PTree, h, ledger: CostLedger) -> tuple[bool, object]:
    found, visited = emptiness_classical(t, h)
    ledger.count(visited)
    charge = ledger.backtracking(visited, t.height, tag="emptiness")
    return found, charge


def witness(t: PTree, h) -> Optional[int]:
    """Smallest stored point id on h, or None."""
    coeffs, c = _prepare(t, h)
    hits = [p for p, x in t.coords.items() if _on(x, coeffs, c)]
    return min(hits) if hits else None


# -- batched traversal -------------------------------------------------------------

@dataclass
class _Flat:
    lo: np.ndarray        # (nodes, d) int64, 0 where unbounded
    hi: np.ndarray
    lo_inf: np.ndarray    # (nodes, d) bool
    hi_inf: np.ndarray
    left: np.ndarray      # child index or -1
    right: np.ndarray
    leaf_pts: np.ndarray  # (nodes, cap) row into pts, -1 padding
    pts: np.ndarray       # (n, d) int64
    pids: np.ndarray      # (n,) point ids
    bound: int            # max |coordinate or bound|


def _flatten(t: PTree) -> Optional[_Flat]:
    if t._flat is not None:
        return t._flat
    nodes = list(t.nodes())
    index = {id(v): k for k, v in enumerate(nodes)}
    vals = [x for p in t.coords.values() for x in p]
    vals += [b for v in nodes for lh in v.cell for b in lh if b is not None]
    if any(not isinstance(x, int) for x in vals):
        return None
    bound = max((abs(x) for x in vals), default=0)
    if bound >= _INT64_SAFE:
        return None
    N, d = len(nodes), t.d
    lo = np.zeros((N, d), np.int64)
    hi = np.zeros((N, d), np.int64)
    lo_inf = np.zeros((N, d), bool)
    hi_inf = np.zeros((N, d), bool)
    left = np.full(N, -1, np.int64)
    right = np.full(N, -1, np.int64)
    leaf_pts = np.full((N, t.leaf_capacity), -1, np.int64)
    pid_list = sorted(t.coords)
    row = {p: k for k, p in enumerate(pid_list)}
    pts = np.array([t.coords[p] for p in pid_list], np.int64).reshape(len(pid_list), d)
    for k, v in enumerate(nodes):
        for ax, (a, b) in enumerate(v.cell):
            if a is None:
                lo_inf[k, ax] = True
            else:
                lo[k, ax] = a
            if b is None:
                hi_inf[k, ax] = True
            else:
                hi[k, ax] = b
        if v.children:
            left[k] = index[id(v.children[0])]
            right[k] = index[id(v.children[1])]
        else:
            for s, p in enumerate(v.points):
                leaf_pts[k, s] = row[p]
    t._flat = _Flat(lo, hi, lo_inf, hi_inf, left, right, leaf_pts, pts,
                    np.array(pid_list, np.int64), bound)
    return t._flat


def emptiness_batch(t: PTree, hyperplanes: Sequence) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run :func:`emptiness_classical` for every hyperplane at once.

    Returns ``(found, visited, crossings)`` arrays, one entry per hyperplane.
    """
    hs = [as_hyperplane(h) for h in hyperplanes]
    H = len(hs)
    flat = _flatten(t) if H and t.n else None
    coeff_rows = [[_exact(a) for a in h.coeffs] for h in hs]
    cs = [_exact(h.c) for h in hs]
    ok = flat is not None and all(isinstance(x, int) for r in coeff_rows for x in r) \
        and all(isinstance(x, int) for x in cs)
    if ok:
        amax = max(abs(x) for r in coeff_rows for x in r)
        cmax = max(abs(x) for x in cs)
        ok = (t.d * amax * max(flat.bound, 1) + cmax) < _INT64_SAFE
    if not ok:
        found = np.zeros(H, bool)
        visited = np.zeros(H, np.int64)
        cross = np.zeros(H, np.int64)
        for k, h in enumerate(hs):
            f, v = emptiness_classical(t, h)
            found[k], visited[k], cross[k] = f, v, crossing_count(t, h)
        return found, visited, cross
    A = np.array(coeff_rows, np.int64).reshape(H, t.d)
    C = np.array(cs, np.int64)
    found = np.zeros(H, bool)
    cross = np.zeros(H, np.int64)
    leaves = np.zeros(H, np.int64)
    hid = np.arange(H, dtype=np.int64)
    nid = np.zeros(H, np.int64)
    while hid.size:
        a = A[hid]
        pos, neg = a > 0, a < 0
        lo, hi = flat.lo[nid], flat.hi[nid]
        small = np.where(pos, lo, hi)
        big = np.where(pos, hi, lo)
        lo_inf = ((pos & flat.lo_inf[nid]) | (neg & flat.hi_inf[nid])).any(axis=1)
        hi_inf = ((pos & flat.hi_inf[nid]) | (neg & flat.lo_inf[nid])).any(axis=1)
        small = np.where((a != 0) & ~np.where(pos, flat.lo_inf[nid], flat.hi_inf[nid]), small, 0)
        big = np.where((a != 0) & ~np.where(pos, flat.hi_inf[nid], flat.lo_inf[nid]), big, 0)
        lo_sum = (a * small).sum(axis=1) - C[hid]
        hi_sum = (a * big).sum(axis=1) - C[hid]
        hit = (lo_inf | (lo_sum <= 0)) & (hi_inf | (hi_sum >= 0))
        hid, nid = hid[hit], nid[hit]
        np.add.at(cross, hid, 1)
        is_leaf = flat.left[nid] < 0
        if is_leaf.any():
            lh, ln = hid[is_leaf], nid[is_leaf]
            np.add.at(leaves, lh, 1)
            rows = flat.leaf_pts[ln]                      # (k, cap)
            valid = rows >= 0
            P = flat.pts[np.where(valid, rows, 0)]        # (k, cap, d)
            dots = (P * A[lh][:, None, :]).sum(axis=2)
            on = valid & (dots == C[lh][:, None])
            found[lh[on.any(axis=1)]] = True
        inner = ~is_leaf
        ih, inn = hid[inner], nid[inner]
        hid = np.concatenate([ih, ih])
        nid = np.concatenate([flat.left[inn], flat.right[inn]])
    return found, cross + leaves, cross
