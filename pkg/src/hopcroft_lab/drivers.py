"""End-to-end solvers for Hopcroft's problem with charged costs.

Every driver computes its answer by exact classical evaluation and records
what the corresponding quantum subroutine would be charged in a
:class:`~hopcroft_lab.qcost.CostLedger`.  Answers therefore never depend on
the cost model.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import ptree
from .arrangement import Arrangement
from .geom import Instance, Line2, dualize, incident
from .hiskip import ceil_log2
from .qcost import (ALGO2_DENSE, ALGO2_SPARSE, CostLedger, algo1_regime, algo2_regime,
                    backtracking_charge, grover_charge)

_NP_SAFE = 1 << 20      # |coefficient|, |coordinate| bound for the int64 scan
ANSWER_ARRANGEMENT_LIMIT = 256


@dataclass
class RunResult:
    algo: str
    n: int
    m: int
    d: int
    answer: bool
    witness: Optional[tuple]
    charge: object
    seed: int = 0
    regime: str = ""
    r: Optional[int] = None
    S: object = None
    U: object = None
    C: object = None
    steps: int = 0
    measured: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)

    def to_json(self, with_trace: bool = False) -> dict:
        def num(v):
            if isinstance(v, Fraction):
                return v.numerator if v.denominator == 1 else str(v)
            return v
        out = {"algo": self.algo, "n": self.n, "m": self.m, "d": self.d, "regime": self.regime,
               "r": self.r, "answer": self.answer,
               "witness": list(self.witness) if self.witness is not None else None,
               "charge": num(self.charge), "S": num(self.S), "U": num(self.U), "C": num(self.C),
               "steps": self.steps, "seed": self.seed}
        if with_trace:
            out["trace"] = self.trace
            out["measured"] = {k: num(v) for k, v in self.measured.items()}
        return out

    def dumps(self, with_trace: bool = False) -> str:
        return json.dumps(self.to_json(with_trace), sort_keys=True)


def _ceil_mean(values) -> int:
    values = list(values)
    if not values:
        return 0
    return -(-sum(values) // len(values))


def _finish(algo, inst, ledger, answer, witness, seed, **kw) -> RunResult:
    return RunResult(algo, inst.n, inst.m, inst.d, answer, witness, ledger.total, seed,
                     trace=ledger.trace(), **kw)


# -- ground truth --------------------------------------------------------------

def brute_force_reference(inst: Instance) -> Optional[tuple]:
    """Scan all pairs with exact rationals; first incident (line, point)."""
    for h in inst.lines:
        for k, p in enumerate(inst.points):
            if incident(h, p):
                return (h.id, k)
    return None


def _integral_rows(inst: Instance):
    hyps = inst.hyperplanes()
    rows = [list(h.coeffs) + [h.c] for h in hyps]
    pts = []
    for p in inst.points:
        if any(c.denominator != 1 for c in p.coords):
            return None
        pts.append([c.numerator for c in p.coords])
    if any(abs(v) > _NP_SAFE for r in rows for v in r) or any(abs(v) > _NP_SAFE for p in pts for v in p):
        return None
    return rows, pts


def incidence_matrix_hits(inst: Instance, chunk: int = 256) -> list[tuple]:
    """All incident (line, point) pairs, lexicographic, via exact int64 arithmetic."""
    data = _integral_rows(inst)
    if data is None:
        return [(h.id, k) for h in inst.lines for k, p in enumerate(inst.points) if incident(h, p)]
    rows, pts = data
    if not rows or not pts:
        return []
    R = np.array(rows, np.int64)
    P = np.array(pts, np.int64)
    ids = np.array([h.id for h in inst.lines], np.int64)
    hits = []
    for s in range(0, len(R), chunk):
        block = R[s:s + chunk]
        on = (block[:, :-1] @ P.T) == block[:, -1:]
        li, pi = np.nonzero(on)
        hits.extend(zip(ids[s + li].tolist(), pi.tolist()))
    return sorted(hits)


def brute_force(inst: Instance) -> Optional[tuple]:
    """First incident pair in (line, point) lexicographic order, or None."""
    data = _integral_rows(inst)
    if data is None:
        return brute_force_reference(inst)
    hits = incidence_matrix_hits(inst)
    return hits[0] if hits else None


def _arrangement_hits(arr: Arrangement, inst: Instance):
    """Locate every point; returns (sorted incident pairs, per-point locate steps)."""
    hits, steps = [], []
    for k, p in enumerate(inst.points):
        loc = arr.locate_point(p)
        steps.append(loc.steps)
        line = getattr(loc, "line", None)
        if line is None and hasattr(loc, "lines"):
            line = min(loc.lines)
        if line is not None:
            hits.append((line, k))
    return sorted(hits), steps


def _require_planar(inst: Instance, algo: str) -> None:
    if inst.d != 2:
        raise ValueError("%s works on planar instances only" % algo)


# -- classical baseline and warm-up ---------------------------------------------

def baseline_classical(inst: Instance, ledger: Optional[CostLedger] = None, seed: int = 0) -> RunResult:
    """Full arrangement of all lines, then Grover over points with point location as check."""
    _require_planar(inst, "baseline_classical")
    ledger = ledger or CostLedger()
    with ledger.section("baseline", n=inst.n, m=inst.m) as top:
        arr = Arrangement.build(inst.lines, seed=seed, universe=max(2, inst.n))
        build = arr.steps["insert"]
        ledger.record("arrangement.build", build, lines=inst.n)
        hits, loc_steps = _arrangement_hits(arr, inst) if inst.n else ([], [0] * inst.m)
        T = _ceil_mean(loc_steps)
        check = ledger.grover(max(1, inst.m), T, tag="grover.points", mean_locate=T)
        top.charge = build + check
    ledger.count(build + sum(loc_steps))
    return _finish("baseline", inst, ledger, bool(hits), hits[0] if hits else None, seed,
                   regime="classical", steps=build + sum(loc_steps),
                   measured={"build": build, "locate": sum(loc_steps)})


def algo0_warmup(inst: Instance, k: Optional[int] = None, ledger: Optional[CostLedger] = None,
                 seed: int = 0) -> RunResult:
    """Split lines into groups of k, Grover over groups of (build + Grover over points)."""
    _require_planar(inst, "algo0_warmup")
    ledger = ledger or CostLedger()
    n = inst.n
    if k is None:
        k = max(1, round(n ** 0.75))
    if not 1 <= k <= max(1, n):
        raise ValueError("group size k=%r outside [1, n]" % (k,))
    groups = [inst.lines[s:s + k] for s in range(0, n, k)]
    hits: list = []
    steps = 0
    T_groups = []
    with ledger.section("algo0", n=n, m=inst.m, k=k, groups=len(groups)) as top:
        for g, lines in enumerate(groups):
            with ledger.section("group", index=g, size=len(lines)) as node:
                arr = Arrangement.build(lines, seed=seed, universe=max(2, len(lines)))
                build = arr.steps["insert"]
                ledger.record("arrangement.build", build, lines=len(lines))
                gh, loc_steps = _arrangement_hits(arr, inst)
                hits += gh
                T = _ceil_mean(loc_steps)
                node.charge = build + ledger.grover(max(1, inst.m), T, tag="grover.points")
                T_groups.append(node.charge)
                steps += build + sum(loc_steps)
        top.charge = grover_charge(max(1, len(groups)), max(T_groups, default=0), ledger.c_g)
    ledger.count(steps)
    hits.sort()
    return _finish("algo0", inst, ledger, bool(hits), hits[0] if hits else None, seed,
                   regime="warmup", r=k, steps=steps)


# -- Algorithm 1: partition trees and backtracking ------------------------------

def _normalize_lines_major(inst: Instance):
    """Make lines >= points; returns (instance, swapped)."""
    if inst.m <= inst.n:
        return inst, False
    if inst.d != 2:
        raise ValueError("algo1 needs m <= n in d >= 3 (duality is planar only)")
    return dualize(inst), True


def _unswap(w, swapped, inst: Instance):
    """Map a witness of the dual back; dual point t is the line at position t."""
    if w is None or not swapped:
        return w
    return (inst.lines[w[1]].id, w[0])


def algo1(inst: Instance, ledger: Optional[CostLedger] = None, seed: int = 0) -> RunResult:
    ledger = ledger or CostLedger()
    work, swapped = _normalize_lines_major(inst)
    n, m, d = work.n, work.m, work.d
    regime = algo1_regime(n, m, d) if m else "empty"
    if regime == "grouped":
        r = min(m, max(1, round(n ** (d / (d + 1)))))
    else:
        r = max(1, m)
    hyps = work.hyperplanes()
    hits: list = []
    build_total = query_total = 0
    T_groups = []
    with ledger.section("algo1", n=n, m=m, d=d, regime=regime, r=r, dualized=swapped) as top:
        for g, s in enumerate(range(0, m, r)):
            ids = list(range(s, min(m, s + r)))
            with ledger.section("group", index=g, size=len(ids)) as node:
                tree = ptree.build([work.points[i] for i in ids], d, ids=ids)
                ledger.record("ptree.build", tree.build_steps, points=len(ids), depth=tree.depth)
                found, visited, _ = ptree.emptiness_batch(tree, hyps)
                hgt = tree.height
                charges = [backtracking_charge(int(v), hgt, ledger.c_b) for v in visited.tolist()]
                T_check = max(charges, default=0)
                ledger.record("backtracking", T_check, queries=len(hyps), h=hgt,
                              T_max=int(visited.max()) if len(visited) else 0,
                              T_mean=float(visited.mean()) if len(visited) else 0.0)
                inner = ledger.grover(max(1, n), T_check, tag="grover.lines")
                node.charge = tree.build_steps + inner
                T_groups.append(node.charge)
                build_total += tree.build_steps
                query_total += int(visited.sum())
                for li in np.nonzero(found)[0].tolist():
                    hits.append((hyps[li].id, ptree.witness(tree, hyps[li])))
        groups = len(T_groups)
        top.charge = grover_charge(max(1, groups), max(T_groups, default=0), ledger.c_g)
        top.inputs["groups"] = groups
    ledger.count(build_total + query_total)
    w = _unswap(min(hits), swapped, inst) if hits else None
    return _finish("algo1", inst, ledger, bool(hits), w, seed, regime=regime, r=r,
                   steps=build_total + query_total,
                   measured={"build": build_total, "query": query_total})


# -- Algorithm 2: Johnson-graph walk over arrangements ------------------------------

def _normalize_points_major(inst: Instance):
    if inst.n <= inst.m:
        return inst, False
    return dualize(inst), True


def walk_r(lines: int, points: int) -> Optional[int]:
    """Walk subset size for ``lines <= points``, or None in the classical regime."""
    regime = algo2_regime(points, lines)
    if regime == ALGO2_SPARSE or lines < 2:
        return None
    raw = points ** (1 / 3) if regime == ALGO2_DENSE else (lines * points) ** 0.2
    return min(lines // 2, max(1, round(raw)))


def algo2(inst: Instance, ledger: Optional[CostLedger] = None, walk_samples: int = 64,
          seed: Optional[int] = None) -> RunResult:
    _require_planar(inst, "algo2")
    ledger = ledger or CostLedger()
    seed = inst.seed if seed is None else seed
    work, swapped = _normalize_points_major(inst)
    L, P = work.n, work.m
    regime = algo2_regime(P, L) if L and P else ALGO2_SPARSE
    r = walk_r(L, P) if L and P else None
    if r is None:
        res = baseline_classical(work, ledger, seed)
        return RunResult("algo2", inst.n, inst.m, 2, res.answer, _unswap(res.witness, swapped, inst),
                         ledger.total, seed, ALGO2_SPARSE, None, steps=res.steps,
                         measured=res.measured, trace=ledger.trace())
    rng = random.Random(seed)
    with ledger.section("algo2", lines=L, points=P, regime=regime, r=r, dualized=swapped) as top:
        arr = Arrangement(work.lines, seed=seed, universe=L)
        ids = [l.id for l in work.lines]
        current = rng.sample(ids, r)
        for i in current:
            arr.insert_line(i)
        S = arr.steps["insert"]
        ledger.record("setup", S, r=r, formula=r * r * ceil_log2(L) ** 4)
        inside = set(current)
        outside = [i for i in ids if i not in inside]
        u_samples, c_samples = [], []
        for _ in range(walk_samples):
            a = rng.randrange(len(current))
            b = rng.randrange(len(outside))
            i, j = current[a], outside[b]
            u = arr.remove_line(i) + arr.insert_line(j)
            current[a], outside[b] = j, i
            u_samples.append(u)
            loc = arr.locate_point(work.points[rng.randrange(P)])
            c_samples.append(loc.steps)
        U = _ceil_mean(u_samples)
        T = _ceil_mean(c_samples)
        ledger.record("update", U, samples=u_samples)
        C = ledger.grover(P, T, tag="checking", locate_samples=c_samples)
        top.charge = ledger.mnrs(S, U, C, L, r, tag="walk")
    walk_steps = S + sum(u_samples) + sum(c_samples)

    # exact answer: the full arrangement at desk scale, an exact scan beyond it
    if min(L, P) <= ANSWER_ARRANGEMENT_LIMIT:
        full = Arrangement.build(work.lines, seed=seed, universe=L)
        hits, _ = _arrangement_hits(full, work)
        extraction = "arrangement"
    else:
        hits = incidence_matrix_hits(work)
        extraction = "scan"
    ledger.count(walk_steps)
    w = _unswap(hits[0], swapped, inst) if hits else None
    return RunResult("algo2", inst.n, inst.m, 2, bool(hits), w, ledger.total, seed, regime, r,
                     S, U, C, walk_steps, {"extraction": extraction, "walk_samples": walk_samples},
                     ledger.trace())


# -- walk stress ------------------------------------------------------------------

@dataclass
class WalkReport:
    moves: int = 0
    verifies: int = 0
    fingerprint_checks: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def corrupt(arr: Arrangement, rng: random.Random) -> None:
    """Fault injection: cut a level chain right after its head on layer 0."""
    heads = [h for h in arr.start if arr.store[h][0] is not None]
    if not heads:
        raise ValueError("no level chain with a crossing to corrupt")
    arr.store[rng.choice(heads)][0] = None


def walk_shadow(inst: Instance, r: int, steps: int, seed: int = 0,
                corrupt_at: Optional[int] = None) -> WalkReport:
    """Classical Johnson-graph walk over r-subsets of the lines, checking every state."""
    _require_planar(inst, "walk_shadow")
    n = inst.n
    if r < 1 or 2 * r > n:
        raise ValueError("walk_shadow needs 1 <= r <= n/2 (n=%d, r=%d)" % (n, r))
    rng = random.Random(seed)
    ids = [l.id for l in inst.lines]
    arr = Arrangement(inst.lines, seed=seed, universe=n)
    current = rng.sample(ids, r)
    for i in current:
        arr.insert_line(i)
    inside = set(current)
    outside = [i for i in ids if i not in inside]
    report = WalkReport()
    every = max(1, math.ceil(steps / 10))
    for t in range(1, steps + 1):
        a, b = rng.randrange(r), rng.randrange(len(outside))
        i, j = current[a], outside[b]
        try:
            arr.remove_line(i)
            arr.insert_line(j)
        except Exception as exc:  # a corrupted structure may break the sweep itself
            report.violations.append("move %d: update failed: %s" % (t, exc))
            break
        current[a], outside[b] = j, i
        report.moves += 1
        if corrupt_at is not None and t == corrupt_at:
            corrupt(arr, rng)
        problems = arr.verify()
        report.verifies += 1
        report.violations += ["move %d: %s" % (t, p) for p in problems]
        if problems:
            break
        if t % every == 0 or t == steps:
            order = list(current)
            rng.shuffle(order)
            fresh = Arrangement.build(inst.lines, seed=seed, order=order, universe=n)
            report.fingerprint_checks += 1
            if fresh.fingerprint() != arr.fingerprint():
                report.violations.append("move %d: fingerprint differs from a fresh build" % t)
    return report


DRIVERS = {
    "brute": None,
    "baseline": baseline_classical,
    "algo0": algo0_warmup,
    "algo1": algo1,
    "algo2": algo2,
}


def run(algo: str, inst: Instance, seed: Optional[int] = None, ledger: Optional[CostLedger] = None,
        **kw) -> RunResult:
    """Dispatch by name; ``brute`` wraps :func:`brute_force` with a zero charge."""
    if algo not in DRIVERS:
        raise KeyError("unknown algorithm %r" % (algo,))
    ledger = ledger or CostLedger()
    seed = inst.seed if seed is None else seed
    if algo == "brute":
        w = brute_force(inst)
        ledger.count(inst.n * inst.m)
        return _finish("brute", inst, ledger, w is not None, w, seed, regime="exhaustive",
                       steps=inst.n * inst.m)
    if algo == "algo0":
        return algo0_warmup(inst, kw.get("k"), ledger, seed)
    if algo == "algo2":
        return algo2(inst, ledger, kw.get("walk_samples", 64), seed)
    return DRIVERS[algo](inst, ledger, seed)
