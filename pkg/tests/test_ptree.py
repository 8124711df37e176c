import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hopcroft_lab import ptree
from hopcroft_lab.geom import Hyperplane, Line2, PointD, gen_instance, incident
from hopcroft_lab.qcost import CostLedger, backtracking_charge

pts2 = st.lists(st.tuples(st.integers(-50, 50), st.integers(-50, 50)), min_size=1, max_size=80, unique=True)


def _cell_inside(child, parent):
    for (clo, chi), (plo, phi) in zip(child, parent):
        if plo is not None and (clo is None or clo < plo):
            return False
        if phi is not None and (chi is None or chi > phi):
            return False
    return True


def _in_cell(coords, cell):
    return all((lo is None or lo <= x) and (hi is None or x <= hi) for x, (lo, hi) in zip(coords, cell))


def test_single_point_is_one_leaf():
    t = ptree.build([PointD(1, 1)])
    assert t.depth == 0 and t.root.is_leaf and t.root.points == [0]


def test_eight_points_split_evenly():
    pts = [PointD(x, y) for x, y in [(0, 5), (1, 3), (2, 7), (3, 1), (4, 4), (5, 0), (6, 6), (7, 2)]]
    t = ptree.build(pts, leaf_capacity=4)
    leaves = t.leaves()
    assert t.depth <= 1 + 2
    assert sorted(len(v.points) for v in leaves) == [4, 4]
    # lower median of x is 3; x <= 3 goes left
    assert t.root.axis == 0 and t.root.split == 3
    assert sorted(leaves[0].points) == [0, 1, 2, 3]


@given(pts2, st.randoms(use_true_random=False))
def test_build_is_order_insensitive(raw, rnd):
    pts = [PointD(*p) for p in raw]
    shuffled = list(pts)
    rnd.shuffle(shuffled)
    assert ptree.build(pts).serialize() == ptree.build(shuffled).serialize()


@given(pts2, st.integers(1, 6))
def test_structure_invariants(raw, cap):
    pts = [PointD(*p) for p in raw]
    t = ptree.build(pts, leaf_capacity=cap)
    seen = []
    for v in t.nodes():
        for ch in v.children:
            assert _cell_inside(ch.cell, v.cell)
        if v.is_leaf:
            assert len(v.points) <= cap
            seen += v.points
            for p in v.points:
                assert _in_cell(t.coords[p], v.cell)
    assert sorted(seen) == list(range(len(pts)))
    assert t.depth <= math.ceil(math.log2(max(1, len(pts) / cap))) + 2
    assert t.build_steps == sum(len(_subtree_points(v)) for v in t.nodes())


def _subtree_points(v):
    if v.is_leaf:
        return v.points
    return [p for ch in v.children for p in _subtree_points(ch)]


def test_emptiness_examples():
    t = ptree.build([PointD(1, 1)])
    found, visited = ptree.emptiness_classical(t, Line2(0, 1, 0))
    assert found and visited >= 1
    found, _ = ptree.emptiness_classical(t, Line2(0, 0, 0))
    assert not found


def test_emptiness_matches_brute_256_by_100():
    inst = gen_instance(2, 100, 256, 25, 1 << 10, 3)
    t = ptree.build(inst.points)
    for l in inst.lines:
        brute = any(incident(l, p) for p in inst.points)
        assert ptree.emptiness_classical(t, l)[0] == brute
        w = ptree.witness(t, l)
        assert (w is not None) == brute
        if brute:
            assert incident(l, inst.points[w])


@settings(max_examples=30)
@given(st.integers(1, 300), st.integers(0, 10 ** 6))
def test_batch_equals_reference(m, seed):
    inst = gen_instance(2, 40, m, min(m, 10), 1 << 10, seed)
    t = ptree.build(inst.points)
    found, visited, crossings = ptree.emptiness_batch(t, inst.lines)
    for k, l in enumerate(inst.lines):
        f, v = ptree.emptiness_classical(t, l)
        assert (bool(found[k]), int(visited[k])) == (f, v)
        assert int(crossings[k]) == ptree.crossing_count(t, l)


def test_batch_spatial():
    inst = gen_instance(3, 30, 200, 6, 1 << 10, 9)
    t = ptree.build(inst.points, 3)
    found, visited, _ = ptree.emptiness_batch(t, inst.lines)
    for k, h in enumerate(inst.lines):
        assert (bool(found[k]), int(visited[k])) == ptree.emptiness_classical(t, h)


def test_single_leaf_crossing():
    t = ptree.build([PointD(1, 1), PointD(2, 3)])
    assert ptree.crossing_count(t, Line2(0, 5, -100)) == 1


def test_hyperplane_outside_subtree_box():
    pts = [PointD(x, y) for x in range(8) for y in range(8)]
    t = ptree.build(pts)
    sub = t.root.children[0]           # x <= 3
    far = Hyperplane(0, (1, 0), 100)   # x = 100
    assert ptree.crossing_count(t, far, sub) == 0
    assert all(ptree.crossing_count(t, far, v) == 0 for v in t.nodes() if _cell_inside(v.cell, sub.cell))


def test_crosses_is_exact():
    cell = ((Fraction(0), Fraction(1)), (Fraction(0), Fraction(1)))
    assert ptree.crosses(cell, (1, 1), 2)          # touches the corner (1,1)
    assert not ptree.crosses(cell, (1, 1), Fraction(2) + Fraction(1, 10 ** 30))
    assert ptree.crosses(((None, None), (None, None)), (3, -7), 11)


def test_grid_crossing_number():
    side = 64
    t = ptree.build([PointD(x, y) for x in range(side) for y in range(side)])
    n = side * side
    rng = random.Random(5)
    best = 0
    for k in range(100):
        a = rng.randint(-200, 200)
        b = rng.randint(-200 * side, 200 * side)
        best = max(best, ptree.crossing_count(t, Line2(k, a, b)))
    assert 0.5 * math.sqrt(n) <= best <= 8 * math.sqrt(n)


@pytest.mark.parametrize("T,h,expected", [(1, 1, 1), (64, 4, 16)])
def test_charge_examples(T, h, expected):
    assert backtracking_charge(T, h) == expected


def test_emptiness_charged_records_backtracking():
    inst = gen_instance(2, 5, 64, 2, 1 << 10, 1)
    t = ptree.build(inst.points)
    ledger = CostLedger()
    for l in inst.lines:
        found, charge = ptree.emptiness_charged(t, l, ledger)
        f, v = ptree.emptiness_classical(t, l)
        assert found == f and charge == backtracking_charge(v, t.height)
    assert len(ledger.trace()) == 5 and ledger.trace()[0]["tag"] == "emptiness"


def test_dimension_mismatch():
    t = ptree.build([PointD(1, 2)])
    with pytest.raises(ValueError):
        ptree.crossing_count(t, Hyperplane(0, (1, 1, 1), 0))
    with pytest.raises(ValueError):
        ptree.build([PointD(1, 2), PointD(1, 2, 3)])


def test_empty_tree_batch():
    t = ptree.build([], 2)
    found, visited, _ = ptree.emptiness_batch(t, [Line2(0, 1, 0)])
    assert not found.any() and isinstance(visited, np.ndarray)
