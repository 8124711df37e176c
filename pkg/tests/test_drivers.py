import json

import pytest

from conftest import l3_instance
from hopcroft_lab.drivers import (algo0_warmup, algo1, algo2, baseline_classical, brute_force, run,
                                  walk_r, walk_shadow)
from hopcroft_lab.geom import Instance, gen_instance, incident
from hopcroft_lab.qcost import (ALGO2_DENSE, ALGO2_MIDDLE, ALGO2_SPARSE, CostLedger,
                                predicted_complexity)

ALGOS = ["baseline", "algo0", "algo1", "algo2"]


def _is_incidence(inst, w):
    line = next(l for l in inst.lines if l.id == w[0])
    return incident(line, inst.points[w[1]])


def test_brute_examples():
    assert brute_force(l3_instance((0, 3))) == (3, 0)
    assert brute_force(l3_instance((0, 1))) is None
    assert brute_force(l3_instance()) is None


@pytest.mark.parametrize("algo", ALGOS)
def test_l3_examples(algo):
    yes = run(algo, l3_instance((0, 3)))
    assert yes.answer and yes.witness == (3, 0)
    assert not run(algo, l3_instance((0, 1))).answer


@pytest.mark.parametrize("algo", ALGOS)
def test_random_instances_agree_with_brute(algo):
    for seed in range(30):
        n, m = 3 + (seed * 7) % 40, 2 + (seed * 11) % 45
        inst = gen_instance(2, n, m, seed % 2, 1 << 10, seed)
        res = run(algo, inst)
        want = brute_force(inst)
        assert res.answer == (want is not None), (algo, seed)
        if res.answer:
            assert _is_incidence(inst, res.witness)


def test_algo0_group_sizes():
    inst = gen_instance(2, 20, 20, 1, 1 << 10, 3)
    base = baseline_classical(inst)
    one = algo0_warmup(inst, 1)
    whole = algo0_warmup(inst, inst.n)
    assert one.answer == whole.answer == base.answer == True  # noqa: E712
    assert whole.witness == base.witness
    assert _is_incidence(inst, one.witness)
    assert tuple(inst.planted[0]) == one.witness


@pytest.mark.parametrize("d", [3, 4])
def test_algo1_spatial(d):
    for seed in range(10):
        inst = gen_instance(d, 25, 20, seed % 2, 1 << 10, seed)
        res = algo1(inst)
        assert res.answer == (brute_force(inst) is not None)
        if res.answer:
            assert _is_incidence(inst, res.witness)


def test_algo1_rejects_spatial_dualization():
    inst = gen_instance(3, 5, 20, 0, 1 << 10, 1)
    with pytest.raises(ValueError):
        algo1(inst)


@pytest.mark.parametrize("n,m", [(200, 200), (400, 30), (30, 400), (60, 20)])
def test_algo1_regime_matches_prediction(n, m):
    inst = gen_instance(2, n, m, 1, 1 << 10, n + m)
    res = algo1(inst)
    assert res.regime == predicted_complexity(n, m, 2, "algo1")[0]
    assert res.answer and _is_incidence(inst, res.witness)


@pytest.mark.parametrize("lines,points,regime", [
    (3, 100, ALGO2_SPARSE),
    (10, 200, ALGO2_MIDDLE),
    (40, 60, ALGO2_DENSE),
    (150, 8, ALGO2_MIDDLE),  # dualized: 150 points, 8 lines
])
def test_algo2_regimes(lines, points, regime):
    for planted in (0, 1):
        inst = gen_instance(2, lines, points, planted, 1 << 10, lines * points + planted)
        res = algo2(inst)
        assert res.regime == regime == predicted_complexity(lines, points, 2, "algo2")[0]
        assert res.answer == bool(planted)
        if res.answer:
            assert _is_incidence(inst, res.witness)
        if regime != ALGO2_SPARSE:
            assert res.r == walk_r(min(lines, points), max(lines, points))
            assert res.charge > res.S
            assert res.S > 0 and res.U > 0 and res.C > 0


def test_algo2_walk_charge_is_mnrs():
    inst = gen_instance(2, 40, 60, 0, 1 << 10, 5)
    ledger = CostLedger()
    res = algo2(inst, ledger)
    walk = ledger.find("walk")
    assert walk is not None and walk.charge == res.charge
    assert walk.inputs["n"] == 40 and walk.inputs["r"] == res.r


def test_algo1_charge_composition():
    inst = gen_instance(2, 64, 64, 0, 1 << 10, 2)
    ledger = CostLedger()
    res = algo1(inst, ledger)
    top = ledger.trace()[0]
    assert top["tag"] == "algo1" and res.charge == ledger.total == top["charge"]
    groups = [c for c in top["children"] if c["tag"] == "group"]
    assert len(groups) == top["inputs"]["groups"]
    for g in groups:
        tags = [c["tag"] for c in g["children"]]
        assert tags == ["ptree.build", "backtracking", "grover.lines"]
        assert g["charge"] == g["children"][0]["charge"] + g["children"][2]["charge"]


def test_regime_labels_on_grid():
    for n in (16, 64, 256):
        for m in (2, 5, 16, 64, 256):
            inst = gen_instance(2, n, m, 0, 1 << 10, n * m)
            assert algo1(inst).regime == predicted_complexity(n, m, 2, "algo1")[0]
            assert algo2(inst).regime == predicted_complexity(n, m, 2, "algo2")[0]


def test_walk_shadow_trivial_and_stress():
    inst = gen_instance(2, 6, 0, 0, 1 << 10, 1)
    rep = walk_shadow(inst, 1, 20, seed=1)
    assert rep.ok and rep.violations == [] and rep.moves == 20
    inst = gen_instance(2, 40, 0, 0, 1 << 10, 2)
    rep = walk_shadow(inst, 10, 60, seed=2)
    assert rep.ok and rep.fingerprint_checks == 10


def test_walk_shadow_detects_corruption():
    inst = gen_instance(2, 24, 0, 0, 1 << 10, 3)
    rep = walk_shadow(inst, 6, 30, seed=3, corrupt_at=5)
    assert not rep.ok and rep.violations


def test_walk_shadow_rejects_large_r():
    with pytest.raises(ValueError):
        walk_shadow(gen_instance(2, 10, 0, 0, 1 << 10, 1), 6, 5)


def test_runs_are_deterministic():
    inst = gen_instance(2, 50, 70, 1, 1 << 10, 9)
    for algo in ["brute"] + ALGOS:
        a, b = run(algo, inst, seed=4), run(algo, inst, seed=4)
        assert a.dumps() == b.dumps()


def test_run_result_json():
    res = run("algo2", gen_instance(2, 40, 60, 1, 1 << 10, 5))
    data = json.loads(res.dumps())
    assert data["algo"] == "algo2" and data["answer"] is True
    assert "trace" not in data or isinstance(data["trace"], list)


def test_unknown_algo():
    with pytest.raises(KeyError):
        run("quantum", Instance(2, [], []))


def test_empty_instances():
    for algo in ["brute"] + ALGOS:
        assert not run(algo, Instance(2, [], [])).answer
        assert not run(algo, gen_instance(2, 5, 0, 0, 1 << 10, 1)).answer
        assert not run(algo, gen_instance(2, 0, 5, 0, 1 << 10, 1)).answer
