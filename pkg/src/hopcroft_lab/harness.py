"""Command line entry point: gen, run, bench, verify, fit.

Exit codes: 0 on success, 1 when a property or answer check fails, 2 on
usage or I/O errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Optional, Sequence

from . import drivers, ptree
from .arrangement import Arrangement
from .errors import HopcroftError
from .geom import Instance, Line2, gen_instance, validate_general_position
from .hiskip import SkipList
from .qcost import predicted_complexity

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
CSV_FIELDS = ["n", "m", "d", "algo", "seed", "trial", "answer", "charge", "S", "U", "C", "steps"]
ALGOS = ["brute", "baseline", "algo0", "algo1", "algo2"]


class UsageError(Exception):
    pass


# -- gen / run -------------------------------------------------------------------

def cmd_gen(args) -> int:
    inst = gen_instance(args.d, args.n, args.m, args.planted, args.bound, args.seed)
    problems = validate_general_position(inst)
    if problems:
        print("\n".join(problems), file=sys.stderr)
        return EXIT_FAIL
    _write(args.out, inst.dumps() + "\n")
    return EXIT_OK


def load_instance(path: str) -> Instance:
    try:
        with open(path) as fh:
            return Instance.loads(fh.read())
    except OSError as exc:
        raise UsageError("cannot read instance %s: %s" % (path, exc)) from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError("malformed instance %s: %s" % (path, exc)) from exc


def cmd_run(args) -> int:
    inst = load_instance(args.instance)
    kw = {"walk_samples": args.walk_samples}
    if args.k is not None:
        kw["k"] = args.k
    res = drivers.run(args.algo, inst, seed=args.seed, **kw)
    _write(args.out, res.dumps(with_trace=args.trace) + "\n")
    return EXIT_OK


def _write(path: Optional[str], text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError("cannot write %s: %s" % (path, exc)) from exc


# -- bench -------------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else str(v)
    return str(v)


def trial_seed(seed: int, n: int, m: int, d: int, trial: int) -> int:
    return random.Random("%d:%d:%d:%d:%d" % (seed, n, m, d, trial)).getrandbits(32)


def _bench_task(task):
    n, m, d, trial, seed, algos, planted, walk_samples = task
    s = trial_seed(seed, n, m, d, trial)
    k = planted if planted is not None else trial % 2
    inst = gen_instance(d, n, m, min(k, n, m), 1 << 10, s)
    truth = drivers.brute_force(inst) is not None
    rows = []
    for algo in algos:
        res = drivers.run(algo, inst, seed=s, walk_samples=walk_samples)
        rows.append({"n": n, "m": m, "d": d, "algo": algo, "seed": s, "trial": trial,
                     "answer": res.answer, "charge": res.charge, "S": res.S, "U": res.U,
                     "C": res.C, "steps": res.steps, "_truth": truth})
    return rows


def bench_rows(sizes: Sequence[int], algos: Sequence[str], trials: int, d: int = 2, seed: int = 0,
               m: Optional[int] = None, planted: Optional[int] = None, walk_samples: int = 64,
               jobs: int = 1) -> list[dict]:
    """One row per (algo, size, trial); answers checked against brute force by the caller."""
    tasks = [(n, m if m is not None else n, d, t, seed, list(algos), planted, walk_samples)
             for n in sizes for t in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            chunks = list(ex.map(_bench_task, tasks))
    else:
        chunks = [_bench_task(t) for t in tasks]
    rows = [r for c in chunks for r in c]
    rows.sort(key=lambda r: (r["algo"], r["n"], r["m"], r["trial"]))
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, CSV_FIELDS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r[k]) for k in CSV_FIELDS})
    return buf.getvalue()


def cmd_bench(args) -> int:
    algos = _split(args.algos, str)
    unknown = [a for a in algos if a not in ALGOS]
    if unknown:
        raise UsageError("unknown algorithm(s): %s" % ", ".join(unknown))
    rows = bench_rows(_split(args.sizes, int), algos, args.trials, args.d, args.seed, args.m,
                      args.planted, args.walk_samples, args.jobs)
    _write(args.out, rows_to_csv(rows))
    wrong = [r for r in rows if r["answer"] != r["_truth"]]
    for r in wrong:
        print("answer mismatch: %s n=%d m=%d trial=%d" % (r["algo"], r["n"], r["m"], r["trial"]),
              file=sys.stderr)
    return EXIT_FAIL if wrong else EXIT_OK


# -- fit -----------------------------------------------------------------------------

def read_csv(path: str) -> list[dict]:
    try:
        with open(path, newline="") as fh:
            return list(csv.DictReader(fh))
    except OSError as exc:
        raise UsageError("cannot read %s: %s" % (path, exc)) from exc


def loglog_fit(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """Least squares of log2 y on log2 x; returns (slope, intercept, r^2)."""
    if len(set(xs)) < 3:
        raise UsageError("a fit needs at least 3 distinct x values")
    if any(x <= 0 for x in xs) or any(y <= 0 for y in ys):
        raise UsageError("log-log fit needs positive values")
    lx = [math.log2(x) for x in xs]
    ly = [math.log2(y) for y in ys]
    k = len(lx)
    mx, my = sum(lx) / k, sum(ly) / k
    sxx = sum((a - mx) ** 2 for a in lx)
    sxy = sum((a - mx) * (b - my) for a, b in zip(lx, ly))
    slope = sxy / sxx
    intercept = my - slope * mx
    ss_res = sum((b - (slope * a + intercept)) ** 2 for a, b in zip(lx, ly))
    ss_tot = sum((b - my) ** 2 for b in ly)
    r2 = 1.0 if ss_tot == 0 else 1 - ss_res / ss_tot
    return slope, intercept, r2


def fit_rows(rows: Sequence[dict], x: str = "n", y: str = "charge", algo: Optional[str] = None,
             agg: str = "mean", log_power: float = 0.0) -> dict:
    """Aggregate y per x, divide by log2(x)^log_power, then fit on log-log axes."""
    groups: dict = {}
    for r in rows:
        if algo is not None and r.get("algo") != algo:
            continue
        try:
            xv = float(Fraction(r[x]))
            yv = float(Fraction(r[y]))
        except KeyError as exc:
            raise UsageError("column %s missing from CSV" % exc) from exc
        except (ValueError, ZeroDivisionError):
            continue
        groups.setdefault(xv, []).append(yv)
    if agg not in ("mean", "max", "min", "median"):
        raise UsageError("unknown aggregate %r" % agg)
    xs, ys = [], []
    for xv in sorted(groups):
        vals = sorted(groups[xv])
        if agg == "mean":
            v = sum(vals) / len(vals)
        elif agg == "max":
            v = vals[-1]
        elif agg == "min":
            v = vals[0]
        else:
            h = len(vals) // 2
            v = vals[h] if len(vals) % 2 else (vals[h - 1] + vals[h]) / 2
        if log_power:
            v /= math.log2(xv) ** log_power
        xs.append(xv)
        ys.append(v)
    slope, intercept, r2 = loglog_fit(xs, ys)
    return {"slope": slope, "intercept": intercept, "r2": r2, "points": [[a, b] for a, b in zip(xs, ys)]}


def exponent_diagram(path: str, measured: Optional[dict] = None) -> None:
    """Exponent of the charged cost against log_n m (m <= n), in the style of the complexity figure."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    alphas = [k / 240 for k in range(241)]
    n = 1 << 60

    def exponent(algo, a):
        m = max(1, round(n ** a))
        e_n, e_m = predicted_complexity(n, m, 2, algo)[1]
        return float(e_n) + float(e_m) * a

    lower = [max((1 + a) / 3, 0.5) for a in alphas]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(alphas, lower, color="tab:red", label="query lower bound")
    ax.plot(alphas, [exponent("algo1", a) for a in alphas], color="tab:blue", label="partition tree + backtracking")
    ax.plot(alphas, [exponent("algo2", a) for a in alphas], color="tab:green", label="walk on arrangements")
    for name, slope in (measured or {}).items():
        ax.plot([1.0], [slope], "o", label="fitted %s at m = n" % name)
    ax.set_xlabel("log m / log n")
    ax.set_ylabel("exponent of n")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def cmd_fit(args) -> int:
    res = fit_rows(read_csv(args.csv), args.x, args.y, args.algo, args.agg, args.log_power)
    if args.svg:
        exponent_diagram(args.svg, {args.algo or args.y: res["slope"]})
    _write(args.out, json.dumps(res, sort_keys=True) + "\n")
    return EXIT_OK


# -- verify ------------------------------------------------------------------------------

def suite_hiskip(sizes, seed, inject_fault=False) -> list[str]:
    fails = []
    rng = random.Random(seed)
    for size in sizes:
        keys = rng.sample(range(1 << 16), size)
        ref = SkipList(1 << 16, seed)
        for k in keys:
            ref.insert(k)
        fp = ref.fingerprint()
        for _ in range(3):
            order = keys[:]
            rng.shuffle(order)
            sl = SkipList(1 << 16, seed)
            for k in order:
                sl.insert(k)
            extra = rng.randrange(1 << 16)
            if extra not in keys:
                sl.insert(extra)
                sl.remove(extra)
            if sl.fingerprint() != fp:
                fails.append("hiskip: size %d fingerprint depends on insertion order" % size)
        if inject_fault and size and keys:
            ref.store[ref.head][0] = None
        fails += ["hiskip: size %d: %s" % (size, p) for p in ref.validate()]
    return fails


def _random_lines(n: int, seed: int) -> list[Line2]:
    return gen_instance(2, n, 1, 0, 1 << 10, seed).lines


def suite_arrangement(sizes, seed, inject_fault=False) -> list[str]:
    fails = []
    rng = random.Random(seed)
    for size in sizes:
        lines = _random_lines(size, rng.getrandbits(32))
        ids = [l.id for l in lines]
        base = Arrangement.build(lines, seed=seed)
        for _ in range(2):
            order = ids[:]
            rng.shuffle(order)
            other = Arrangement.build(lines, seed=seed, order=order)
            if other.fingerprint() != base.fingerprint():
                fails.append("arrangement: size %d fingerprint depends on insertion order" % size)
        if size >= 2:
            i = rng.choice(ids)
            fp = base.fingerprint()
            base.remove_line(i)
            base.insert_line(i)
            if base.fingerprint() != fp:
                fails.append("arrangement: size %d remove/insert is not an identity" % size)
        if inject_fault and size >= 2:
            drivers.corrupt(base, rng)
        fails += ["arrangement: size %d: %s" % (size, p) for p in base.verify()]
    return fails


def suite_ptree(sizes, seed, inject_fault=False) -> list[str]:
    fails = []
    rng = random.Random(seed)
    for size in sizes:
        inst = gen_instance(2, size, size, min(size, 2), 1 << 10, rng.getrandbits(32))
        tree = ptree.build(inst.points, 2)
        if inject_fault:
            for leaf in tree.leaves():
                leaf.points.clear()
        truth = {li for li, _ in drivers.incidence_matrix_hits(inst)}
        for l in inst.lines:
            found, _ = ptree.emptiness_classical(tree, l)
            if found != (l.id in truth):
                fails.append("ptree: size %d line %d disagrees with the brute-force scan" % (size, l.id))
    return fails


def suite_walk(sizes, seed, inject_fault=False) -> list[str]:
    fails = []
    for size in sizes:
        if size < 4:
            continue
        inst = gen_instance(2, size, 1, 0, 1 << 10, seed)
        r = max(1, size // 4)
        rep = drivers.walk_shadow(inst, r, 20, seed, corrupt_at=3 if inject_fault and r >= 2 else None)
        fails += ["walk: size %d: %s" % (size, v) for v in rep.violations]
    return fails


SUITES = {"hiskip": suite_hiskip, "arrangement": suite_arrangement, "ptree": suite_ptree,
          "walk": suite_walk}


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    sizes = _split(args.sizes, int)
    failures = []
    for name in names:
        got = SUITES[name](sizes, args.seed, args.inject_fault)
        print("%-12s %s" % (name, "pass" if not got else "FAIL (%d)" % len(got)))
        failures += got
    for f in failures[:50]:
        print("  " + f)
    return EXIT_FAIL if failures else EXIT_OK


# -- argument parsing -------------------------------------------------------------------

def _split(text: str, kind):
    try:
        return [kind(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError("bad list %r: %s" % (text, exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hopcroft-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate an instance as JSON")
    g.add_argument("--d", type=int, default=2)
    g.add_argument("--n", type=int, required=True, help="number of lines / hyperplanes")
    g.add_argument("--m", type=int, required=True, help="number of points")
    g.add_argument("--planted", type=int, default=0)
    g.add_argument("--bound", type=int, default=1 << 10, help="coordinate bound hint")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run one solver on an instance file")
    r.add_argument("--algo", choices=ALGOS, required=True)
    r.add_argument("--instance", required=True)
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--walk-samples", type=int, default=64)
    r.add_argument("--k", type=int, default=None, help="group size for algo0")
    r.add_argument("--trace", action="store_true", help="include the cost trace")
    r.add_argument("--out", default="-")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="sweep sizes x trials x algorithms into CSV")
    b.add_argument("--sizes", required=True, help="comma separated n values")
    b.add_argument("--m", type=int, default=None, help="points per instance (default: n)")
    b.add_argument("--algos", default="algo1,algo2")
    b.add_argument("--trials", type=int, default=3)
    b.add_argument("--d", type=int, default=2)
    b.add_argument("--planted", type=int, default=None, help="planted incidences (default: alternate 0/1)")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--walk-samples", type=int, default=64)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", default="-")
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="run property suites")
    v.add_argument("--suite", choices=["all", *SUITES], default="all")
    v.add_argument("--sizes", default="4,16,64")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--inject-fault", action="store_true", help="corrupt each structure; suites must fail")
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("fit", help="log-log least squares on a bench CSV")
    f.add_argument("--csv", required=True)
    f.add_argument("--x", default="n")
    f.add_argument("--y", default="charge")
    f.add_argument("--algo", default=None)
    f.add_argument("--agg", default="mean", choices=["mean", "max", "min", "median"])
    f.add_argument("--log-power", type=float, default=0.0, help="divide y by log2(x)^p before fitting")
    f.add_argument("--svg", default=None, help="also write the exponent diagram")
    f.add_argument("--out", default="-")
    f.set_defaults(func=cmd_fit)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except HopcroftError as exc:
        print("error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
