"""Charged-cost formulas for the quantum subroutines and a ledger composing them.

Every formula returns an exact value: an ``int`` when the configured constants
are integral, otherwise a ``Fraction``.  Logs are base 2 and square roots are
rounded up, so charges from different runs compare exactly.
"""
from __future__ import annotations

import json
import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

from .errors import RTooLarge
from .hiskip import ceil_log2


def _norm(v):
    v = Fraction(v)
    return v.numerator if v.denominator == 1 else v


def _ceil(x) -> int:
    x = Fraction(x)
    return -((-x.numerator) // x.denominator)


def ceil_sqrt(x) -> int:
    """Exact ceil(sqrt(x)) for a nonnegative rational, using ceil(sqrt(x)) = ceil(sqrt(ceil(x)))."""
    c = _ceil(x)
    if c < 0:
        raise ValueError("square root of a negative value")
    s = math.isqrt(c)
    return s if s * s == c else s + 1


def grover_charge(N, T, c_g=1):
    """Grover search over N items whose check costs T: c_g * ceil(sqrt N) * (T + ceil(log2 N))."""
    N = _ceil(N)
    if N < 1:
        raise ValueError("Grover search needs N >= 1")
    if T < 0:
        raise ValueError("check cost must be nonnegative")
    return _norm(Fraction(c_g) * ceil_sqrt(N) * (Fraction(T) + ceil_log2(N)))


def backtracking_charge(T, h, c_b=1):
    """Backtracking detection on a tree of T vertices and height h: c_b * ceil(sqrt(T h))."""
    if T < 1 or h < 1:
        raise ValueError("backtracking needs T >= 1 and h >= 1")
    return _norm(Fraction(c_b) * ceil_sqrt(Fraction(T) * Fraction(h)))


def mnrs_charge(S, U, C, n, r, c_w=1):
    """Johnson-graph walk: S + c_w * (ceil(sqrt n) * U + ceil(sqrt(n/r)) * C)."""
    if r < 1:
        raise RTooLarge("walk subset size must be at least 1, got %r" % (r,))
    if 2 * r > n:
        raise RTooLarge("walk subset size r=%r exceeds n/2 for n=%r" % (r, n))
    walk = ceil_sqrt(n) * Fraction(U) + ceil_sqrt(Fraction(n) / r) * Fraction(C)
    return _norm(Fraction(S) + Fraction(c_w) * walk)


def query_lower_bound(n, m) -> float:
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    return float(_cbrt(n * m) + math.sqrt(n) + math.sqrt(m))


def _cbrt(v: int) -> float:
    r = round(v ** (1.0 / 3.0))
    return float(r) if r ** 3 == v else v ** (1.0 / 3.0)


# -- regimes -------------------------------------------------------------------

ALGO1_MANY, ALGO1_FEW = "grouped", "single-tree"
ALGO2_DENSE, ALGO2_MIDDLE, ALGO2_SPARSE = "walk-dense", "walk-middle", "classical"


def algo1_regime(n: int, m: int, d: int) -> str:
    """``grouped`` iff m >= n^(d/(d+1)); needs m <= n."""
    return ALGO1_MANY if m ** (d + 1) >= n ** d else ALGO1_FEW


def algo2_regime(n: int, m: int) -> str:
    """Regime for n points and m <= n lines: m >= n^(2/3), n^(1/4) < m < n^(2/3), m <= n^(1/4)."""
    if m ** 3 >= n ** 2:
        return ALGO2_DENSE
    if m ** 4 <= n:
        return ALGO2_SPARSE
    return ALGO2_MIDDLE


def predicted_complexity(n: int, m: int, d: int, algo: str) -> tuple[str, tuple[Fraction, Fraction]]:
    """Regime label and exponents (e_n, e_m) of the charged cost n^e_n * m^e_m (logs dropped).

    The roles are normalized first so that m <= n; in the plane this is the
    duality swap, in higher dimensions m > n is rejected.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    if m > n:
        if d != 2:
            raise ValueError("m > n is only normalized by duality in the plane")
        n, m = m, n
    if algo == "algo1":
        if algo1_regime(n, m, d) == ALGO1_MANY:
            return ALGO1_MANY, (Fraction(d, 2 * (d + 1)), Fraction(1, 2))
        return ALGO1_FEW, (Fraction(1, 2), Fraction(d - 1, 2 * d))
    if algo == "algo2":
        if d != 2:
            raise ValueError("the walk algorithm is planar only")
        label = algo2_regime(n, m)
        return label, {ALGO2_DENSE: (Fraction(1, 3), Fraction(1, 2)),
                       ALGO2_MIDDLE: (Fraction(2, 5), Fraction(2, 5)),
                       ALGO2_SPARSE: (Fraction(1, 2), Fraction(0))}[label]
    raise ValueError("no prediction for algorithm %r" % (algo,))


# -- ledger ---------------------------------------------------------------------

@dataclass
class Trace:
    tag: str
    inputs: dict
    charge: object = 0
    children: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"tag": self.tag, "inputs": {k: _jsonable(v) for k, v in self.inputs.items()},
                "charge": _jsonable(self.charge), "children": [c.to_dict() for c in self.children]}


def _jsonable(v):
    if isinstance(v, Fraction):
        return v.numerator if v.denominator == 1 else str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


class CostLedger:
    """Unit-operation counter plus a tree of charged subroutine calls.

    Charges recorded at the top level make up :attr:`total`; charges recorded
    inside :meth:`section` become children of that section, whose own charge
    is set by the caller once the composition is known.
    """

    def __init__(self, c_g=1, c_b=1, c_w=1):
        for name, c in (("c_g", c_g), ("c_b", c_b), ("c_w", c_w)):
            if Fraction(c) <= 0:
                raise ValueError("%s must be positive" % name)
        self.c_g, self.c_b, self.c_w = Fraction(c_g), Fraction(c_b), Fraction(c_w)
        self.unit_ops = 0
        self.roots: list[Trace] = []
        self._stack: list[Trace] = []

    def count(self, ops: int = 1) -> None:
        self.unit_ops += ops

    def record(self, tag: str, charge, **inputs) -> Trace:
        node = Trace(tag, inputs, _norm(charge))
        (self._stack[-1].children if self._stack else self.roots).append(node)
        return node

    @contextmanager
    def section(self, tag: str, **inputs) -> Iterator[Trace]:
        node = self.record(tag, 0, **inputs)
        self._stack.append(node)
        try:
            yield node
        finally:
            self._stack.pop()

    def grover(self, N, T, tag: str = "grover", **inputs):
        c = grover_charge(N, T, self.c_g)
        self.record(tag, c, N=N, T=T, **inputs)
        return c

    def backtracking(self, T, h, tag: str = "backtracking", **inputs):
        c = backtracking_charge(T, h, self.c_b)
        self.record(tag, c, T=T, h=h, **inputs)
        return c

    def mnrs(self, S, U, C, n, r, tag: str = "mnrs", **inputs):
        c = mnrs_charge(S, U, C, n, r, self.c_w)
        self.record(tag, c, S=S, U=U, C=C, n=n, r=r, **inputs)
        return c

    @property
    def total(self):
        return _norm(sum((Fraction(t.charge) for t in self.roots), Fraction(0)))

    def trace(self) -> list[dict]:
        return [t.to_dict() for t in self.roots]

    def to_json(self) -> str:
        return json.dumps({"unit_ops": self.unit_ops, "total": _jsonable(self.total),
                           "trace": self.trace()}, sort_keys=True)

    def find(self, tag: str) -> Optional[Trace]:
        """First trace node with ``tag`` in preorder."""
        stack = list(reversed(self.roots))
        while stack:
            t = stack.pop()
            if t.tag == tag:
                return t
            stack.extend(reversed(t.children))
        return None
