"""Desk-scale laboratory for quantum algorithms on Hopcroft's problem.

Exact geometry (:mod:`geom`), history-independent skip lists (:mod:`hiskip`),
the dynamic k-level arrangement (:mod:`arrangement`), kd partition trees
(:mod:`ptree`), charged quantum costs (:mod:`qcost`), solvers
(:mod:`drivers`) and the command line (:mod:`harness`).
"""
from .arrangement import Arrangement, Cross, Head, NULL, PathPoint
from .drivers import (RunResult, algo0_warmup, algo1, algo2, baseline_classical, brute_force,
                      walk_shadow)
from .geom import (Hyperplane, Instance, Line2, PointD, Rat, dualize, eval_at, gen_instance,
                   incident, line_intersection, validate_general_position)
from .hiskip import SkipList, level_of, mix64, swap_tails
from .qcost import (CostLedger, backtracking_charge, grover_charge, mnrs_charge,
                    predicted_complexity, query_lower_bound)

__version__ = "0.1.0"
