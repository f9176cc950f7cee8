"""Scenario-based compositional verification of closed-loop systems with abstracted perception.

A perception abstraction, a controller and the plant dynamics compose into
one Markov chain per environment condition.  A scenario (condition, horizon)
is summarized as ``(A, b)``; summaries compose sequentially and are analysed
with linear programs over the distribution simplex.
"""

from .analysis import (
    AccelerationCertificate,
    AssertionVerdict,
    HoareAssertion,
    accelerate,
    acceleration_bound,
    backward_weakest_precondition,
    check_assertion,
    find_invariant,
    forward_worst_case,
    interleaving_profile,
    rule1_compose,
    sequential_rule,
    trivial_epsilon,
    worst_case_interleaving,
)
from .core import (
    ClosedLoopDtmc,
    ContingencyMatrix,
    ControllerTable,
    DynamicsTable,
    PerceptionAbstraction,
    StateSpace,
    compose_closed_loop,
    normalize_counts,
    validate_dtmc,
)
from .kernels import BACKEND
from .linprog import AffinePredicate, LpSolution, LpStatus, maximize_over_simplex, solve_lp
from .simulator import SimReport, estimate_error_probability, sample_trajectory
from .summary import Scenario, Summary, apply, compose, summarize, summarize_sequence

__version__ = "0.1.0"
