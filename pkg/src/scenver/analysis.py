"""Forward/backward analysis, Hoare-style assertions and acceleration rules.

An assertion ``{pre} C {post} {eps}`` holds when every distribution ``x``
satisfying ``pre`` has error probability ``x . b <= eps`` and its normalized
survivor distribution ``xA / |xA|`` satisfies ``post``.  Each affine
postcondition constraint ``y . a <= theta`` becomes a linear obligation after
multiplying through by ``|xA| = 1 - x . b``::

    x . (A a + theta b) <= theta

so every check is a maximization over the distribution simplex.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, DimensionMismatch, PremiseFailed, VacuousPrecondition
from .linprog import ENTAIL_SLACK, AffinePredicate, is_feasible, maximize_over_simplex
from .summary import Summary, compose

ERROR_BOUND = "ErrorBound"
POSTCONDITION = "Postcondition"
INTERLEAVING_BUDGET = 10**6


def eps_grid(start: float = 0.0, stop: float = 0.99, step: float = 0.01) -> list:
    """Inclusive grid ``start, start + step, ..., stop`` without float drift."""
    a, b, s = Decimal(str(start)), Decimal(str(stop)), Decimal(str(step))
    if s <= 0:
        raise ValueError("grid step must be positive")
    out = []
    v = a
    while v <= b:
        out.append(float(v))
        v += s
    return out


def parse_eps_grid(text: str) -> list:
    """Parse ``"a:b:step"`` (or a single value) into a grid."""
    parts = text.split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) != 3:
        raise ValueError(f"expected a:b:step, got {text!r}")
    return eps_grid(*(float(p) for p in parts))


DEFAULT_EPS_GRID = tuple(eps_grid())


def forward_worst_case(c: Summary, pre: AffinePredicate) -> tuple:
    """Largest error probability over distributions satisfying ``pre``.

    Returns ``(value, witness)``.
    """
    sol = maximize_over_simplex(c.b, pre)
    if not sol.optimal:
        raise VacuousPrecondition("precondition admits no distribution")
    return sol.objective_value, sol.witness


def backward_weakest_precondition(c: Summary, epsilon: float) -> AffinePredicate:
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    return AffinePredicate(((c.b, epsilon),))


def point_distribution_error_map(c: Summary) -> dict:
    labels = c.states if c.states is not None else [str(i) for i in range(c.n)]
    return {s: float(v) for s, v in zip(labels, c.b)}


@dataclass(frozen=True, eq=False)
class HoareAssertion:
    pre: AffinePredicate
    summary: Summary
    post: AffinePredicate
    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        for p in (self.pre, self.post):
            if p.dim is not None and p.dim != self.summary.n:
                raise DimensionMismatch("predicate and summary dimensions differ")


@dataclass(frozen=True, eq=False)
class AssertionVerdict:
    holds: bool
    counterexample: np.ndarray | None = field(default=None, repr=False)
    violated_obligation: str | None = None
    obligation_index: int | None = None
    value: float | None = None
    bound: float | None = None
    vacuous: bool = False
    obligations: tuple = field(default=(), repr=False)

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "vacuous": self.vacuous,
            "violated_obligation": self.violated_obligation,
            "obligation_index": self.obligation_index,
            "value": self.value,
            "bound": self.bound,
            "counterexample": None if self.counterexample is None else [float(v) for v in self.counterexample],
            "obligations": [
                {"kind": k, "index": i, "max": v, "bound": t} for k, i, v, t in self.obligations
            ],
        }


def postcondition_obligations(c: Summary, post: AffinePredicate) -> list:
    """``(coeff, offset)`` pairs whose entailment is equivalent to ``post(norm(xA))``."""
    return [(c.a_dot(a) + theta * c.b, theta) for a, theta in post.constraints]


def check_assertion(a: HoareAssertion) -> AssertionVerdict:
    c = a.summary
    if not is_feasible(a.pre, c.n):
        return AssertionVerdict(True, vacuous=True)
    checks = [(ERROR_BOUND, None, c.b, a.epsilon)]
    checks += [(POSTCONDITION, j, coeff, theta) for j, (coeff, theta) in enumerate(postcondition_obligations(c, a.post))]
    done = []
    for kind, j, coeff, bound in checks:
        sol = maximize_over_simplex(coeff, a.pre)
        value = sol.objective_value
        done.append((kind, j, value, bound))
        if value > bound + ENTAIL_SLACK:
            return AssertionVerdict(False, sol.witness, kind, j, value, bound, obligations=tuple(done))
    return AssertionVerdict(True, obligations=tuple(done))


def rule1_compose(eps1: float, eps2: float) -> float:
    """Error bound of a sequential composition: ``1 - (1 - eps1)(1 - eps2)``."""
    for e in (eps1, eps2):
        if not 0.0 <= e <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
    return 1.0 - (1.0 - eps1) * (1.0 - eps2)


def predicate_implies(p: AffinePredicate, q: AffinePredicate, n: int) -> bool:
    """Whether every distribution satisfying ``p`` satisfies ``q``."""
    for a, theta in q.constraints:
        sol = maximize_over_simplex(a, p)
        if sol.optimal and sol.objective_value > theta + ENTAIL_SLACK:
            return False
    return True


def sequential_rule(first: HoareAssertion, second: HoareAssertion) -> HoareAssertion:
    """Compose two checked assertions whose interface predicates line up.

    Raises :class:`PremiseFailed` (index 0 or 1) when a premise does not hold
    and ``ValueError`` when the first postcondition does not imply the second
    precondition.
    """
    for i, a in enumerate((first, second)):
        v = check_assertion(a)
        if not v.holds:
            raise PremiseFailed(i, v)
    if not predicate_implies(first.post, second.pre, first.summary.n):
        raise ValueError("postcondition of the first assertion does not imply the second precondition")
    return HoareAssertion(
        first.pre,
        compose(first.summary, second.summary),
        second.post,
        rule1_compose(first.epsilon, second.epsilon),
    )


def acceleration_bound(epsilon: float, k: int) -> float:
    """``1 - (1 - eps)^k``: bound after ``k`` scenarios with local error ``eps``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    return 1.0 - (1.0 - epsilon) ** k


@dataclass(frozen=True, eq=False)
class AccelerationCertificate:
    summaries: tuple = field(repr=False)
    invariant: AffinePredicate = field(repr=False)
    epsilon: float = 0.0
    premise_checked: bool = False
    verdicts: tuple = field(default=(), repr=False)

    @property
    def m(self) -> int:
        return len(self.summaries)

    def bound(self, k: int) -> float:
        return acceleration_bound(self.epsilon, k)

    def bound_table(self, kmax: int) -> list:
        return [(k, self.bound(k)) for k in range(1, kmax + 1)]

    def to_json(self) -> dict:
        return {
            "format_version": 1,
            "m": self.m,
            "epsilon": self.epsilon,
            "premise_checked": self.premise_checked,
            "bound": "1-(1-epsilon)^k",
            "invariant": self.invariant.to_json(),
            "premises": [v.to_json() for v in self.verdicts],
        }


def accelerate(summaries: Sequence[Summary], phi: AffinePredicate, epsilon: float) -> AccelerationCertificate:
    """Check ``{phi} C_i {phi} {eps}`` for every summary.

    On success the certificate bounds the error of any length-``k``
    interleaving of the summaries started in ``phi`` by ``1 - (1 - eps)^k``.
    """
    summaries = tuple(summaries)
    if not summaries:
        raise ValueError("at least one summary is required")
    verdicts = []
    for i, c in enumerate(summaries):
        v = check_assertion(HoareAssertion(phi, c, phi, epsilon))
        if not v.holds:
            raise PremiseFailed(i, v)
        verdicts.append(v)
    return AccelerationCertificate(summaries, phi, float(epsilon), True, tuple(verdicts))


def trivial_epsilon(summaries: Sequence[Summary]) -> float:
    """Worst local error probability ``max_i max_s b_i(s)``; always a valid premise with ``phi = true``."""
    summaries = list(summaries)
    if not summaries:
        raise ValueError("at least one summary is required")
    return float(max(np.max(c.b) for c in summaries))


def invariant_candidate(summaries: Sequence[Summary], epsilon: float) -> AffinePredicate:
    """``AND_i x . b_i <= eps``."""
    return AffinePredicate(tuple((c.b, epsilon) for c in summaries))


def find_invariant(summaries: Sequence[Summary], grid: Sequence[float] = DEFAULT_EPS_GRID):
    """First ``eps`` of ``grid`` whose candidate predicate is a feasible invariant.

    Returns ``(phi, eps)`` or ``None`` when the grid is exhausted.
    """
    summaries = list(summaries)
    n = summaries[0].n
    for eps in grid:
        phi = invariant_candidate(summaries, eps)
        if not is_feasible(phi, n):
            continue
        if all(check_assertion(HoareAssertion(phi, c, phi, eps)).holds for c in summaries):
            return phi, float(eps)
    return None


def _check_budget(m: int, kmax: int, total: bool):
    count = sum(m**k for k in range(1, kmax + 1)) if total else m**kmax
    if count > INTERLEAVING_BUDGET:
        raise BudgetExceeded(f"{count} interleavings exceed the budget of {INTERLEAVING_BUDGET}")


def interleaving_profile(summaries: Sequence[Summary], phi: AffinePredicate, kmax: int) -> list:
    """Worst case over all interleavings of every length ``1..kmax``.

    Returns a list of ``(value, sequence)`` indexed by ``k - 1``.  Prefix
    compositions are shared through a depth-first walk; ties keep the
    lexicographically smallest sequence.
    """
    summaries = list(summaries)
    if kmax < 1:
        raise ValueError("k must be positive")
    _check_budget(len(summaries), kmax, total=True)
    best = [(-np.inf, None)] * kmax

    def walk(prefix, comp):
        d = len(prefix)
        value, _ = forward_worst_case(comp, phi)
        if value > best[d - 1][0]:
            best[d - 1] = (value, tuple(prefix))
        if d < kmax:
            for i, c in enumerate(summaries):
                walk(prefix + [i], compose(comp, c))

    for i, c in enumerate(summaries):
        walk([i], c)
    return best


def worst_case_interleaving(summaries: Sequence[Summary], phi: AffinePredicate, k: int) -> tuple:
    """Brute-force worst-case error over all ``m^k`` interleavings.

    Returns ``(value, sequence)`` with ``sequence`` a tuple of summary indices.
    """
    summaries = list(summaries)
    if k < 1:
        raise ValueError("k must be positive")
    _check_budget(len(summaries), k, total=False)
    best = [-np.inf, None]

    def walk(prefix, comp):
        if len(prefix) == k:
            value, _ = forward_worst_case(comp, phi)
            if value > best[0]:
                best[:] = [value, tuple(prefix)]
            return
        for i, c in enumerate(summaries):
            walk(prefix + [i], compose(comp, c))

    for i, c in enumerate(summaries):
        walk([i], c)
    return best[0], best[1]
