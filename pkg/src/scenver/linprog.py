"""Affine predicates over distributions and a small dense LP solver.

The solver is a two-phase tableau simplex using Bland's rule (lowest index
enters, ties in the ratio test leave by lowest basic index), so it terminates
on degenerate problems and its pivots are reproducible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch

FEAS_TOL = 1e-7
ENTAIL_SLACK = 1e-9
_PIVOT_TOL = 1e-11
_COST_TOL = 1e-11


@dataclass(frozen=True, eq=False)
class AffinePredicate:
    """Conjunction of constraints ``x . a_i <= theta_i``.  No constraints means true."""

    constraints: tuple = ()

    def __post_init__(self):
        cons = []
        dims = set()
        for a, theta in self.constraints:
            a = np.asarray(a, dtype=float).ravel()
            a.setflags(write=False)
            cons.append((a, float(theta)))
            dims.add(a.shape[0])
        if len(dims) > 1:
            raise DimensionMismatch("predicate constraints have different lengths")
        object.__setattr__(self, "constraints", tuple(cons))

    @classmethod
    def top(cls) -> "AffinePredicate":
        return cls(())

    @classmethod
    def from_arrays(cls, coeffs, offsets) -> "AffinePredicate":
        coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
        offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
        if coeffs.size == 0:
            return cls.top()
        if coeffs.shape[0] != offsets.shape[0]:
            raise DimensionMismatch("one offset per constraint row is required")
        return cls(tuple(zip(coeffs, offsets)))

    @property
    def is_top(self) -> bool:
        return not self.constraints

    @property
    def dim(self):
        return self.constraints[0][0].shape[0] if self.constraints else None

    def __len__(self):
        return len(self.constraints)

    def __and__(self, other: "AffinePredicate") -> "AffinePredicate":
        return AffinePredicate(self.constraints + other.constraints)

    def arrays(self, n: int) -> tuple:
        if self.constraints and self.dim != n:
            raise DimensionMismatch(f"predicate is over {self.dim} states, expected {n}")
        if not self.constraints:
            return np.zeros((0, n)), np.zeros(0)
        return np.array([a for a, _ in self.constraints]), np.array([t for _, t in self.constraints])

    def violation(self, x) -> float:
        """Largest ``x . a_i - theta_i`` (``-inf`` for the true predicate)."""
        x = np.asarray(x, dtype=float)
        if not self.constraints:
            return -np.inf
        g, h = self.arrays(x.shape[0])
        return float(np.max(g @ x - h))

    def holds(self, x, tol: float = FEAS_TOL) -> bool:
        return self.violation(x) <= tol

    def to_json(self) -> dict:
        return {
            "format_version": 1,
            "constraints": [{"a": [float(v) for v in a], "theta": t} for a, t in self.constraints],
        }

    @classmethod
    def from_json(cls, obj: dict, states=None) -> "AffinePredicate":
        """Inverse of :meth:`to_json`.

        A constraint may give ``a`` as a list, as a ``{state: coefficient}``
        object, or use ``"indicator": [states...]``; the last two forms need
        ``states`` to fix the coordinate order.
        """
        cons = []
        for i, c in enumerate(obj.get("constraints", [])):
            if "theta" not in c:
                raise ValueError(f"constraint {i} has no theta")
            if "indicator" in c or isinstance(c.get("a"), dict):
                if states is None:
                    raise ValueError("state-keyed constraints need the state labels")
                pos = {s: j for j, s in enumerate(states)}
                a = np.zeros(len(states))
                items = {s: 1.0 for s in c["indicator"]} if "indicator" in c else c["a"]
                for s, v in items.items():
                    if str(s) not in pos:
                        raise ValueError(f"constraint {i} mentions unknown state {s!r}")
                    a[pos[str(s)]] = float(v)
            elif "a" in c:
                a = [float(v) for v in c["a"]]
            else:
                raise ValueError(f"constraint {i} has no coefficients")
            cons.append((a, float(c["theta"])))
        return cls(tuple(cons))


class LpStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: LpStatus
    objective_value: float | None = None
    witness: np.ndarray | None = field(default=None, repr=False)
    duals: np.ndarray | None = field(default=None, repr=False)
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def _pivot(t, r, c):
    t[r] /= t[r, c]
    col = t[:, c].copy()
    col[r] = 0.0
    nz = np.flatnonzero(col)
    if nz.size:
        t[nz] -= np.outer(col[nz], t[r])
    t[:, c] = 0.0
    t[r, c] = 1.0


def _run(t, basis, allowed, max_iter):
    """Bland's-rule simplex on tableau ``t`` (last row: reduced costs, maximization).

    Returns ``(status, pivots)`` where status is "optimal" or "unbounded".
    """
    m = t.shape[0] - 1
    pivots = 0
    while True:
        costs = t[m, :-1]
        cand = np.flatnonzero((costs < -_COST_TOL) & allowed)
        if cand.size == 0:
            return "optimal", pivots
        c = cand[0]
        col = t[:m, c]
        rows = np.flatnonzero(col > _PIVOT_TOL)
        if rows.size == 0:
            return "unbounded", pivots
        ratios = t[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        r = ties[np.argmin(basis[ties])]
        _pivot(t, r, c)
        basis[r] = c
        pivots += 1
        if pivots > max_iter:
            raise RuntimeError("simplex iteration limit exceeded")


def solve_lp(c, a_ub, b_ub) -> LpSolution:
    """Maximize ``c . x`` subject to ``a_ub @ x <= b_ub`` and ``x >= 0``.

    Duals (one per row of ``a_ub``) are returned for optimal solutions and
    satisfy ``b_ub . duals == objective_value`` up to rounding.
    """
    c = np.asarray(c, dtype=float).ravel()
    a_ub = np.atleast_2d(np.asarray(a_ub, dtype=float))
    b_ub = np.asarray(b_ub, dtype=float).ravel()
    m, n = a_ub.shape
    if c.shape[0] != n or b_ub.shape[0] != m:
        raise DimensionMismatch("inconsistent LP dimensions")

    neg = b_ub < 0
    k = int(neg.sum())
    width = n + m + k
    t = np.zeros((m + 1, width + 1))
    t[:m, :n] = a_ub
    t[:m, n:n + m] = np.eye(m)
    t[:m, -1] = b_ub
    t[:m][neg] *= -1.0
    art_rows = np.flatnonzero(neg)
    t[art_rows, n + m + np.arange(k)] = 1.0
    basis = np.arange(n, n + m)
    basis[art_rows] = n + m + np.arange(k)
    max_iter = 50 * (m + width) + 1000
    pivots = 0

    if k:
        t[m, n + m:width] = 1.0
        for r in art_rows:
            t[m] -= t[r]
        _, p = _run(t, basis, np.ones(width, dtype=bool), max_iter)
        pivots += p
        if -t[m, -1] > FEAS_TOL:
            return LpSolution(LpStatus.INFEASIBLE, pivots=pivots)
        # Drive zero-level artificials out of the basis where possible; a row
        # with no usable pivot is redundant and its artificial stays at zero.
        for r in np.flatnonzero(basis >= n + m):
            cols = np.flatnonzero(np.abs(t[r, :n + m]) > _PIVOT_TOL)
            if cols.size:
                _pivot(t, r, cols[0])
                basis[r] = cols[0]
                pivots += 1

    allowed = np.zeros(width, dtype=bool)
    allowed[:n + m] = True
    t[m] = 0.0
    t[m, :n] = -c
    for r in range(m):
        j = basis[r]
        if j < n and t[m, j] != 0.0:
            t[m] -= t[m, j] * t[r]
    status, p = _run(t, basis, allowed, max_iter)
    pivots += p
    if status == "unbounded":
        return LpSolution(LpStatus.UNBOUNDED, pivots=pivots)

    x = np.zeros(width)
    x[basis] = t[:m, -1]
    witness = x[:n]
    witness[np.abs(witness) < 1e-15] = 0.0
    duals = t[m, n:n + m].copy()
    return LpSolution(LpStatus.OPTIMAL, float(c @ witness), witness, duals, pivots)


def _simplex_rows(pred: AffinePredicate, n: int):
    g, h = pred.arrays(n)
    ones = np.ones((1, n))
    return np.vstack([g, ones, -ones]), np.concatenate([h, [1.0, -1.0]])


def maximize_over_simplex(objective, pred: AffinePredicate) -> LpSolution:
    """Maximize ``x . objective`` over distributions ``x`` satisfying ``pred``.

    The sum-to-one constraint enters as the pair ``sum x <= 1`` and
    ``-sum x <= -1``; the feasible set is compact, so the result is either
    optimal or infeasible.
    """
    objective = np.asarray(objective, dtype=float).ravel()
    a_ub, b_ub = _simplex_rows(pred, objective.shape[0])
    sol = solve_lp(objective, a_ub, b_ub)
    if sol.status is LpStatus.UNBOUNDED:  # pragma: no cover - excluded by the sum constraints
        raise RuntimeError("LP over the simplex reported unbounded")
    return sol


def is_feasible(pred: AffinePredicate, n: int | None = None) -> bool:
    """Whether some distribution satisfies ``pred`` (phase-one LP)."""
    n = pred.dim if n is None else n
    if n is None:
        return True
    return maximize_over_simplex(np.zeros(n), pred).optimal


def entails(pred: AffinePredicate, coeff, offset: float) -> bool:
    """Whether every distribution satisfying ``pred`` has ``x . coeff <= offset``."""
    sol = maximize_over_simplex(coeff, pred)
    return not sol.optimal or sol.objective_value <= offset + ENTAIL_SLACK
