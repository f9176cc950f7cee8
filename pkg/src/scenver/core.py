"""State spaces, perception abstractions and closed-loop DTMC composition.

A closed-loop chain for one environment condition ``e`` is obtained by pushing
the perception abstraction (a distribution over estimates for every true
state) through the controller and the dynamics::

    P_e(s, s') = sum_y alpha_e(s)(y) * [f(e, s, g(e, y)) == s']

The error state is kept at the last index so that the non-error block of a
matrix power is a contiguous slice.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DomainMismatch, VanishingMass, ZeroRowTotal

STOCHASTIC_TOL = 1e-9
VANISHING_TOL = 1e-12

#: Environment key used by tables whose entries do not depend on the condition.
ANY_ENV = "*"


@dataclass(frozen=True)
class StateSpace:
    labels: tuple
    error_index: int

    def __post_init__(self):
        labels = tuple(str(s) for s in self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 2:
            raise ValueError("a state space needs at least one non-error state and the error state")
        if len(set(labels)) != len(labels):
            raise ValueError("state labels must be unique")
        if any(not s for s in labels):
            raise ValueError("state labels must be non-empty")
        if self.error_index != len(labels) - 1:
            raise ValueError("the error state must be stored at the last index")

    @classmethod
    def from_safe(cls, safe_labels: Iterable, error_label: str = "err") -> "StateSpace":
        labels = tuple(str(s) for s in safe_labels) + (str(error_label),)
        return cls(labels, len(labels) - 1)

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def n_safe(self) -> int:
        return len(self.labels) - 1

    @property
    def safe_labels(self) -> tuple:
        return self.labels[:-1]

    @property
    def error_label(self) -> str:
        return self.labels[self.error_index]

    def index(self, label) -> int:
        try:
            return self._lookup[str(label)]
        except KeyError:
            raise KeyError(f"unknown state {label!r}") from None

    @property
    def _lookup(self) -> dict:
        cache = self.__dict__.get("_lookup_cache")
        if cache is None:
            cache = {s: i for i, s in enumerate(self.labels)}
            object.__setattr__(self, "_lookup_cache", cache)
        return cache


def check_distribution(x, tol: float = STOCHASTIC_TOL) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or np.any(x < -tol) or abs(x.sum() - 1.0) > tol:
        raise ValueError("not a probability distribution")
    return x


def check_subdistribution(x, tol: float = STOCHASTIC_TOL) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or np.any(x < -tol) or x.sum() > 1.0 + tol:
        raise ValueError("not a subdistribution")
    return x


def normalize_subdistribution(x) -> np.ndarray:
    """Rescale a subdistribution to unit mass.

    Raises :class:`VanishingMass` when the mass is at most 1e-12, i.e. when
    essentially everything has been absorbed by the error state.
    """
    x = np.asarray(x, dtype=float)
    mass = float(x.sum())
    if mass <= VANISHING_TOL:
        raise VanishingMass(mass)
    return x / mass


@dataclass(frozen=True, eq=False)
class ContingencyMatrix:
    """Raw (true state, estimate) counts for one environment condition."""

    states: tuple
    estimates: tuple
    counts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(str(s) for s in self.states))
        object.__setattr__(self, "estimates", tuple(str(y) for y in self.estimates))
        counts = np.asarray(self.counts)
        if counts.shape != (len(self.states), len(self.estimates)):
            raise DomainMismatch(
                f"counts have shape {counts.shape}, expected {(len(self.states), len(self.estimates))}"
            )
        if counts.size and (np.any(counts < 0) or not np.all(np.equal(np.mod(counts, 1), 0))):
            raise ValueError("counts must be non-negative integers")
        counts = counts.astype(np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    def __eq__(self, other):
        if not isinstance(other, ContingencyMatrix):
            return NotImplemented
        return (
            self.states == other.states
            and self.estimates == other.estimates
            and np.array_equal(self.counts, other.counts)
        )


@dataclass(frozen=True, eq=False)
class PerceptionAbstraction:
    """Per-state distributions over the estimate space.

    ``probs`` may be dense or a scipy sparse matrix.  When ``row_index`` is
    given, state ``i`` uses row ``row_index[i]`` of ``probs``; case models use
    this to share one row among all states with the same perceivable part
    (e.g. every timer value of the same pose).
    """

    states: tuple
    estimates: tuple
    probs: object
    row_index: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(str(s) for s in self.states))
        object.__setattr__(self, "estimates", tuple(str(y) for y in self.estimates))
        probs = self.probs
        if sp.issparse(probs):
            probs = sp.csr_matrix(probs, dtype=float)
        else:
            probs = np.asarray(probs, dtype=float)
        if probs.ndim != 2 or probs.shape[1] != len(self.estimates):
            raise DomainMismatch("abstraction columns must match the estimate space")
        object.__setattr__(self, "probs", probs)
        if self.row_index is None:
            if probs.shape[0] != len(self.states):
                raise DomainMismatch("abstraction rows must match the state space")
        else:
            idx = np.asarray(self.row_index, dtype=np.int64)
            if idx.shape != (len(self.states),) or (idx.size and (idx.min() < 0 or idx.max() >= probs.shape[0])):
                raise DomainMismatch("row_index must map every state to a row of probs")
            object.__setattr__(self, "row_index", idx)
        mins = probs.min() if probs.shape[0] else 0.0
        sums = np.asarray(probs.sum(axis=1)).ravel()
        if mins < 0 or np.any(np.abs(sums - 1.0) > STOCHASTIC_TOL):
            raise ValueError("every abstraction row must be a probability distribution")

    def row(self, state) -> np.ndarray:
        i = self.states.index(str(state)) if not isinstance(state, (int, np.integer)) else int(state)
        r = i if self.row_index is None else self.row_index[i]
        out = self.probs[r]
        return out.toarray().ravel() if sp.issparse(out) else np.array(out)

    def dense(self) -> np.ndarray:
        m = self.probs.toarray() if sp.issparse(self.probs) else self.probs
        return m if self.row_index is None else m[self.row_index]


def normalize_counts(cm: ContingencyMatrix) -> PerceptionAbstraction:
    totals = cm.counts.sum(axis=1)
    for state, total in zip(cm.states, totals):
        if total <= 0:
            raise ZeroRowTotal(state)
    probs = cm.counts / totals[:, None].astype(float)
    return PerceptionAbstraction(cm.states, cm.estimates, probs)


class ControllerTable:
    """Lookup ``(environment, estimate) -> control``.

    Stored per environment as an integer array over the estimate space; an
    entry under :data:`ANY_ENV` serves every environment without its own row.
    """

    def __init__(self, controls: Sequence, estimates: Sequence, table: Mapping[str, Sequence[int]]):
        self.controls = tuple(str(u) for u in controls)
        self.estimates = tuple(str(y) for y in estimates)
        self.table = {}
        for env, row in table.items():
            row = np.asarray(row, dtype=np.int64)
            if row.shape != (len(self.estimates),):
                raise DomainMismatch(f"controller for {env!r} is not total over the estimates")
            if row.size and (row.min() < 0 or row.max() >= len(self.controls)):
                raise DomainMismatch(f"controller for {env!r} uses an undeclared control")
            row.setflags(write=False)
            self.table[str(env)] = row

    @classmethod
    def from_mapping(cls, controls, estimates, mapping: Mapping[str, Mapping[str, str]]):
        controls = [str(u) for u in controls]
        estimates = [str(y) for y in estimates]
        cidx = {u: i for i, u in enumerate(controls)}
        table = {}
        for env, entries in mapping.items():
            entries = {str(k): str(v) for k, v in entries.items()}
            missing = [y for y in estimates if y not in entries]
            if missing:
                raise DomainMismatch(f"controller for {env!r} misses estimate {missing[0]!r}")
            extra = set(entries) - set(estimates)
            if extra:
                raise DomainMismatch(f"controller for {env!r} mentions unknown estimate {sorted(extra)[0]!r}")
            try:
                table[env] = [cidx[entries[y]] for y in estimates]
            except KeyError as exc:
                raise DomainMismatch(f"controller for {env!r} uses undeclared control {exc.args[0]!r}") from None
        return cls(controls, estimates, table)

    @classmethod
    def from_function(cls, controls, estimates, envs, fn: Callable):
        controls = list(controls)
        cidx = {u: i for i, u in enumerate(controls)}
        table = {e: [cidx[fn(e, y)] for y in estimates] for e in envs}
        return cls([str(u) for u in controls], [str(y) for y in estimates], table)

    def indices(self, env) -> np.ndarray:
        env = str(env)
        if env in self.table:
            return self.table[env]
        if ANY_ENV in self.table:
            return self.table[ANY_ENV]
        raise DomainMismatch(f"controller has no entry for environment {env!r}")

    def control(self, env, estimate) -> str:
        return self.controls[self.indices(env)[self.estimates.index(str(estimate))]]

    def to_mapping(self) -> dict:
        return {
            env: {y: self.controls[u] for y, u in zip(self.estimates, row)}
            for env, row in self.table.items()
        }


class DynamicsTable:
    """Lookup ``(environment, state, control) -> next state``.

    ``table[env]`` is an integer array of shape ``(n_safe, n_controls)`` with
    indices into ``space``; the error state is absorbing by construction.
    """

    def __init__(self, space: StateSpace, controls: Sequence, table: Mapping[str, np.ndarray]):
        self.space = space
        self.controls = tuple(str(u) for u in controls)
        self.table = {}
        shape = (space.n_safe, len(self.controls))
        for env, arr in table.items():
            arr = np.asarray(arr, dtype=np.int64)
            if arr.shape != shape:
                raise DomainMismatch(f"dynamics for {env!r} has shape {arr.shape}, expected {shape}")
            if arr.size and (arr.min() < 0 or arr.max() >= space.size):
                raise DomainMismatch(f"dynamics for {env!r} leaves the state space")
            arr.setflags(write=False)
            self.table[str(env)] = arr

    @classmethod
    def from_mapping(cls, space: StateSpace, controls, mapping: Mapping[str, Mapping]):
        """Build from ``{env: {(state, control): next_state}}``.

        Keys may also be strings ``"state|control"``.  Entries for the error
        state are accepted only if they map back to the error state.
        """
        controls = [str(u) for u in controls]
        cidx = {u: i for i, u in enumerate(controls)}
        table = {}
        for env, entries in mapping.items():
            arr = np.full((space.n_safe, len(controls)), -1, dtype=np.int64)
            for key, nxt in entries.items():
                if isinstance(key, str):
                    s, sep, u = key.rpartition("|")
                    if not sep:
                        raise DomainMismatch(f"malformed dynamics key {key!r}")
                else:
                    s, u = key
                s, u, nxt = str(s), str(u), str(nxt)
                if u not in cidx:
                    raise DomainMismatch(f"dynamics for {env!r} uses undeclared control {u!r}")
                try:
                    si, ni = space.index(s), space.index(nxt)
                except KeyError as exc:
                    raise DomainMismatch(f"dynamics for {env!r}: {exc.args[0]}") from None
                if si == space.error_index:
                    if ni != space.error_index:
                        raise DomainMismatch("the error state must be absorbing")
                    continue
                arr[si, cidx[u]] = ni
            if (arr < 0).any():
                s, u = np.argwhere(arr < 0)[0]
                raise DomainMismatch(
                    f"dynamics for {env!r} undefined at ({space.labels[s]!r}, {controls[u]!r})"
                )
            table[env] = arr
        return cls(space, controls, table)

    @classmethod
    def from_function(cls, space: StateSpace, controls, envs, fn: Callable):
        """Tabulate ``fn(env, state_label, control) -> state_label``."""
        controls = list(controls)
        table = {}
        for e in envs:
            table[e] = [[space.index(fn(e, s, u)) for u in controls] for s in space.safe_labels]
        return cls(space, [str(u) for u in controls], table)

    def indices(self, env) -> np.ndarray:
        env = str(env)
        if env in self.table:
            return self.table[env]
        if ANY_ENV in self.table:
            return self.table[ANY_ENV]
        raise DomainMismatch(f"dynamics has no entry for environment {env!r}")

    def to_mapping(self) -> dict:
        labels = self.space.labels
        return {
            env: {
                f"{s}|{u}": labels[arr[i, j]]
                for i, s in enumerate(self.space.safe_labels)
                for j, u in enumerate(self.controls)
            }
            for env, arr in self.table.items()
        }


@dataclass(frozen=True, eq=False)
class ClosedLoopDtmc:
    space: StateSpace
    transitions: sp.csr_matrix = field(repr=False)

    def __post_init__(self):
        m = sp.csr_matrix(self.transitions, dtype=float)
        if m.shape != (self.space.size, self.space.size):
            raise DomainMismatch(f"transition matrix shape {m.shape} does not match {self.space.size} states")
        m.sum_duplicates()
        m.sort_indices()
        object.__setattr__(self, "transitions", m)

    @classmethod
    def from_dense(cls, space: StateSpace, matrix) -> "ClosedLoopDtmc":
        return cls(space, sp.csr_matrix(np.asarray(matrix, dtype=float)))

    @property
    def error_index(self) -> int:
        return self.space.error_index

    def dense(self) -> np.ndarray:
        return self.transitions.toarray()


@dataclass(frozen=True)
class RowSumViolation:
    row: int
    total: float


@dataclass(frozen=True)
class NegativeEntry:
    row: int
    col: int
    value: float


@dataclass(frozen=True)
class NotAbsorbing:
    row: int


def validate_dtmc(m: ClosedLoopDtmc, tol: float = STOCHASTIC_TOL) -> list:
    """List every invariant violation of ``m`` (empty when the chain is valid)."""
    out = []
    p = m.transitions
    coo = p.tocoo()
    for r, c, v in zip(coo.row, coo.col, coo.data):
        if v < 0:
            out.append(NegativeEntry(int(r), int(c), float(v)))
    sums = np.asarray(p.sum(axis=1)).ravel()
    err = m.error_index
    for r in np.flatnonzero(np.abs(sums - 1.0) > tol):
        if r != err:
            out.append(RowSumViolation(int(r), float(sums[r])))
    row = p.getrow(err)
    if not (row.nnz == 1 and row.indices[0] == err and row.data[0] == 1.0):
        out.append(NotAbsorbing(err))
    return out


def compose_closed_loop(
    alpha: PerceptionAbstraction,
    g: ControllerTable,
    f: DynamicsTable,
    env,
) -> ClosedLoopDtmc:
    """Closed-loop chain of one environment condition.

    The next state is ``f(env, s, g(env, y))``; the state argument of the
    dynamics is what makes the chain depend on where the system currently is.
    """
    space = f.space
    if alpha.states != space.safe_labels:
        raise DomainMismatch("abstraction states differ from the dynamics state space")
    if alpha.estimates != g.estimates:
        raise DomainMismatch("abstraction estimates differ from the controller's estimate space")
    if g.controls != f.controls:
        raise DomainMismatch("controller and dynamics declare different controls")
    ctrl = g.indices(env)
    nxt = f.indices(env)
    n, k = space.n_safe, len(g.controls)

    onehot = sp.csr_matrix(
        (np.ones(len(ctrl)), (np.arange(len(ctrl)), ctrl)), shape=(len(ctrl), k)
    )
    mass = alpha.probs @ onehot
    mass = mass.toarray() if sp.issparse(mass) else np.asarray(mass)
    if alpha.row_index is not None:
        mass = mass[alpha.row_index]

    rows = np.repeat(np.arange(n), k)
    cols = nxt.ravel()
    data = mass.ravel()
    keep = data > 0
    err = space.error_index
    rows = np.append(rows[keep], err)
    cols = np.append(cols[keep], err)
    data = np.append(data[keep], 1.0)
    p = sp.csr_matrix((data, (rows, cols)), shape=(space.size, space.size))
    return ClosedLoopDtmc(space, p)
