"""Scenario summaries ``(A, b)`` and their sequential composition.

For a chain ``P`` with the error state last, the ``H``-step power has block
form ``[[A, b], [0, 1]]``: ``A`` carries surviving mass between non-error
states and ``b`` is the probability of having been absorbed by the error state
at some step.  Running ``C1`` then ``C2`` gives ``(A1 A2, b1 + A1 b2)``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from . import kernels
from .core import STOCHASTIC_TOL, ClosedLoopDtmc
from .errors import DimensionMismatch, UnknownEnvironment

#: Summaries over more non-error states than this keep ``A`` sparse.
DENSE_LIMIT = 4096
#: ``method="auto"`` switches to square-and-multiply from this horizon on.
SQUARING_FROM = 32


@dataclass(frozen=True)
class Scenario:
    env: str
    horizon: int

    def __post_init__(self):
        object.__setattr__(self, "env", str(self.env))
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError(f"scenario horizon must be a positive integer, got {self.horizon!r}")
        object.__setattr__(self, "horizon", int(self.horizon))

    def __str__(self):
        return f"{self.env}:{self.horizon}"


def parse_sequence(text: str) -> tuple:
    """Parse ``"env:H,env:H,..."`` into a tuple of :class:`Scenario`."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        env, sep, h = part.rpartition(":")
        if not sep or not env:
            raise ValueError(f"scenario {part!r} is not of the form env:horizon")
        try:
            out.append(Scenario(env, int(h)))
        except ValueError:
            raise ValueError(f"bad horizon in scenario {part!r}") from None
    if not out:
        raise ValueError("a scenario sequence must not be empty")
    return tuple(out)


def _store(a, n):
    if n <= DENSE_LIMIT:
        return a.toarray() if sp.issparse(a) else np.asarray(a, dtype=float)
    return sp.csr_matrix(a)


@dataclass(frozen=True, eq=False)
class Summary:
    a: object
    b: np.ndarray
    states: tuple | None = None

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float).ravel()
        if b.size and (b.min() < -STOCHASTIC_TOL or b.max() > 1.0 + STOCHASTIC_TOL):
            raise ValueError("error probabilities must lie in [0, 1]")
        # Products of stochastic matrices can overshoot 1 by a few ulps.
        b = np.clip(b, 0.0, 1.0)
        n = b.shape[0]
        if self.a.shape != (n, n):
            raise DimensionMismatch(f"A has shape {self.a.shape} but b has length {n}")
        object.__setattr__(self, "a", _store(self.a, n))
        object.__setattr__(self, "b", b)
        if self.states is not None:
            states = tuple(str(s) for s in self.states)
            if len(states) != n:
                raise DimensionMismatch("summary labels do not match its dimension")
            object.__setattr__(self, "states", states)

    @property
    def n(self) -> int:
        return self.b.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.a)

    @classmethod
    def identity(cls, n: int, states=None) -> "Summary":
        a = sp.identity(n, format="csr") if n > DENSE_LIMIT else np.eye(n)
        return cls(a, np.zeros(n), states)

    def dense_a(self) -> np.ndarray:
        return self.a.toarray() if self.is_sparse else self.a

    def a_dot(self, v) -> np.ndarray:
        """``A @ v`` as a flat array."""
        return np.asarray(self.a @ np.asarray(v, dtype=float)).ravel()

    def x_dot(self, x) -> np.ndarray:
        """``x @ A`` (push a row vector through the summary)."""
        x = np.asarray(x, dtype=float)
        if self.is_sparse:
            return np.asarray(self.a.T @ x).ravel()
        return x @ self.a

    def mass_defects(self, tol: float = STOCHASTIC_TOL) -> np.ndarray:
        """Rows whose ``sum_j A[i, j] + b[i]`` differs from 1 by more than ``tol``."""
        sums = np.asarray(self.a.sum(axis=1)).ravel() + self.b
        return np.flatnonzero(np.abs(sums - 1.0) > tol)


def _matrix_power(p: sp.csr_matrix, h: int, squaring: bool) -> sp.csr_matrix:
    if not squaring:
        q = p
        for _ in range(h - 1):
            q = q @ p
        return q
    result, base, k = None, p, h
    while k:
        if k & 1:
            result = base if result is None else result @ base
        k >>= 1
        if k:
            base = base @ base
    return result


def summarize(m: ClosedLoopDtmc, horizon: int, method: str = "auto", workers: int = 1) -> Summary:
    """Summary of ``horizon`` steps of ``m``.

    ``method`` is ``"iterate"`` (``H - 1`` sparse products), ``"squaring"``
    (square-and-multiply), ``"rows"`` (propagate each unit vector separately,
    optionally on ``workers`` threads) or ``"auto"``.
    """
    if int(horizon) != horizon or horizon < 1:
        raise ValueError("horizon must be a positive integer")
    horizon = int(horizon)
    n = m.space.n_safe
    err = m.error_index
    if method == "auto":
        method = "squaring" if horizon >= SQUARING_FROM else "iterate"
    if method == "rows":
        a, b = summarize_rows(m, horizon, range(n), workers=workers)
        return Summary(a, b, m.space.safe_labels)
    if method not in ("iterate", "squaring"):
        raise ValueError(f"unknown summary method {method!r}")
    q = _matrix_power(m.transitions, horizon, method == "squaring").tocsr()
    a = q[:n, :n]
    b = q[:n, err].toarray().ravel()
    return Summary(a, b, m.space.safe_labels)


def summarize_rows(m: ClosedLoopDtmc, horizon: int, rows: Sequence[int], workers: int = 1):
    """Rows ``rows`` of ``(A, b)`` computed one initial state at a time.

    Returns ``(A_rows, b_rows)`` with ``A_rows`` of shape ``(len(rows), n)``
    (sparse when ``n`` exceeds :data:`DENSE_LIMIT`).  Each row is independent,
    so the thread count does not change the result.
    """
    n = m.space.n_safe
    err = m.error_index
    indptr, indices, data = kernels.csr_arrays(m.transitions)
    rows = list(rows)

    def one(i):
        return kernels.propagate_unit(indptr, indices, data, i, horizon)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vecs = list(pool.map(one, rows))
    else:
        vecs = [one(i) for i in rows]
    b = np.array([v[err] for v in vecs])
    if n <= DENSE_LIMIT:
        a = np.array([v[:n] for v in vecs]).reshape(len(rows), n)
    else:
        a = sp.vstack([sp.csr_matrix(v[:n]) for v in vecs], format="csr") if vecs else sp.csr_matrix((0, n))
    return a, b


def compose(c1: Summary, c2: Summary) -> Summary:
    """Summary of running ``c1`` and then ``c2``."""
    if c1.n != c2.n:
        raise DimensionMismatch(f"cannot compose summaries over {c1.n} and {c2.n} states")
    if c1.states is not None and c2.states is not None and c1.states != c2.states:
        raise DimensionMismatch("summaries are over different state spaces")
    a = c1.a @ c2.a
    b = c1.b + c1.a_dot(c2.b)
    return Summary(a, b, c1.states if c1.states is not None else c2.states)


def summarize_sequence(seq: Sequence[Scenario], chains: Mapping[str, ClosedLoopDtmc], method: str = "auto") -> Summary:
    """Left-to-right composition of the summaries of ``seq``."""
    seq = list(seq)
    if not seq:
        raise ValueError("a scenario sequence must not be empty")
    for sc in seq:
        if sc.env not in chains:
            raise UnknownEnvironment(sc.env)
    spaces = {chains[sc.env].space.labels for sc in seq}
    if len(spaces) > 1:
        raise DimensionMismatch("all chains in a sequence must share one state space")
    cache = {}
    out = None
    for sc in seq:
        key = (sc.env, sc.horizon)
        if key not in cache:
            cache[key] = summarize(chains[sc.env], sc.horizon, method=method)
        out = cache[key] if out is None else compose(out, cache[key])
    return out


def apply(c: Summary, x) -> tuple:
    """``(x . b, x A)``: error probability and surviving subdistribution."""
    x = np.asarray(x, dtype=float)
    if x.shape != (c.n,):
        raise DimensionMismatch(f"distribution has length {x.shape}, summary has {c.n} states")
    return float(x @ c.b), c.x_dot(x)
