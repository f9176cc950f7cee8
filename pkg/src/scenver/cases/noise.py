"""Synthetic perception abstractions standing in for measured confusion data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..core import PerceptionAbstraction, StateSpace
from ..errors import InvalidParameter

KINDS = ("perfect", "uniform", "neighbor")


@dataclass(frozen=True)
class SyntheticNoiseModel:
    """``perfect``; ``uniform``: mass ``p`` spread over all wrong estimates;
    ``neighbor``: mass ``p`` spread over grid-adjacent estimates."""

    kind: str = "perfect"
    p: float = 0.0

    def __post_init__(self):
        kind = str(self.kind).lower()
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise InvalidParameter(f"unknown noise kind {self.kind!r}; expected one of {KINDS}")
        if not 0.0 <= self.p <= 1.0:
            raise InvalidParameter(f"noise parameter p must lie in [0, 1], got {self.p!r}")
        if kind == "perfect" and self.p != 0.0:
            raise InvalidParameter("perfect perception takes no parameter")

    @classmethod
    def parse(cls, text) -> "SyntheticNoiseModel":
        """Accept ``"perfect"``, ``"uniform:0.1"``, ``"neighbor:0.2"`` or a JSON-style dict."""
        if isinstance(text, dict):
            return cls(text.get("kind", "perfect"), float(text.get("p", 0.0)))
        kind, _, p = str(text).partition(":")
        try:
            return cls(kind, float(p) if p else 0.0)
        except ValueError as exc:
            if isinstance(exc, InvalidParameter):
                raise
            raise InvalidParameter(f"bad noise specification {text!r}") from None

    def to_json(self) -> dict:
        return {"kind": self.kind, "p": self.p}

    def __str__(self):
        return self.kind if self.kind == "perfect" else f"{self.kind}:{self.p:g}"


def _line_neighbors(n):
    return [[j for j in (i - 1, i + 1) if 0 <= j < n] for i in range(n)]


def synthetic_abstraction(
    space: StateSpace,
    noise: SyntheticNoiseModel,
    estimates=None,
    projection=None,
    neighbors=None,
) -> PerceptionAbstraction:
    """Abstraction over ``space`` with estimates corrupted by ``noise``.

    By default the estimate space is the non-error state space itself.  With
    ``estimates`` and ``projection`` (estimate index of every state) several
    states can share one perceivable estimate.  ``neighbors[j]`` lists the
    estimates adjacent to estimate ``j`` (default: ``j - 1`` and ``j + 1``).
    """
    if estimates is None:
        estimates = space.safe_labels
    k = len(estimates)
    if projection is None:
        if k != space.n_safe:
            raise InvalidParameter("a projection is required when estimates differ from states")
        projection = np.arange(k)
    p = noise.p
    if noise.kind == "perfect" or p == 0.0:
        probs = sp.identity(k, format="csr")
    elif noise.kind == "uniform":
        if k < 2:
            raise InvalidParameter("uniform noise needs at least two estimates")
        probs = np.full((k, k), p / (k - 1))
        np.fill_diagonal(probs, 1.0 - p)
    else:
        nbs = neighbors if neighbors is not None else _line_neighbors(k)
        if len(nbs) != k:
            raise InvalidParameter("one neighbour list per estimate is required")
        rows, cols, vals = [], [], []
        for j, nb in enumerate(nbs):
            nb = sorted(set(int(v) for v in nb) - {j})
            if not nb:
                rows.append(j), cols.append(j), vals.append(1.0)
                continue
            rows.append(j), cols.append(j), vals.append(1.0 - p)
            for v in nb:
                rows.append(j), cols.append(v), vals.append(p / len(nb))
        probs = sp.csr_matrix((vals, (rows, cols)), shape=(k, k))
    return PerceptionAbstraction(space.safe_labels, estimates, probs, row_index=projection)
