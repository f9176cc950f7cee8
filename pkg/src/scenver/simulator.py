"""Monte Carlo sampling of scenario sequences.

Random numbers come from numpy's PCG64 bit generator.  All uniforms are drawn
here, in blocks of one row per trajectory, and handed to the stepping kernel;
the compiled and pure-Python kernels therefore produce identical outcomes.
Batch ``i`` of a run seeded with ``seed`` uses the ``i``-th child of
``SeedSequence(seed)``, so results do not depend on how batches are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .core import ClosedLoopDtmc, check_distribution
from .errors import DimensionMismatch, UnknownEnvironment
from .summary import Scenario

BATCH = 8192


@dataclass(frozen=True)
class SimReport:
    runs: int
    error_hits: int
    estimate: float
    std_error: float
    seed: int

    @classmethod
    def from_counts(cls, runs: int, hits: int, seed: int) -> "SimReport":
        est = hits / runs
        return cls(runs, hits, est, math.sqrt(est * (1.0 - est) / runs), seed)

    def to_json(self) -> dict:
        return {
            "format_version": 1,
            "runs": self.runs,
            "error_hits": self.error_hits,
            "estimate": self.estimate,
            "std_error": self.std_error,
            "seed": self.seed,
        }

    def __str__(self):
        return f"{self.estimate:.6g} ± {self.std_error:.3g} ({self.error_hits}/{self.runs} runs, seed {self.seed})"


class _Prepared:
    """CSR arrays and row CDFs of every chain used by a sequence."""

    def __init__(self, seq, chains):
        self.seq = [sc if isinstance(sc, Scenario) else Scenario(*sc) for sc in seq]
        if not self.seq:
            raise ValueError("a scenario sequence must not be empty")
        spaces = set()
        self.arrays = {}
        for sc in self.seq:
            if sc.env not in chains:
                raise UnknownEnvironment(sc.env)
            if sc.env not in self.arrays:
                m = chains[sc.env]
                indptr, indices, data = kernels.csr_arrays(m.transitions)
                self.arrays[sc.env] = (indptr, indices, kernels.row_cdf(indptr, data))
                spaces.add(m.space.labels)
        if len(spaces) > 1:
            raise DimensionMismatch("all chains in a sequence must share one state space")
        self.space = chains[self.seq[0].env].space
        self.error_index = self.space.error_index

    def run(self, states, rng, impl=None):
        for sc in self.seq:
            indptr, indices, cdf = self.arrays[sc.env]
            u = rng.random((states.shape[0], sc.horizon))
            kernels.simulate_block(indptr, indices, cdf, states, u, self.error_index, impl=impl)
        return states


def _state_index(space, state) -> int:
    return int(state) if isinstance(state, (int, np.integer)) else space.index(state)


def sample_trajectory(
    seq: Sequence[Scenario],
    chains: Mapping[str, ClosedLoopDtmc],
    start,
    seed: int,
    impl=None,
) -> tuple:
    """Simulate one trajectory from ``start`` (label or index).

    Returns ``(hit_error, final_state_label)``.
    """
    prep = _Prepared(seq, chains)
    i = _state_index(prep.space, start)
    if i == prep.error_index:
        raise ValueError("trajectories must start in a non-error state")
    states = np.array([i], dtype=np.int64)
    prep.run(states, np.random.Generator(np.random.PCG64(seed)), impl)
    final = int(states[0])
    return final == prep.error_index, prep.space.labels[final]


def estimate_error_probability(
    seq: Sequence[Scenario],
    chains: Mapping[str, ClosedLoopDtmc],
    init,
    n: int,
    seed: int,
    impl=None,
) -> SimReport:
    """Fraction of ``n`` trajectories, started from ``init``, that reach the error state.

    ``init`` is a distribution over the non-error states.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    prep = _Prepared(seq, chains)
    init = check_distribution(init)
    if init.shape[0] != prep.space.n_safe:
        raise DimensionMismatch(f"initial distribution has length {init.shape[0]}, expected {prep.space.n_safe}")
    init_cdf = np.cumsum(init)
    children = np.random.SeedSequence(seed).spawn((n + BATCH - 1) // BATCH)
    hits = 0
    for b, child in enumerate(children):
        size = min(BATCH, n - b * BATCH)
        rng = np.random.Generator(np.random.PCG64(child))
        u0 = rng.random(size)
        states = np.minimum(np.searchsorted(init_cdf, u0, side="right"), init.shape[0] - 1).astype(np.int64)
        prep.run(states, rng, impl)
        hits += int(np.count_nonzero(states == prep.error_index))
    return SimReport.from_counts(n, hits, seed)
