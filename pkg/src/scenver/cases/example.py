"""The two-state worked example: a one-step chain with an absorbing error state."""

from __future__ import annotations

import numpy as np

from ..core import ClosedLoopDtmc, StateSpace
from ..linprog import AffinePredicate

EXAMPLE_MATRIX = np.array(
    [
        [0.6, 0.2, 0.2],
        [0.2, 0.7, 0.1],
        [0.0, 0.0, 1.0],
    ]
)
EXAMPLE_HORIZON = 1


def example_chain() -> ClosedLoopDtmc:
    return ClosedLoopDtmc.from_dense(StateSpace.from_safe(["s1", "s2"], "err"), EXAMPLE_MATRIX)


def example_box(bound: float = 0.7) -> AffinePredicate:
    """``x1 <= bound and x2 <= bound``."""
    return AffinePredicate((([1.0, 0.0], bound), ([0.0, 1.0], bound)))
