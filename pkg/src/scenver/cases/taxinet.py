"""TaxiNet state discretization and illustrative closed-loop tables.

The cross-track error (metres) and heading error (degrees) are binned into
five and three classes.  Class numbers are labels, not positions: from left
to right the cross-track classes read 3, 1, 0, 2, 4 and the heading classes
1, 0, 2.

The taxiing controller and dynamics shipped here are *illustrative*: they
exist so that the pipeline can be exercised end to end.  Real analyses load
user-supplied tables (see :mod:`scenver.io`).
"""

from __future__ import annotations

import math

import numpy as np

from ..core import ContingencyMatrix, ControllerTable, DynamicsTable, StateSpace, ANY_ENV
from .noise import SyntheticNoiseModel, synthetic_abstraction

ERROR = "err"
CTE_CLASSES = (0, 1, 2, 3, 4)
HE_CLASSES = (0, 1, 2)
CONTROLS = ("left", "none", "right")

_CTE_POS = {3: -2, 1: -1, 0: 0, 2: 1, 4: 2}
_HE_POS = {1: -1, 0: 0, 2: 1}
_POS_CTE = {v: k for k, v in _CTE_POS.items()}
_POS_HE = {v: k for k, v in _HE_POS.items()}


def taxinet_discretize(cte_m: float, he_deg: float):
    """``(cte_class, he_class)`` of a continuous pose, or :data:`ERROR` when off the taxiway."""
    if math.isnan(cte_m) or math.isnan(he_deg):
        return ERROR
    if -8.0 <= cte_m < -4.8:
        cte = 3
    elif -4.8 <= cte_m < -1.6:
        cte = 1
    elif -1.6 <= cte_m <= 1.6:
        cte = 0
    elif 1.6 < cte_m <= 4.8:
        cte = 2
    elif 4.8 < cte_m <= 8.0:
        cte = 4
    else:
        return ERROR
    if -35.0 <= he_deg < -11.67:
        he = 1
    elif -11.67 <= he_deg <= 11.66:
        he = 0
    elif 11.66 < he_deg <= 35.0:
        he = 2
    else:
        return ERROR
    return cte, he


def state_label(cte: int, he: int) -> str:
    return f"cte{cte}_he{he}"


def taxinet_space() -> StateSpace:
    return StateSpace.from_safe([state_label(c, h) for c in CTE_CLASSES for h in HE_CLASSES], ERROR)


def _parse(label):
    c, h = label.split("_")
    return int(c[3:]), int(h[2:])


def _illustrative_control(estimate: str) -> str:
    cte, he = _parse(estimate)
    want = -int(np.sign(_CTE_POS[cte]))
    have = _HE_POS[he]
    return CONTROLS[int(np.sign(want - have)) + 1]


def _illustrative_next(state: str, control: str) -> str:
    cte, he = _parse(state)
    h = _HE_POS[he] + CONTROLS.index(control) - 1
    c = _CTE_POS[cte] + h
    if abs(h) > 1 or abs(c) > 2:
        return ERROR
    return state_label(_POS_CTE[c], _POS_HE[h])


def illustrative_tables(envs=(ANY_ENV,)):
    """Example ``(controller, dynamics)``: steer the heading toward the centreline,
    drift laterally by the heading.  Not the published TaxiNet controller."""
    space = taxinet_space()
    estimates = space.safe_labels
    g = ControllerTable.from_function(CONTROLS, estimates, envs, lambda e, y: _illustrative_control(y))
    f = DynamicsTable.from_function(space, CONTROLS, envs, lambda e, s, u: _illustrative_next(s, u))
    return g, f


def synthetic_counts(noise: SyntheticNoiseModel, samples: int = 1000) -> ContingencyMatrix:
    """Contingency matrix with ``samples`` per state drawn in expectation from ``noise``."""
    space = taxinet_space()
    alpha = synthetic_abstraction(space, noise)
    counts = np.rint(alpha.dense() * samples).astype(np.int64)
    return ContingencyMatrix(space.safe_labels, space.safe_labels, counts)
