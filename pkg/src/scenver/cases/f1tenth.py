"""Discrete F1Tenth track-segment model.

A state is ``(side, front, heading, tau)``: lateral grid position, distance
to the front wall, heading in steps of pi/4 (0 faces the front wall, 2 faces
left) and the timestep within the current segment.  Controls ``-1, 0, 1``
turn the heading by one step, after which the car advances one cell along
the *new* heading.

Default geometry (all regions overridable)::

    Track        |side| <= w, 0 <= front <= front_range       (w = half_width)
    Track_left   -side_range < side < -w, 0 <= front <= 2w
    F_left       side == -side_range, 0 <= front <= 2w
    Track_right / F_right mirror the left ones
    F_straight   front == 0, |side| <= w

A car that reaches ``F_e`` early stays put until the segment timer runs out;
at ``tau == horizon`` it is handed over to the start of the next segment:
``(w - front, start, heading - 2, 1)`` after a left turn,
``(front - w, start, heading + 2, 1)`` after a right turn and
``(side, start, heading, 1)`` after a straight.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..core import ControllerTable, DynamicsTable, StateSpace
from ..linprog import AffinePredicate

SEGMENTS = ("left", "right", "straight")
CONTROLS = (-1, 0, 1)
HEADINGS = 8
ERROR = "err"

# Movement along each heading: (d_side, d_front).
_STEP = {
    h: (-(h in (1, 2, 3)) + (h in (5, 6, 7)), -(h in (0, 1, 7)) + (h in (3, 4, 5)))
    for h in range(HEADINGS)
}
# Frame rotation of each segment's exit corridor relative to the approach.
_ROTATION = {"straight": 0, "left": 2, "right": -2}


def _cells(cells):
    return None if cells is None else frozenset((int(s), int(f)) for s, f in cells)


@dataclass(frozen=True)
class F1TenthConfig:
    side_range: int = 7
    front_range: int = 16
    horizon: int = 30
    half_width: int = 3
    start_front: int | None = None
    track: frozenset | None = None
    track_left: frozenset | None = None
    track_right: frozenset | None = None
    final_left: frozenset | None = None
    final_right: frozenset | None = None
    final_straight: frozenset | None = None
    headings: int = field(default=HEADINGS, init=False)

    def __post_init__(self):
        if self.start_front is None:
            object.__setattr__(self, "start_front", self.front_range - 1)
        for name in ("track", "track_left", "track_right", "final_left", "final_right", "final_straight"):
            object.__setattr__(self, name, _cells(getattr(self, name)))
        if self.side_range < 1 or self.front_range < 1 or self.horizon < 2:
            raise ValueError("grid ranges must be positive and the horizon at least 2")
        if not 0 < self.half_width <= self.side_range:
            raise ValueError("half_width must lie in 1..side_range")
        if 2 * self.half_width > self.front_range:
            raise ValueError("the exit corridor (2 * half_width) does not fit in front_range")
        if not 0 <= self.start_front <= self.front_range:
            raise ValueError("start_front must lie in 0..front_range")
        for seg in SEGMENTS:
            if self.final(seg) & self.walls(seg):
                raise ValueError(f"final region of {seg} overlaps a wall")

    @classmethod
    def reduced(cls, **kw) -> "F1TenthConfig":
        """The small grid used for quick checks (side 4, front 9, horizon 12)."""
        return cls(side_range=4, front_range=9, horizon=12, **kw)

    def to_json(self) -> dict:
        out = {
            "side_range": self.side_range,
            "front_range": self.front_range,
            "horizon": self.horizon,
            "half_width": self.half_width,
            "start_front": self.start_front,
        }
        for name in ("track", "track_left", "track_right", "final_left", "final_right", "final_straight"):
            cells = getattr(self, name)
            if cells is not None:
                out[name] = sorted([s, f] for s, f in cells)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "F1TenthConfig":
        allowed = {
            "side_range", "front_range", "horizon", "half_width", "start_front",
            "track", "track_left", "track_right", "final_left", "final_right", "final_straight",
        }
        unknown = set(obj) - allowed
        if unknown:
            raise ValueError(f"unknown F1Tenth config keys: {sorted(unknown)}")
        return cls(**obj)

    @property
    def positions(self) -> frozenset:
        return frozenset(
            (s, f) for s in range(-self.side_range, self.side_range + 1) for f in range(self.front_range + 1)
        )

    def main_track(self) -> frozenset:
        if self.track is not None:
            return self.track
        w = self.half_width
        return frozenset((s, f) for s, f in self.positions if abs(s) <= w)

    def side_track(self, seg: str) -> frozenset:
        if seg == "straight":
            return frozenset()
        given = self.track_left if seg == "left" else self.track_right
        if given is not None:
            return given
        w, r = self.half_width, self.side_range
        sign = -1 if seg == "left" else 1
        return frozenset(
            (sign * s, f) for s in range(w + 1, r) for f in range(2 * w + 1)
        )

    def final(self, seg: str) -> frozenset:
        given = {"left": self.final_left, "right": self.final_right, "straight": self.final_straight}[seg]
        if given is not None:
            return given
        w, r = self.half_width, self.side_range
        if seg == "straight":
            return frozenset((s, 0) for s in range(-w, w + 1))
        sign = -1 if seg == "left" else 1
        return frozenset((sign * r, f) for f in range(2 * w + 1))

    def allowed(self, seg: str) -> frozenset:
        return self.main_track() | self.side_track(seg) | self.final(seg)

    def walls(self, seg: str) -> frozenset:
        return self.positions - self.main_track() - self.side_track(seg) - self.final(seg)


def state_label(side, front, heading, tau) -> str:
    return f"s{side}_f{front}_h{heading}_t{tau}"


def estimate_label(side, front, heading) -> str:
    return f"s{side}_f{front}_h{heading}"


def _handover(cfg: F1TenthConfig, seg: str, side, front, heading):
    w = cfg.half_width
    if seg == "left":
        return w - front, cfg.start_front, (heading - 2) % HEADINGS
    if seg == "right":
        return front - w, cfg.start_front, (heading + 2) % HEADINGS
    return side, cfg.start_front, heading


def f1tenth_dynamics(cfg: F1TenthConfig, seg: str, s, u: int):
    """One step of the segment dynamics; ``s`` is a 4-tuple or :data:`ERROR`."""
    if seg not in SEGMENTS:
        raise ValueError(f"unknown segment {seg!r}")
    if u not in CONTROLS:
        raise ValueError(f"control must be one of {CONTROLS}")
    if s == ERROR:
        return ERROR
    side, front, heading, tau = s
    in_final = (side, front) in cfg.final(seg)
    if tau < cfg.horizon:
        if in_final:
            return (side, front, heading, tau + 1)
        heading2 = (heading + u) % HEADINGS
        ds, df = _STEP[heading2]
        pos = (side + ds, front + df)
        if pos in cfg.allowed(seg):
            return (*pos, heading2, tau + 1)
        return ERROR
    if in_final:
        side2, front2, heading2 = _handover(cfg, seg, side, front, heading)
        if abs(side2) <= cfg.side_range:
            return (side2, front2, heading2, 1)
    return ERROR


def _steer(heading: int, target: int) -> int:
    d = (target - heading) % HEADINGS
    if d == 0:
        return 0
    return 1 if d <= HEADINGS // 2 else -1


def f1tenth_controller(cfg: F1TenthConfig, seg: str, y) -> int:
    """Steering policy for an estimated pose ``y = (side, front, heading[, tau])``.

    The car follows the centreline of its corridor: target heading is one
    step towards the line when off it and straight along it otherwise, and
    the heading moves one step towards the target.  In turn segments the
    reference line switches to the exit corridor's centre ``front == w``
    once ``front <= w + 1``.
    """
    side, front, heading = y[0], y[1], y[2]
    w = cfg.half_width
    if seg == "straight" or front >= w + 2:
        offset, rot = side, 0
    elif seg == "left":
        offset, rot = w - front, _ROTATION["left"]
    else:
        offset, rot = front - w, _ROTATION["right"]
    local = 1 if offset > 0 else (HEADINGS - 1 if offset < 0 else 0)
    return _steer(heading, (local + rot) % HEADINGS)


class F1TenthModel:
    """State space, estimate space, controller and dynamics tables for one config."""

    def __init__(self, cfg: F1TenthConfig | None = None):
        self.cfg = cfg or F1TenthConfig()

    @cached_property
    def coords(self) -> np.ndarray:
        """``(n_safe, 4)`` array of ``(side, front, heading, tau)`` in index order."""
        c = self.cfg
        sides = np.arange(-c.side_range, c.side_range + 1)
        fronts = np.arange(c.front_range + 1)
        heads = np.arange(HEADINGS)
        taus = np.arange(1, c.horizon + 1)
        grid = np.meshgrid(sides, fronts, heads, taus, indexing="ij")
        return np.stack([g.ravel() for g in grid], axis=1)

    @cached_property
    def space(self) -> StateSpace:
        return StateSpace.from_safe([state_label(*row) for row in self.coords.tolist()], ERROR)

    @cached_property
    def estimate_coords(self) -> np.ndarray:
        c = self.cfg
        grid = np.meshgrid(
            np.arange(-c.side_range, c.side_range + 1), np.arange(c.front_range + 1), np.arange(HEADINGS), indexing="ij"
        )
        return np.stack([g.ravel() for g in grid], axis=1)

    @cached_property
    def estimates(self) -> tuple:
        return tuple(estimate_label(*row) for row in self.estimate_coords.tolist())

    @cached_property
    def projection(self) -> np.ndarray:
        """Estimate index of every non-error state (the timer is not perceived)."""
        return np.arange(self.space.n_safe) // self.cfg.horizon

    def index(self, side, front, heading, tau) -> int:
        c = self.cfg
        return (((side + c.side_range) * (c.front_range + 1) + front) * HEADINGS + heading) * c.horizon + tau - 1

    def state_of(self, i: int):
        return ERROR if i == self.space.error_index else tuple(int(v) for v in self.coords[i])

    def estimate_neighbors(self) -> list:
        """Grid-adjacent estimates (same heading, side or front off by one)."""
        c = self.cfg
        out = []
        for s, f, h in self.estimate_coords.tolist():
            nb = []
            for ds, df in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                s2, f2 = s + ds, f + df
                if abs(s2) <= c.side_range and 0 <= f2 <= c.front_range:
                    nb.append(((s2 + c.side_range) * (c.front_range + 1) + f2) * HEADINGS + h)
            out.append(nb)
        return out

    @cached_property
    def controller(self) -> ControllerTable:
        table = {
            seg: [CONTROLS.index(f1tenth_controller(self.cfg, seg, y)) for y in self.estimate_coords.tolist()]
            for seg in SEGMENTS
        }
        return ControllerTable([str(u) for u in CONTROLS], self.estimates, table)

    def _mask(self, cells) -> np.ndarray:
        c = self.cfg
        m = np.zeros((2 * c.side_range + 1, c.front_range + 1), dtype=bool)
        for s, f in cells:
            if abs(s) <= c.side_range and 0 <= f <= c.front_range:
                m[s + c.side_range, f] = True
        return m

    def _member(self, mask, side, front) -> np.ndarray:
        c = self.cfg
        inside = (np.abs(side) <= c.side_range) & (front >= 0) & (front <= c.front_range)
        out = np.zeros(side.shape, dtype=bool)
        out[inside] = mask[side[inside] + c.side_range, front[inside]]
        return out

    def dynamics_array(self, seg: str) -> np.ndarray:
        """Vectorized :func:`f1tenth_dynamics` over all states and controls."""
        c = self.cfg
        side, front, heading, tau = self.coords.T
        err = self.space.error_index
        in_final = self._member(self._mask(c.final(seg)), side, front)
        allowed = self._mask(c.allowed(seg))
        running = tau < c.horizon
        out = np.empty((len(side), len(CONTROLS)), dtype=np.int64)

        hs, hf, hh = _handover(c, seg, side, front, heading)
        hs = np.broadcast_to(hs, side.shape)
        ok = in_final & (np.abs(hs) <= c.side_range)
        handed = np.full(side.shape, err, dtype=np.int64)
        handed[ok] = self.index(hs[ok], hf, hh[ok], 1)
        frozen = self.index(side, front, heading, np.minimum(tau + 1, c.horizon))

        for j, u in enumerate(CONTROLS):
            h2 = (heading + u) % HEADINGS
            ds = -np.isin(h2, (1, 2, 3)).astype(int) + np.isin(h2, (5, 6, 7))
            df = -np.isin(h2, (0, 1, 7)).astype(int) + np.isin(h2, (3, 4, 5))
            s2, f2 = side + ds, front + df
            legal = self._member(allowed, s2, f2)
            moved = np.full(side.shape, err, dtype=np.int64)
            moved[legal] = self.index(s2[legal], f2[legal], h2[legal], np.minimum(tau[legal] + 1, c.horizon))
            col = np.where(in_final, frozen, moved)
            out[:, j] = np.where(running, col, handed)
        return out

    @cached_property
    def dynamics(self) -> DynamicsTable:
        return DynamicsTable(self.space, [str(u) for u in CONTROLS], {seg: self.dynamics_array(seg) for seg in SEGMENTS})

    def nominal_starts(self, max_offset: int = 2) -> list:
        """Heading 0 at the segment start with ``|side| <= max_offset``."""
        c = self.cfg
        return [self.index(s, c.start_front, 0, 1) for s in range(-max_offset, max_offset + 1)]

    def indicator(self, predicate) -> np.ndarray:
        """0/1 vector over non-error states of ``predicate(side, front, heading, tau)``."""
        side, front, heading, tau = self.coords.T
        return np.asarray(predicate(side, front, heading, tau), dtype=float)

    def preconditions(self) -> dict:
        """Start-of-segment preconditions ``forward``, ``nominal``, ``center`` and ``right``.

        ``forward`` puts all mass on the segment start (``tau == 1``) with
        ``|side| <= 2`` and heading within one step of straight ahead; the
        others additionally bound the mass outside a target set by 0.1.
        """
        c = self.cfg
        not_forward = self.indicator(
            lambda s, f, h, t: (np.abs(s) > 2) | ((h > 1) & (h < 7)) | (t != 1) | (f != c.start_front)
        )
        forward = AffinePredicate(((not_forward, 0.0),))
        extra = {
            "nominal": self.indicator(lambda s, f, h, t: (s != 0) | (h != 0)),
            "center": self.indicator(lambda s, f, h, t: np.abs(s) > 1),
            "right": self.indicator(lambda s, f, h, t: s != 2),
        }
        out = {"forward": forward}
        for name, vec in extra.items():
            out[name] = forward & AffinePredicate(((vec, 0.1),))
        return out
