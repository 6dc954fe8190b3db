"""Open-road dynamics: a lead car with a prescribed speed and a platoon behind it.

Car 1 moves by ``v1(t)``; every follower moves by the law evaluated at
the gap to the car ahead. Stationary headways come from inverting the
law at the lead speed, with the degenerate cases tagged explicitly.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .pwl_law import PwlLaw, evaluate
from .stationary import EigenPair


class ProfileError(ValueError):
    pass


class DegenerateHeadwayError(ValueError):
    """The stationary headway is not a finite number."""


@dataclass(frozen=True)
class ProfileSegment:
    t_start: int
    t_end: int
    kind: str
    v_start: float
    v_end: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("constant", "linear"):
            raise ProfileError(f"unknown segment kind {self.kind!r}")
        if self.t_end <= self.t_start:
            raise ProfileError(f"empty segment [{self.t_start}, {self.t_end})")
        if self.kind == "constant" and self.v_end is None:
            object.__setattr__(self, "v_end", self.v_start)
        if self.v_end is None:
            raise ProfileError("linear segment needs v_end")
        if not (math.isfinite(self.v_start) and math.isfinite(self.v_end)):
            raise ProfileError("segment speeds must be finite")

    def speed(self, t: int) -> float:
        if self.kind == "constant":
            return self.v_start
        frac = (t - self.t_start) / (self.t_end - self.t_start)
        return self.v_start + (self.v_end - self.v_start) * frac

    @property
    def slope(self) -> float:
        return (self.v_end - self.v_start) / (self.t_end - self.t_start)

    def to_dict(self) -> dict:
        return {"t_start": self.t_start, "t_end": self.t_end, "kind": self.kind,
                "v_start": self.v_start, "v_end": self.v_end}


@dataclass(frozen=True)
class LeadProfile:
    segments: tuple[ProfileSegment, ...]

    def __post_init__(self):
        segs = tuple(s if isinstance(s, ProfileSegment) else ProfileSegment(**s) for s in self.segments)
        if not segs:
            raise ProfileError("profile has no segments")
        if segs[0].t_start != 0:
            raise ProfileError("profile must start at t = 0")
        for a, b in zip(segs, segs[1:]):
            if a.t_end != b.t_start:
                raise ProfileError(f"profile gap or overlap at t = {a.t_end}")
        object.__setattr__(self, "segments", segs)

    @property
    def end(self) -> int:
        return self.segments[-1].t_end

    def segment_at(self, t: int) -> ProfileSegment:
        for s in self.segments:
            if s.t_start <= t < s.t_end:
                return s
        raise ProfileError(f"profile does not cover t = {t}")

    def speed(self, t: int) -> float:
        return self.segment_at(t).speed(t)

    @classmethod
    def constant(cls, v1: float, horizon: int) -> "LeadProfile":
        return cls((ProfileSegment(0, horizon, "constant", v1),))

    def to_list(self) -> list[dict]:
        return [s.to_dict() for s in self.segments]


def default_profile(v_free: float = 14.0, v_above: float = 16.0) -> LeadProfile:
    """Sawtooth 0 -> 14 -> 4 -> 14 on [0, 1000), 14 on [1000, 3000), above free speed to 7200."""
    return LeadProfile((
        ProfileSegment(0, 333, "linear", 0.0, v_free),
        ProfileSegment(333, 666, "linear", v_free, 4.0),
        ProfileSegment(666, 1000, "linear", 4.0, v_free),
        ProfileSegment(1000, 3000, "constant", v_free),
        ProfileSegment(3000, 7200, "constant", v_above),
    ))


@dataclass(frozen=True)
class OpenState:
    positions: np.ndarray
    time_step: int = 0

    def __post_init__(self):
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=float))

    @property
    def headways(self) -> np.ndarray:
        return -np.diff(self.positions)

    @property
    def ordered(self) -> bool:
        return bool(np.all(np.diff(self.positions) < 0))


def platoon(nu: int, headway: float) -> OpenState:
    """Evenly spaced platoon with the last car at 0."""
    if nu < 1:
        raise ValueError("need at least one car")
    return OpenState(headway * np.arange(nu - 1, -1, -1), 0)


def step_open(state: OpenState, law: PwlLaw, v1_t: float) -> OpenState:
    x = state.positions
    nxt = np.empty_like(x)
    nxt[0] = x[0] + v1_t
    nxt[1:] = x[1:] + evaluate(law, x[:-1] - x[1:])
    return OpenState(nxt, state.time_step + 1)


def simulate_open(state0: OpenState, law: PwlLaw, profile: LeadProfile, horizon: int) -> list[OpenState]:
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if horizon > profile.end:
        raise ProfileError(f"profile covers [0, {profile.end}) but horizon is {horizon}")
    traj = [state0]
    for t in range(horizon):
        traj.append(step_open(traj[-1], law, profile.speed(t)))
    return traj


class HeadwayKind(enum.Enum):
    FINITE = "finite"
    PLUS_INF = "+inf"
    MINUS_INF = "-inf"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class StationaryHeadway:
    kind: HeadwayKind
    value: Optional[float] = None

    @property
    def is_finite(self) -> bool:
        return self.kind is HeadwayKind.FINITE

    def __str__(self):
        return f"{self.value:.12g}" if self.is_finite else self.kind.value


def _ratio(num: float, den: float) -> float:
    if den != 0.0:
        return num / den
    return math.inf if num > 0 else -math.inf


def stationary_headway(law: PwlLaw, v1: float) -> StationaryHeadway:
    """Headway at which the platoon travels at the lead speed ``v1``.

    ``max_u min_{w in W_u} (v1 - beta_uw) / alpha_uw`` where ``W_u`` drops
    pieces equal to the constant ``v1``, ``a/0`` is ``+inf`` for ``a > 0``
    and ``-inf`` for ``a < 0``, and an empty ``W_u`` gives ``+inf``.
    """
    pieces = law.pieces
    if all(p.alpha == 0.0 for p in pieces) and evaluate(law, 0.0) == v1:
        return StationaryHeadway(HeadwayKind.INDETERMINATE)
    best = -math.inf
    for group in law.groups:
        kept = [p for p in group if not (p.alpha == 0.0 and p.beta == v1)]
        g = min((_ratio(v1 - p.beta, p.alpha) for p in kept), default=math.inf)
        best = max(best, g)
    if best == math.inf:
        return StationaryHeadway(HeadwayKind.PLUS_INF)
    if best == -math.inf:
        return StationaryHeadway(HeadwayKind.MINUS_INF)
    return StationaryHeadway(HeadwayKind.FINITE, best)


def eigen_solution_open(law: PwlLaw, v1: float, nu: int) -> EigenPair:
    """Stationary platoon ``((nu-1)y, ..., y, 0)`` travelling at ``v1``."""
    h = stationary_headway(law, v1)
    if not h.is_finite:
        raise DegenerateHeadwayError(f"stationary headway is {h.kind.value}; no stationary profile")
    return EigenPair(v_bar=float(v1), x=h.value * np.arange(nu - 1, -1, -1, dtype=float))


def open_residual(law: PwlLaw, v1: float, pair: EigenPair) -> float:
    x = np.asarray(pair.x, dtype=float)
    res = [abs(pair.v_bar - v1)]
    if len(x) > 1:
        res.extend(np.abs(pair.v_bar - evaluate(law, x[:-1] - x[1:])))
    return float(max(res))


def hysteresis_series(trajectory: Sequence[OpenState], profile: LeadProfile) -> list[tuple[int, float, float]]:
    """Per step ``(t, v1(t), mean gap)`` using the ``nu - 1`` gaps of the platoon.

    The last state has no lead speed of its own inside the profile; it is
    paired with the final profile speed.
    """
    if len(trajectory[0].positions) < 2:
        raise ValueError("need at least two cars for a mean headway")
    out = []
    for s in trajectory:
        t = min(s.time_step, profile.end - 1)
        out.append((s.time_step, profile.speed(t), float(np.mean(s.headways))))
    return out


def loop_gap(series: Sequence[tuple[int, float, float]], profile: LeadProfile, grid_points: int = 200) -> float:
    """Largest mean-headway gap between an accelerating and a decelerating ramp at a shared lead speed.

    Each linear segment of the profile is one branch; branches are compared
    on the lead speeds both cover. Returns 0 when no such pair exists.
    """
    by_t = {t: (v, h) for t, v, h in series}
    branches = {"up": [], "down": []}
    for seg in profile.segments:
        if seg.kind != "linear" or seg.slope == 0:
            continue
        pts = [by_t[t] for t in range(seg.t_start, seg.t_end) if t in by_t]
        if len(pts) < 2:
            continue
        v, h = map(np.array, zip(*pts))
        order = np.argsort(v)
        branches["up" if seg.slope > 0 else "down"].append((v[order], h[order]))

    gap = 0.0
    for vu, hu in branches["up"]:
        for vd, hd in branches["down"]:
            lo, hi = max(vu[0], vd[0]), min(vu[-1], vd[-1])
            if hi <= lo:
                continue
            grid = np.linspace(lo, hi, grid_points)
            gap = max(gap, float(np.max(np.abs(np.interp(grid, vu, hu) - np.interp(grid, vd, hd)))))
    return gap


def ordering_violations(trajectory: Sequence[OpenState]) -> int:
    """Number of states where some car is not strictly behind its leader."""
    return sum(not s.ordered for s in trajectory)
