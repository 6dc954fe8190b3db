"""Eulerian descriptions of a segmented one-lane road.

Positions ``x = 0..K`` are segment boundaries; segment ``x`` (1-based) is
the stretch between ``x - 1`` and ``x``. Two dual recursions are run:

* counts, ``n(t, x)``: cars that crossed ``x`` during ``(0, t]``::

      n(t, x) = min{a_x + n(t - tau_x, x - 1), abar_{x+1} + n(t - taubar_{x+1}, x + 1)}

* passage times, ``t(n, x)``: time of the ``n``-th crossing of ``x``::

      t(n, x) = max{tau_x + t(n - a_x, x - 1), taubar_{x+1} + t(n - abar_{x+1}, x + 1)}

Counts before time 0 are 0, interior counts at time 0 are 0, and crossings
numbered ``<= 0`` happened at ``-inf``. The entry ``x = 0`` is fed by a
cumulative arrival curve but still waits for free space in segment 1.
The exit is an unlimited sink unless the instance closes it.
Everything here is integer arithmetic; only the ``+-inf`` sentinels are floats.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

NEG_INF = -math.inf
POS_INF = math.inf


class DualError(ValueError):
    pass


class InvariantViolation(AssertionError):
    pass


@dataclass(frozen=True)
class SegmentGrid:
    a: tuple[int, ...]
    c: tuple[int, ...]
    tau: tuple[int, ...]
    taubar: tuple[int, ...]
    exit_open: bool = True

    def __post_init__(self):
        k = len(self.a)
        if k == 0:
            raise DualError("road needs at least one segment")
        if not (len(self.c) == len(self.tau) == len(self.taubar) == k):
            raise DualError("segment fields must have equal length")
        for i in range(k):
            if self.a[i] < 0:
                raise DualError(f"segment {i + 1}: negative car count")
            if self.c[i] < max(1, self.a[i]):
                raise DualError(f"segment {i + 1}: capacity must be >= max(1, a)")
            if self.tau[i] < 1:
                raise DualError(f"segment {i + 1}: free travel time must be >= 1")
            if self.taubar[i] < 0:
                raise DualError(f"segment {i + 1}: reaction time must be >= 0")

    @classmethod
    def from_segments(cls, segments: Sequence[dict], exit_open: bool = True) -> "SegmentGrid":
        try:
            return cls(
                a=tuple(int(s["a"]) for s in segments),
                c=tuple(int(s["c"]) for s in segments),
                tau=tuple(int(s["tau"]) for s in segments),
                taubar=tuple(int(s["taubar"]) for s in segments),
                exit_open=exit_open,
            )
        except KeyError as exc:
            raise DualError(f"segment missing field {exc}") from exc

    @property
    def K(self) -> int:
        return len(self.a)

    def abar(self, x: int) -> float:
        """Free space of segment ``x`` (1-based); the sink behind the exit is unbounded when open."""
        if x == self.K + 1:
            return POS_INF if self.exit_open else 0
        return self.c[x - 1] - self.a[x - 1]

    def total_travel_time(self, x: int) -> int:
        return self.tau[x - 1] + self.taubar[x - 1]


def _arrival(arrivals: Sequence[int], t: int) -> int:
    if t < 0 or not arrivals:
        return 0
    return arrivals[min(t, len(arrivals) - 1)]


def _check_arrivals(arrivals: Sequence[int]) -> None:
    if any(v < 0 for v in arrivals) or any(b < a for a, b in zip(arrivals, arrivals[1:])):
        raise DualError("arrivals must be a nondecreasing, nonnegative cumulative curve")


@dataclass
class CountField:
    """Rows ``n(t, 0..K)`` for ``t = 0, 1, ...``; the full history is kept."""

    grid: SegmentGrid
    arrivals: Sequence[int]
    rows: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        _check_arrivals(self.arrivals)
        if not self.rows:
            row = np.zeros(self.grid.K + 1, dtype=np.int64)
            row[0] = min(_arrival(self.arrivals, 0), self.grid.abar(1))
            self.rows.append(row)

    def n(self, t: int, x: int) -> int:
        if t < 0:
            return 0
        return int(self.rows[t][x])

    def occupancy(self, t: int) -> np.ndarray:
        """Cars in each segment at time ``t``: ``a_x + n(t, x-1) - n(t, x)``."""
        row = self.rows[t]
        return np.asarray(self.grid.a) + row[:-1] - row[1:]

    def as_array(self) -> np.ndarray:
        return np.vstack(self.rows)


def step_count(field: CountField, grid: SegmentGrid, t: int) -> CountField:
    """Append row ``t``; rows ``0..t-1`` must already exist."""
    if t != len(field.rows):
        raise DualError(f"history covers t < {len(field.rows)}, cannot compute t = {t}")
    K = grid.K
    row = np.zeros(K + 1, dtype=np.int64)

    def n(s: int, x: int):
        if x == K + 1:
            return 0
        if s == t:
            return row[x]
        return field.n(s, x)

    # downstream first: zero reaction time reads the current row at x + 1
    for x in range(K, 0, -1):
        up = grid.a[x - 1] + n(t - grid.tau[x - 1], x - 1)
        taubar_next = grid.taubar[x] if x < K else 0
        down = grid.abar(x + 1) + n(t - taubar_next, x + 1)
        row[x] = min(up, down)
    row[0] = min(_arrival(field.arrivals, t), grid.abar(1) + n(t - grid.taubar[0], 1))

    prev = field.rows[-1]
    if np.any(row < prev):
        raise InvariantViolation(f"counts decreased at t = {t}")
    field.rows.append(row)
    occ = field.occupancy(t)
    if np.any(occ < 0) or np.any(occ > np.asarray(grid.c)):
        raise InvariantViolation(f"segment occupancy out of [0, c] at t = {t}: {occ.tolist()}")
    return field


def run_counts(grid: SegmentGrid, arrivals: Sequence[int], horizon: int) -> CountField:
    f = CountField(grid, list(arrivals))
    for t in range(1, horizon + 1):
        step_count(f, grid, t)
    return f


def arrival_times(arrivals: Sequence[int], n_max: int) -> list[float]:
    """Time of the ``n``-th arrival, ``n = 1..n_max``; ``+inf`` if it never comes."""
    out = []
    t = 0
    for n in range(1, n_max + 1):
        while t < len(arrivals) and arrivals[t] < n:
            t += 1
        out.append(t if t < len(arrivals) else POS_INF)
    return out


@dataclass
class TimeField:
    """``times[n - 1][x]`` is the passage time of crossing ``n`` at ``x``."""

    grid: SegmentGrid
    arrival_time: list[float]
    times: list[list[float]] = field(default_factory=list)

    def t(self, n: int, x: int) -> float:
        if n <= 0:
            return NEG_INF
        return self.times[n - 1][x]

    def as_array(self) -> np.ndarray:
        return np.array(self.times, dtype=float).reshape(-1, self.grid.K + 1)


def step_time(field: TimeField, grid: SegmentGrid, n: int) -> TimeField:
    """Append the crossing times of car number ``n`` at every boundary."""
    if n != len(field.times) + 1:
        raise DualError(f"times known for n <= {len(field.times)}, cannot compute n = {n}")
    K = grid.K
    cur: list = [None] * (K + 1)

    def t_ref(m: int, x: int) -> float:
        if x == K + 1:
            return NEG_INF if grid.exit_open else (POS_INF if m >= 1 else NEG_INF)
        if m == n:
            return resolve(x)
        return field.t(m, x)

    def resolve(x: int) -> float:
        # same-index references form a chain without cycles because every c >= 1
        if cur[x] is None:
            if x == 0:
                up = field.arrival_time[n - 1] if n <= len(field.arrival_time) else POS_INF
                floor = 0
            else:
                up = grid.tau[x - 1] + t_ref(n - grid.a[x - 1], x - 1)
                floor = 1
            abar = grid.abar(x + 1)
            if abar == POS_INF:
                down = NEG_INF
            else:
                taubar_next = grid.taubar[x] if x < K else 0
                down = taubar_next + t_ref(n - abar, x + 1)
            cur[x] = max(floor, up, down)
        return cur[x]

    row = [resolve(x) for x in range(K + 1)]
    if field.times:
        if any(r < p for r, p in zip(row, field.times[-1])):
            raise InvariantViolation(f"passage times decreased at n = {n}")
    field.times.append(row)
    return field


def run_times(grid: SegmentGrid, arrivals: Sequence[int], n_max: int) -> TimeField:
    _check_arrivals(arrivals)
    f = TimeField(grid, arrival_times(arrivals, n_max))
    for n in range(1, n_max + 1):
        step_time(f, grid, n)
    return f


def car_budget(grid: SegmentGrid, arrivals: Sequence[int]) -> int:
    """Upper bound on the crossings any boundary can see."""
    return (arrivals[-1] if arrivals else 0) + sum(grid.a)


def counts_from_times(tf: TimeField, horizon: int) -> np.ndarray:
    """``#{m : t(m, x) <= t}`` for ``t = 0..horizon``."""
    times = tf.as_array()
    ts = np.arange(horizon + 1)[:, None, None]
    return (times[None, :, :] <= ts).sum(axis=1)


def duality_check(grid: SegmentGrid, arrivals: Sequence[int], horizon: int) -> int:
    """Largest ``|n(t, x) - #{m : t(m, x) <= t}|`` over ``t <= horizon`` and all ``x``."""
    counts = run_counts(grid, arrivals, horizon).as_array()
    tf = run_times(grid, arrivals, car_budget(grid, arrivals))
    if not tf.times:
        return int(np.max(np.abs(counts)))
    return int(np.max(np.abs(counts - counts_from_times(tf, horizon))))


@dataclass(frozen=True)
class DualInstance:
    grid: SegmentGrid
    arrivals: tuple[int, ...]
    horizon: int

    @classmethod
    def from_dict(cls, doc: dict) -> "DualInstance":
        try:
            grid = SegmentGrid.from_segments(doc["segments"], bool(doc.get("exit_open", True)))
            arrivals = tuple(int(v) for v in doc.get("arrivals", []))
            horizon = int(doc["horizon"])
        except (KeyError, TypeError) as exc:
            raise DualError(f"malformed instance: {exc}") from exc
        if horizon < 0:
            raise DualError("horizon must be >= 0")
        _check_arrivals(arrivals)
        return cls(grid, arrivals, horizon)

    def to_dict(self) -> dict:
        g = self.grid
        return {
            "segments": [{"a": g.a[i], "c": g.c[i], "tau": g.tau[i], "taubar": g.taubar[i]}
                         for i in range(g.K)],
            "arrivals": list(self.arrivals),
            "horizon": self.horizon,
            "exit_open": g.exit_open,
        }


def random_instance(rng: random.Random, max_segments: int = 5, max_horizon: int = 30,
                    max_cars: int = 4) -> DualInstance:
    """Small random road for invariant sweeps."""
    K = rng.randint(1, max_segments)
    c = [rng.randint(1, 3) for _ in range(K)]
    a = [0] * K
    for _ in range(rng.randint(0, max_cars)):
        free = [i for i in range(K) if a[i] < c[i]]
        if free:
            a[rng.choice(free)] += 1
    tau = [rng.randint(1, 3) for _ in range(K)]
    taubar = [rng.randint(0, 3) for _ in range(K)]
    horizon = rng.randint(1, max_horizon)
    arrivals, total = [], 0
    budget = rng.randint(0, max_cars)
    for _ in range(horizon + 1):
        if total < budget and rng.random() < 0.4:
            total += 1
        arrivals.append(total)
    grid = SegmentGrid(tuple(a), tuple(c), tuple(tau), tuple(taubar), exit_open=rng.random() < 0.8)
    return DualInstance(grid, tuple(arrivals), horizon)


def load_instance(path) -> DualInstance:
    with open(path) as fh:
        return DualInstance.from_dict(json.load(fh))
