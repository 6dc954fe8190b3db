"""Car dynamics on a one-lane ring road without passing.

Positions are cumulative distances, never wrapped; the ring only shows up
in the headway of car 1, which follows car ``nu`` shifted by one lap::

    y_1 = x_nu + mu - x_1,    y_n = x_{n-1} - x_n  (n >= 2)

Each step moves every car by the law evaluated at its headway. This is
the matrix form ``min_u max_w (M^uw x + c^uw)`` without building the
``nu x nu`` matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .csvout import write_rows
from .pwl_law import PwlLaw, check_connected, evaluate


@dataclass(frozen=True)
class RingConfig:
    nu: int
    mu: float

    def __post_init__(self):
        if int(self.nu) != self.nu or self.nu < 1:
            raise ValueError(f"car count must be a positive integer, got {self.nu}")
        if not self.mu > 0:
            raise ValueError(f"ring length must be positive, got {self.mu}")

    @property
    def density(self) -> float:
        return self.nu / self.mu

    @property
    def mean_headway(self) -> float:
        return self.mu / self.nu


@dataclass(frozen=True)
class RingState:
    positions: np.ndarray
    time_step: int = 0

    def __post_init__(self):
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=float))


def headways(positions: np.ndarray, mu: float) -> np.ndarray:
    x = np.asarray(positions, dtype=float)
    y = np.empty_like(x)
    y[1:] = x[:-1] - x[1:]
    y[0] = x[-1] + mu - x[0]
    return y


def uniform_state(config: RingConfig, noise: float = 0.0, seed: int = 0) -> RingState:
    """Equally spaced cars, car 1 at 0, optionally jittered by U(-noise, noise)."""
    x = config.mean_headway * -np.arange(config.nu, dtype=float) + 0.0  # no -0.0 for car 1
    if noise:
        rng = np.random.default_rng(seed)
        x = x + rng.uniform(-noise, noise, size=config.nu)
    return RingState(x, 0)


def step_ring(state: RingState, law: PwlLaw, config: RingConfig) -> RingState:
    if state.positions.shape != (config.nu,):
        raise ValueError(f"expected {config.nu} positions, got {state.positions.shape}")
    x = state.positions
    return RingState(x + evaluate(law, headways(x, config.mu)), state.time_step + 1)


def simulate_ring(state0: RingState, law: PwlLaw, config: RingConfig, horizon: int) -> list[RingState]:
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    traj = [state0]
    for _ in range(horizon):
        traj.append(step_ring(traj[-1], law, config))
    return traj


def growth_rate(trajectory) -> np.ndarray:
    """Finite-horizon estimate ``(x(T) - x(0)) / T`` of the average growth rate."""
    if len(trajectory) < 2:
        raise ValueError("growth rate needs at least two states")
    first, last = trajectory[0], trajectory[-1]
    span = last.time_step - first.time_step
    return (last.positions - first.positions) / span


def find_expansion_witness(law: PwlLaw, config: RingConfig, trials: int,
                           seed: int = 0, tol: float = 1e-12) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """Search random state pairs for one the step map pulls apart in sup-norm.

    Half the trials perturb all coordinates, half a single one; the single
    coordinate kicks are what expose slopes above 1.
    """
    rng = np.random.default_rng(seed)
    for k in range(trials):
        x1 = uniform_state(config).positions + rng.uniform(-0.5, 0.5, config.nu) * config.mean_headway
        if k % 2:
            delta = np.zeros(config.nu)
            delta[rng.integers(config.nu)] = rng.uniform(-1.0, 1.0)
        else:
            delta = rng.uniform(-1.0, 1.0, config.nu)
        x2 = x1 + delta
        f1 = step_ring(RingState(x1), law, config).positions
        f2 = step_ring(RingState(x2), law, config).positions
        if np.max(np.abs(f2 - f1)) > np.max(np.abs(x2 - x1)) + tol:
            return x1, x2
    return None


def check_nonexpansive_empirical(law: PwlLaw, config: RingConfig, trials: int, seed: int = 0) -> bool:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    return find_expansion_witness(law, config, trials, seed) is None


def connectedness(law: PwlLaw) -> bool:
    return check_connected(law)


def write_trajectory_csv(path, trajectory, mu: Optional[float] = None):
    """Write ``t,x_1..x_nu`` rows, or ``t,y_1..y_nu`` ring headways when ``mu`` is given."""
    nu = len(trajectory[0].positions)
    name = "x" if mu is None else "y"
    header = ["t"] + [f"{name}_{n}" for n in range(1, nu + 1)]
    rows = ([s.time_step, *(s.positions if mu is None else headways(s.positions, mu))]
            for s in trajectory)
    return write_rows(path, header, rows)
