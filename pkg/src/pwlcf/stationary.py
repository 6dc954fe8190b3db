"""Stationary regimes on the ring: additive eigenpairs and fundamental diagrams."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .pwl_law import DiagramPoint, PwlLaw, check_stability, evaluate, flow_diagram
from .ring_dynamics import RingConfig, growth_rate, headways, simulate_ring, uniform_state


class StabilityError(ValueError):
    """The law has a slope outside [0, 1], so the closed-form regime does not apply."""


@dataclass(frozen=True)
class EigenPair:
    v_bar: float
    x: np.ndarray


def eigen_solution_ring(law: PwlLaw, config: RingConfig) -> EigenPair:
    """Uniform stationary regime: headway ``mu / nu``, speed ``law(mu / nu)``.

    The profile has car 1 at 0 and each follower one headway behind its
    leader, ``x = (0, -y, -2y, ..., -(nu-1)y)``.
    """
    if not check_stability(law):
        raise StabilityError("stability condition alpha in [0,1] violated")
    y_bar = config.mean_headway
    return EigenPair(v_bar=evaluate(law, y_bar), x=y_bar * -np.arange(config.nu, dtype=float) + 0.0)


def eigen_residual(law: PwlLaw, config: RingConfig, pair: EigenPair) -> float:
    """max_n |v + x_n - (x_n + law(y_n(x)))|, with the ``x_n`` terms cancelled."""
    x = np.asarray(pair.x, dtype=float)
    if x.shape != (config.nu,):
        raise ValueError(f"profile must have {config.nu} entries")
    return float(np.max(np.abs(pair.v_bar - evaluate(law, headways(x, config.mu)))))


def speed_diagram(law: PwlLaw, headway_grid: Sequence[float]) -> list[DiagramPoint]:
    ys = np.asarray(headway_grid, dtype=float)
    if np.any(ys <= 0):
        raise ValueError("stationary headways must be positive")
    vs = np.atleast_1d(evaluate(law, ys))
    return [DiagramPoint(float(y), float(v), 1.0 / y, v / y) for y, v in zip(ys, vs)]


def empirical_flow(law: PwlLaw, rho: float, nu: int, horizon: int,
                   noise: float = 0.0, seed: int = 0) -> float:
    if rho <= 0:
        raise ValueError("density must be positive")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    config = RingConfig(nu, nu / rho)
    traj = simulate_ring(uniform_state(config, noise, seed), law, config, horizon)
    return rho * float(np.mean(growth_rate(traj)))


def empirical_diagram(law: PwlLaw, densities: Sequence[float], nu: int, horizon: int,
                      noise: float = 0.0, seed: int = 0) -> list[tuple[float, float]]:
    """Simulated ``(rho, q)`` pairs, one ring run per density."""
    return [(float(r), empirical_flow(law, r, nu, horizon, noise, seed)) for r in densities]


def diagram_table(law: PwlLaw, densities: Sequence[float], nu: int | None = None,
                  horizon: int | None = None, noise: float = 0.0, seed: int = 0) -> list[tuple]:
    """Rows ``(rho, q_model[, q_empirical])`` for export."""
    rows = []
    for r in densities:
        row = [float(r), flow_diagram(law, r)]
        if nu is not None:
            # an empty ring has no trajectory to measure
            row.append(empirical_flow(law, r, nu, horizon, noise, seed) if r > 0 else float("nan"))
        rows.append(tuple(row))
    return rows
