"""Piecewise-linear behavioral laws.

A law is a min over groups of a max over affine pieces::

    V(y) = min_u max_w (alpha_uw * y + beta_uw)

Units follow the traffic example: the time step is half a second and
distances are in meters, so speeds are meters per step.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

TOL = 1e-9

UNITS = {"time": "0.5s", "distance": "m"}


class LawError(ValueError):
    """Raised for malformed laws or invalid fitting input."""


@dataclass(frozen=True)
class AffinePiece:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise LawError(f"non-finite piece ({self.alpha}, {self.beta})")

    def __call__(self, y):
        return self.alpha * y + self.beta


@dataclass(frozen=True)
class DiagramPoint:
    y_bar: float
    v_bar: float
    rho_bar: float
    q_bar: float


@dataclass(frozen=True)
class PwlLaw:
    """Immutable min-max affine law.

    ``groups[u][w]`` is the piece with group index ``u`` (minimized over)
    and piece index ``w`` (maximized over within the group).
    """

    groups: tuple[tuple[AffinePiece, ...], ...]
    _alpha: np.ndarray = field(init=False, repr=False, compare=False)
    _beta: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        groups = tuple(
            tuple(p if isinstance(p, AffinePiece) else AffinePiece(*p) for p in g)
            for g in self.groups
        )
        if not groups:
            raise LawError("a law needs at least one group")
        if any(len(g) == 0 for g in groups):
            raise LawError("every group must hold at least one piece")
        object.__setattr__(self, "groups", groups)
        width = max(len(g) for g in groups)
        # padding pieces are -inf so they never win a max
        alpha = np.zeros((len(groups), width))
        beta = np.full((len(groups), width), -np.inf)
        for u, g in enumerate(groups):
            for w, p in enumerate(g):
                alpha[u, w] = p.alpha
                beta[u, w] = p.beta
        object.__setattr__(self, "_alpha", alpha)
        object.__setattr__(self, "_beta", beta)

    @classmethod
    def from_groups(cls, groups: Iterable[Iterable[Sequence[float]]]) -> "PwlLaw":
        return cls(tuple(tuple(AffinePiece(float(a), float(b)) for a, b in g) for g in groups))

    def __call__(self, y):
        return evaluate(self, y)

    @property
    def pieces(self) -> list[AffinePiece]:
        return [p for g in self.groups for p in g]

    @property
    def is_pure_min(self) -> bool:
        return all(len(g) == 1 for g in self.groups)

    def to_dict(self) -> dict:
        return {
            "groups": [[{"alpha": p.alpha, "beta": p.beta} for p in g] for g in self.groups],
            "units": dict(UNITS),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PwlLaw":
        try:
            groups = [[(p["alpha"], p["beta"]) for p in g] for g in doc["groups"]]
        except (KeyError, TypeError) as exc:
            raise LawError(f"malformed law document: {exc}") from exc
        return cls.from_groups(groups)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "PwlLaw":
        return cls.from_dict(json.loads(text))


def evaluate(law: PwlLaw, y):
    """Speed chosen at headway ``y``; scalar in, float out, array in, array out."""
    y_arr = np.asarray(y, dtype=float)
    vals = law._alpha.reshape(law._alpha.shape + (1,) * y_arr.ndim) * y_arr + \
        law._beta.reshape(law._beta.shape + (1,) * y_arr.ndim)
    out = vals.max(axis=1).min(axis=0)
    if y_arr.ndim == 0:
        return float(out)
    return out


def argmin_argmax(law: PwlLaw, y: float) -> tuple[int, int]:
    """Lowest-index ``(u, w)`` whose piece attains the law's value at ``y``."""
    group_max = [max(p(y) for p in g) for g in law.groups]
    u = int(np.argmin(group_max))
    w = int(np.argmax([p(y) for p in law.groups[u]]))
    return u, w


def from_min_pieces(pieces: Sequence[AffinePiece | Sequence[float]]) -> PwlLaw:
    if len(pieces) == 0:
        raise LawError("need at least one piece")
    return PwlLaw(tuple((p if isinstance(p, AffinePiece) else AffinePiece(*p),) for p in pieces))


def min_plus_law(v0: float, sigma: float) -> PwlLaw:
    """The min-plus model: move ``v0`` in free flow, keep ``sigma`` behind the leader."""
    return from_min_pieces([(0.0, v0), (1.0, -sigma)])


TABLE_ALPHA = (0.0, 0.54, 0.32, 0.13, 0.34, 0.0)
TABLE_BETA = (0.0, -8.1, -1.47, 6.11, 10.6, 14.0)


def table_law() -> PwlLaw:
    """Six-segment approximation ``max{s1, min{s2, ..., s6}}`` of the Kerner law.

    Stored in min-max form by distributing the outer max:
    ``min_k max{s1, s_k}`` for k = 2..6.
    """
    segs = [AffinePiece(a, b) for a, b in zip(TABLE_ALPHA, TABLE_BETA)]
    return PwlLaw(tuple((segs[0], s) for s in segs[1:]))


def kerner_law(y, v0: float = 14.0, gamma: float = 7.5):
    """Kerner-Konhauser equilibrium speed, including the small 5.34e-9 offset."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        v = v0 * (1.0 / (1.0 + np.exp(1000.0 / (gamma * y) - 10.0 / 2.1)) - 5.34e-9)
    return float(v) if v.ndim == 0 else v


def flow_diagram(law: PwlLaw, rho):
    """Stationary flow at density ``rho``: min_u max_w (alpha + beta * rho)."""
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(rho_arr < 0):
        raise LawError("density must be nonnegative")
    shape = (1,) * rho_arr.ndim
    a = law._alpha.reshape(law._alpha.shape + shape)
    b = law._beta.reshape(law._beta.shape + shape)
    # padded pieces: alpha 0, beta -inf; guard 0 * -inf at rho = 0
    with np.errstate(invalid="ignore"):
        vals = np.where(np.isinf(b), -np.inf, a + b * rho_arr)
    out = vals.max(axis=1).min(axis=0)
    return float(out) if rho_arr.ndim == 0 else out


def check_stability(law: PwlLaw) -> bool:
    return all(0.0 <= p.alpha <= 1.0 for p in law.pieces)


def check_connected(law: PwlLaw) -> bool:
    return any(0.0 < p.alpha <= 1.0 for p in law.pieces)


def shape_bound_check(law: PwlLaw, v0: float, y_j: float, grid, tol: float = TOL) -> bool:
    """True iff ``law(y) <= max(0, min(v0, y - y_j))`` on every grid point."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise LawError("empty grid")
    bound = np.maximum(0.0, np.minimum(v0, grid - y_j))
    return bool(np.all(evaluate(law, grid) <= bound + tol))


def jam_headway(law: PwlLaw, hi: float, lo: float = 0.0, tol: float = 1e-12) -> float:
    """Largest headway in ``[lo, hi]`` where a nondecreasing law still gives speed <= 0."""
    if evaluate(law, lo) > 0.0:
        return lo
    if evaluate(law, hi) <= 0.0:
        return hi
    while hi - lo > tol * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if evaluate(law, mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def upper_concave_hull(y, v) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of the upper concave envelope of the points, sorted by y.

    Repeated abscissae keep only their largest ordinate.
    """
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    order = np.lexsort((-v, y))
    ys, vs = y[order], v[order]
    keep = np.r_[True, np.diff(ys) > 0]
    ys, vs = ys[keep], vs[keep]

    hull: list[tuple[float, float]] = []
    for p in zip(ys, vs):
        while len(hull) >= 2:
            (y0, v0), (y1, v1) = hull[-2], hull[-1]
            # drop the middle point unless it is strictly above the chord
            if (y1 - y0) * (p[1] - v0) - (v1 - v0) * (p[0] - y0) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    hy, hv = zip(*hull)
    return np.array(hy), np.array(hv)


def fit_concave(samples: Sequence[tuple[float, float]], piece_count: int) -> PwlLaw:
    """Pure-min concave law made of supporting lines of the samples' upper envelope.

    One supporting line is taken at each of ``piece_count`` evenly spaced
    abscissae across the sample range (the hull edge covering the midpoint
    of each sub-interval). When several midpoints share an edge, the free
    slots go greedily to the unused edge that most reduces the largest gap
    to the envelope. Every returned line supports the envelope, so the law
    is never below it.
    """
    if piece_count < 1:
        raise LawError("piece_count must be >= 1")
    arr = np.asarray(samples, dtype=float).reshape(-1, 2)
    if len(np.unique(arr[:, 0])) < 2:
        raise LawError("need at least two samples with distinct headways")
    hy, hv = upper_concave_hull(arr[:, 0], arr[:, 1])
    slopes = np.diff(hv) / np.diff(hy)
    intercepts = hv[:-1] - slopes * hy[:-1]
    n_edges = len(slopes)

    lo, hi = hy[0], hy[-1]
    centers = lo + (np.arange(piece_count) + 0.5) * (hi - lo) / piece_count
    chosen = sorted(set(np.clip(np.searchsorted(hy, centers, side="right") - 1, 0, n_edges - 1).tolist()))

    def gap(edges):
        law_v = np.min(slopes[edges][:, None] * hy + intercepts[edges][:, None], axis=0)
        return law_v - hv

    while len(chosen) < min(piece_count, n_edges):
        g = gap(chosen)
        worst = int(np.argmax(g))
        candidates = [e for e in (worst - 1, worst) if 0 <= e < n_edges and e not in chosen]
        if not candidates:
            candidates = [e for e in range(n_edges) if e not in chosen]
        best = min(candidates, key=lambda e: (gap(sorted(chosen + [e])).max(), e))
        chosen = sorted(chosen + [best])

    return from_min_pieces([AffinePiece(float(slopes[e]), float(intercepts[e])) for e in chosen])


def fit_report(law: PwlLaw, samples) -> dict:
    arr = np.asarray(samples, dtype=float).reshape(-1, 2)
    hy, hv = upper_concave_hull(arr[:, 0], arr[:, 1])
    fitted = evaluate(law, arr[:, 0])
    envelope = np.interp(arr[:, 0], hy, hv)
    return {
        "pieces": len(law.pieces),
        "sup_error": float(np.max(np.abs(fitted - arr[:, 1]))),
        "envelope_sup_error": float(np.max(np.abs(fitted - envelope))),
        "concave": law.is_pure_min,
        "stable": check_stability(law),
    }


def diagram_point(law: PwlLaw, y_bar: float) -> DiagramPoint:
    v = evaluate(law, y_bar)
    return DiagramPoint(y_bar=y_bar, v_bar=v, rho_bar=1.0 / y_bar, q_bar=v / y_bar)
