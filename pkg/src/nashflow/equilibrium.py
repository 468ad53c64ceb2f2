"""Equilibrium certificates and brute-force grid enumeration."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .basin import Cluster, cluster_limit_points
from .bestresponse import ArgmaxConfig, BestResponseSpec, br_map, numeric_argmax_br
from .dynamics import Converged, Outcome
from .game import StrategicGame, bindings_array, check_profile, payoff, payoff_array

__all__ = [
    "EquilibriumCertificate", "GridEnumeration", "NotComputableError", "GridTooLargeError",
    "fixed_point_residual", "epsilon_nash_residual", "certify", "certify_converged_point",
    "enumerate_grid", "grid_axis",
]

DEFAULT_GRID_CAP = 10**7


class NotComputableError(ValueError):
    pass


class GridTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class EquilibriumCertificate:
    """Residuals attached to a profile. It never claims an exact equilibrium."""
    profile: tuple[float, ...]
    fixed_point_residual: float
    epsilon_nash_residual: float | None  # None: not computable (infinite bounds)
    br_sources: tuple[str, ...]
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "profile": list(self.profile),
            "fixed_point_residual": self.fixed_point_residual,
            "epsilon_nash_residual": self.epsilon_nash_residual,
            "br_sources": list(self.br_sources),
            "notes": list(self.notes),
        }


def fixed_point_residual(g: StrategicGame, spec: BestResponseSpec, a: Sequence[float]) -> float:
    a = check_profile(g, a)
    return max(abs(b - x) for b, x in zip(br_map(g, spec, a), a))


def epsilon_nash_residual(g: StrategicGame, a: Sequence[float],
                          config: ArgmaxConfig = ArgmaxConfig()) -> float:
    """Largest payoff gain from a unilateral deviation to the numeric argmax, floored at 0."""
    if not g.finite_bounds:
        raise NotComputableError("epsilon-Nash residual needs finite action bounds")
    a = check_profile(g, a)
    worst = 0.0
    for i in range(1, g.n + 1):
        dev = list(a)
        dev[i - 1] = numeric_argmax_br(g, a, i, config)
        worst = max(worst, payoff(g, dev, i) - payoff(g, a, i))
    return worst


def certify(g: StrategicGame, spec: BestResponseSpec, a: Sequence[float],
            config: ArgmaxConfig | None = None) -> EquilibriumCertificate:
    config = config or spec.argmax
    a = check_profile(g, a)
    fp = fixed_point_residual(g, spec, a)
    notes = []
    try:
        eps = epsilon_nash_residual(g, a, config)
    except NotComputableError as err:
        eps = None
        notes.append(str(err))
    if eps is not None and fp <= 1e-6 and eps > 1e-3:
        notes.append("profile is a best-response fixed point but a unilateral deviation "
                     "gains payoff: the supplied best response is not a payoff maximiser")
    return EquilibriumCertificate(a, fp, eps, tuple(spec.describe()), tuple(notes))


def certify_converged_point(g: StrategicGame, spec: BestResponseSpec, outcome: Outcome,
                            config: ArgmaxConfig | None = None) -> EquilibriumCertificate | None:
    if not isinstance(outcome, Converged):
        return None
    return certify(g, spec, outcome.profile, config)


@dataclass(frozen=True)
class GridEnumeration:
    step: float
    eps: float
    axes: tuple[tuple[float, ...], ...]
    accepted: tuple[tuple[float, ...], ...]  # lexicographic order
    gains: tuple[float, ...]  # best grid-deviation gain of each accepted profile
    clusters: tuple[Cluster, ...] = field(default=())

    @property
    def grid_size(self) -> int:
        return math.prod(len(ax) for ax in self.axes)


def grid_axis(lo: float, hi: float, step: float) -> np.ndarray:
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count)


def enumerate_grid(g: StrategicGame, step: float, eps: float = 1e-9,
                   lower: Sequence[float] | float | None = None,
                   upper: Sequence[float] | float | None = None,
                   cap: int = DEFAULT_GRID_CAP) -> GridEnumeration:
    """Every grid profile from which no player gains more than ``eps`` by moving
    to another grid action. ``lower``/``upper`` override the game's bounds."""
    if step <= 0:
        raise ValueError("grid step must be positive")

    def per_player(v, default):
        if v is None:
            return default
        if isinstance(v, (int, float)):
            return [float(v)] * g.n
        return [float(x) for x in v]

    los = per_player(lower, [p.lower for p in g.players])
    his = per_player(upper, [p.upper for p in g.players])
    if not all(math.isfinite(x) for x in los + his):
        raise NotComputableError("finite bounds required")
    axes = []
    for i, (lo, hi) in enumerate(zip(los, his), start=1):
        plo, phi = g.bounds(i)
        if lo < plo or hi > phi or lo > hi:
            raise ValueError(f"grid range [{lo}, {hi}] for player {i} not within [{plo}, {phi}]")
        axes.append(grid_axis(lo, hi, step))
    size = math.prod(len(ax) for ax in axes)
    if size > cap:
        raise GridTooLargeError(f"grid of {size} profiles exceeds cap {cap}")

    shape = tuple(len(ax) for ax in axes)
    columns = []
    for i, ax in enumerate(axes):
        view = [1] * g.n
        view[i] = len(ax)
        columns.append(ax.reshape(view))
    b = bindings_array(g, columns)
    gain = np.zeros(shape)
    for i in range(1, g.n + 1):
        u = np.broadcast_to(payoff_array(g, b, i), shape)
        gain = np.maximum(gain, u.max(axis=i - 1, keepdims=True) - u)

    idx = np.argwhere(gain <= eps)
    accepted = [tuple(float(axes[j][k]) for j, k in enumerate(row)) for row in idx]
    clusters = cluster_limit_points(accepted, radius=1.0, coords=idx) if accepted else []
    return GridEnumeration(
        step=step, eps=eps,
        axes=tuple(tuple(float(x) for x in ax) for ax in axes),
        accepted=tuple(accepted),
        gains=tuple(float(gain[tuple(row)]) for row in idx),
        clusters=tuple(clusters),
    )
