"""Iterated best-response dynamics and trajectory classification."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .bestresponse import BestResponseSpec, best_response, br_map
from .expr import EvaluationError
from .game import StrategicGame, bindings, check_profile

__all__ = [
    "UpdateRule", "StopCriteria", "Trajectory", "Converged", "Cycle", "Diverged",
    "MaxStepsExceeded", "Outcome", "SimulationError", "step", "simulate", "detect_cycle",
]


@dataclass(frozen=True)
class UpdateRule:
    mode: str = "simultaneous"  # or "sequential" (ascending player id)
    alpha: float = 1.0

    def __post_init__(self):
        if self.mode not in ("simultaneous", "sequential"):
            raise ValueError(f"unknown update mode {self.mode!r}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("relaxation alpha must lie in (0, 1]")


@dataclass(frozen=True)
class StopCriteria:
    eps_converge: float = 1e-9
    stable_steps: int = 3
    max_steps: int = 10_000
    divergence_threshold: float = 1e9
    cycle_window: int = 64
    cycle_eps: float = 1e-7

    def __post_init__(self):
        if min(self.eps_converge, self.divergence_threshold, self.cycle_eps) <= 0:
            raise ValueError("tolerances must be positive")
        if self.stable_steps < 1:
            raise ValueError("stable_steps must be ≥ 1")
        if self.cycle_window < 2:
            raise ValueError("cycle_window must be ≥ 2")
        if self.max_steps < 0:
            raise ValueError("max_steps must be ≥ 0")


@dataclass
class Trajectory:
    """Profiles from step 0 onward, plus ``Q`` and every let at each step."""
    derived_names: list[str]
    profiles: list[tuple[float, ...]] = field(default_factory=list)
    derived: list[tuple[float, ...]] = field(default_factory=list)

    def __len__(self):
        return len(self.profiles)

    def series(self, name: str) -> list[float]:
        k = self.derived_names.index(name)
        return [row[k] for row in self.derived]


@dataclass(frozen=True)
class Converged:
    profile: tuple[float, ...]
    steps: int
    kind = "converged"


@dataclass(frozen=True)
class Cycle:
    period: int
    profiles: tuple[tuple[float, ...], ...]
    steps: int
    kind = "cycle"


@dataclass(frozen=True)
class Diverged:
    step: int
    kind = "diverged"


@dataclass(frozen=True)
class MaxStepsExceeded:
    profile: tuple[float, ...]
    kind = "max_steps"


Outcome = Union[Converged, Cycle, Diverged, MaxStepsExceeded]


class SimulationError(EvaluationError):
    def __init__(self, step: int, cause: Exception):
        super().__init__(f"evaluation failed at step {step}: {cause}")
        self.step = step
        self.cause = cause


def _clamp(x, lo, hi):
    return min(max(x, lo), hi)


def step(g: StrategicGame, spec: BestResponseSpec, a: Sequence[float],
         rule: UpdateRule = UpdateRule()) -> tuple[float, ...]:
    alpha = rule.alpha
    if rule.mode == "simultaneous":
        target = br_map(g, spec, a)
        if alpha == 1.0:
            return target
        return tuple(_clamp((1 - alpha) * x + alpha * b, *g.bounds(i))
                     for i, (x, b) in enumerate(zip(a, target), start=1))
    cur = list(a)
    for i in range(1, g.n + 1):
        b = best_response(g, spec, cur, i)
        cur[i - 1] = b if alpha == 1.0 else _clamp((1 - alpha) * cur[i - 1] + alpha * b,
                                                    *g.bounds(i))
    return tuple(cur)


def detect_cycle(history: np.ndarray, eps: float) -> int | None:
    """Smallest period ``p ≥ 2`` such that every one of the last ``2p`` rows matches the
    row ``p`` earlier within ``eps`` (∞-norm). Returns None when no period fits, or when
    period 1 fits (a near-stationary tail is left to the convergence test)."""
    n = len(history)
    for p in range(1, n // 3 + 1):
        recent = history[n - 2 * p:]
        earlier = history[n - 3 * p:n - p]
        if np.max(np.abs(recent - earlier)) <= eps:
            return None if p == 1 else p
    return None


def simulate(g: StrategicGame, spec: BestResponseSpec, initial: Sequence[float],
             rule: UpdateRule = UpdateRule(), stop: StopCriteria = StopCriteria(),
             ) -> tuple[Trajectory, Outcome]:
    """Iterate :func:`step` from ``initial`` until the trajectory is classified.

    Tests run in order after every step: divergence (∞-norm above the threshold),
    convergence (``stable_steps`` consecutive ∞-norm changes ≤ ``eps_converge``, or an
    exact fixed point), then a cycle over the last ``cycle_window`` profiles.
    """
    a = check_profile(g, initial)
    traj = Trajectory(["Q"] + [let.name for let in g.lets])

    def record(profile, t):
        try:
            b = bindings(g, profile)
        except EvaluationError as err:
            raise SimulationError(t, err) from err
        traj.profiles.append(profile)
        traj.derived.append(tuple(b[name] for name in traj.derived_names))

    record(a, 0)
    window = [a]
    stable = 0
    for t in range(1, stop.max_steps + 1):
        try:
            nxt = step(g, spec, a, rule)
        except EvaluationError as err:
            raise SimulationError(t, err) from err
        record(nxt, t)
        if max(abs(x) for x in nxt) > stop.divergence_threshold:
            return traj, Diverged(t)
        if nxt == a:
            return traj, Converged(a, t - 1)
        change = max(abs(x - y) for x, y in zip(nxt, a))
        stable = stable + 1 if change <= stop.eps_converge else 0
        if stable >= stop.stable_steps:
            return traj, Converged(nxt, t)
        window.append(nxt)
        if len(window) > stop.cycle_window:
            del window[0]
        period = detect_cycle(np.array(window), stop.cycle_eps)
        if period is not None:
            return traj, Cycle(period, tuple(window[-period:]), t)
        a = nxt
    return traj, MaxStepsExceeded(a)
