"""Best-response providers: closed-form expressions or numeric argmax."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .expr import Expression, evaluate
from .game import StrategicGame, bindings, bindings_array, payoff, payoff_array

__all__ = [
    "ClosedForm", "NumericArgmax", "ArgmaxConfig", "BestResponseSpec",
    "closed_form_br", "numeric_argmax_br", "best_response", "br_map", "golden_section_max",
]

INV_PHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class ArgmaxConfig:
    grid_points: int = 1001
    refine_iters: int = 60
    tie_tol: float = 1e-12

    def __post_init__(self):
        if self.grid_points < 2:
            raise ValueError("grid_points must be ≥ 2")
        if self.refine_iters < 0:
            raise ValueError("refine_iters must be ≥ 0")


@dataclass(frozen=True)
class ClosedForm:
    expression: Expression


@dataclass(frozen=True)
class NumericArgmax:
    pass


Mode = Union[ClosedForm, NumericArgmax]


@dataclass(frozen=True)
class BestResponseSpec:
    modes: tuple[Mode, ...]
    argmax: ArgmaxConfig = field(default_factory=ArgmaxConfig)

    @classmethod
    def for_game(cls, g: StrategicGame, prefer: str = "closed_form",
                 argmax: ArgmaxConfig | None = None) -> "BestResponseSpec":
        """Closed form wherever the game supplies one (unless ``prefer='argmax'``)."""
        if prefer not in ("closed_form", "argmax"):
            raise ValueError(f"unknown preference {prefer!r}")
        modes = []
        for p in g.players:
            if prefer == "closed_form" and p.best_response is not None:
                modes.append(ClosedForm(p.best_response))
            else:
                modes.append(NumericArgmax())
        spec = cls(tuple(modes), argmax or ArgmaxConfig())
        spec.check(g)
        return spec

    def check(self, g: StrategicGame) -> None:
        if len(self.modes) != g.n:
            raise ValueError(f"{len(self.modes)} best-response modes for {g.n} players")
        for i, (mode, p) in enumerate(zip(self.modes, g.players), start=1):
            if isinstance(mode, NumericArgmax) and not (
                    math.isfinite(p.lower) and math.isfinite(p.upper)):
                raise ValueError(f"numeric argmax for player {i} needs a finite action interval")

    def describe(self) -> list[str]:
        return ["closed_form" if isinstance(m, ClosedForm) else "argmax" for m in self.modes]


def _clamp(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


def closed_form_br(g: StrategicGame, spec: BestResponseSpec, a: Sequence[float], i: int) -> float:
    mode = spec.modes[i - 1]
    if not isinstance(mode, ClosedForm):
        raise ValueError(f"player {i} has no closed-form best response")
    return _clamp(evaluate(mode.expression, bindings(g, a)), *g.bounds(i))


def golden_section_max(f, lo: float, hi: float, iters: int) -> tuple[float, float]:
    """Run ``iters`` golden-section steps on ``[lo, hi]``; return the best (x, f(x)) probed."""
    if iters == 0 or hi <= lo:
        return lo, f(lo)
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(iters - 1):
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def numeric_argmax_br(g: StrategicGame, a: Sequence[float], i: int,
                      config: ArgmaxConfig = ArgmaxConfig()) -> float:
    """Grid scan over player ``i``'s interval, then golden-section refinement.

    The scan picks the lowest grid action within ``tie_tol`` of the best grid
    payoff. Refinement searches the two neighbouring cells and replaces the
    grid choice only when strictly better by more than ``tie_tol``.
    """
    lo, hi = g.bounds(i)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError(f"numeric argmax for player {i} needs a finite action interval")
    if lo == hi:
        return lo
    m = config.grid_points
    xs = lo + (hi - lo) * (np.arange(m) / (m - 1))
    xs[-1] = hi
    columns = [float(x) for x in a]
    columns[i - 1] = xs
    u = payoff_array(g, bindings_array(g, columns), i)
    k = int(np.flatnonzero(u >= u.max() - config.tie_tol)[0])
    best_x, best_u = float(xs[k]), float(u[k])

    if config.refine_iters:
        trial = list(map(float, a))

        def f(x):
            trial[i - 1] = x
            return payoff(g, trial, i)

        rx, ru = golden_section_max(f, float(xs[max(k - 1, 0)]), float(xs[min(k + 1, m - 1)]),
                                    config.refine_iters)
        if ru > best_u + config.tie_tol:
            best_x = rx
    return best_x


def best_response(g: StrategicGame, spec: BestResponseSpec, a: Sequence[float], i: int) -> float:
    if isinstance(spec.modes[i - 1], ClosedForm):
        return closed_form_br(g, spec, a, i)
    return numeric_argmax_br(g, a, i, spec.argmax)


def br_map(g: StrategicGame, spec: BestResponseSpec, a: Sequence[float]) -> tuple[float, ...]:
    """Simultaneous best responses: every player reacts to the same profile ``a``."""
    a = tuple(a)
    return tuple(best_response(g, spec, a, i) for i in range(1, g.n + 1))
