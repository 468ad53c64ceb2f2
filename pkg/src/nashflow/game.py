"""Strategic games with one continuous scalar action per player.

Player ``i`` (1-based) chooses ``q<i>`` inside ``[lower, upper]``. Payoffs and
derived quantities ("lets", e.g. a market price) are expressions over the
actions ``q1..qn``, their total ``Q`` and previously defined lets.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .expr import EvaluationError, Expression, evaluate, evaluate_array, free_variables

__all__ = [
    "PlayerSpec", "DerivedLet", "StrategicGame", "GameError", "LetError", "ProfileError",
    "validate_game", "check_game", "check_profile", "bindings", "bindings_array",
    "payoff", "payoff_array", "action_names",
]

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


class GameError(ValueError):
    """A game definition that fails validation; ``defects`` lists every problem."""

    def __init__(self, defects: Sequence[str]):
        super().__init__("; ".join(defects))
        self.defects = list(defects)


class ProfileError(ValueError):
    pass


class LetError(EvaluationError):
    def __init__(self, let_name: str, cause: EvaluationError):
        super().__init__(f"in let {let_name}: {cause}")
        self.let_name = let_name
        self.cause = cause


@dataclass(frozen=True)
class PlayerSpec:
    payoff: Expression
    lower: float = 0.0
    upper: float = math.inf
    best_response: Expression | None = None


@dataclass(frozen=True)
class DerivedLet:
    name: str
    value: Expression


@dataclass(frozen=True)
class StrategicGame:
    name: str
    players: tuple[PlayerSpec, ...]
    lets: tuple[DerivedLet, ...] = ()
    description: str = field(default="", compare=False)

    @property
    def n(self) -> int:
        return len(self.players)

    def bounds(self, i: int) -> tuple[float, float]:
        p = self.players[i - 1]
        return p.lower, p.upper

    @property
    def finite_bounds(self) -> bool:
        return all(math.isfinite(p.lower) and math.isfinite(p.upper) for p in self.players)


def action_names(n: int) -> list[str]:
    return [f"q{i}" for i in range(1, n + 1)]


def validate_game(g: StrategicGame) -> list[str]:
    """Return every defect of ``g``; an empty list means the game is valid."""
    defects = []
    if g.n < 1:
        defects.append("n must be ≥ 1")
    reserved = set(action_names(g.n)) | {"Q"}
    known = set(reserved)
    seen = set()
    for let in g.lets:
        if not _IDENT.match(let.name):
            defects.append(f"let name {let.name!r} is not an identifier")
        if let.name in seen:
            defects.append(f"duplicate let {let.name}")
        elif let.name in reserved:
            defects.append(f"let {let.name} shadows an action variable")
        for name in sorted(free_variables(let.value) - known):
            if name == let.name or name in {l.name for l in g.lets}:
                defects.append(f"let {let.name} references {name} before it is defined")
            else:
                defects.append(f"unbound variable {name} in let {let.name}")
        seen.add(let.name)
        known.add(let.name)

    for i, p in enumerate(g.players, start=1):
        if math.isnan(p.lower) or math.isnan(p.upper):
            defects.append(f"player {i} has a NaN action bound")
        elif p.lower > p.upper:
            defects.append(f"player {i} has action_lower > action_upper")
        elif p.lower == math.inf or p.upper == -math.inf:
            defects.append(f"player {i} has an empty action interval")
        for name in sorted(free_variables(p.payoff) - known):
            defects.append(f"unbound variable {name} in payoff of player {i}")
        if p.best_response is not None:
            for name in sorted(free_variables(p.best_response) - known):
                defects.append(f"unbound variable {name} in best response of player {i}")
    return defects


def check_game(g: StrategicGame) -> StrategicGame:
    defects = validate_game(g)
    if defects:
        raise GameError(defects)
    return g


def check_profile(g: StrategicGame, a: Sequence[float]) -> tuple[float, ...]:
    """Coerce ``a`` to a tuple of floats, raising ProfileError if it is not a valid profile."""
    a = tuple(float(x) for x in a)
    if len(a) != g.n:
        raise ProfileError(f"profile has {len(a)} entries, game {g.name!r} has {g.n} players")
    for i, (x, p) in enumerate(zip(a, g.players), start=1):
        if not math.isfinite(x):
            raise ProfileError(f"action of player {i} is not finite: {x}")
        if not p.lower <= x <= p.upper:
            raise ProfileError(f"action of player {i} = {x} outside [{p.lower}, {p.upper}]")
    return a


def _total(values):
    total = values[0]
    for v in values[1:]:
        total = total + v
    return total


def bindings(g: StrategicGame, a: Sequence[float]) -> dict[str, float]:
    b = dict(zip(action_names(g.n), map(float, a)))
    b["Q"] = _total(list(b.values()))
    for let in g.lets:
        try:
            b[let.name] = evaluate(let.value, b)
        except EvaluationError as err:
            raise LetError(let.name, err) from err
    return b


def bindings_array(g: StrategicGame, columns: Sequence[np.ndarray]) -> dict[str, np.ndarray]:
    """Like :func:`bindings` but each action is a (broadcastable) array."""
    b = {name: np.asarray(c, dtype=float) for name, c in zip(action_names(g.n), columns)}
    b["Q"] = _total(list(b.values()))
    for let in g.lets:
        try:
            b[let.name] = evaluate_array(let.value, b)
        except EvaluationError as err:
            raise LetError(let.name, err) from err
    return b


def payoff(g: StrategicGame, a: Sequence[float], i: int) -> float:
    return evaluate(g.players[i - 1].payoff, bindings(g, a))


def payoff_array(g: StrategicGame, b: Mapping[str, np.ndarray], i: int) -> np.ndarray:
    """Player ``i``'s payoff over precomputed array bindings (see :func:`bindings_array`)."""
    return evaluate_array(g.players[i - 1].payoff, b)
