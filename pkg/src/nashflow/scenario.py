"""Scenario files: a game plus default run settings, stored as strict JSON."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any

from .dynamics import StopCriteria, UpdateRule
from .expr import ExprError, parse, to_source
from .game import DerivedLet, PlayerSpec, StrategicGame, validate_game

__all__ = ["Scenario", "ScenarioError", "BUILTINS", "load_scenario", "scenario_from_dict",
           "scenario_to_dict", "builtin_names"]

BUILTINS = ("monopoly", "cournot3", "cournot3-concave", "pollution")

_TOP_KEYS = {"name", "description", "players", "lets", "defaults", "initial"}
_PLAYER_KEYS = {"lower", "upper", "payoff", "best_response"}
_LET_KEYS = {"name", "expr"}
_RULE_KEYS = {"alpha", "mode"}
_STOP_KEYS = {f.name for f in fields(StopCriteria)}


class ScenarioError(ValueError):
    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        super().__init__("; ".join(problems))
        self.problems = list(problems)


@dataclass(frozen=True)
class Scenario:
    game: StrategicGame
    defaults: dict[str, Any] = field(default_factory=dict)
    initial: tuple[float, ...] | None = None

    @property
    def name(self) -> str:
        return self.game.name

    def rule(self, **overrides) -> UpdateRule:
        """Update rule: explicit overrides (None ignored) > scenario defaults > engine defaults."""
        kw = {k: v for k, v in self.defaults.items() if k in _RULE_KEYS}
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return UpdateRule(**kw)

    def stop(self, **overrides) -> StopCriteria:
        kw = {k: v for k, v in self.defaults.items() if k in _STOP_KEYS}
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return StopCriteria(**kw)


def _check_keys(obj, allowed, where, problems):
    if not isinstance(obj, dict):
        problems.append(f"{where} must be an object")
        return False
    for key in sorted(set(obj) - allowed):
        problems.append(f"unknown key {key!r} in {where}")
    return True


def _bound(value, default, where, problems):
    if value is None:
        return default
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.append(f"{where} must be a number or null")
        return default
    return float(value)


def _expr(text, where, problems):
    if not isinstance(text, str):
        problems.append(f"{where} must be an expression string")
        return None
    try:
        return parse(text)
    except ExprError as err:
        problems.append(f"{where}: {err}")
        return None


def scenario_from_dict(doc: dict) -> Scenario:
    """Build and validate a scenario; every problem found is reported together."""
    problems: list[str] = []
    if not _check_keys(doc, _TOP_KEYS, "scenario", problems):
        raise ScenarioError(problems)
    for key in ("name", "players"):
        if key not in doc:
            problems.append(f"missing key {key!r}")
    name = doc.get("name", "")
    if not isinstance(name, str):
        problems.append("name must be a string")

    lets = []
    for k, item in enumerate(doc.get("lets", [])):
        where = f"lets[{k}]"
        if _check_keys(item, _LET_KEYS, where, problems):
            if not isinstance(item.get("name"), str):
                problems.append(f"{where}.name must be a string")
                continue
            e = _expr(item.get("expr"), f"{where}.expr", problems)
            if e is not None:
                lets.append(DerivedLet(item["name"], e))

    raw_players = doc.get("players", [])
    if not isinstance(raw_players, list):
        problems.append("players must be an array")
        raw_players = []
    if not raw_players:
        problems.append("n must be ≥ 1")
    players = []
    for k, item in enumerate(raw_players):
        where = f"players[{k}]"
        if not _check_keys(item, _PLAYER_KEYS, where, problems):
            continue
        payoff = _expr(item.get("payoff"), f"{where}.payoff", problems)
        br = None
        if item.get("best_response") is not None:
            br = _expr(item["best_response"], f"{where}.best_response", problems)
        lower = _bound(item.get("lower"), 0.0, f"{where}.lower", problems)
        upper = _bound(item.get("upper"), math.inf, f"{where}.upper", problems)
        if payoff is not None:
            players.append(PlayerSpec(payoff, lower, upper, br))

    defaults = doc.get("defaults", {})
    if _check_keys(defaults, _RULE_KEYS | _STOP_KEYS, "defaults", problems):
        try:
            probe = Scenario(StrategicGame("", ()), dict(defaults))
            probe.rule()
            probe.stop()
        except (TypeError, ValueError) as err:
            problems.append(f"defaults: {err}")
    else:
        defaults = {}

    initial = doc.get("initial")
    if initial is not None:
        if not isinstance(initial, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in initial):
            problems.append("initial must be an array of numbers")
            initial = None
        else:
            initial = tuple(float(x) for x in initial)

    if problems:
        raise ScenarioError(problems)
    game = StrategicGame(name, tuple(players), tuple(lets), doc.get("description", ""))
    problems.extend(validate_game(game))
    if initial is not None and len(initial) != game.n:
        problems.append(f"initial has {len(initial)} entries for {game.n} players")
    if problems:
        raise ScenarioError(problems)
    return Scenario(game, dict(defaults), initial)


def _num(x: float):
    return None if math.isinf(x) and x > 0 else x


def scenario_to_dict(s: Scenario) -> dict:
    g = s.game
    doc: dict[str, Any] = {"name": g.name}
    if g.description:
        doc["description"] = g.description
    doc["lets"] = [{"name": let.name, "expr": to_source(let.value)} for let in g.lets]
    doc["players"] = []
    for p in g.players:
        item = {"lower": p.lower, "upper": _num(p.upper), "payoff": to_source(p.payoff)}
        if p.best_response is not None:
            item["best_response"] = to_source(p.best_response)
        doc["players"].append(item)
    doc["defaults"] = dict(s.defaults)
    if s.initial is not None:
        doc["initial"] = list(s.initial)
    return doc


def builtin_names() -> tuple[str, ...]:
    return BUILTINS


def load_scenario(source: str | Path) -> Scenario:
    """Load a built-in scenario by name or a scenario JSON file by path."""
    if str(source) in BUILTINS:
        text = resources.files("nashflow").joinpath(f"scenarios/{source}.json").read_text("utf-8")
    else:
        path = Path(source)
        if not path.is_file():
            raise ScenarioError(f"no built-in scenario or file named {str(source)!r}")
        text = path.read_text("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ScenarioError(f"malformed JSON: {err}") from None
    return scenario_from_dict(doc)

