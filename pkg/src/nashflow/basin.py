"""Basins of attraction: which limit each initial profile reaches."""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .bestresponse import BestResponseSpec
from .dynamics import (Converged, Cycle, Diverged, MaxStepsExceeded, Outcome, StopCriteria,
                       UpdateRule, simulate)
from .expr import EvaluationError
from .game import StrategicGame

__all__ = [
    "Cluster", "InitialGrid", "BasinPoint", "BasinMap", "cluster_limit_points", "sweep",
    "thread_count",
]

DEFAULT_SWEEP_CAP = 10**6


@dataclass(frozen=True)
class Cluster:
    representative: tuple[float, ...]
    members: tuple[int, ...]  # indices into the clustered point list
    lower: tuple[float, ...]
    upper: tuple[float, ...]


def cluster_limit_points(points: Sequence[Sequence[float]], radius: float = 1e-4,
                         coords: np.ndarray | None = None) -> list[Cluster]:
    """Single-linkage clusters under the ∞-norm, ordered by representative.

    ``coords`` optionally supplies the space in which linkage is measured
    (e.g. integer grid indices); representatives and extents always come from
    ``points``. The representative is the componentwise median.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    pts = np.asarray(points, dtype=float)
    if len(pts) == 0:
        return []
    space = pts if coords is None else np.asarray(coords, dtype=float)
    pairs = cKDTree(space).query_pairs(r=radius, p=np.inf, output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])),
                       shape=(len(pts), len(pts)))
    _, labels = connected_components(graph, directed=False)
    clusters = []
    for label in np.unique(labels):
        members = np.flatnonzero(labels == label)
        block = pts[members]
        clusters.append(Cluster(
            representative=tuple(float(x) for x in np.median(block, axis=0)),
            members=tuple(int(m) for m in members),
            lower=tuple(float(x) for x in block.min(axis=0)),
            upper=tuple(float(x) for x in block.max(axis=0)),
        ))
    clusters.sort(key=lambda c: (c.representative, c.members))
    return clusters


@dataclass(frozen=True)
class InitialGrid:
    """Cartesian product of per-player initial values."""
    values: tuple[tuple[float, ...], ...]

    @classmethod
    def from_axes(cls, axes: Sequence[Sequence[float] | dict]) -> "InitialGrid":
        """Each axis is either an explicit list of values or a linear range
        given as a dict ``{"min":…, "max":…, "count":…}``."""
        out = []
        for axis in axes:
            if isinstance(axis, dict):
                lo, hi, count = float(axis["min"]), float(axis["max"]), int(axis["count"])
                if count < 1:
                    raise ValueError("linear axis needs count ≥ 1")
                vals = [lo] if count == 1 else list(np.linspace(lo, hi, count))
            else:
                vals = list(axis)
            if not vals:
                raise ValueError("empty axis in initial grid")
            out.append(tuple(float(v) for v in vals))
        return cls(tuple(out))

    @property
    def size(self) -> int:
        return math.prod(len(v) for v in self.values)

    def check(self, g: StrategicGame, cap: int = DEFAULT_SWEEP_CAP) -> None:
        if len(self.values) != g.n:
            raise ValueError(f"initial grid has {len(self.values)} axes, game has {g.n} players")
        for i, axis in enumerate(self.values, start=1):
            lo, hi = g.bounds(i)
            for v in axis:
                if not (math.isfinite(v) and lo <= v <= hi):
                    raise ValueError(f"initial value {v} for player {i} outside [{lo}, {hi}]")
        if self.size > cap:
            raise ValueError(f"sweep of {self.size} profiles exceeds cap {cap}")

    def profiles(self):
        return itertools.product(*self.values)


@dataclass(frozen=True)
class BasinPoint:
    initial: tuple[float, ...]
    label: str
    limit: tuple[float, ...] | None
    steps: int | None
    error: str | None = None


@dataclass(frozen=True)
class BasinMap:
    points: tuple[BasinPoint, ...]
    equilibria: tuple[Cluster, ...]  # equilibrium ``eq<k>`` is ``equilibria[k]``

    def label_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for p in self.points:
            counts[p.label] = counts.get(p.label, 0) + 1

        def order(label):
            # eq0, eq1, ..., eq10 first, then cycle/diverged/max-steps/error by name
            if label.startswith("eq") and label[2:].isdigit():
                return (0, int(label[2:]), "")
            return (1, 0, label)

        return {k: counts[k] for k in sorted(counts, key=order)}


def thread_count(threads: int | None = None) -> int:
    """Worker count from the argument, else ``NASHFLOW_THREADS`` (0 = one per CPU)."""
    if threads is None:
        threads = int(os.environ.get("NASHFLOW_THREADS", "0") or 0)
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def sweep(g: StrategicGame, spec: BestResponseSpec, rule: UpdateRule, stop: StopCriteria,
          grid: InitialGrid, radius: float = 1e-4, threads: int | None = None,
          cap: int = DEFAULT_SWEEP_CAP) -> BasinMap:
    grid.check(g, cap)
    initials = list(grid.profiles())

    def run(initial) -> Outcome | EvaluationError:
        try:
            return simulate(g, spec, initial, rule, stop)[1]
        except EvaluationError as err:
            return err

    workers = thread_count(threads)
    if workers == 1:
        outcomes = [run(a) for a in initials]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, initials))

    converged = [k for k, o in enumerate(outcomes) if isinstance(o, Converged)]
    clusters = cluster_limit_points([outcomes[k].profile for k in converged], radius)
    eq_of = {}
    for cid, c in enumerate(clusters):
        for m in c.members:
            eq_of[converged[m]] = cid

    points = []
    for k, (initial, o) in enumerate(zip(initials, outcomes)):
        initial = tuple(float(x) for x in initial)
        if isinstance(o, Converged):
            points.append(BasinPoint(initial, f"eq{eq_of[k]}", o.profile, o.steps))
        elif isinstance(o, Cycle):
            points.append(BasinPoint(initial, f"cycle({o.period})", None, o.steps))
        elif isinstance(o, Diverged):
            points.append(BasinPoint(initial, "diverged", None, o.step))
        elif isinstance(o, MaxStepsExceeded):
            points.append(BasinPoint(initial, "max-steps", None, stop.max_steps))
        else:
            points.append(BasinPoint(initial, "error", None, None, str(o)))
    return BasinMap(tuple(points), tuple(clusters))
