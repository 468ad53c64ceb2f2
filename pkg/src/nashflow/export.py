"""CSV / JSON / SVG writers. Floats use the shortest round-trip decimal (``repr``)."""
from __future__ import annotations

import json
import math
import xml.etree.ElementTree as ET
from typing import Any

from .basin import BasinMap, Cluster
from .dynamics import Converged, Cycle, Diverged, MaxStepsExceeded, Outcome, Trajectory
from .equilibrium import GridEnumeration
from .game import action_names


def fmt(x: float) -> str:
    return repr(float(x))


def _jsonable(x: Any) -> Any:
    if isinstance(x, float) and not math.isfinite(x):
        return None if x != x else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def dumps(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2, ensure_ascii=False) + "\n"


def outcome_dict(o: Outcome) -> dict:
    if isinstance(o, Converged):
        return {"kind": o.kind, "profile": list(o.profile), "steps": o.steps}
    if isinstance(o, Cycle):
        return {"kind": o.kind, "period": o.period,
                "profiles": [list(p) for p in o.profiles], "steps": o.steps}
    if isinstance(o, Diverged):
        return {"kind": o.kind, "step": o.step}
    if isinstance(o, MaxStepsExceeded):
        return {"kind": o.kind, "profile": list(o.profile)}
    raise TypeError(o)


def cluster_dict(c: Cluster, cid: int) -> dict:
    return {"id": cid, "representative": list(c.representative), "size": len(c.members),
            "lower": list(c.lower), "upper": list(c.upper)}


def trajectory_csv(traj: Trajectory) -> str:
    n = len(traj.profiles[0]) if traj.profiles else 0
    lines = [",".join(["step", *action_names(n), *traj.derived_names])]
    for t, (profile, derived) in enumerate(zip(traj.profiles, traj.derived)):
        lines.append(",".join([str(t), *map(fmt, profile), *map(fmt, derived)]))
    return "\n".join(lines) + "\n"


def basin_csv(basin: BasinMap, n: int) -> str:
    header = [f"init_{q}" for q in action_names(n)] + ["label"] + \
             [f"limit_{q}" for q in action_names(n)]
    lines = [",".join(header)]
    for p in basin.points:
        limit = list(map(fmt, p.limit)) if p.limit is not None else [""] * n
        lines.append(",".join([*map(fmt, p.initial), p.label, *limit]))
    return "\n".join(lines) + "\n"


def accepted_csv(result: GridEnumeration, n: int) -> str:
    cluster_of = {}
    for cid, c in enumerate(result.clusters):
        for m in c.members:
            cluster_of[m] = cid
    lines = [",".join([*action_names(n), "gain", "cluster"])]
    for k, (profile, gain) in enumerate(zip(result.accepted, result.gains)):
        lines.append(",".join([*map(fmt, profile), fmt(gain), str(cluster_of[k])]))
    return "\n".join(lines) + "\n"


_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2"]


def trajectory_svg(traj: Trajectory, title: str = "") -> str:
    """Stacked line charts: player quantities, total Q, then one panel per let."""
    n = len(traj.profiles[0])
    steps = len(traj.profiles)
    panels = [("quantities", [(q, [p[i] for p in traj.profiles])
                              for i, q in enumerate(action_names(n))])]
    for name in traj.derived_names:
        panels.append((name, [(name, traj.series(name))]))

    width, panel_h, pad = 640, 180, 40
    height = pad + len(panels) * (panel_h + pad)
    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg",
                     width=str(width), height=str(height), viewBox=f"0 0 {width} {height}")
    if title:
        ET.SubElement(svg, "title").text = title
    plot_w = width - 2 * pad
    for k, (panel, series) in enumerate(panels):
        top = pad + k * (panel_h + pad)
        values = [v for _, ys in series for v in ys]
        lo, hi = min(values), max(values)
        span = hi - lo if hi > lo else 1.0
        g = ET.SubElement(svg, "g", {"class": "panel", "data-panel": panel})
        ET.SubElement(g, "rect", x=str(pad), y=str(top), width=str(plot_w), height=str(panel_h),
                      fill="none", stroke="#999")
        label = ET.SubElement(g, "text", {"font-size": "12"}, x=str(pad), y=str(top - 6))
        label.text = f"{panel}  [{lo:.6g}, {hi:.6g}]"
        for s, (name, ys) in enumerate(series):
            pts = []
            for t, y in enumerate(ys):
                x = pad + (plot_w * t / (steps - 1) if steps > 1 else 0.0)
                yy = top + panel_h - panel_h * (y - lo) / span
                pts.append(f"{x:.2f},{yy:.2f}")
            ET.SubElement(g, "polyline", {"points": " ".join(pts), "fill": "none",
                                          "stroke": _COLORS[s % len(_COLORS)],
                                          "data-series": name})
    return ET.tostring(svg, encoding="unicode") + "\n"

