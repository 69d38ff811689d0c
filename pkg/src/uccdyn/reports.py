"""Command handlers: each turns a scenario into a deterministic report body.

A handler returns ``(outcome, tables, status)`` where ``status`` is 0 for a
clean result, 1 for a model error and 2 for an integrity alarm.  Every number
is an exact rational rendered as a string, so reports are byte-stable.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .dynamics import PreconditionError, oscillatory_end_analysis, classify_ray, periodic_pipeline, _point_label
from .measure import escape_diagnostic, folner_defect, line_partition, partition_checks
from .plaction import PrefixExhausted, compatibility_levels, continuity_modulus, induced_map, parse_word, relation_violations
from .scenario import Scenario
from .tower import (
    LevelError,
    TowerPoint,
    ideal_end_coordinates,
    local_connectedness_cover,
    planar_consistency,
    retraction_defect,
    retraction_fibers,
    tail_weight,
    validate_tower,
)


def jsonable(x):
    """Exact values as strings, containers as lists or dicts with string keys."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    raise TypeError(f"not serializable: {x!r}")


def _pt(s: Scenario, p: TowerPoint) -> dict:
    return _point_label(s.model, s.tower.canon(p))


def _level(s: Scenario, level: int | None) -> int:
    n = s.run.level if level is None else level
    if not 1 <= n <= len(s.tower):
        raise LevelError(f"level {n} outside 1..{len(s.tower)}")
    return n


# ---------------------------------------------------------------------------
# validate


def run_validate(s: Scenario, level=None, radius=None, seed=None):
    tw = s.tower
    n = _level(s, level)
    violations = [{"level": v.level, "kind": v.kind, "detail": v.detail} for v in validate_tower(tw)]
    planar = {}
    declared = {k for k, _ in s.limits}
    for e in s.ends:
        if tw.has_planar and e.name in declared:
            chk = planar_consistency(s.model, e.name)
            planar[e.name] = {"consistent": chk.consistent, "last_hausdorff2": chk.hausdorff2[-1] if chk.hausdorff2 else None}
    tables = {"violations": violations}
    outcome = {"kind": "valid", "arcs": len(tw), "ends": [e.name for e in s.ends], "planar_limits": planar}
    bad = bool(violations) or not all(v["consistent"] for v in planar.values())
    if s.generators:
        action = s.action()
        rel = relation_violations(action)
        outcome["relation_violations"] = [{"relation": w, "point": _pt(s, p)} for w, p in rel]
        bad |= bool(rel)
        k = min(n, 10)
        compat, moduli = {}, {}
        rng = random.Random(s.run.seed if seed is None else seed)
        for g in action.names:
            try:
                compat[g] = compatibility_levels(action, k)[g]
                moduli[g] = _modulus_row(action, g, k, rng)
                bad |= moduli[g]["refuted"] > 0
            except PrefixExhausted as exc:
                compat[g] = None
                moduli[g] = {"error": str(exc)}
        outcome["compatibility"] = {"level": k, "image_level": compat}
        tables["continuity"] = moduli
    if bad:
        outcome["kind"] = "invalid"
    return outcome, tables, 1 if bad else 0


def _modulus_row(action, g, n, rng, pairs: int = 200, eps=Fraction(1, 8)) -> dict:
    """Certify injectivity of the induced map and spot-check the modulus on random exact pairs."""
    f = induced_map(action, g, n)
    mod = continuity_modulus(action, g, eps, n)
    tree = action.lt.tree
    edges = sorted(f.domain().edges())
    refuted = 0
    for _ in range(pairs):
        e = edges[rng.randrange(len(edges))]
        t = Fraction(rng.randrange(1025), 1024)
        dt = mod.delta / tree.edge_length(e) * Fraction(rng.randrange(1024), 1024)
        u, v = tree.point(e, t), tree.point(e, min(t + dt, Fraction(1)))
        if tree.distance(u, v) < mod.delta and tree.distance(f(u), f(v)) >= eps:
            refuted += 1
    return {"injective": True, "eps": eps, "delta": mod.delta, "lipschitz": mod.lipschitz, "pairs": pairs, "refuted": refuted}


# ---------------------------------------------------------------------------
# dendrite-check


def run_dendrite(s: Scenario, level=None, radius=None, seed=None):
    tw = s.tower
    n = _level(s, level)
    lt = tw.level(n)
    tree = lt.tree
    alarms = []
    verts = [lt.to_tower(tree.vertex_point(v)) for v in sorted(tree.vertices, key=repr)]
    tail, fibers = [], []
    for k in range(1, n + 1):
        worst = max(retraction_defect(tw, k, n, x) for x in verts)
        ok = worst <= tail_weight(k)
        tail.append({"k": k, "max_defect": worst, "bound": tail_weight(k), "ok": ok})
        if not ok:
            alarms.append(f"tail bound fails at level {k}")
        diam = max((d for _, d in retraction_fibers(tw, k, n)), default=Fraction(0))
        ok = diam <= 2 * tail_weight(k)
        fibers.append({"k": k, "max_fiber_diameter": diam, "bound": 2 * tail_weight(k), "ok": ok})
        if not ok:
            alarms.append(f"fiber diameter exceeds the bound at level {k}")
    cover = None
    eps = Fraction(1, 2)
    try:
        k, cells = local_connectedness_cover(tw, eps, n)
        worst = max(c[2] for c in cells)
        cover = {"eps": eps, "level": k, "cells": len(cells), "max_diameter": worst, "ok": worst <= eps}
        if worst > eps:
            alarms.append("a cover cell is too large")
    except LevelError as exc:
        cover = {"eps": eps, "skipped": str(exc)}
    degrees = {v: tree.degree(v) for v in tree.vertices}
    approx = {
        "endpoints": sum(1 for d in degrees.values() if d == 1),
        "branch_orders": sorted(d for d in degrees.values() if d > 2),
        "diameter_bound": tail_weight(n),
    }
    outcome = {"kind": "dendrite" if not alarms else "alarm", "level": n, "approximant": approx, "cover": cover}
    tables = {"tail": tail, "fibers": fibers}
    if s.ends:
        rows, prev = [], None
        for k in range(1, n + 1):
            try:
                _, mat = ideal_end_coordinates(tw, s.ends, k)
            except LevelError:
                continue
            row = {"k": k, "distances": mat}
            if prev is not None:
                delta = max(abs(a - b) for ra, rb in zip(mat, prev) for a, b in zip(ra, rb))
                row["delta"], row["bound"] = delta, 2 * tail_weight(k)
                if delta > 2 * tail_weight(k):
                    alarms.append(f"end distances jump at level {k}")
            rows.append(row)
            prev = mat
        tables["ends"] = rows
        outcome["end_names"] = [e.name for e in s.ends]
    outcome["alarms"] = alarms
    if alarms:
        outcome["kind"] = "alarm"
    return outcome, tables, 2 if alarms else 0


# ---------------------------------------------------------------------------
# find-periodic and classify-ray


def _periodic_dict(rep) -> dict:
    return {
        "kind": rep.outcome,
        "step": rep.step,
        "points": list(rep.points),
        "witnesses": rep.witnesses,
        "alarms": list(rep.alarms),
        "stabilizer": list(rep.stabilizer),
    }


def run_periodic(s: Scenario, level=None, radius=None, seed=None):
    if s.run.base is None:
        raise PreconditionError("find-periodic needs run.base")
    n = _level(s, level)
    r = s.run.radius if radius is None else radius
    action = s.action()
    rep = periodic_pipeline(s.model, action, s.run.base, n, r)
    outcome = _periodic_dict(rep)
    tables = {}
    alarm = rep.alarm
    ray = s.ray(s.run.ray) if s.run.ray else None
    if ray is not None and getattr(ray, "end", None) is not None and classify_ray(s.model, ray).oscillatory:
        # the oscillatory end is analysed directly along the chosen ray
        sub = oscillatory_end_analysis(s.model, action, ray.end, ray.base, r)
        tables["end_analysis"] = _periodic_dict(sub) | {"ray": ray.name}
        alarm |= sub.alarm
    return outcome, tables, 2 if alarm else 0


def _oscillation_dict(osc) -> dict:
    return {
        "kind": osc.kind,
        "sides": [name for name, _ in osc.sides],
        "planar": [{"end": c.end, "consistent": c.consistent, "hausdorff2": list(c.hausdorff2)} for c in osc.planar],
    }


def run_classify(s: Scenario, level=None, radius=None, seed=None):
    if not s.rays:
        raise PreconditionError("the scenario declares no rays")
    names = [s.run.ray] if s.run.ray else []
    names += sorted(r.name for r in s.rays if r.name not in names)
    rows = {name: _oscillation_dict(classify_ray(s.model, s.ray(name))) for name in names}
    outcome = {"kind": rows[names[0]]["kind"], "ray": names[0], "rays": {k: v["kind"] for k, v in rows.items()}}
    return outcome, {"rays": rows}, 0


# ---------------------------------------------------------------------------
# measure


def run_measure(s: Scenario, level=None, radius=None, seed=None):
    fol = s.folner_spec()
    if fol is None:
        raise PreconditionError("the scenario declares no Følner sequence")
    imax = s.run.imax if radius is None else radius
    action = s.action()
    defects = []
    for i in range(imax + 1):
        F = fol.elements(i)
        defects.append({"i": i, "size": len(F), "defect": max(folner_defect(fol.rule, F, g) for g in action.names)})
    outcome = {"kind": "folner", "imax": imax, "last_defect": defects[-1]["defect"]}
    tables = {"folner": defects}
    if s.run.line:
        line = s.ray(s.run.line)
        if s.run.base is None:
            raise PreconditionError("the empirical measures need run.base")
        shift = parse_word(s.run.shift) if s.run.shift else None
        tab = escape_diagnostic(action, s.model, line, fol, s.run.cell, imax, s.run.base, shift, s.run.c2)
        part = line_partition(s.model, line, (s.run.cell, s.run.cell + 1))
        checks = partition_checks(s.model, part)
        outcome.update(kind=tab.verdict, cell=tab.cell, threshold=tab.threshold, partition=checks)
        tables["escape"] = [{"i": i, "mass": km, "shift_defect": ex} for i, km, ex in tab.rows]
        if not all(checks.values()):
            outcome["alarms"] = ["the line partition is not a partition into connected cells"]
            return outcome, tables, 2
    return outcome, tables, 0


def measure_csv(tables: dict) -> str:
    """One row per Følner index; exact values as strings."""
    esc = {r["i"]: r for r in tables.get("escape", [])}
    lines = ["i,size,defect,mass,shift_defect"]
    for r in tables["folner"]:
        e = esc.get(r["i"], {})
        vals = [r["i"], r["size"], r["defect"], e.get("mass", ""), e.get("shift_defect", "")]
        lines.append(",".join("" if v is None else str(v) for v in vals))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# render


def render_marks(s: Scenario) -> list:
    marks = []
    if s.run.base is not None:
        marks.append(("base", s.run.base))
    return marks


def run_render(s: Scenario, level=None, radius=None, seed=None):
    from hashlib import sha256

    from .render import render_svg

    n = _level(s, level)
    svg = render_svg(s.model, n, render_marks(s), s.name)
    outcome = {"kind": "rendered", "level": n, "bytes": len(svg.encode()), "sha256": sha256(svg.encode()).hexdigest()}
    return outcome, {}, 0, svg


HANDLERS = {
    "validate": run_validate,
    "dendrite-check": run_dendrite,
    "find-periodic": run_periodic,
    "classify-ray": run_classify,
    "measure": run_measure,
    "render": run_render,
}
