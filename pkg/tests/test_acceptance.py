"""Acceptance criteria 1-12, each ending in one printed pass/fail line."""

from __future__ import annotations

import os
import random
import subprocess
import sys
from fractions import Fraction as F
from pathlib import Path

from helpers import float_displacements, random_self_homeo, random_tower, verdict

from uccdyn import fixtures
from uccdyn.dynamics import (
    oscillatory_end_analysis,
    classify_ray,
    fixed_set,
    invariant_arc_at_endpoint,
    periodic_pipeline,
)
from uccdyn.measure import FreeAbelian, escape_diagnostic, folner_defect
from uccdyn.mtree import (
    MTree,
    arc_set,
    contains,
    extreme_points,
    issubset,
    point_set,
    retract_fiber,
    union,
)
from uccdyn.plaction import continuity_modulus, induced_map, parse_word
from uccdyn.plmap import PLMap, image_set
from uccdyn.scenario import COMMANDS, dumps
from uccdyn.tower import (
    LevelError,
    TowerPoint,
    completion_approximant,
    d_metric,
    d_metric_by_terms,
    ideal_end_coordinates,
    retraction_defect,
    retraction_fibers,
    tail_weight,
)

ROOT = Path(__file__).resolve().parent.parent


def _random_point(rng, tw, n):
    return TowerPoint(rng.randint(1, n), F(rng.randrange(0, 17), 16))


# 1 -------------------------------------------------------------------------


def test_c01_metric_axioms_and_convexity():
    rng = random.Random(101)
    failures, checks = [], 0
    for k in range(1000):
        tw = random_tower(rng, rng.randint(1, 16))
        n = len(tw)
        lt = tw.level(n)
        pts = [_random_point(rng, tw, n) for _ in range(4)]
        for x in pts:
            if d_metric(tw, n, x, x) != 0:
                failures.append((k, "identity", x))
            for y in pts:
                dxy = d_metric(tw, n, x, y)
                checks += 1
                if dxy != d_metric(tw, n, y, x):
                    failures.append((k, "symmetry", x, y))
                if (dxy == 0) != (tw.canon(x) == tw.canon(y)):
                    failures.append((k, "separation", x, y))
                if dxy != d_metric_by_terms(tw, n, x, y):
                    failures.append((k, "weighted chart sum", x, y))
                for z in pts:
                    if d_metric(tw, n, x, z) > dxy + d_metric(tw, n, y, z):
                        failures.append((k, "triangle", x, y, z))
                # convexity: the exact midpoint on the arc
                a, b = lt.to_tree(x), lt.to_tree(y)
                m = lt.tree.arc_point(lt.tree.arc(a, b), dxy / 2)
                mt = lt.to_tower(m)
                if d_metric(tw, n, x, mt) != dxy / 2 or d_metric(tw, n, mt, y) != dxy / 2:
                    failures.append((k, "midpoint", x, y))
    verdict(1, not failures, f"1000 towers, {checks} pairs, failures={failures[:3]}")


# 2 -------------------------------------------------------------------------


def _tail_and_fibers(tw, top):
    lt = tw.level(top)
    verts = [lt.to_tower(lt.tree.vertex_point(v)) for v in lt.tree.vertices]
    worst_tail, worst_fiber = F(0), F(0)
    for n in range(1, min(12, top) + 1):
        for x in verts:
            ratio = retraction_defect(tw, n, top, x) / tail_weight(n)
            worst_tail = max(worst_tail, ratio)
        for _, diam in retraction_fibers(tw, n, top):
            worst_fiber = max(worst_fiber, diam / (2 * tail_weight(n)))
    return worst_tail, worst_fiber


def test_c02_tail_bound_and_fiber_diameters():
    rng = random.Random(202)
    towers = [random_tower(rng, 16) for _ in range(30)]
    towers += [fixtures.warsaw().tower, fixtures.h_tower().tower, fixtures.z_ray().tower]
    worst_tail = worst_fiber = F(0)
    for tw in towers:
        t, f = _tail_and_fibers(tw, min(len(tw), 16))
        worst_tail, worst_fiber = max(worst_tail, t), max(worst_fiber, f)
    ok = worst_tail <= 1 and worst_fiber <= 1
    verdict(2, ok, f"max d(x, r_n x)/2^-n = {worst_tail}, max fiber diam/(2*2^-n) = {worst_fiber} over n <= 12")


# 3 -------------------------------------------------------------------------


def test_c03_h_tower_approximant():
    s = fixtures.h_tower()
    tw = s.tower
    tree = completion_approximant(tw, 12).tree
    degrees = [tree.degree(v) for v in tree.vertices]
    ends = sum(1 for d in degrees if d == 1)
    branch = sorted(d for d in degrees if d > 2)
    jumps = []
    prev = None
    for n in range(1, 13):
        try:
            _, mat = ideal_end_coordinates(tw, s.ends, n)
        except LevelError:
            continue
        if prev is not None:
            jumps.append((n, abs(mat[0][1] - prev)))
        prev = mat[0][1]
    cauchy = all(j <= 2 * tail_weight(n) for n, j in jumps)
    ok = ends == 4 and branch == [3, 3] and cauchy and len(jumps) >= 8
    verdict(3, ok, f"endpoints={ends}, branch orders={branch}, end-distance jumps={[(n, str(j)) for n, j in jumps[-3:]]}")


# 4 -------------------------------------------------------------------------


def _warsaw_fiber_ok(tw, n):
    lt = tw.level(n)
    tree = lt.tree
    y = union(tree, *(lt.arc_set(tw.index(a)) for a in ("B", "M", "L", "R")))
    p00 = lt.to_tree(tw.point("M", 1))
    fiber = retract_fiber(tree, y, point_set(tree, [p00]))
    zig = [lt.arc_set(i) for i in range(1, n + 1) if tw.spec(i).name[0] in "IJ"]
    expected = union(tree, point_set(tree, [p00]), *zig)
    return fiber == expected


def test_c04_warsaw_fiber_over_base():
    tw = fixtures.warsaw().tower
    levels = sorted(set(range(4, 13)) | {4 + 4 * k for k in range(13)})
    bad = [n for n in levels if not _warsaw_fiber_ok(tw, n)]
    verdict(4, not bad, f"fiber over P(0,0) = zigzag truncation + P(0,0) at arc levels {levels[0]}..{levels[-1]} ({len(levels)} levels), mismatches={bad}")


# 5 -------------------------------------------------------------------------


def test_c05_ray_classification():
    s = fixtures.warsaw()
    got = {name: classify_ray(s.model, s.ray(name)).kind for name in ("S-", "L-", "S-S+")}
    want = {"S-": "one_sided", "L-": "nonoscillatory", "S-S+": "bi_sided"}
    verdict(5, got == want, f"{got}")


# 6 -------------------------------------------------------------------------

STEP = 4096
TOL = F(1, 2048)


def _dist_to_set(tree: MTree, s, x, ext) -> F:
    if contains(tree, s, x):
        return F(0)
    # TOL is shorter than every edge, so only extremes on x's edge or a neighbouring edge matter
    ends = set(tree.edges[x.edge][:2])
    local = [b for b in ext if b.edge == x.edge or ends & set(tree.edges[b.edge][:2])]
    return min((tree.distance(x, b) for b in local), default=F(1))


def _grid_neighbours(tree: MTree, b):
    """Grid keys (edge, k) nearest to b; a vertex has one per incident edge."""
    v = tree.vertex_of(b)
    if v is not None:
        return [(e, 0 if tree.edges[e][0] == v else STEP) for e in tree.incident[v]]
    k = round(b.t * STEP)
    return [(b.edge, k)]


def _oracle_disagreements(tree, f):
    """Grid points the float oracle calls fixed (displacement <= one step) must lie
    within TOL of Fix(f), and every extreme point of Fix(f) must have a grid point
    within TOL that the oracle calls fixed."""
    fix = fixed_set(f)
    near = {(e, k) for e, k, disp in float_displacements(tree, f, STEP) if disp <= 1 / STEP}
    bad, ext = [], extreme_points(tree, fix)
    for e, k in sorted(near):
        x = tree.point(e, F(k, STEP))
        if _dist_to_set(tree, fix, x, ext) > TOL:
            bad.append(("spurious", x))
    for b in ext:
        hits = [c for c in _grid_neighbours(tree, b) if c in near and tree.distance(b, tree.point(c[0], F(c[1], STEP))) <= TOL]
        if not hits:
            bad.append(("missed", b))
    return bad


def test_c06_fixed_set_against_grid_oracle():
    rng = random.Random(606)
    bad, nonempty = [], 0
    for k in range(200):
        tree, f = random_self_homeo(rng, 8)
        f.check_self_homeomorphism()
        d = _oracle_disagreements(tree, f)
        nonempty += not fixed_set(f).is_empty()
        if d:
            bad.append((k, d[:2]))
    verdict(6, not bad, f"200 PL self-homeos (<= 8 edges), {nonempty} with fixed points, grid 2^-12, tol 2^-11, disagreements={bad[:2]}")


# 7 -------------------------------------------------------------------------


def _pipeline(name):
    s = fixtures.ALL[name]()
    return s, periodic_pipeline(s.model, s.action(), s.run.base, s.run.level, s.run.radius)


def test_c07_pipeline_outcomes():
    notes, ok = [], True
    s, rep = _pipeline("dihedral_arc")
    good = (
        rep.outcome == "two_periodic"
        and {p["end"] for p in rep.points} == {"+", "-"}
        and rep.witnesses.get("common_fixed_in_prefix") == "empty"
    )
    notes.append(f"dihedral_arc={rep.outcome}/{rep.witnesses.get('common_fixed_in_prefix')}")
    ok &= good
    s, rep = _pipeline("z_ray")
    arcs = rep.witnesses.get("invariant_arcs", {})
    good = (
        rep.outcome == "fixed_point"
        and rep.points == ({"end": "+", "limit": {"external": "z", "planar": ["1", "0"]}},)
        and arcs and all(a["geometric"] for a in arcs.values())
    )
    notes.append(f"z_ray={rep.outcome}@{rep.points[0].get('limit') if rep.points else None} geometric={[a['geometric'] for a in arcs.values()]}")
    ok &= bool(good)
    s, rep = _pipeline("fixed_vertex")
    centre = s.tower.canon(s.tower.point("A", 0))
    good = rep.outcome == "fixed_point" and rep.points[0]["arc"] == s.tower.spec(centre.arc).name and F(rep.points[0]["s"]) == centre.s
    notes.append(f"fixed_vertex={rep.outcome}@{rep.points[0] if rep.points else None}")
    ok &= good
    alarms = {}
    for name, build in sorted(fixtures.ALL.items()):
        sc = build()
        if sc.generators and sc.run.base is not None:
            alarms[name] = _pipeline(name)[1].alarms
    w = fixtures.warsaw()
    direct = oscillatory_end_analysis(w.model, w.action(), "S+", w.run.base, w.run.radius)
    alarms["warsaw/S+"] = direct.alarms
    good = direct.outcome == "fixed_point" and direct.points[0]["arc"] == "M" and direct.points[0]["s"] == "1"
    notes.append(f"warsaw S+ oscillatory end -> {direct.outcome} far side {direct.witnesses.get('M_far_side')}")
    ok &= good and not any(alarms.values())
    verdict(7, ok, "; ".join(notes) + f"; alarms={ {k: v for k, v in alarms.items() if v} }")


# 8 -------------------------------------------------------------------------


def _endpoint_fixing(rng):
    """A random self-homeo plus an invariant pendant path; e is the path's free end."""
    tree, f = random_self_homeo(rng, 6, pendant=rng.randint(1, 2))
    return tree, f, tree.vertex_point(max(tree.vertices))


def _contains_all(tree, maps, e, inv):
    a_u = arc_set(tree, tree.arc(e, inv.u))
    a_v = arc_set(tree, tree.arc(e, inv.v))
    if len(maps) == 1:
        (f,) = maps.values()
        (_, flag), = inv.flags
        g = f if flag == "forward" else f.inverse()
        return issubset(tree, image_set(g, a_u), a_u)
    return inv.v != e and all(
        issubset(tree, image_set(g, a_v), a_u) for f in maps.values() for g in (f, f.inverse())
    )


def _same_tree_maps(rng, tree, e, k):
    """k endpoint-fixing maps on one tree: bump maps over the identity."""
    from helpers import bump_homeo

    out = {}
    for j in range(k):
        pieces = [(i, a, b, i, c, d) for i in range(len(tree.edges)) for a, b, c, d in bump_homeo(rng)]
        out[f"f{j}"] = PLMap(tree, pieces)
    return out


def test_c08_invariant_arc_containments():
    rng = random.Random(808)
    single_bad, triple_bad = [], []
    for k in range(100):
        tree, f, e = _endpoint_fixing(rng)
        inv = invariant_arc_at_endpoint(tree, {"f": f}, e)
        if not _contains_all(tree, {"f": f}, e, inv):
            single_bad.append(k)
        maps = _same_tree_maps(rng, tree, e, 3) if rng.random() < 0.5 else {"f": f, "g": f.inverse(), "h": f.compose(f)}
        inv3 = invariant_arc_at_endpoint(tree, maps, e)
        if not _contains_all(tree, maps, e, inv3):
            triple_bad.append(k)
    verdict(8, not single_bad and not triple_bad, f"100 single maps, 100 triples; failures single={single_bad[:5]} triples={triple_bad[:5]}")


# 9 -------------------------------------------------------------------------


def test_c09_folner_defects():
    z = FreeAbelian(("a",))
    z_bad = [i for i in range(51) if folner_defect(z, z.ball(i), "a") != F(2, 2 * i + 1)]
    dih = fixtures.dihedral_arc().folner_spec()
    d = [max(folner_defect(dih.rule, dih.elements(i), g) for g in ("a", "b")) for i in range(1, 26)]
    monotone = all(x >= y for x, y in zip(d[1:], d[2:]))
    ok = not z_bad and monotone and d[-1] < F(1, 10)
    verdict(9, ok, f"Z defects exact for i <= 50 (mismatches {z_bad}); D_inf monotone from i=2: {monotone}, defect at i=25 = {d[-1]}")


# 10 ------------------------------------------------------------------------


def _escape(name):
    s = fixtures.ALL[name]()
    r = s.run
    return escape_diagnostic(
        s.action(), s.model, s.ray(r.line), s.folner_spec(), r.cell, r.imax, r.base,
        parse_word(r.shift) if r.shift else None, r.c2,
    )


def test_c10_escape_diagnostic():
    zl = _escape("z_line")
    exact = all(km == F(1, 2 * i + 1) for i, km, _ in zl.rows)
    fl = _escape("fixed_line")
    ok = exact and zl.verdict == "mass escapes" and fl.verdict == "no escape"
    verdict(10, ok, f"z_line masses 1/(2i+1) for i <= {zl.rows[-1][0]}: {exact}, verdict {zl.verdict!r}; fixed_line verdict {fl.verdict!r}")


# 11 ------------------------------------------------------------------------


def _sample_pair(rng, tree, f, delta):
    edges = sorted(f.domain().edges())
    kind = rng.randrange(3)
    if kind == 2:
        # straddle a vertex of the domain
        e = edges[rng.randrange(len(edges))]
        v = tree.edges[e][rng.randrange(2)]
        inc = [x for x in tree.incident[v] if x in edges]
        e2 = inc[rng.randrange(len(inc))]
        r1, r2 = (delta / 2 * F(rng.randrange(1024), 1024) for _ in range(2))
        t1 = r1 / tree.edge_length(e)
        t2 = r2 / tree.edge_length(e2)
        u = tree.point(e, t1 if tree.edges[e][0] == v else 1 - t1) if t1 <= 1 else tree.vertex_point(v)
        w = tree.point(e2, t2 if tree.edges[e2][0] == v else 1 - t2) if t2 <= 1 else tree.vertex_point(v)
        return u, w
    e = edges[rng.randrange(len(edges))]
    t = F(rng.randrange(4097), 4096)
    if kind == 0:
        dt = delta / tree.edge_length(e) * F(rng.randrange(1024), 1024)
        return tree.point(e, t), tree.point(e, min(t + dt, F(1)))
    e2 = edges[rng.randrange(len(edges))]
    return tree.point(e, t), tree.point(e2, F(rng.randrange(4097), 4096))


def test_c11_induced_maps_and_modulus():
    rng = random.Random(1111)
    certified, refuted, pairs = 0, [], 0
    eps = F(1, 64)
    names = ["dihedral_arc", "z_line", "fixed_line", "z_ray", "fixed_vertex", "warsaw"]
    per = 10**4 // sum(len(fixtures.ALL[n]().generators) for n in names) + 1
    for name in names:
        s = fixtures.ALL[name]()
        action = s.action()
        tree = action.lt.tree
        for g in action.names:
            for n in range(1, min(10, len(s.tower)) + 1):
                induced_map(action, g, n)  # raises unless injective
                certified += 1
            f = induced_map(action, g, min(10, len(s.tower)))
            mod = continuity_modulus(action, g, eps, min(10, len(s.tower)))
            for _ in range(per):
                u, v = _sample_pair(rng, tree, f, mod.delta)
                pairs += 1
                if tree.distance(u, v) < mod.delta and tree.distance(f(u), f(v)) >= eps:
                    refuted.append((name, g, u, v))
    verdict(11, not refuted, f"{certified} induced maps certified injective (levels <= 10); {pairs} exact pairs, refutations={refuted[:2]}")


# 12 ------------------------------------------------------------------------


def _run_cli(args, seed):
    env = dict(os.environ, PYTHONHASHSEED=str(seed))
    return subprocess.run([sys.executable, "-m", "uccdyn.cli", *args], capture_output=True, env=env)


def test_c12_cli_reports_byte_identical(tmp_path):
    diffs, runs = [], 0
    for name, build in sorted(fixtures.ALL.items()):
        path = tmp_path / f"{name}.json"
        path.write_text(dumps(build()))
        for cmd in COMMANDS:
            outs = []
            for seed in (1, 2):
                stem = tmp_path / f"{name}.{cmd}.{seed}"
                extra = ["--csv", f"{stem}.csv"] if cmd == "measure" else []
                r = _run_cli([cmd, str(path), "--out", f"{stem}.json", "--svg", f"{stem}.svg", *extra], seed)
                files = [p.read_bytes() if p.exists() else None for p in (Path(f"{stem}.json"), Path(f"{stem}.svg"), Path(f"{stem}.csv"))]
                outs.append((r.returncode, r.stdout, r.stderr, files))
                runs += 1
            if outs[0] != outs[1]:
                diffs.append((name, cmd))
    verdict(12, not diffs, f"{runs} CLI runs over {len(fixtures.ALL)} fixtures x {len(COMMANDS)} commands, differing={diffs}")
