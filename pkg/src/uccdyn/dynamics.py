"""Fixed and 2-periodic points: finite trees, invariant arcs at endpoints, rays, and the main pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from .mtree import (
    ZERO,
    MTree,
    TreeError,
    TreePoint,
    TreeSet,
    arc_set,
    convex_hull,
    difference,
    extreme_points,
    intersection,
    issubset,
    point_order,
    quasi_retract,
    representatives,
    union,
    whole,
)
from .plaction import (
    EscapeError,
    GroupAction,
    Path,
    Step,
    Word,
    format_word,
    orbit_closes,
    reduce_word,
)
from .plmap import DomainError, PLMap, image_set
from .tower import (
    LevelError,
    LimitSet,
    Model,
    ModelError,
    TowerPoint,
    end_representative,
    end_tip,
    planar_consistency,
)


class PreconditionError(TreeError):
    pass


class ModelIntegrityAlarm(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Finite trees


def fixed_set(f: PLMap, check: bool = True) -> TreeSet:
    """Exact fixed set of a self-homeomorphism of a finite tree."""
    if check:
        f.check_self_homeomorphism()
    return f.fixed_set()


@dataclass(frozen=True)
class TreeOutcome:
    kind: str  # fixed_point | two_periodic | none_found
    points: tuple[TreePoint, ...] = ()
    swaps: tuple[str, ...] = ()
    common_fixed: TreeSet | None = None

    @property
    def alarm(self) -> bool:
        return self.kind == "none_found"


def periodic_search_tree(tree: MTree, maps: dict[str, PLMap], within: TreeSet | None = None, require_homeo: bool = True) -> TreeOutcome:
    """Common fixed point, else a 2-periodic orbit, else ``none_found``.

    With ``within`` the search is confined to an invariant subtree; with
    ``require_homeo=False`` partial maps are accepted and every solution is
    still exact where the maps are defined.
    """
    region = whole(tree) if within is None else within
    if require_homeo:
        for name, m in maps.items():
            if within is None:
                m.check_self_homeomorphism()
            elif image_set(m, region) != region:
                raise PreconditionError(f"{name} does not map the subtree onto itself")
    fixes = {n: intersection(tree, m.fixed_set(), region) for n, m in maps.items()}
    common = intersection(tree, region, *fixes.values())
    if not common.is_empty():
        return TreeOutcome("fixed_point", (min(representatives(tree, common)),), (), common)
    names = sorted(maps)
    for size in range(1, len(names) + 1):
        for swaps in combinations(names, size):
            s0 = maps[swaps[0]]
            s0inv = s0.inverse()
            cand = intersection(tree, difference(tree, s0.compose(s0).fixed_set(), fixes[swaps[0]]), region)
            for g in names:
                if cand.is_empty():
                    break
                if g in swaps:
                    if g != swaps[0]:
                        s = maps[g]
                        cand = intersection(tree, cand, s0inv.compose(s).fixed_set(), s.compose(s0).fixed_set())
                else:
                    conj = s0inv.compose(maps[g]).compose(s0)
                    cand = intersection(tree, cand, fixes[g], conj.fixed_set())
            if cand.is_empty():
                continue
            x = min(representatives(tree, cand))
            y = s0(x)
            for g in names:
                want = (y, x) if g in swaps else (x, y)
                if (maps[g](x), maps[g](y)) != want:  # pragma: no cover - guarded by the equations
                    raise ModelIntegrityAlarm(f"2-periodic witness failed for {g}")
            return TreeOutcome("two_periodic", tuple(sorted((x, y))), swaps, common)
    return TreeOutcome("none_found", (), (), common)


@dataclass(frozen=True)
class FamilyReport:
    families: tuple[tuple[str, ...], ...]
    fixed: tuple[TreeSet, ...]
    intersection: TreeSet
    empty_pairs: tuple[tuple[int, int], ...]
    union_law: bool


def common_fixed_finite_families(tree: MTree, maps: dict[str, PLMap], families) -> FamilyReport:
    """Common fixed sets X_F per family, their intersection, and the law X_F ∩ X_F' = X_{F∪F'}."""
    fams = tuple(tuple(sorted(f)) for f in families)
    fix = {n: m.fixed_set() for n, m in maps.items()}

    def xf(f):
        return intersection(tree, whole(tree), *(fix[n] for n in f))

    sets = tuple(xf(f) for f in fams)
    empty = []
    law = True
    for i, j in combinations(range(len(fams)), 2):
        meet = intersection(tree, sets[i], sets[j])
        if meet.is_empty():
            empty.append((i, j))
        law &= meet == xf(sorted(set(fams[i]) | set(fams[j])))
    total = intersection(tree, whole(tree), *sets)
    return FamilyReport(fams, sets, total, tuple(empty), law)


def _letters(names):
    return [(n, e) for n in names for e in (1, -1)]


@dataclass(frozen=True)
class Stabilizer:
    schreier: tuple[Word, ...]
    ball: tuple[Word, ...]


def stabilizer_index2(perms: dict[str, dict], orbit, radius: int) -> Stabilizer:
    """Words fixing ``x`` for an action permuting ``orbit = (x, y)``.

    ``perms[g]`` maps x and y to their images.  Returns Schreier generators
    for the transversal {e, s0} and every reduced word of length <= radius
    that fixes x (exactly the words with an even number of swap letters).
    """
    x, y = orbit
    swaps = {}
    for g, p in perms.items():
        if {p.get(x), p.get(y)} != {x, y}:
            raise PreconditionError(f"{g} does not preserve the orbit")
        swaps[g] = p[x] == y
    names = sorted(perms)
    s = [g for g in names if swaps[g]]
    gens = []
    for g in names:
        if not s:
            gens.append(((g, 1),))
            continue
        t = (s[0], 1)
        if swaps[g]:
            cands = [((g, 1), (t[0], -1)), (t, (g, 1))]
        else:
            cands = [((g, 1),), (t, (g, 1), (t[0], -1))]
        for w in cands:
            w = reduce_word(w)
            if w and w not in gens:
                gens.append(w)

    def moves(w):
        pt = x
        for n, e in reversed(w):
            pt = perms[n][pt]  # involutive on a 2-set, so e does not matter
        return pt

    ball = []
    frontier = [()]
    for _ in range(radius + 1):
        nxt = []
        for w in frontier:
            if moves(w) == x:
                ball.append(w)
            for l in _letters(names):
                v = reduce_word((l,) + w)
                if len(v) > len(w):
                    nxt.append(v)
        frontier = nxt
    return Stabilizer(tuple(gens), tuple(ball))


# ---------------------------------------------------------------------------
# Invariant arcs at a fixed endpoint


def meet_point(tree: MTree, e: TreePoint, x: TreePoint, y: TreePoint) -> TreePoint:
    """The far end w of [e, x] ∩ [e, y] = [e, w]."""
    return quasi_retract(tree, arc_set(tree, tree.arc(e, x)), y)


def _arc(tree, a, b) -> TreeSet:
    return arc_set(tree, tree.arc(a, b))


def _farthest(tree: MTree, e: TreePoint) -> TreePoint:
    leaves = [tree.vertex_point(v) for v in tree.leaves()] or [e]
    return max(leaves, key=lambda p: (tree.distance(e, p), p))


def _check_endpoint(tree: MTree, maps, e: TreePoint):
    if point_order(tree, e)[0] != 1:
        raise PreconditionError(f"{e} is not an endpoint")
    for name, f in maps.items():
        if f(e) != e:
            raise PreconditionError(f"{name} does not fix {e}")


def endpoint_arc(tree: MTree, f: PLMap, e: TreePoint, v: TreePoint):
    """(u, w, direction): [e, w] = [e, v] ∩ [e, f(v)], u = f^-1(w), and the invariant direction."""
    if v == e:
        raise PreconditionError("v must differ from e")
    w = meet_point(tree, e, v, f(v))
    u = f.inverse()(w)
    a = _arc(tree, e, u)
    if issubset(tree, image_set(f, a), a):
        return u, w, "forward"
    if issubset(tree, image_set(f.inverse(), a), a):
        return u, w, "backward"
    raise ModelIntegrityAlarm("no invariant direction for [e, u]")  # pragma: no cover


@dataclass(frozen=True)
class InvariantArc:
    e: TreePoint
    u: TreePoint
    v: TreePoint
    flags: tuple[tuple[str, str], ...]
    per_map: tuple[tuple[str, TreePoint], ...] = ()


def invariant_arc_at_endpoint(tree: MTree, maps: dict[str, PLMap], e: TreePoint, v: TreePoint | None = None) -> InvariantArc:
    """Invariant arcs at a common fixed endpoint.

    One map: [e, u] with f([e, u]) ⊆ [e, u] or f^-1([e, u]) ⊆ [e, u].
    Several maps: u is the starting point and v is chosen so that every map
    and its inverse send [e, v] into [e, u].
    """
    _check_endpoint(tree, maps, e)
    start = _farthest(tree, e) if v is None else tree.check(v)
    per = {}
    for name, f in sorted(maps.items()):
        u_i, _, flag = endpoint_arc(tree, f, e, start)
        per[name] = (u_i, flag)
    flags = tuple((n, per[n][1]) for n in sorted(per))
    if len(maps) == 1:
        (name,) = maps
        return InvariantArc(e, per[name][0], start, flags, ((name, per[name][0]),))
    u = start
    best = u
    for f in maps.values():
        for g in (f, f.inverse()):
            w = meet_point(tree, e, u, g(u))
            cand = g.inverse()(w)
            if tree.distance(e, cand) < tree.distance(e, best):
                best = cand
    return InvariantArc(e, u, best, flags, tuple((n, per[n][0]) for n in sorted(per)))


@dataclass(frozen=True)
class NestedArcs:
    points: tuple[TreePoint, ...]
    lengths: tuple[Fraction, ...]
    direction: str
    stagnated: bool


def nested_invariant_arcs(tree: MTree, f: PLMap, e: TreePoint, k: int, v: TreePoint | None = None) -> NestedArcs:
    """u_1, u_2, ... with [e, u_i] nested, invariant in one direction, and shrinking."""
    _check_endpoint(tree, {"f": f}, e)
    start = _farthest(tree, e) if v is None else tree.check(v)
    u, _, direction = endpoint_arc(tree, f, e, start)
    h = f if direction == "forward" else f.inverse()
    pts, lengths = [u], [tree.distance(e, u)]
    stagnated = False
    while len(pts) < k:
        nxt = h(pts[-1])
        if nxt == pts[-1]:
            stagnated = True
            break
        pts.append(nxt)
        lengths.append(tree.distance(e, nxt))
    return NestedArcs(tuple(pts), tuple(lengths), direction, stagnated)


# ---------------------------------------------------------------------------
# Rays and lines


@dataclass(frozen=True)
class Ray:
    """A ray from ``base``: escaping along ``end``, or closing up at the tower point ``limit``."""

    name: str
    base: TowerPoint
    end: str | None = None
    limit: TowerPoint | None = None

    def __post_init__(self):
        if (self.end is None) == (self.limit is None):
            raise ModelError(f"ray {self.name} needs exactly one of end / limit")


@dataclass(frozen=True)
class Line:
    name: str
    negative: Ray
    positive: Ray

    def __post_init__(self):
        if self.negative.base != self.positive.base:
            raise ModelError(f"line {self.name}: rays must share their base point")


@dataclass(frozen=True)
class Oscillation:
    kind: str  # nonoscillatory | one_sided | bi_sided
    sides: tuple[tuple[str, LimitSet], ...]
    planar: tuple = ()

    @property
    def oscillatory(self) -> bool:
        return self.kind != "nonoscillatory"


def ray_target(model: Model, ray: Ray, n: int | None = None) -> TowerPoint:
    n = len(model.tower) if n is None else n
    if ray.end is not None:
        return end_tip(model.tower, model.end(ray.end), n)
    return model.tower.canon(ray.limit)


def ray_path(model: Model, ray: Ray, n: int | None = None) -> Path:
    """Chart-length parametrization of the ray inside T_n, starting at 0."""
    tw = model.tower
    n = len(tw) if n is None else n
    lt = tw.level(n)
    a = lt.tree.arc(lt.to_tree(ray.base), lt.to_tree(ray_target(model, ray, n)))
    steps, t = [], ZERO
    for arc, s0, s1 in lt.chart_segments(a):
        steps.append(Step(arc, s0, s1, t, t + abs(s1 - s0)))
        t += abs(s1 - s0)
    if not steps:
        raise ModelError(f"ray {ray.name} is degenerate")
    return Path(tuple(steps))


def line_path(model: Model, line: Line, n: int | None = None) -> Path:
    """Parametrization psi with psi(0) the common base and psi(t) on the positive ray for t > 0."""
    neg = ray_path(model, line.negative, n)
    pos = ray_path(model, line.positive, n)
    steps = [Step(st.arc, st.s1, st.s0, -st.p1, -st.p0) for st in reversed(neg.steps)]
    return Path(tuple(steps) + pos.steps)


def _side(model: Model, ray: Ray) -> tuple[str, LimitSet]:
    if ray.end is not None:
        return ray.name, model.limit(ray.end)
    p = model.tower.canon(ray.limit)
    return ray.name, LimitSet("arc", p.arc, p.s, p.s)


def classify_ray(model: Model, r) -> Oscillation:
    """Oscillation type from the declared limit sets (planar check recorded when available)."""
    rays = (r.negative, r.positive) if isinstance(r, Line) else (r,)
    sides = tuple(_side(model, ray) for ray in rays)
    planar = ()
    if model.tower.has_planar:
        planar = tuple(
            planar_consistency(model, ray.end) for ray in rays if ray.end is not None
        )
        for chk in planar:
            if not chk.consistent:
                raise ModelError(f"declared limit of {chk.end} disagrees with the planar embedding")
    osc = sum(not lim.singleton for _, lim in sides)
    if osc == 0:
        kind = "nonoscillatory"
    elif isinstance(r, Line) and osc == 2:
        kind = "bi_sided"
    else:
        kind = "one_sided"
    return Oscillation(kind, sides, planar)


def extend_ray_to_line(model: Model, r: Ray, n: int | None = None) -> Line:
    """A line whose positive ray is ``r``; the other side prefers an end, else the farthest leaf."""
    tw = model.tower
    n = len(tw) if n is None else n
    lt = tw.level(n)
    tree = lt.tree
    o = lt.to_tree(r.base)
    if point_order(tree, o)[0] < 2:
        raise PreconditionError(f"{r.base} is an endpoint of the model; no arc passes through it")
    ahead = lt.to_tree(ray_target(model, r, n))

    def opposite(q):
        return q != o and meet_point(tree, o, ahead, q) == o

    for e in model.ends:
        if e.name == r.end:
            continue
        try:
            rep = lt.to_tree(end_tip(tw, e, n))
        except LevelError:
            continue
        if opposite(rep):
            neg = Ray(f"{e.name}", r.base, end=e.name)
            return Line(f"{e.name}|{r.name}", neg, r)
    leaves = [tree.vertex_point(v) for v in tree.leaves()]
    far = [q for q in leaves if opposite(q)]
    if not far:
        raise PreconditionError("no direction at the base point is free")
    q = max(far, key=lambda q: (tree.distance(o, q), q))
    neg = Ray(f"[{lt.to_tower(q)}]", r.base, limit=lt.to_tower(q))
    return Line(f"{neg.name}|{r.name}", neg, r)


def ray_order(model: Model, path: Path, x: TowerPoint, y: TowerPoint) -> str:
    tx, ty = path.param(model.tower, x), path.param(model.tower, y)
    if tx is None or ty is None:
        raise TreeError("point is not on the ray")
    return "less" if tx < ty else "equal" if tx == ty else "greater"


# ---------------------------------------------------------------------------
# Ends under the action


def end_permutation(action: GroupAction, model: Model, name: str, sign: int = 1) -> dict[str, str]:
    """Where each end goes under one generator, read off deep chain points."""
    tw = model.tower
    chains = {e.name: set(e.chain) for e in model.ends}
    out = {}
    for e in model.ends:
        arcs = [a for a in e.chain if a <= action.level]
        seen = []
        for a in reversed(arcs):
            x = tw.canon(TowerPoint(a, Fraction(1, 2)))
            try:
                y = action.lt.to_tower(action.apply_tree(((name, sign),), action.to_tree(x)))
            except EscapeError:
                continue
            hits = [k for k, c in chains.items() if y.arc in c]
            seen.append(hits[0] if len(hits) == 1 else None)
            if len(seen) == 2:
                break
        if len(seen) < 2 or seen[0] is None or seen[0] != seen[1]:
            raise ModelError(f"cannot decide the image of end {e.name} under {name}")
        out[e.name] = seen[0]
    return out


@dataclass(frozen=True)
class EndArcs:
    generator: str
    direction: str  # toward-end map: g or g^-1; "identity" when the tail is fixed
    points: tuple[TowerPoint, ...]
    lengths: tuple[Fraction, ...]
    invariant: bool
    geometric: bool


def end_invariant_arcs(action: GroupAction, model: Model, end: str, gen: str, start: TowerPoint, k: int = 6) -> EndArcs:
    """Nested arcs [u_i, q) toward a fixed end q, with d-lengths measured at the prefix."""
    tw = model.tower
    lt = action.lt
    tree = lt.tree
    far = lt.to_tree(end_tip(tw, model.end(end), action.level))
    u0 = lt.to_tree(start)
    chosen = None
    for sign in (1, -1):
        try:
            img = action.apply_tree(((gen, sign),), u0)
        except EscapeError:
            continue
        if tree.distance(img, far) < tree.distance(u0, far):
            chosen = sign
            break
    if chosen is None:
        ok = all(action.apply_tree(((gen, 1),), q) == q for q in extreme_points(tree, _arc(tree, u0, far)) if action.plmap(gen).defined_at(q))
        return EndArcs(gen, "identity" if ok else "none", (start,), (tree.distance(u0, far),), ok, False)
    h = action.plmap(gen, chosen)
    pts, lengths, inv = [u0], [tree.distance(u0, far)], True
    while len(pts) < k:
        a = _arc(tree, pts[-1], far)
        # the image may run past the prefix's deepest end point; that part is still toward q
        spill = representatives(tree, difference(tree, image_set(h, a), a))
        inv &= all(tree.distance(pts[-1], r) == tree.distance(pts[-1], far) + tree.distance(far, r) for r in spill)
        try:
            nxt = h(pts[-1])
        except DomainError:
            break
        pts.append(nxt)
        lengths.append(tree.distance(nxt, far))
    geometric = len(lengths) > 1 and all(2 * b <= a for a, b in zip(lengths, lengths[1:]))
    direction = gen if chosen == 1 else gen + "^-1"
    return EndArcs(gen, direction, tuple(lt.to_tower(p) for p in pts), tuple(lengths), inv, geometric)


# ---------------------------------------------------------------------------
# Pipeline


@dataclass
class PeriodicReport:
    outcome: str  # fixed_point | two_periodic | none_found | undetermined
    step: str
    points: tuple = ()
    witnesses: dict = field(default_factory=dict)
    alarms: tuple[str, ...] = ()
    stabilizer: tuple[str, ...] = ()

    @property
    def alarm(self) -> bool:
        return bool(self.alarms)


def _point_label(model: Model, p) -> dict:
    if isinstance(p, str):
        lim = model.limit(p)
        return {"end": p, "limit": _limit_label(model, lim)}
    tw = model.tower
    out = {"arc": tw.spec(p.arc).name, "s": str(p.s)}
    if tw.has_planar:
        out["planar"] = [str(c) for c in tw.planar(p)]
    return out


def _limit_label(model: Model, lim: LimitSet) -> dict:
    if lim.kind == "external":
        return {"external": lim.name, "planar": [str(c) for c in lim.planar] if lim.planar else None}
    return {"arc": model.tower.spec(lim.arc).name, "from": str(lim.s0), "to": str(lim.s1)}


def _tree_perms(action, pts):
    perms = {}
    for g in action.names:
        perms[g] = {p: action.apply_tree(((g, 1),), p) for p in pts}
    return perms


def periodic_pipeline(model: Model, action: GroupAction, p: TowerPoint, n: int, radius: int = 6) -> PeriodicReport:
    """Fixed or 2-periodic point for the action, following the case analysis.

    (i) finite orbit: search its convex hull; (ii) search tower points of the
    prefix, then the ends; (iii) a common fixed end is resolved by the
    nonoscillatory case or the oscillatory case analysis.
    """
    lt = action.lt
    tree = lt.tree
    maps = {g: action.plmap(g) for g in action.names}
    # (i)
    orbit = orbit_closes(action, p)
    if orbit is not None:
        hull = convex_hull(tree, orbit)
        res = periodic_search_tree(tree, maps, within=hull, require_homeo=True)
        return _from_tree(model, action, res, "orbit_hull", {"orbit_size": len(orbit)}, radius)
    # (ii) tower points of the prefix
    res = periodic_search_tree(tree, maps, require_homeo=False)
    if res.kind != "none_found":
        return _from_tree(model, action, res, "tower", {}, radius)
    # ... then ends
    perms = {g: end_permutation(action, model, g) for g in action.names}
    wit = {"end_permutations": {g: dict(sorted(perms[g].items())) for g in sorted(perms)}}
    ends = [e.name for e in model.ends]
    fixed = [e for e in ends if all(perms[g][e] == e for g in perms)]
    if fixed:
        q = fixed[0]
        return end_case_analysis(model, action, q, p, n, radius, wit)
    for x, y in combinations(ends, 2):
        if all(perms[g][x] in (x, y) and perms[g][y] in (x, y) for g in perms):
            st = stabilizer_index2({g: {x: perms[g][x], y: perms[g][y]} for g in perms}, (x, y), radius)
            wit["swaps"] = sorted(g for g in perms if perms[g][x] == y)
            wit["common_fixed_in_prefix"] = "empty"
            return PeriodicReport(
                "two_periodic", "ends", (_point_label(model, x), _point_label(model, y)), wit, (),
                tuple(format_word(w) for w in st.schreier),
            )
    return PeriodicReport("none_found", "ends", (), wit, ("no fixed or 2-periodic point found",))


def _from_tree(model, action, res: TreeOutcome, step, wit, radius) -> PeriodicReport:
    lt = action.lt
    pts = tuple(lt.to_tower(q) for q in res.points)
    if res.kind == "none_found":
        return PeriodicReport("none_found", step, (), wit, ("no fixed or 2-periodic point found",))
    labels = tuple(_point_label(model, q) for q in pts)
    stab = ()
    if res.kind == "two_periodic":
        st = stabilizer_index2(_tree_perms(action, res.points), tuple(res.points), radius)
        stab = tuple(format_word(w) for w in st.schreier)
        wit = dict(wit, swaps=list(res.swaps), common_fixed_in_prefix="empty")
    return PeriodicReport(res.kind, step, labels, wit, (), stab)


def end_case_analysis(model: Model, action: GroupAction, q: str, o: TowerPoint, n: int, radius: int, wit=None) -> PeriodicReport:
    wit = dict(wit or {})
    ray = Ray(f"[o,{q})", o, end=q)
    cls = classify_ray(model, ray)
    wit["end"] = q
    wit["classification"] = cls.kind
    if not cls.oscillatory:
        return _tame_end(model, action, q, n, wit)
    return oscillatory_end_analysis(model, action, q, o, radius, wit)


def _tame_end(model, action, q, n, wit) -> PeriodicReport:
    lim = model.limit(q)
    start = end_representative(model.tower, model.end(q), n)
    arcs = [end_invariant_arcs(action, model, q, g, start) for g in action.names]
    alarms = []
    for a in arcs:
        if a.direction == "none" or not a.invariant:
            alarms.append(f"{a.generator}: no invariant arcs toward {q}")
    if lim.kind == "arc":
        z = TowerPoint(lim.arc, lim.s0)
        for g in action.names:
            if _safe_eval(action, g, z) != model.tower.canon(z):
                alarms.append(f"{g} moves the declared limit of {q}")
    wit["end_kind"] = "nonoscillatory"
    wit["invariant_arcs"] = {
        a.generator: {"direction": a.direction, "lengths": [str(x) for x in a.lengths], "geometric": a.geometric}
        for a in arcs
    }
    return PeriodicReport("fixed_point", "tame_end", (_point_label(model, q),), wit, tuple(alarms))


def _safe_eval(action, g, z):
    try:
        return action.lt.to_tower(action.apply_tree(((g, 1),), action.to_tree(z)))
    except EscapeError:
        return None


def _words(names, radius):
    out = [()]
    frontier = [()]
    for _ in range(radius):
        nxt = []
        for w in frontier:
            for l in _letters(names):
                v = reduce_word((l,) + w)
                if len(v) > len(w):
                    nxt.append(v)
        out.extend(nxt)
        frontier = nxt
    return out


def oscillatory_end_analysis(model: Model, action: GroupAction, q: str, o: TowerPoint, radius: int, wit=None) -> PeriodicReport:
    """The oscillatory case at a fixed end q, along the ray [o, q)."""
    wit = dict(wit or {})
    wit["end_kind"] = "oscillatory"
    tw = model.tower
    lt = action.lt
    tree = lt.tree
    N = action.level
    path = ray_path(model, Ray("phi", o, end=q))
    letters = _letters(action.names)
    c1 = path.lo
    target = path.tree_set(tw, N, c1)
    c2 = None
    for st in path.steps[1:]:
        tail = path.tree_set(tw, N, st.p0)
        if all(issubset(tree, image_set(action.plmap(g, s), tail), target) for g, s in letters):
            c2 = st.p0
            break
    if c2 is None:
        return PeriodicReport("undetermined", "oscillatory_end", (), wit, ("no c1 < c2 witness inside the prefix",))
    wit["c1"], wit["c2"] = str(c1), str(c2)
    # supremum test on the orbit of phi(c2)
    x2 = lt.to_tree(path.point(tw, c2))
    sups, escaped = [], False
    for r in range(1, radius + 1):
        best = c2
        for w in _words(action.names, r):
            try:
                y = action.apply_tree(w, x2)
            except EscapeError:
                escaped = True
                continue
            t = path.param(tw, lt.to_tower(y))
            if t is not None and t > best:
                best = t
        sups.append(best)
    wit["sup_by_radius"] = [str(s) for s in sups]
    half = sups[len(sups) // 2 :]
    if not escaped and all(s == sups[-1] for s in half):
        z = path.point(tw, sups[-1])
        wit["sup"] = "attained"
        moved = [g for g in action.names if _safe_eval(action, g, z) != z]
        if not moved:
            return PeriodicReport("fixed_point", "oscillatory_end", (_point_label(model, z),), wit)
        wit["moved_by"] = moved
    else:
        wit["sup"] = f"undetermined at radius {radius}"
    # M = union of translates of the tail
    tail = path.tree_set(tw, N, c2)
    m_set = tail
    lows = []
    frontier = {(): tail}
    for r in range(1, radius + 1):
        nxt = {}
        for w, s in frontier.items():
            for l in letters:
                v = reduce_word((l,) + w)
                if len(v) <= len(w):
                    continue
                img = image_set(action.plmap(*l), s)
                nxt[v] = img
                m_set = union(tree, m_set, img)
        frontier = nxt
        params = [path.param(tw, lt.to_tower(x)) for x in extreme_points(tree, m_set)]
        on_ray = [t for t in params if t is not None]
        lows.append(min(on_ray) if on_ray else None)
    wit["M_low_by_radius"] = [None if t is None else str(t) for t in lows]
    if any(t is None for t in lows):
        return PeriodicReport("undetermined", "oscillatory_end", (), wit, ("M leaves the ray [o, q)",))
    first = lows[0] - path.lo
    if all(t - path.lo <= first / 2 ** (r) for r, t in enumerate(lows)):
        z, side = o, "converges to the base point"
    elif all(t == lows[-1] for t in lows[len(lows) // 2 :]):
        z, side = path.point(tw, lows[-1]), "stable"
    else:
        return PeriodicReport("undetermined", "oscillatory_end", (), wit, ("far side of M undetermined at this radius",))
    wit["M_far_side"] = side
    wit["line"] = "one_sided"
    moved = [g for g in action.names if _safe_eval(action, g, z) != tw.canon(z)]
    if not moved:
        return PeriodicReport("fixed_point", "oscillatory_end", (_point_label(model, z),), wit)
    wit["moved_by"] = moved
    return PeriodicReport("undetermined", "oscillatory_end", (), wit, (f"{moved[0]} moves z; the partition diagnostics apply",))
