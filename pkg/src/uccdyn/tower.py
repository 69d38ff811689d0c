"""Towers of finite trees T_1 < T_2 < ... built from arcs, and their convex metric.

Arc ``i`` (1-based) carries an affine chart ``s in [0, 1]`` and, for ``i > 1``,
one attachment: the chart point ``own_s`` of arc ``i`` is glued to the chart
point ``target_s`` of an earlier arc.  The metric weights arc ``i`` by
``2**-i``, so the level-n tree with d-lengths is a finite metric tree and the
convex metric is its path metric.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

from .mtree import (
    ZERO,
    MTree,
    TreeError,
    TreePoint,
    TreeSet,
    complement_components,
    diameter,
    edges_set,
    quasi_retract,
    segments_set,
    union,
)

Planar = tuple[Fraction, Fraction]


class LevelError(TreeError):
    """A point or end is not available at the requested tower level."""


class ModelError(TreeError):
    pass


def weight(i: int) -> Fraction:
    return Fraction(1, 2**i)


def tail_weight(n: int) -> Fraction:
    """Sum of the weights of all arcs beyond level ``n``."""
    return Fraction(1, 2**n)


@dataclass(frozen=True, order=True)
class TowerPoint:
    arc: int
    s: Fraction

    def __repr__(self) -> str:
        return f"TowerPoint({self.arc}, {self.s})"


@dataclass(frozen=True)
class Attachment:
    target: int
    target_s: Fraction
    own_s: Fraction = Fraction(0)


@dataclass(frozen=True)
class ArcSpec:
    name: str
    attach: tuple[Attachment, ...] = ()
    planar: tuple[Planar, Planar] | None = None


@dataclass(frozen=True)
class Tower:
    arcs: tuple[ArcSpec, ...]

    def __len__(self) -> int:
        return len(self.arcs)

    def spec(self, i: int) -> ArcSpec:
        if not 1 <= i <= len(self.arcs):
            raise LevelError(f"arc {i} is not in the loaded prefix of {len(self.arcs)} arcs")
        return self.arcs[i - 1]

    def index(self, name: str) -> int:
        for i, a in enumerate(self.arcs, 1):
            if a.name == name:
                return i
        raise KeyError(name)

    def canon(self, p: TowerPoint) -> TowerPoint:
        """Canonical address: a glued point lives on the earliest arc through it."""
        s = Fraction(p.s)
        if not 0 <= s <= 1:
            raise TreeError(f"chart coordinate {s} outside [0, 1]")
        arc = p.arc
        spec = self.spec(arc)
        while spec.attach and spec.attach[0].own_s == s:
            att = spec.attach[0]
            arc, s = att.target, Fraction(att.target_s)
            spec = self.spec(arc)
        return TowerPoint(arc, s)

    def point(self, arc: int | str, s) -> TowerPoint:
        if isinstance(arc, str):
            arc = self.index(arc)
        return self.canon(TowerPoint(arc, Fraction(s)))

    def aliases(self, p: TowerPoint) -> list[TowerPoint]:
        """Every (arc, s) address of the canonical point ``p``."""
        p = self.canon(p)
        return _alias_table(self).get(p, [p])

    def level(self, n: int) -> "LevelTree":
        if not 1 <= n <= len(self.arcs):
            raise LevelError(f"level {n} outside 1..{len(self.arcs)}")
        return _level_tree(self, n)

    def planar(self, p: TowerPoint) -> Planar:
        spec = self.spec(p.arc)
        if spec.planar is None:
            raise ModelError(f"arc {spec.name} has no planar coordinates")
        (x0, y0), (x1, y1) = spec.planar
        return (x0 + p.s * (x1 - x0), y0 + p.s * (y1 - y0))

    @property
    def has_planar(self) -> bool:
        return all(a.planar is not None for a in self.arcs)


@lru_cache(maxsize=64)
def _alias_table(tw: Tower) -> dict[TowerPoint, list[TowerPoint]]:
    table: dict[TowerPoint, list[TowerPoint]] = {}
    for i, spec in enumerate(tw.arcs, 1):
        pts = {Fraction(0), Fraction(1)} | {Fraction(a.own_s) for a in spec.attach}
        for s in pts:
            raw = TowerPoint(i, s)
            c = tw.canon(raw)
            if c != raw:
                table.setdefault(c, [c]).append(raw)
    return table


class LevelTree:
    """The tree T_n with d-lengths, plus conversions to and from tower points."""

    def __init__(self, tower: Tower, n: int):
        self.tower = tower
        self.n = n
        breaks: dict[int, set[Fraction]] = {i: {Fraction(0), Fraction(1)} for i in range(1, n + 1)}
        for i in range(1, n + 1):
            spec = tower.arcs[i - 1]
            if i > 1 and len(spec.attach) != 1:
                raise ModelError(f"arc {i} ({spec.name}) must have exactly one attachment")
            for att in spec.attach:
                if not 1 <= att.target < i:
                    raise ModelError(f"arc {i} attaches to arc {att.target}, not an earlier arc")
                breaks[i].add(Fraction(att.own_s))
                breaks[att.target].add(Fraction(att.target_s))
        self.breaks = {i: sorted(b) for i, b in breaks.items()}
        edges = []
        self.edge_info: list[tuple[int, Fraction, Fraction]] = []
        self.edge_index: dict[int, list[int]] = {}
        verts = set()
        for i in range(1, n + 1):
            b = self.breaks[i]
            for lo, hi in zip(b, b[1:]):
                u, v = tower.canon(TowerPoint(i, lo)), tower.canon(TowerPoint(i, hi))
                verts.update((u, v))
                self.edge_index.setdefault(i, []).append(len(edges))
                edges.append((u, v, weight(i) * (hi - lo)))
                self.edge_info.append((i, lo, hi))
        self.tree = MTree(sorted(verts), edges)

    def __repr__(self) -> str:
        return f"LevelTree(n={self.n}, {len(self.edge_info)} edges)"

    def to_tree(self, p: TowerPoint) -> TreePoint:
        p = self.tower.canon(p)
        if p.arc > self.n:
            raise LevelError(f"{p} is not in T_{self.n}")
        b = self.breaks[p.arc]
        k = max(bisect_left(b, p.s) - 1, 0)
        e = self.edge_index[p.arc][k]
        _, lo, hi = self.edge_info[e]
        return self.tree.point(e, (p.s - lo) / (hi - lo))

    def to_tower(self, q: TreePoint) -> TowerPoint:
        q = self.tree.check(q)
        arc, lo, hi = self.edge_info[q.edge]
        return self.tower.canon(TowerPoint(arc, lo + q.t * (hi - lo)))

    def level_set(self, k: int) -> TreeSet:
        """T_k as a subtree of this level tree."""
        return edges_set(self.tree, [e for i in range(1, min(k, self.n) + 1) for e in self.edge_index[i]])

    def arc_set(self, i: int, s0=0, s1=1) -> TreeSet:
        """The sub-arc ``[s0, s1]`` of tower arc ``i``."""
        s0, s1 = sorted((Fraction(s0), Fraction(s1)))
        segs = []
        for e in self.edge_index[i]:
            _, lo, hi = self.edge_info[e]
            a, b = max(lo, s0), min(hi, s1)
            if a <= b:
                segs.append((e, (a - lo) / (hi - lo), (b - lo) / (hi - lo)))
        return segments_set(self.tree, segs)

    def chart_segments(self, arc) -> list[tuple[int, Fraction, Fraction]]:
        """Tower-arc decomposition ``(arc, s_from, s_to)`` of a tree arc."""
        out: list[list] = []
        for e, a, b in arc.segments:
            i, lo, hi = self.edge_info[e]
            sa, sb = lo + a * (hi - lo), lo + b * (hi - lo)
            if out and out[-1][0] == i and out[-1][2] == sa:
                out[-1][2] = sb
            else:
                out.append([i, sa, sb])
        return [tuple(x) for x in out]


@lru_cache(maxsize=256)
def _level_tree(tw: Tower, n: int) -> LevelTree:
    return LevelTree(tw, n)


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    level: int
    kind: str
    detail: str


def _cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1]


def segment_intersection(p, q):
    """Exact intersection of planar segments ``p`` and ``q``.

    Returns ``None``, ``("point", t)`` or ``("overlap", t0, t1)`` with
    parameters along ``p``.
    """
    p0, p1 = p
    q0, q1 = q
    r, s = _sub(p1, p0), _sub(q1, q0)
    denom = _cross(r, s)
    w = _sub(q0, p0)
    if denom == 0:
        if _cross(w, r) != 0:
            return None
        rr = _dot(r, r)
        t0 = _dot(w, r) / rr
        t1 = _dot(_sub(q1, p0), r) / rr
        lo, hi = max(min(t0, t1), 0), min(max(t0, t1), 1)
        if lo > hi:
            return None
        return ("point", lo) if lo == hi else ("overlap", lo, hi)
    t = _cross(w, s) / denom
    u = _cross(w, r) / denom
    if 0 <= t <= 1 and 0 <= u <= 1:
        return ("point", t)
    return None


def validate_tower(tw: Tower) -> list[Violation]:
    """All tower invariant violations; empty means valid up to the prefix length."""
    out: list[Violation] = []
    for i, spec in enumerate(tw.arcs, 1):
        if i == 1 and spec.attach:
            out.append(Violation(1, "bad-attachment", "the first arc cannot attach"))
        if i > 1 and not spec.attach:
            out.append(Violation(i, "non-tree", f"{spec.name} is disconnected from T_{i - 1}"))
        if len(spec.attach) > 1:
            out.append(Violation(i, "non-tree", f"{spec.name} meets T_{i - 1} in {len(spec.attach)} points"))
        for att in spec.attach:
            if not 1 <= att.target < i:
                out.append(Violation(i, "bad-attachment", f"{spec.name} attaches to arc {att.target}"))
            if not (0 <= att.target_s <= 1 and 0 <= att.own_s <= 1):
                out.append(Violation(i, "bad-attachment", f"{spec.name} attachment outside [0, 1]"))
    if out or not tw.has_planar:
        return sorted(out, key=lambda v: v.level)
    for j, spec in enumerate(tw.arcs, 1):
        seg = spec.planar
        if seg[0] == seg[1]:
            out.append(Violation(j, "non-strict", f"{spec.name} is a single planar point"))
            continue
        att = spec.attach[0] if spec.attach else None
        glue = None
        if att is not None:
            glue = tw.canon(TowerPoint(j, att.own_s))
            if tw.planar(TowerPoint(j, att.own_s)) != tw.planar(TowerPoint(att.target, att.target_s)):
                out.append(Violation(j, "planar-mismatch", f"{spec.name} attach point coordinates differ"))
        covered = []
        for i in range(1, j):
            hit = segment_intersection(seg, tw.arcs[i - 1].planar)
            if hit is None:
                continue
            if hit[0] == "overlap":
                covered.append((hit[1], hit[2]))
                continue
            ok = (
                glue is not None
                and hit[1] == att.own_s
                and any(a.arc == i for a in tw.aliases(glue))
            )
            if not ok:
                out.append(Violation(j, "bad-intersection", f"{spec.name} meets {tw.arcs[i - 1].name} off the attach point"))
        if covered:
            covered.sort()
            reach = Fraction(0)
            full = True
            for lo, hi in covered:
                if lo > reach:
                    full = False
                reach = max(reach, hi)
            if full and reach >= 1:
                out.append(Violation(j, "non-strict", f"{spec.name} adds nothing to T_{j - 1}"))
            else:
                out.append(Violation(j, "bad-intersection", f"{spec.name} meets T_{j - 1} in a sub-arc"))
    return sorted(out, key=lambda v: v.level)


# ---------------------------------------------------------------------------
# Metric


def _in_level(tw: Tower, n: int, p: TowerPoint) -> TowerPoint:
    p = tw.canon(p)
    if p.arc > n:
        raise LevelError(f"{p} is not in T_{n}")
    return p


def d_metric(tw: Tower, n: int, x: TowerPoint, y: TowerPoint) -> Fraction:
    """Exact convex-metric distance between two points of T_n."""
    lt = tw.level(n)
    x, y = _in_level(tw, n, x), _in_level(tw, n, y)
    return lt.tree.distance(lt.to_tree(x), lt.to_tree(y))


def d_metric_by_terms(tw: Tower, n: int, x: TowerPoint, y: TowerPoint) -> Fraction:
    """The same distance summed arc by arc over the chart decomposition of [x, y]."""
    lt = tw.level(n)
    arc = lt.tree.arc(lt.to_tree(x), lt.to_tree(y))
    per_arc: dict[int, Fraction] = {}
    for i, a, b in lt.chart_segments(arc):
        per_arc[i] = per_arc.get(i, ZERO) + abs(b - a)
    return sum((weight(i) * length for i, length in per_arc.items()), ZERO)


def completion_approximant(tw: Tower, n: int) -> LevelTree:
    """Finite metric tree isometric to (T_n, d); within 2**-n of the completion."""
    return tw.level(n)


# ---------------------------------------------------------------------------
# Ends and declared limit sets


@dataclass(frozen=True)
class End:
    name: str
    chain: tuple[int, ...]

    def __post_init__(self):
        if any(a >= b for a, b in zip(self.chain, self.chain[1:])):
            raise ModelError(f"end {self.name}: chain must be strictly increasing")


@dataclass(frozen=True)
class LimitSet:
    """A declared limit set: a sub-arc ``[s0, s1]`` of a tower arc, or an external point."""

    kind: str
    arc: int = 0
    s0: Fraction = Fraction(0)
    s1: Fraction = Fraction(0)
    name: str = ""
    planar: Planar | None = None

    @property
    def singleton(self) -> bool:
        return self.kind == "external" or self.s0 == self.s1


@dataclass(frozen=True)
class Model:
    """A continuum presented as a tower, its ends and their declared limit sets."""

    tower: Tower
    ends: tuple[End, ...] = ()
    limits: tuple[tuple[str, LimitSet], ...] = ()

    def end(self, name: str) -> End:
        for e in self.ends:
            if e.name == name:
                return e
        raise ModelError(f"unknown end {name!r}")

    def limit(self, name: str) -> LimitSet:
        for k, v in self.limits:
            if k == name:
                return v
        raise ModelError(f"end {name!r} has no declared limit set")


def end_transition(tw: Tower, end: End, k: int) -> tuple[Fraction, Fraction]:
    """(exit coordinate on chain arc k, entry coordinate on chain arc k+1)."""
    nxt = tw.spec(end.chain[k + 1])
    att = nxt.attach[0]
    if att.target != end.chain[k]:
        raise ModelError(f"end {end.name}: arc {end.chain[k + 1]} does not attach to arc {end.chain[k]}")
    return Fraction(att.target_s), Fraction(att.own_s)


def end_representative(tw: Tower, end: End, n: int) -> TowerPoint:
    """Exit point of the end's chain from T_n."""
    ks = [k for k, a in enumerate(end.chain) if a <= n]
    if not ks:
        raise LevelError(f"end {end.name} has no chain arc in T_{n}")
    k = ks[-1]
    if k + 1 >= len(end.chain) or end.chain[k + 1] > len(tw):
        raise LevelError(f"end {end.name} is not defined past level {n}")
    exit_s, _ = end_transition(tw, end, k)
    return tw.canon(TowerPoint(end.chain[k], exit_s))


def end_tip(tw: Tower, end: End, n: int) -> TowerPoint:
    """Deepest point of the end's chain inside T_n: the exit point when the chain
    continues, else the far endpoint of its last arc in T_n."""
    try:
        return end_representative(tw, end, n)
    except LevelError:
        pass
    ks = [k for k, a in enumerate(end.chain) if a <= n]
    if not ks or ks[-1] == 0:
        raise LevelError(f"end {end.name} has no chain arc past its first inside T_{n}")
    _, entry = end_transition(tw, end, ks[-1] - 1)
    if entry not in (0, 1):
        raise ModelError(f"end {end.name}: chain arc {end.chain[ks[-1]]} is entered at an interior point")
    return tw.canon(TowerPoint(end.chain[ks[-1]], 1 - entry))


def ideal_end_coordinates(tw: Tower, ends, n: int):
    """Per-end representatives in T_n and their pairwise d-distance matrix."""
    reps = [end_representative(tw, e, n) for e in ends]
    lt = tw.level(n)
    pts = [lt.to_tree(p) for p in reps]
    matrix = [[lt.tree.distance(a, b) for b in pts] for a in pts]
    return reps, matrix


# ---------------------------------------------------------------------------
# Quantitative dendrite checks


def retraction_defect(tw: Tower, n: int, m: int, x: TowerPoint) -> Fraction:
    """d(x, r_{T_n}(x)) for ``x`` in T_m; bounded by the tail weight 2**-n."""
    lt = tw.level(m)
    q = lt.to_tree(x)
    return lt.tree.distance(q, quasi_retract(lt.tree, lt.level_set(n), q))


def retraction_fibers(tw: Tower, n: int, m: int) -> list[tuple[TowerPoint, Fraction]]:
    """Nondegenerate fibers of r_{T_n} inside T_m with their d-diameters."""
    lt = tw.level(m)
    tn = lt.level_set(n)
    grouped: dict[TreePoint, list[TreeSet]] = {}
    for comp, pts in complement_components(lt.tree, tn):
        grouped.setdefault(pts[0], []).append(comp)
    out = []
    for y, comps in sorted(grouped.items()):
        fiber = union(lt.tree, segments_set(lt.tree, [], extra=[y]), *comps)
        out.append((lt.to_tower(y), diameter(lt.tree, fiber)))
    return out


def local_connectedness_cover(tw: Tower, eps: Fraction, m: int | None = None):
    """Cover of T_m by connected sets of d-diameter <= eps.

    Picks n with 2**-n < eps/3, splits T_n into arcs of diameter < eps/3 and
    pulls each back under r_{T_n}.  Returns ``(n, [(C_i, D_i, diam D_i)])``.
    """
    from .mtree import is_connected, retract_fiber

    eps = Fraction(eps)
    n = 1
    while tail_weight(n) >= eps / 3:
        n += 1
    m = len(tw) if m is None else m
    if n > m:
        raise LevelError(f"precision {eps} needs level {n} > {m}")
    lt = tw.level(m)
    tn = lt.level_set(n)
    cells = []
    for e in sorted(tn.edges()):
        length = lt.tree.edge_length(e)
        k = 1
        while length / k >= eps / 3:
            k += 1
        for j in range(k):
            c = segments_set(lt.tree, [(e, Fraction(j, k), Fraction(j + 1, k))])
            fiber = retract_fiber(lt.tree, tn, c)
            if not is_connected(lt.tree, fiber):  # pragma: no cover - fibers of a retraction are connected
                raise TreeError("disconnected fiber")
            cells.append((c, fiber, diameter(lt.tree, fiber)))
    return n, cells


# ---------------------------------------------------------------------------
# Planar consistency of declared limit sets


def _seg_dist2(p: Planar, seg: tuple[Planar, Planar]) -> Fraction:
    a, b = seg
    ab = _sub(b, a)
    ap = _sub(p, a)
    denom = _dot(ab, ab)
    t = Fraction(0) if denom == 0 else min(max(_dot(ap, ab) / denom, Fraction(0)), Fraction(1))
    c = (a[0] + t * ab[0], a[1] + t * ab[1])
    d = _sub(p, c)
    return _dot(d, d)


def limit_planar(tw: Tower, lim: LimitSet) -> tuple[Planar, Planar]:
    if lim.kind == "external":
        if lim.planar is None:
            raise ModelError(f"external limit {lim.name} has no coordinates")
        return (lim.planar, lim.planar)
    return (tw.planar(TowerPoint(lim.arc, lim.s0)), tw.planar(TowerPoint(lim.arc, lim.s1)))


@dataclass(frozen=True)
class PlanarCheck:
    end: str
    hausdorff2: tuple[Fraction, ...]
    consistent: bool
    tolerance: Fraction = field(default=Fraction(1, 10))


def planar_consistency(model: Model, end_name: str, tolerance=Fraction(1, 10), samples: int = 8) -> PlanarCheck:
    """Squared Hausdorff distances between chain tails and the declared limit set.

    The tail -> limit direction is exact (segment endpoints realize the
    maximum distance to a segment); the limit -> tail direction is evaluated on
    ``samples + 1`` equally spaced limit points.  Consistent when the sequence
    is non-increasing and ends below ``tolerance**2``.
    """
    tw = model.tower
    end = model.end(end_name)
    lim = limit_planar(tw, model.limit(end_name))
    chain = [a for a in end.chain if a <= len(tw)]
    segs = [tw.spec(a).planar for a in chain]
    lim_pts = [
        (lim[0][0] + Fraction(j, samples) * (lim[1][0] - lim[0][0]), lim[0][1] + Fraction(j, samples) * (lim[1][1] - lim[0][1]))
        for j in range(samples + 1)
    ]
    values = []
    for k in range(len(segs) - 1):
        tail = segs[k:]
        fwd = max(_seg_dist2(p, lim) for s in tail for p in s)
        back = max(min(_seg_dist2(q, s) for s in tail) for q in lim_pts)
        values.append(max(fwd, back))
    tolerance = Fraction(tolerance)
    ok = bool(values) and all(a >= b for a, b in zip(values, values[1:])) and values[-1] <= tolerance**2
    return PlanarCheck(end_name, tuple(values), ok, tolerance)


def euclidean2(tw: Tower, x: TowerPoint, y: TowerPoint) -> Fraction:
    a, b = tw.planar(x), tw.planar(y)
    d = _sub(a, b)
    return _dot(d, d)


def level_pairs(n: int):
    return combinations(range(n), 2)
