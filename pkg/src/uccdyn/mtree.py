"""Finite metric trees with exact rational geometry.

A tree is a list of vertices and a list of edges ``(u, v, length)``.  Points
are addressed by ``TreePoint(edge, t)`` where ``t`` is the chart coordinate of
the edge, ``t = 0`` at ``u`` and ``t = 1`` at ``v``.  Vertex points are
canonicalized so that equal points compare equal.

Point sets (subtrees, fibers, partition cells) are ``TreeSet`` values: a set of
vertices plus, per edge, a union of intervals inside the open edge ``(0, 1)``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Hashable, Iterable, Sequence

Q = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


class TreeError(ValueError):
    """Malformed tree or an invalid argument to a tree operation."""


class InvalidPoint(TreeError):
    pass


@dataclass(frozen=True, order=True)
class TreePoint:
    edge: int
    t: Fraction

    def __repr__(self) -> str:
        return f"TreePoint({self.edge}, {self.t})"


@dataclass(frozen=True)
class Arc:
    """The unique arc from ``start`` to ``end``.

    ``segments`` lists ``(edge, t_from, t_to)`` in travel order; an empty tuple
    is the degenerate arc ``{start}``.
    """

    start: TreePoint
    end: TreePoint
    segments: tuple[tuple[int, Fraction, Fraction], ...] = ()

    @property
    def degenerate(self) -> bool:
        return not self.segments


class MTree:
    def __init__(self, vertices: Sequence[Hashable], edges: Sequence[tuple]):
        if not vertices:
            raise TreeError("a tree needs at least one vertex")
        self.vertices = tuple(vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise TreeError("duplicate vertex ids")
        vset = set(self.vertices)
        self.edges: tuple[tuple[Hashable, Hashable, Fraction], ...] = tuple(
            (u, v, Fraction(length)) for u, v, length in edges
        )
        self.incident: dict[Hashable, list[int]] = {v: [] for v in self.vertices}
        for i, (u, v, length) in enumerate(self.edges):
            if u not in vset or v not in vset:
                raise TreeError(f"edge {i} has an unknown endpoint")
            if u == v:
                raise TreeError(f"edge {i} is a loop")
            if length <= 0:
                raise TreeError(f"edge {i} has non-positive length {length}")
            self.incident[u].append(i)
            self.incident[v].append(i)
        if len(self.edges) != len(self.vertices) - 1:
            raise TreeError("edge count is not vertex count - 1 (cycle or disconnected)")
        seen = self._bfs_parents(self.vertices[0])
        if len(seen) != len(self.vertices):
            raise TreeError("graph is disconnected")
        self._parents: dict[Hashable, dict] = {}
        self._dists: dict[Hashable, dict] = {}

    def __repr__(self) -> str:
        return f"MTree({len(self.vertices)} vertices, {len(self.edges)} edges)"

    # -- points ----------------------------------------------------------

    def point(self, edge: int, t) -> TreePoint:
        t = Fraction(t)
        if edge == -1 and not self.edges:
            if t != 0:
                raise InvalidPoint("the single-vertex tree only has t = 0")
            return TreePoint(-1, ZERO)
        if not 0 <= edge < len(self.edges):
            raise InvalidPoint(f"no edge {edge}")
        if not 0 <= t <= 1:
            raise InvalidPoint(f"chart coordinate {t} outside [0, 1]")
        if t == 0:
            return self.vertex_point(self.edges[edge][0])
        if t == 1:
            return self.vertex_point(self.edges[edge][1])
        return TreePoint(edge, t)

    def vertex_point(self, v: Hashable) -> TreePoint:
        if not self.edges:
            if v != self.vertices[0]:
                raise InvalidPoint(f"unknown vertex {v!r}")
            return TreePoint(-1, ZERO)
        try:
            e = min(self.incident[v])
        except KeyError:
            raise InvalidPoint(f"unknown vertex {v!r}") from None
        return TreePoint(e, ZERO if self.edges[e][0] == v else ONE)

    def vertex_of(self, p: TreePoint) -> Hashable | None:
        if p.edge == -1:
            return self.vertices[0]
        if p.t == 0:
            return self.edges[p.edge][0]
        if p.t == 1:
            return self.edges[p.edge][1]
        return None

    def check(self, p: TreePoint) -> TreePoint:
        """Validate and canonicalize ``p``."""
        if not isinstance(p, TreePoint):
            raise InvalidPoint(f"not a TreePoint: {p!r}")
        return self.point(p.edge, p.t)

    def edge_length(self, e: int) -> Fraction:
        return self.edges[e][2]

    def degree(self, v: Hashable) -> int:
        return len(self.incident[v])

    def leaves(self) -> list[Hashable]:
        return [v for v in self.vertices if len(self.incident[v]) == 1]

    @property
    def total_length(self) -> Fraction:
        return sum((e[2] for e in self.edges), ZERO)

    # -- paths -----------------------------------------------------------

    def _bfs_parents(self, src):
        parent = {src: None}
        queue = deque([src])
        while queue:
            x = queue.popleft()
            for e in self.incident[x]:
                u, v, _ = self.edges[e]
                y = v if u == x else u
                if y not in parent:
                    parent[y] = (x, e)
                    queue.append(y)
        return parent

    def _parents_from(self, src):
        par = self._parents.get(src)
        if par is None:
            par = self._bfs_parents(src)
            self._parents[src] = par
        return par

    def vertex_path(self, a, b) -> list[int]:
        """Edge ids on the path from vertex ``a`` to vertex ``b``, in order."""
        par = self._parents_from(b)
        out = []
        x = a
        while x != b:
            x, e = par[x]
            out.append(e)
        return out

    def vertex_distance(self, a, b) -> Fraction:
        dist = self._dists.get(b)
        if dist is None:
            par = self._parents_from(b)
            dist = {b: ZERO}
            for x in par:  # BFS order: parents come first
                if par[x] is not None:
                    y, e = par[x]
                    dist[x] = dist[y] + self.edges[e][2]
            self._dists[b] = dist
        return dist[a]

    def _exits(self, p: TreePoint):
        """(vertex, distance, segment from p to that vertex or None)."""
        v = self.vertex_of(p)
        if v is not None:
            return [(v, ZERO, None)]
        u, w, length = self.edges[p.edge]
        return [
            (u, p.t * length, (p.edge, p.t, ZERO)),
            (w, (1 - p.t) * length, (p.edge, p.t, ONE)),
        ]

    def arc(self, x: TreePoint, y: TreePoint) -> Arc:
        x, y = self.check(x), self.check(y)
        if x == y:
            return Arc(x, y)
        if self.vertex_of(x) is None and self.vertex_of(y) is None and x.edge == y.edge:
            return Arc(x, y, ((x.edge, x.t, y.t),))
        best = None
        for vx, dx, sx in self._exits(x):
            for vy, dy, sy in self._exits(y):
                total = dx + self.vertex_distance(vx, vy) + dy
                if best is None or total < best[0]:
                    best = (total, vx, sx, vy, sy)
        _, vx, sx, vy, sy = best
        segs = []
        if sx is not None:
            segs.append(sx)
        cur = vx
        for e in self.vertex_path(vx, vy):
            u, v, _ = self.edges[e]
            if u == cur:
                segs.append((e, ZERO, ONE))
                cur = v
            else:
                segs.append((e, ONE, ZERO))
                cur = u
        if sy is not None:
            segs.append((sy[0], sy[2], sy[1]))
        return Arc(x, y, tuple(segs))

    def arc_length(self, arc: Arc) -> Fraction:
        return sum((abs(b - a) * self.edges[e][2] for e, a, b in arc.segments), ZERO)

    def distance(self, x: TreePoint, y: TreePoint) -> Fraction:
        return self.arc_length(self.arc(x, y))

    def arc_point(self, arc: Arc, s) -> TreePoint:
        """Point at path-length ``s`` from ``arc.start`` along ``arc``."""
        s = Fraction(s)
        if s < 0:
            raise TreeError("negative arc parameter")
        for e, a, b in arc.segments:
            seg = abs(b - a) * self.edges[e][2]
            if s <= seg:
                frac = s / seg
                return self.point(e, a + (b - a) * frac)
            s -= seg
        if s == 0:
            return arc.end
        raise TreeError("arc parameter beyond arc length")

    def arc_position(self, arc: Arc, p: TreePoint) -> Fraction | None:
        """Path-length position of ``p`` along ``arc``; None if off the arc."""
        p = self.check(p)
        if p == arc.start:
            return ZERO
        pos = ZERO
        v = self.vertex_of(p)
        for e, a, b in arc.segments:
            length = self.edges[e][2]
            lo, hi = min(a, b), max(a, b)
            if v is None:
                if p.edge == e and lo <= p.t <= hi:
                    return pos + abs(p.t - a) * length
            else:
                for tv in (ZERO, ONE):
                    if lo <= tv <= hi and self.vertex_of(TreePoint(e, tv)) == v:
                        return pos + abs(tv - a) * length
            pos += abs(b - a) * length
        return None


# ---------------------------------------------------------------------------
# Point sets


@dataclass(frozen=True, order=True)
class Interval:
    lo: Fraction
    hi: Fraction
    lo_closed: bool = True
    hi_closed: bool = True

    def contains(self, t: Fraction) -> bool:
        if t < self.lo or t > self.hi:
            return False
        if t == self.lo and not self.lo_closed:
            return False
        if t == self.hi and not self.hi_closed:
            return False
        return True


@dataclass(frozen=True)
class TreeSet:
    """A point set of a fixed ``MTree``; construct through the helpers below."""

    vertices: frozenset = frozenset()
    pieces: tuple[tuple[int, tuple[Interval, ...]], ...] = ()
    _edge_map: dict = field(default=None, compare=False, hash=False, repr=False)

    def intervals(self, e: int) -> tuple[Interval, ...]:
        m = self._edge_map
        if m is None:
            m = dict(self.pieces)
            object.__setattr__(self, "_edge_map", m)
        return m.get(e, ())

    def is_empty(self) -> bool:
        return not self.vertices and not self.pieces

    def edges(self) -> list[int]:
        return [e for e, _ in self.pieces]


def _rebuild(bps: Iterable[Fraction], member: Callable[[Fraction], bool]) -> tuple[Interval, ...]:
    pts = sorted(set(bps) | {ZERO, ONE})
    # atoms: open (p_i, p_{i+1}) then the point p_{i+1} (if interior)
    out: list[list] = []
    for i in range(len(pts) - 1):
        p, q = pts[i], pts[i + 1]
        if member((p + q) / 2):
            if out and out[-1][1] == p and out[-1][3]:
                out[-1][1] = q
                out[-1][3] = False
            else:
                out.append([p, q, False, False])
        if q < 1 and member(q):
            if out and out[-1][1] == q:
                out[-1][3] = True
            else:
                out.append([q, q, True, True])
    return tuple(Interval(a, b, lc, hc) for a, b, lc, hc in out)


def _combine(tree: MTree, sets: Sequence[TreeSet], vertices: frozenset, rule, edges=None) -> TreeSet:
    if edges is None:
        edges = sorted({e for s in sets for e, _ in s.pieces})
    pieces = []
    for e in edges:
        ivs = [s.intervals(e) for s in sets]
        bps = [x for iv in ivs for i in iv for x in (i.lo, i.hi)]

        def member(t, ivs=ivs):
            return rule([any(i.contains(t) for i in iv) for iv in ivs])

        built = _rebuild(bps, member)
        if built:
            pieces.append((e, built))
    return TreeSet(frozenset(vertices), tuple(pieces))


def union(tree: MTree, *sets: TreeSet) -> TreeSet:
    verts = frozenset().union(*(s.vertices for s in sets))
    return _combine(tree, sets, verts, any)


def intersection(tree: MTree, *sets: TreeSet) -> TreeSet:
    verts = frozenset.intersection(*(s.vertices for s in sets)) if sets else frozenset()
    return _combine(tree, sets, verts, all)


def difference(tree: MTree, a: TreeSet, b: TreeSet) -> TreeSet:
    return _combine(tree, [a, b], a.vertices - b.vertices, lambda m: m[0] and not m[1])


def complement(tree: MTree, a: TreeSet) -> TreeSet:
    return _combine(
        tree, [a], frozenset(tree.vertices) - a.vertices, lambda m: not m[0], range(len(tree.edges))
    )


def whole(tree: MTree) -> TreeSet:
    full = (Interval(ZERO, ONE, False, False),)
    return TreeSet(frozenset(tree.vertices), tuple((e, full) for e in range(len(tree.edges))))


def empty_set() -> TreeSet:
    return TreeSet()


def point_set(tree: MTree, points: Iterable[TreePoint]) -> TreeSet:
    verts = set()
    per_edge: dict[int, list[Interval]] = {}
    for p in points:
        p = tree.check(p)
        v = tree.vertex_of(p)
        if v is not None:
            verts.add(v)
        else:
            per_edge.setdefault(p.edge, []).append(Interval(p.t, p.t))
    raw = TreeSet(frozenset(verts), tuple(sorted((e, tuple(sorted(iv))) for e, iv in per_edge.items())))
    return union(tree, raw)


def segments_set(tree: MTree, segments: Iterable[tuple[int, Fraction, Fraction]], extra=()) -> TreeSet:
    """Closed union of chart segments ``(edge, a, b)`` plus extra points."""
    verts = set()
    per_edge: dict[int, list[Interval]] = {}
    pts = list(extra)
    for e, a, b in segments:
        lo, hi = min(a, b), max(a, b)
        pts.append(tree.point(e, lo))
        pts.append(tree.point(e, hi))
        if lo < hi:
            per_edge.setdefault(e, []).append(Interval(lo, hi, lo > 0, hi < 1))
    for p in pts:
        v = tree.vertex_of(p)
        if v is not None:
            verts.add(v)
        else:
            per_edge.setdefault(p.edge, []).append(Interval(p.t, p.t))
    raw = TreeSet(frozenset(verts), tuple(sorted((e, tuple(iv)) for e, iv in per_edge.items())))
    return union(tree, raw)


def arc_set(tree: MTree, arc: Arc) -> TreeSet:
    return segments_set(tree, arc.segments, extra=(arc.start, arc.end))


def edges_set(tree: MTree, edges: Iterable[int]) -> TreeSet:
    return segments_set(tree, [(e, ZERO, ONE) for e in edges])


def contains(tree: MTree, s: TreeSet, p: TreePoint) -> bool:
    p = tree.check(p)
    v = tree.vertex_of(p)
    if v is not None:
        return v in s.vertices
    return any(i.contains(p.t) for i in s.intervals(p.edge))


def issubset(tree: MTree, a: TreeSet, b: TreeSet) -> bool:
    return difference(tree, a, b).is_empty()


def components(tree: MTree, s: TreeSet) -> list[TreeSet]:
    """Connected components, ordered by their smallest atom."""
    atoms: list = [("v", v) for v in sorted(s.vertices, key=repr)]
    for e, ivs in s.pieces:
        atoms.extend(("i", e, iv) for iv in ivs)
    index = {a: k for k, a in enumerate(atoms)}
    parent = list(range(len(atoms)))

    def find(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    for a in atoms:
        if a[0] != "i":
            continue
        _, e, iv = a
        u, v, _ = tree.edges[e]
        for tv, w in ((ZERO, u), (ONE, v)):
            touches = iv.lo == tv if tv == 0 else iv.hi == tv
            if touches and w in s.vertices:
                parent[find(index[a])] = find(index[("v", w)])
    groups: dict[int, list] = {}
    for a in atoms:
        groups.setdefault(find(index[a]), []).append(a)
    out = []
    for members in groups.values():
        verts = frozenset(a[1] for a in members if a[0] == "v")
        per_edge: dict[int, list[Interval]] = {}
        for a in members:
            if a[0] == "i":
                per_edge.setdefault(a[1], []).append(a[2])
        out.append(TreeSet(verts, tuple(sorted((e, tuple(sorted(iv))) for e, iv in per_edge.items()))))
    return out


def is_connected(tree: MTree, s: TreeSet) -> bool:
    return len(components(tree, s)) == 1


def boundary_points(tree: MTree, s: TreeSet) -> list[TreePoint]:
    """Closure points of ``s`` that ``s`` itself omits or that end an interval."""
    out = set()
    for e, ivs in s.pieces:
        for iv in ivs:
            out.add(tree.point(e, iv.lo))
            out.add(tree.point(e, iv.hi))
    return sorted(out)


def representatives(tree: MTree, s: TreeSet) -> list[TreePoint]:
    """One concrete point per vertex and interval of ``s``, sorted."""
    pts = {tree.vertex_point(v) for v in s.vertices}
    for e, ivs in s.pieces:
        for iv in ivs:
            if iv.lo_closed:
                pts.add(tree.point(e, iv.lo))
            elif iv.hi_closed:
                pts.add(tree.point(e, iv.hi))
            else:
                pts.add(tree.point(e, (iv.lo + iv.hi) / 2))
    return sorted(pts)


def extreme_points(tree: MTree, s: TreeSet) -> list[TreePoint]:
    """Vertices and interval endpoints of the closure of ``s``."""
    pts = {tree.vertex_point(v) for v in s.vertices}
    pts.update(boundary_points(tree, s))
    return sorted(pts)


def diameter(tree: MTree, s: TreeSet) -> Fraction:
    """Diameter of a connected set (closure points suffice in a tree)."""
    pts = extreme_points(tree, s)
    return max((tree.distance(a, b) for a, b in combinations(pts, 2)), default=ZERO)


def set_length(tree: MTree, s: TreeSet) -> Fraction:
    return sum(
        ((iv.hi - iv.lo) * tree.edges[e][2] for e, ivs in s.pieces for iv in ivs), ZERO
    )


# ---------------------------------------------------------------------------
# Tree operations


def arc_between(tree: MTree, x: TreePoint, y: TreePoint) -> Arc:
    return tree.arc(x, y)


def convex_hull(tree: MTree, points: Iterable[TreePoint]) -> TreeSet:
    """Smallest subtree containing ``points``."""
    pts = [tree.check(p) for p in points]
    if not pts:
        raise TreeError("convex hull of an empty set")
    segs = []
    for p in pts[1:]:
        segs.extend(tree.arc(pts[0], p).segments)
    return segments_set(tree, segs, extra=pts)


def first_hit(tree: MTree, arc: Arc, y: TreeSet) -> TreePoint | None:
    """First point of ``arc`` (from its start) lying in the closed set ``y``."""
    if contains(tree, y, arc.start):
        return arc.start
    for e, a, b in arc.segments:
        cands = {a, b}
        for iv in y.intervals(e):
            cands.update((iv.lo, iv.hi))
        lo, hi = min(a, b), max(a, b)
        for t in sorted((c for c in cands if lo <= c <= hi), key=lambda c: abs(c - a)):
            p = tree.point(e, t)
            if contains(tree, y, p):
                return p
    return None


def quasi_retract(tree: MTree, y: TreeSet, x: TreePoint) -> TreePoint:
    """The point ``r`` of the subtree ``y`` with ``[x, r]`` meeting ``y`` only in ``r``."""
    x = tree.check(x)
    if y.is_empty():
        raise TreeError("retraction onto an empty set")
    if contains(tree, y, x):
        return x
    target = representatives(tree, y)[0]
    hit = first_hit(tree, tree.arc(x, target), y)
    if hit is None:  # pragma: no cover - target is in y
        raise TreeError("retraction failed")
    return hit


def point_order(tree: MTree, x: TreePoint, within: TreeSet | None = None) -> tuple[int, str]:
    """Number of components of the complement of ``x`` and the point class."""
    x = tree.check(x)
    if within is None:
        v = tree.vertex_of(x)
        order = 2 if v is None else tree.degree(v)
    else:
        if not contains(tree, within, x):
            raise InvalidPoint("point is not in the subtree")
        order = len(components(tree, difference(tree, within, point_set(tree, [x]))))
    if order == 0:
        return 0, "degenerate"
    if order == 1:
        return 1, "endpoint"
    if order == 2:
        return 2, "cut"
    return order, "branch"


def attach_points(tree: MTree, comp: TreeSet, y: TreeSet) -> list[TreePoint]:
    """Points of ``y`` in the closure of ``comp`` (a component of the complement).

    For closed ``y`` these are open interval ends of ``comp``; vertices of the
    complement have all their incident edge germs in the complement.
    """
    out = set()
    for e, ivs in comp.pieces:
        for iv in ivs:
            for t, closed in ((iv.lo, iv.lo_closed), (iv.hi, iv.hi_closed)):
                if not closed:
                    p = tree.point(e, t)
                    if contains(tree, y, p):
                        out.add(p)
    return sorted(out)


def complement_components(tree: MTree, y: TreeSet) -> list[tuple[TreeSet, list[TreePoint]]]:
    """Components of the complement of ``y`` with their attach points."""
    return [(c, attach_points(tree, c, y)) for c in components(tree, complement(tree, y))]


def retract_fiber(tree: MTree, y: TreeSet, z: TreeSet) -> TreeSet:
    """Preimage of ``z`` under the quasi-retraction onto the subtree ``y``."""
    if not issubset(tree, z, y):
        raise TreeError("Z is not contained in Y")
    if not is_connected(tree, y):
        raise TreeError("Y is not a subtree")
    parts = [z]
    for comp, pts in complement_components(tree, y):
        if len(pts) != 1:
            raise TreeError("Y is not closed: complement component without a unique attach point")
        if contains(tree, z, pts[0]):
            parts.append(comp)
    return union(tree, *parts)
