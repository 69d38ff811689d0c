"""Piecewise-linear maps between edges of a finite metric tree.

Every piece maps a chart interval ``[a, b]`` of one edge affinely onto a chart
interval of another edge (``a -> c``, ``b -> d``).  The domain may be a proper
subset of the tree; points outside it raise ``DomainError``.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .mtree import (
    ONE,
    Interval,
    ZERO,
    MTree,
    TreeError,
    TreePoint,
    TreeSet,
    contains,
    point_set,
    segments_set,
    union,
    whole,
)


class DomainError(TreeError):
    """A point left the domain of a map (for towers: escaped the loaded prefix)."""


class NotSelfHomeomorphism(TreeError):
    pass


class InjectivityViolation(TreeError):
    pass


@dataclass(frozen=True, order=True)
class Piece:
    src: int
    a: Fraction
    b: Fraction
    dst: int
    c: Fraction
    d: Fraction

    @property
    def slope(self) -> Fraction:
        return (self.d - self.c) / (self.b - self.a)

    def at(self, t: Fraction) -> Fraction:
        return self.c + (t - self.a) * self.slope

    def pull(self, s: Fraction) -> Fraction:
        return self.a + (s - self.c) / self.slope


def _check_piece(p: Piece) -> Piece:
    if not p.a < p.b:
        raise TreeError(f"piece source interval must be increasing: {p}")
    if p.c == p.d:
        raise TreeError(f"piece collapses an interval: {p}")
    for x in (p.a, p.b, p.c, p.d):
        if not 0 <= x <= 1:
            raise TreeError(f"piece coordinate outside [0, 1]: {p}")
    return p


class PLMap:
    def __init__(self, tree: MTree, pieces):
        self.tree = tree
        self.pieces = tuple(sorted(_check_piece(_piece(p)) for p in pieces))
        self._by_edge: dict[int, list[Piece]] = {}
        for p in self.pieces:
            self._by_edge.setdefault(p.src, []).append(p)
        self._starts = {e: [p.a for p in ps] for e, ps in self._by_edge.items()}

    def __repr__(self) -> str:
        return f"PLMap({len(self.pieces)} pieces)"

    @classmethod
    def identity(cls, tree: MTree) -> "PLMap":
        return cls(tree, [(e, ZERO, ONE, e, ZERO, ONE) for e in range(len(tree.edges))])

    def _locate(self, p: TreePoint):
        tree = self.tree
        v = tree.vertex_of(p)
        if v is None:
            charts = [(p.edge, p.t)]
        else:
            charts = [(e, ZERO if tree.edges[e][0] == v else ONE) for e in tree.incident[v]]
        for e, t in charts:
            ps = self._by_edge.get(e)
            if not ps:
                continue
            i = bisect_right(self._starts[e], t) - 1
            for j in (i, i - 1):
                if 0 <= j < len(ps) and ps[j].a <= t <= ps[j].b:
                    return ps[j], t
        return None

    def __call__(self, p: TreePoint) -> TreePoint:
        p = self.tree.check(p)
        hit = self._locate(p)
        if hit is None:
            raise DomainError(f"{p} is outside the domain")
        piece, t = hit
        return self.tree.point(piece.dst, piece.at(t))

    def defined_at(self, p: TreePoint) -> bool:
        return self._locate(self.tree.check(p)) is not None

    def inverse(self) -> "PLMap":
        out = []
        for p in self.pieces:
            if p.c < p.d:
                out.append((p.dst, p.c, p.d, p.src, p.a, p.b))
            else:
                out.append((p.dst, p.d, p.c, p.src, p.b, p.a))
        return PLMap(self.tree, out)

    def compose(self, inner: "PLMap") -> "PLMap":
        """``self o inner`` on the part of inner's domain that lands in self's domain."""
        out = []
        for g in inner.pieces:
            lo, hi = min(g.c, g.d), max(g.c, g.d)
            for f in self._by_edge.get(g.dst, ()):
                s0, s1 = max(lo, f.a), min(hi, f.b)
                if s0 >= s1:
                    continue
                t0, t1 = sorted((g.pull(s0), g.pull(s1)))
                out.append((g.src, t0, t1, f.dst, f.at(g.at(t0)), f.at(g.at(t1))))
        return PLMap(self.tree, out)

    def breakpoints(self) -> list[TreePoint]:
        pts = set()
        for p in self.pieces:
            pts.add(self.tree.point(p.src, p.a))
            pts.add(self.tree.point(p.src, p.b))
        return sorted(pts)

    def domain(self) -> TreeSet:
        return segments_set(self.tree, [(p.src, p.a, p.b) for p in self.pieces])

    def image(self) -> TreeSet:
        return segments_set(self.tree, [(p.dst, p.c, p.d) for p in self.pieces])

    def restricted(self, edges) -> "PLMap":
        keep = set(edges)
        return PLMap(self.tree, [_astuple(p) for p in self.pieces if p.src in keep])

    def fixed_set(self) -> TreeSet:
        """Exact set of fixed points inside the domain."""
        tree = self.tree
        pts = []
        segs = []
        for p in self.pieces:
            if p.src == p.dst:
                k = p.slope
                if k == 1:
                    if p.c == p.a:
                        segs.append((p.src, p.a, p.b))
                else:
                    t = (p.c - p.a * k) / (1 - k)
                    if p.a <= t <= p.b:
                        pts.append(tree.point(p.src, t))
        for q in self.breakpoints():
            if self(q) == q:
                pts.append(q)
        return union(tree, segments_set(tree, segs), point_set(tree, pts))

    def lipschitz(self) -> Fraction:
        """Largest metric slope over the pieces."""
        L = self.tree.edge_length
        return max((abs(p.slope) * L(p.dst) / L(p.src) for p in self.pieces), default=ZERO)

    # -- certification ------------------------------------------------------

    def injectivity_violations(self) -> list[tuple[Piece, Piece]]:
        bad = []
        by_dst: dict[int, list[Piece]] = {}
        for p in self.pieces:
            by_dst.setdefault(p.dst, []).append(p)
        for ps in by_dst.values():
            for p, q in combinations(ps, 2):
                if min(max(p.c, p.d), max(q.c, q.d)) > max(min(p.c, p.d), min(q.c, q.d)):
                    bad.append((p, q))
        return bad

    def continuity_violations(self) -> list[TreePoint]:
        """Breakpoints where two pieces disagree."""
        tree = self.tree
        bad = []
        for q in self.breakpoints():
            vals = set()
            v = tree.vertex_of(q)
            charts = [(q.edge, q.t)] if v is None else [
                (e, ZERO if tree.edges[e][0] == v else ONE) for e in tree.incident[v]
            ]
            for e, t in charts:
                for p in self._by_edge.get(e, ()):
                    if p.a <= t <= p.b:
                        vals.add(tree.point(p.dst, p.at(t)))
            if len(vals) > 1:
                bad.append(q)
        return bad

    def certify_injective(self) -> None:
        bad = self.injectivity_violations()
        if bad:
            raise InjectivityViolation(f"overlapping piece images: {bad[0]}")
        # distinct breakpoints must have distinct images too
        seen = {}
        for q in self.breakpoints():
            img = self(q)
            if img in seen and seen[img] != q:
                raise InjectivityViolation(f"{seen[img]} and {q} share the image {img}")
            seen[img] = q

    def check_self_homeomorphism(self, on: TreeSet | None = None) -> None:
        """Raise unless the map is a homeomorphism of ``on`` (default: the tree)."""
        tree = self.tree
        target = whole(tree) if on is None else on
        if on is None:
            if self.domain() != target:
                raise NotSelfHomeomorphism("domain is not the whole tree")
            if self.image() != target:
                raise NotSelfHomeomorphism("image is not the whole tree")
        if self.continuity_violations():
            raise NotSelfHomeomorphism("map is discontinuous at a breakpoint")
        try:
            self.certify_injective()
        except InjectivityViolation as exc:
            raise NotSelfHomeomorphism(str(exc)) from None
        if on is not None:
            for q in self.breakpoints():
                if contains(tree, on, q) and not contains(tree, on, self(q)):
                    raise NotSelfHomeomorphism(f"{q} is mapped out of the invariant set")


def _piece(p) -> Piece:
    if isinstance(p, Piece):
        return p
    src, a, b, dst, c, d = p
    return Piece(int(src), Fraction(a), Fraction(b), int(dst), Fraction(c), Fraction(d))


def _astuple(p: Piece) -> tuple:
    return (p.src, p.a, p.b, p.dst, p.c, p.d)


def image_set(f: PLMap, s: TreeSet) -> TreeSet:
    """Exact image ``f(s ∩ domain)``; open and closed interval ends are preserved."""
    tree = f.tree
    per_edge: dict[int, list[Interval]] = {}
    pts = []
    for v in s.vertices:
        q = tree.vertex_point(v)
        if f.defined_at(q):
            pts.append(f(q))
    for e, ivs in s.pieces:
        for p in f._by_edge.get(e, ()):
            for iv in ivs:
                lo, hi = max(iv.lo, p.a), min(iv.hi, p.b)
                if lo > hi:
                    continue
                lo_in = iv.lo_closed if lo == iv.lo else True
                hi_in = iv.hi_closed if hi == iv.hi else True
                if lo == hi:
                    if lo_in and hi_in and 0 < lo < 1:
                        pts.append(tree.point(p.dst, p.at(lo)))
                    continue
                c, d = p.at(lo), p.at(hi)
                if c > d:
                    c, d, lo_in, hi_in = d, c, hi_in, lo_in
                for t, inside in ((c, lo_in), (d, hi_in)):
                    if inside:
                        pts.append(tree.point(p.dst, t))
                per_edge.setdefault(p.dst, []).append(Interval(c, d, lo_in and c > 0, hi_in and d < 1))
    raw = TreeSet(frozenset(), tuple(sorted((e, tuple(sorted(v))) for e, v in per_edge.items())))
    return union(tree, raw, point_set(tree, pts))
