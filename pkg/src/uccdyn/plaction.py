"""Tower-compatible PL homeomorphisms, words, orbit hulls and induced maps.

A generator is a list of affine pieces between chart intervals of tower arcs
plus a set of arcs it fixes pointwise.  It acts on the loaded prefix T_N
through a ``PLMap`` on the level-N tree; images leaving T_N are escapes.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from .mtree import TreeSet, TreePoint, convex_hull, contains, segments_set
from .plmap import DomainError, PLMap
from .tower import LevelError, Tower, TowerPoint

Word = tuple[tuple[str, int], ...]


class EscapeError(DomainError):
    """An intermediate image left the loaded tower prefix."""


class PrefixExhausted(LevelError):
    pass


class RelationViolation(ValueError):
    pass


@dataclass(frozen=True, order=True)
class TowerPiece:
    src: int
    a: Fraction
    b: Fraction
    dst: int
    c: Fraction
    d: Fraction


@dataclass(frozen=True)
class PLHomeo:
    name: str
    pieces: tuple[TowerPiece, ...] = ()
    fixes: tuple[int, ...] = ()

    def inverse(self) -> "PLHomeo":
        inv = []
        for p in self.pieces:
            if p.c < p.d:
                inv.append(TowerPiece(p.dst, p.c, p.d, p.src, p.a, p.b))
            else:
                inv.append(TowerPiece(p.dst, p.d, p.c, p.src, p.b, p.a))
        return PLHomeo(self.name + "^-1", tuple(sorted(inv)), self.fixes)


def _split_points(lo, hi, pts):
    return [lo] + sorted(p for p in set(pts) if lo < p < hi) + [hi]


def homeo_to_plmap(h: PLHomeo, tower: Tower, n: int) -> PLMap:
    """The generator on the level-n tree; pieces whose image leaves T_n are dropped."""
    lt = tower.level(n)
    out = []

    def chart(arc, s0, s1):
        br = lt.breaks[arc]
        lo_s, hi_s = min(s0, s1), max(s0, s1)
        for k, e in enumerate(lt.edge_index[arc]):
            lo, hi = br[k], br[k + 1]
            if lo <= lo_s and hi_s <= hi:
                return e, (s0 - lo) / (hi - lo), (s1 - lo) / (hi - lo)
        raise AssertionError("sub-interval spans a breakpoint")

    for p in h.pieces:
        if p.src > n or p.dst > n:
            continue
        slope = (p.d - p.c) / (p.b - p.a)
        pulled = [p.a + (s - p.c) / slope for s in lt.breaks[p.dst]]
        cuts = _split_points(p.a, p.b, list(lt.breaks[p.src]) + pulled)
        for s0, s1 in zip(cuts, cuts[1:]):
            e, t0, t1 = chart(p.src, s0, s1)
            f, u0, u1 = chart(p.dst, p.c + (s0 - p.a) * slope, p.c + (s1 - p.a) * slope)
            out.append((e, t0, t1, f, u0, u1))
    for arc in h.fixes:
        if arc <= n:
            out.extend((e, 0, 1, e, 0, 1) for e in lt.edge_index[arc])
    return PLMap(lt.tree, out)


# ---------------------------------------------------------------------------
# Paths in the tower and maps defined through a path parameter


@dataclass(frozen=True)
class Step:
    arc: int
    s0: Fraction
    s1: Fraction
    p0: Fraction
    p1: Fraction


@dataclass(frozen=True)
class Path:
    """An injective PL path: chart ``s0 -> s1`` of ``arc`` runs over parameters ``p0 -> p1``."""

    steps: tuple[Step, ...]

    def __post_init__(self):
        for st in self.steps:
            if not st.p0 < st.p1 or st.s0 == st.s1:
                raise ValueError(f"degenerate path step {st}")
        for u, v in zip(self.steps, self.steps[1:]):
            if u.p1 != v.p0:
                raise ValueError("path parameters must be contiguous")

    @property
    def lo(self) -> Fraction:
        return self.steps[0].p0

    @property
    def hi(self) -> Fraction:
        return self.steps[-1].p1

    def point(self, tower: Tower, t) -> TowerPoint:
        t = Fraction(t)
        for st in self.steps:
            if st.p0 <= t <= st.p1:
                s = st.s0 + (t - st.p0) / (st.p1 - st.p0) * (st.s1 - st.s0)
                return tower.canon(TowerPoint(st.arc, s))
        raise DomainError(f"parameter {t} outside the path [{self.lo}, {self.hi}]")

    def param(self, tower: Tower, x: TowerPoint) -> Fraction | None:
        for al in tower.aliases(x):
            for st in self.steps:
                if st.arc != al.arc:
                    continue
                lo, hi = sorted((st.s0, st.s1))
                if lo <= al.s <= hi:
                    return st.p0 + (al.s - st.s0) / (st.s1 - st.s0) * (st.p1 - st.p0)
        return None

    def arcs(self) -> tuple[int, ...]:
        return tuple(dict.fromkeys(st.arc for st in self.steps))

    def sub(self, t0, t1) -> "Path":
        t0, t1 = Fraction(t0), Fraction(t1)
        out = []
        for st in self.steps:
            a, b = max(st.p0, t0), min(st.p1, t1)
            if a < b:
                f = lambda t: st.s0 + (t - st.p0) / (st.p1 - st.p0) * (st.s1 - st.s0)
                out.append(Step(st.arc, f(a), f(b), a, b))
        return Path(tuple(out))

    def tree_set(self, tower: Tower, n: int, t0=None, t1=None) -> TreeSet:
        """The image of ``[t0, t1]`` (clipped to the path and to T_n) in the level-n tree."""
        lt = tower.level(n)
        t0 = self.lo if t0 is None else max(Fraction(t0), self.lo)
        t1 = self.hi if t1 is None else min(Fraction(t1), self.hi)
        pts = []
        segs = []
        for st in self.sub(t0, t1).steps if t0 < t1 else ():
            if st.arc > n:
                continue
            seg = lt.arc_set(st.arc, st.s0, st.s1)
            segs.extend((e, iv.lo, iv.hi) for e, ivs in seg.pieces for iv in ivs)
            pts.extend(lt.tree.vertex_point(v) for v in seg.vertices)
        if t0 == t1:
            p = self.point(tower, t0)
            if p.arc <= n:
                pts.append(lt.to_tree(p))
        return segments_set(lt.tree, segs, extra=pts)


def path_homeo(name: str, tower: Tower, path: Path, segments, identity_elsewhere: bool = True) -> PLHomeo:
    """A map given on the path parameter by affine pieces ``(p0, p1) -> (q0, q1)``.

    Pieces are clipped to the part of the path whose image stays on the path;
    arcs off the path are fixed pointwise when ``identity_elsewhere``.
    """
    bps = sorted({st.p0 for st in path.steps} | {path.hi})
    out = []
    for p0, p1, q0, q1 in segments:
        p0, p1, q0, q1 = map(Fraction, (p0, p1, q0, q1))
        k = (q1 - q0) / (p1 - p0)
        f = lambda t: q0 + (t - p0) * k
        g = lambda s: p0 + (s - q0) / k
        lo, hi = max(p0, path.lo), min(p1, path.hi)
        ilo, ihi = sorted((g(path.lo), g(path.hi)))
        lo, hi = max(lo, ilo), min(hi, ihi)
        if lo >= hi:
            continue
        cuts = _split_points(lo, hi, bps + [g(b) for b in bps])
        for t0, t1 in zip(cuts, cuts[1:]):
            mid = (t0 + t1) / 2
            src = next(st for st in path.steps if st.p0 <= mid <= st.p1)
            fm = f(mid)
            dst = next(st for st in path.steps if st.p0 <= fm <= st.p1)

            def chart(st, t):
                return st.s0 + (t - st.p0) / (st.p1 - st.p0) * (st.s1 - st.s0)

            a, b = chart(src, t0), chart(src, t1)
            c, d = chart(dst, f(t0)), chart(dst, f(t1))
            if a > b:
                a, b, c, d = b, a, d, c
            out.append(TowerPiece(src.arc, a, b, dst.arc, c, d))
    fixes = ()
    if identity_elsewhere:
        on_path = set(path.arcs())
        fixes = tuple(i for i in range(1, len(tower) + 1) if i not in on_path)
    return PLHomeo(name, tuple(sorted(out)), fixes)


# ---------------------------------------------------------------------------
# Words


_TOKEN = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(?:\^(-?[1-9][0-9]*))?$")


def parse_word(text: str) -> Word:
    """``"b*a*b^-1"`` -> ``(("b", 1), ("a", 1), ("b", -1))``; ``"a^3"`` expands to three
    letters; ``""`` or ``"e"`` is empty."""
    text = text.strip()
    if text in ("", "e", "1"):
        return ()
    out = []
    for tok in text.split("*"):
        m = _TOKEN.match(tok.strip())
        if not m:
            raise ValueError(f"bad word token {tok!r}")
        k = int(m.group(2) or 1)
        out.extend([(m.group(1), 1 if k > 0 else -1)] * abs(k))
    return tuple(out)


def format_word(w: Word) -> str:
    if not w:
        return "e"
    return "*".join(n if e == 1 else f"{n}^-1" for n, e in w)


def reduce_word(w: Word) -> Word:
    out: list[tuple[str, int]] = []
    for x in w:
        if out and out[-1][0] == x[0] and out[-1][1] == -x[1]:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def invert_word(w: Word) -> Word:
    return tuple((n, -e) for n, e in reversed(w))


# ---------------------------------------------------------------------------
# Actions


class GroupAction:
    def __init__(self, tower: Tower, generators, relations=()):
        self.tower = tower
        self.generators: dict[str, PLHomeo] = {g.name: g for g in generators}
        self.relations: tuple[Word, ...] = tuple(relations)
        self.level = len(tower)
        for w in self.relations:
            for n, _ in w:
                if n not in self.generators:
                    raise KeyError(f"relation uses unknown generator {n!r}")

    def __repr__(self) -> str:
        return f"GroupAction({sorted(self.generators)}, N={self.level})"

    @property
    def names(self) -> list[str]:
        return list(self.generators)

    @cached_property
    def lt(self):
        return self.tower.level(self.level)

    @cached_property
    def _maps(self) -> dict[tuple[str, int], PLMap]:
        out = {}
        for name, h in self.generators.items():
            m = homeo_to_plmap(h, self.tower, self.level)
            out[(name, 1)] = m
            out[(name, -1)] = m.inverse()
        return out

    def plmap(self, name: str, sign: int = 1) -> PLMap:
        return self._maps[(name, sign)]

    def word_map(self, w: Word) -> PLMap:
        """Composite PLMap of ``w`` on the loaded prefix (partial where it escapes)."""
        out = PLMap.identity(self.lt.tree)
        for name, e in reversed(w):
            out = self.plmap(name, e).compose(out)
        return out

    def apply_tree(self, w: Word, q: TreePoint) -> TreePoint:
        for name, e in reversed(w):
            try:
                q = self._maps[(name, e)](q)
            except KeyError:
                raise KeyError(f"unknown generator {name!r}") from None
            except DomainError as exc:
                raise EscapeError(f"word {format_word(w)} escapes T_{self.level}: {exc}") from None
        return q

    def to_tree(self, x: TowerPoint) -> TreePoint:
        try:
            return self.lt.to_tree(x)
        except LevelError as exc:
            raise EscapeError(str(exc)) from None


def evaluate_word(action: GroupAction, w: Word, x: TowerPoint) -> TowerPoint:
    """Right-to-left action of ``w`` on a tower point."""
    if isinstance(w, str):
        w = parse_word(w)
    return action.lt.to_tower(action.apply_tree(w, action.to_tree(x)))


def relation_violations(action: GroupAction, level: int | None = None) -> list[tuple[str, TowerPoint]]:
    """(relation, point) pairs where a declared relation moves a test point.

    Test points are the vertices of the level tree (by default the whole
    prefix); points whose evaluation escapes are skipped.
    """
    n = action.level if level is None else level
    lt = action.tower.level(n)
    bad = []
    for w in action.relations:
        for v in lt.tree.vertices:
            x = lt.to_tower(lt.tree.vertex_point(v))
            try:
                y = evaluate_word(action, w, x)
            except EscapeError:
                continue
            if y != x:
                bad.append((format_word(w), x))
    return bad


def compatibility_levels(action: GroupAction, n: int) -> dict[str, int]:
    """Smallest m(n) with g(T_n) inside T_m, per generator."""
    out = {}
    for name, h in action.generators.items():
        covered = {i for i in h.fixes if i <= n}
        m = max(covered, default=1)
        for p in h.pieces:
            if p.src <= n:
                covered.add(p.src)
                m = max(m, p.dst)
        missing = [i for i in range(1, n + 1) if i not in covered]
        if missing:
            raise PrefixExhausted(f"{name} is not defined on arc {missing[0]}")
        if m > action.level:
            raise PrefixExhausted(f"{name}(T_{n}) needs level {m} > {action.level}")
        out[name] = m
    return out


def orbit_hull(action: GroupAction, p: TowerPoint, r: int):
    """Orbit points of words of length <= r and their convex hull in T_N.

    Returns ``(points, hull, words)`` where ``words`` maps each orbit point to
    a shortest word reaching it.
    """
    start = action.to_tree(p)
    seen = {start: ()}
    frontier = deque([(start, ())])
    letters = [(n, e) for n in action.generators for e in (1, -1)]
    while frontier:
        q, w = frontier.popleft()
        if len(w) >= r:
            continue
        for x in letters:
            y = action.apply_tree((x,), q)
            if y not in seen:
                seen[y] = (x,) + w
                frontier.append((y, (x,) + w))
    pts = sorted(seen)
    hull = convex_hull(action.lt.tree, pts)
    words = {action.lt.to_tower(q): w for q, w in seen.items()}
    return sorted(words), hull, words


def orbit_closes(action: GroupAction, p: TowerPoint, limit: int = 64):
    """Finite orbit of ``p`` by breadth-first search, or ``None`` if it does not close."""
    start = action.to_tree(p)
    seen = {start}
    frontier = deque([start])
    while frontier:
        q = frontier.popleft()
        for n in action.generators:
            for e in (1, -1):
                try:
                    y = action.apply_tree(((n, e),), q)
                except EscapeError:
                    return None
                if y not in seen:
                    seen.add(y)
                    if len(seen) > limit:
                        return None
                    frontier.append(y)
    return sorted(seen)


@dataclass(frozen=True)
class Modulus:
    generator: str
    eps: Fraction
    delta: Fraction
    lipschitz: Fraction
    level: int
    image_level: int


def induced_map(action: GroupAction, name: str, n: int, sign: int = 1) -> PLMap:
    """The generator restricted to T_n inside the approximant, certified injective."""
    compatibility_levels(action, n)
    lt = action.lt
    edges = [e for i in range(1, n + 1) for e in lt.edge_index[i]]
    m = action.plmap(name, sign).restricted(edges)
    if m.domain() != action.tower.level(action.level).level_set(n):
        raise PrefixExhausted(f"{name} is not defined on all of T_{n}")
    m.certify_injective()
    return m


def continuity_modulus(action: GroupAction, name: str, eps, n: int) -> Modulus:
    """A delta with d(gu, gv) < eps whenever d(u, v) < delta on T_n.

    d is the path metric of the approximant and g is PL, so
    d(gu, gv) <= C d(u, v) with C the largest metric slope of g on T_n.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    m = induced_map(action, name, n)
    c = m.lipschitz()
    levels = compatibility_levels(action, n)
    return Modulus(name, eps, eps / c, c, n, levels[name])


def enumerate_elements(action: GroupAction, radius: int, test_points) -> dict[tuple, Word]:
    """Distinct group elements of word length <= radius, told apart on test points.

    Returns a map from the action signature (images of the test points, with
    ``None`` for escapes) to a shortest word.
    """
    test = [action.to_tree(x) for x in test_points]

    def sig(w):
        out = []
        for q in test:
            try:
                out.append(action.apply_tree(w, q))
            except EscapeError:
                out.append(None)
        return tuple(out)

    found = {sig(()): ()}
    frontier = [()]
    letters = [(n, e) for n in action.generators for e in (1, -1)]
    for _ in range(radius):
        nxt = []
        for w in frontier:
            for x in letters:
                v = reduce_word((x,) + w)
                if len(v) <= len(w):
                    continue
                s = sig(v)
                if s not in found:
                    found[s] = v
                    nxt.append(v)
        frontier = nxt
    return found


def in_set(action: GroupAction, s: TreeSet, x: TowerPoint) -> bool:
    return contains(action.lt.tree, s, action.to_tree(x))
