"""Følner sets, empirical orbit measures, line partitions and the mass-escape diagnostic."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .dynamics import Line, PreconditionError, line_path
from .mtree import (
    TreeSet,
    contains,
    difference,
    intersection,
    is_connected,
    point_set,
    retract_fiber,
    union,
    whole,
)
from .plaction import EscapeError, GroupAction, Word, invert_word
from .tower import Model, ModelError, TowerPoint


class UnsupportedRule(ValueError):
    pass


# ---------------------------------------------------------------------------
# Group rules: canonical forms for exact counting


class FreeAbelian:
    """Z^r on named generators; elements are exponent vectors."""

    name = "free_abelian"

    def __init__(self, generators):
        self.generators = tuple(generators)

    def identity(self):
        return (0,) * len(self.generators)

    def mul(self, x, y):
        return tuple(a + b for a, b in zip(x, y))

    def gen(self, name, sign=1):
        k = self.generators.index(name)
        return tuple(sign if j == k else 0 for j in range(len(self.generators)))

    def word(self, x) -> Word:
        out = []
        for name, k in zip(self.generators, x):
            out.extend([(name, 1 if k > 0 else -1)] * abs(k))
        return tuple(out)

    def ball(self, i):
        """The box [-i, i]^r (the word ball when r = 1)."""
        out = [()]
        for _ in self.generators:
            out = [x + (k,) for x in out for k in range(-i, i + 1)]
        return out


class InfiniteDihedral:
    """D_inf = <a, b | b^2, (ba)^2>; element (k, e) stands for a^k b^e."""

    name = "infinite_dihedral"

    def __init__(self, rotation="a", reflection="b"):
        self.rotation, self.reflection = rotation, reflection
        self.generators = (rotation, reflection)

    def identity(self):
        return (0, 0)

    def mul(self, x, y):
        k, e = x
        k2, e2 = y
        return (k + (-k2 if e else k2), (e + e2) % 2)

    def gen(self, name, sign=1):
        if name == self.rotation:
            return (sign, 0)
        if name == self.reflection:
            return (0, 1)
        raise KeyError(name)

    def word(self, x) -> Word:
        k, e = x
        out = [(self.rotation, 1 if k > 0 else -1)] * abs(k)
        if e:
            out.append((self.reflection, 1))
        return tuple(out)

    def ball(self, i):
        """Elements of word length <= i in {a, b}."""
        return [(k, 0) for k in range(-i, i + 1)] + [(k, 1) for k in range(-i + 1, i)]


class FiniteTable:
    """A finite group from an explicit multiplication table."""

    name = "finite_table"

    def __init__(self, elements, table, generators, identity):
        self.elements = tuple(elements)
        self.table = dict(table)
        self.gens = dict(generators)
        self.generators = tuple(self.gens)
        self._id = identity
        self._inv = {x: next(y for y in self.elements if self.table[(x, y)] == identity) for x in self.elements}
        self._words = self._shortest_words()

    def identity(self):
        return self._id

    def mul(self, x, y):
        return self.table[(x, y)]

    def gen(self, name, sign=1):
        x = self.gens[name]
        return x if sign == 1 else self._inv[x]

    def _shortest_words(self):
        words = {self._id: ()}
        queue = deque([self._id])
        while queue:
            x = queue.popleft()
            for name in self.generators:
                for sign in (1, -1):
                    y = self.mul(self.gen(name, sign), x)
                    if y not in words:
                        words[y] = ((name, sign),) + words[x]
                        queue.append(y)
        return words

    def word(self, x) -> Word:
        return self._words[x]

    def ball(self, i):
        return [x for x in self.elements if len(self._words.get(x, ())) <= i and x in self._words]


def rule_from_spec(spec: dict):
    kind = spec.get("rule")
    if kind == "free_abelian":
        return FreeAbelian(spec["generators"])
    if kind == "infinite_dihedral":
        return InfiniteDihedral(spec.get("rotation", "a"), spec.get("reflection", "b"))
    if kind == "finite_table":
        elems = spec["elements"]
        table = {(x, y): spec["table"][i][j] for i, x in enumerate(elems) for j, y in enumerate(elems)}
        return FiniteTable(elems, table, spec["generators"], spec["identity"])
    raise UnsupportedRule(f"unsupported group rule {kind!r}")


def _is_word(x) -> bool:
    return isinstance(x, tuple) and all(isinstance(t, tuple) and len(t) == 2 and isinstance(t[0], str) for t in x)


def element_of(rule, w: Word):
    x = rule.identity()
    for name, e in w:
        x = rule.mul(x, rule.gen(name, e))
    return x


@dataclass(frozen=True)
class FolnerSpec:
    rule: object
    explicit: tuple[tuple[Word, ...], ...] = ()

    def elements(self, i: int) -> list:
        if self.explicit:
            seq = self.explicit[min(i, len(self.explicit) - 1)]
            return sorted({element_of(self.rule, w) for w in seq})
        return sorted(self.rule.ball(i))

    def words(self, i: int) -> list[Word]:
        return [self.rule.word(x) for x in self.elements(i)]


def folner_defect(rule, F, g: str) -> Fraction:
    """|gF △ F| / |F| after reduction to canonical forms; ``F`` may hold words or elements."""
    elems = {element_of(rule, x) if _is_word(x) else x for x in F}
    if not elems:
        raise ValueError("empty Følner set")
    h = rule.gen(g)
    moved = {rule.mul(h, x) for x in elems}
    return Fraction(len(moved ^ elems), len(elems))


# ---------------------------------------------------------------------------
# Empirical measures


@dataclass(frozen=True)
class EmpiricalMeasure:
    atoms: tuple[tuple[TowerPoint, Fraction], ...]

    def __post_init__(self):
        if sum(w for _, w in self.atoms) != 1 or any(w <= 0 for _, w in self.atoms):
            raise ValueError("not a probability measure")

    def mass(self, pred) -> Fraction:
        return sum((w for x, w in self.atoms if pred(x)), Fraction(0))


def empirical_measure(action: GroupAction, words, x0: TowerPoint) -> EmpiricalMeasure:
    """Uniform average of point masses over ``w . x0`` for ``w`` in the Følner set."""
    words = list(words)
    if not words:
        raise ValueError("empty Følner set")
    q0 = action.to_tree(x0)
    counts: dict = {}
    for w in words:
        y = action.apply_tree(w, q0)
        counts[y] = counts.get(y, 0) + 1
    k = len(words)
    lt = action.lt
    return EmpiricalMeasure(tuple(sorted((lt.to_tower(y), Fraction(c, k)) for y, c in counts.items())))


def set_mass(action: GroupAction, mu: EmpiricalMeasure, s: TreeSet) -> Fraction:
    tree = action.lt.tree
    return mu.mass(lambda x: contains(tree, s, action.lt.to_tree(x)))


def pushed_mass(action: GroupAction, mu: EmpiricalMeasure, w: Word, s: TreeSet) -> Fraction:
    """mu(w^-1 s), i.e. the mass of atoms x with w . x in s."""
    tree = action.lt.tree

    def pred(x):
        return contains(tree, s, action.apply_tree(w, action.lt.to_tree(x)))

    return mu.mass(pred)


def translated_mass(action: GroupAction, mu: EmpiricalMeasure, w: Word, s: TreeSet) -> Fraction:
    """mu(w s): x lies in w(s) iff w^-1 . x lies in s."""
    return pushed_mass(action, mu, invert_word(w), s)


# ---------------------------------------------------------------------------
# Line partitions


@dataclass(frozen=True)
class LinePartition:
    line: Line
    labels: tuple[str, ...]
    cells: tuple[TreeSet, ...]
    line_set: TreeSet

    def cell(self, label: str) -> TreeSet:
        return self.cells[self.labels.index(label)]


def _half_open(tree, path, tower, n, t0, t1) -> TreeSet:
    s = path.tree_set(tower, n, t0, t1)
    if t1 <= path.hi:
        s = difference(tree, s, point_set(tree, [tower.level(n).to_tree(path.point(tower, t1))]))
    return s


def line_partition(model: Model, line: Line, window: tuple[int, int], mode: str = "cells", z=None, a=None, t=None) -> LinePartition:
    """Cells K_m = r_L^-1(psi([m, m+1))) for m in the window plus two tails, or (P_t, Q_t)."""
    tw = model.tower
    n = len(tw)
    lt = tw.level(n)
    tree = lt.tree
    path = line_path(model, line, n)
    lset = path.tree_set(tw, n)
    if mode == "cells":
        lo, hi = window
        if not path.lo <= lo < hi <= path.hi:
            raise ModelError(f"window {window} outside the line parameters [{path.lo}, {path.hi}]")
        bounds = [path.lo] + list(range(lo, hi + 1)) + [path.hi]
        labels, cells = [], []
        for k, (u, v) in enumerate(zip(bounds, bounds[1:])):
            if u == v:
                continue
            last = k == len(bounds) - 2
            z_set = path.tree_set(tw, n, u, v) if last else _half_open(tree, path, tw, n, u, v)
            labels.append("tail-" if k == 0 else "tail+" if last else str(u))
            cells.append(retract_fiber(tree, lset, z_set))
        return LinePartition(line, tuple(labels), tuple(cells), lset)
    if mode == "two_sets":
        if z is None or a is None or t is None:
            raise PreconditionError("two_sets mode needs z, a and t")
        zp, ap = path.param(tw, z), path.param(tw, a)
        lo_, hi_ = sorted((zp, ap))
        p_base = _half_open(tree, path, tw, n, lo_, hi_)
        q_base = path.tree_set(tw, n, t)
        return LinePartition(
            line, ("P_t", "Q_t"), (retract_fiber(tree, lset, p_base), retract_fiber(tree, lset, q_base)), lset
        )
    raise ValueError(f"unknown partition mode {mode!r}")


def partition_checks(model: Model, part: LinePartition) -> dict:
    """Exact disjointness, covering and connectivity of the cells."""
    tree = model.tower.level(len(model.tower)).tree
    disjoint = all(
        intersection(tree, a, b).is_empty()
        for i, a in enumerate(part.cells)
        for b in part.cells[i + 1 :]
    )
    covers = union(tree, *part.cells) == whole(tree)
    connected = all(is_connected(tree, c) for c in part.cells if not c.is_empty())
    return {"disjoint": disjoint, "covers": covers, "connected": connected}


def invariance_defect(action: GroupAction, mu: EmpiricalMeasure, cells, g: str) -> Fraction:
    """sup over cells of |mu(g^-1 C) - mu(C)|."""
    return max(abs(pushed_mass(action, mu, ((g, 1),), c) - set_mass(action, mu, c)) for c in cells)


# ---------------------------------------------------------------------------
# Mass escape


@dataclass(frozen=True)
class EscapeTable:
    cell: str
    rows: tuple[tuple[int, Fraction, Fraction | None], ...]
    verdict: str
    threshold: int | None


def escape_verdict(values) -> tuple[str, int | None]:
    """"mass escapes" when from some index i0 <= imax/2 the masses never increase
    and end at most half of a positive mass at i0; otherwise "no escape"."""
    imax = len(values) - 1
    for i0 in range(0, imax // 2 + 1):
        tail = values[i0:]
        if tail[0] > 0 and all(a >= b for a, b in zip(tail, tail[1:])) and 2 * tail[-1] <= tail[0]:
            return "mass escapes", i0
    return "no escape", None


def escape_diagnostic(action: GroupAction, model: Model, line: Line, folner: FolnerSpec, m, imax: int, x0: TowerPoint, shift: Word | None = None, c2=None) -> EscapeTable:
    """Decay table of mu_{F_i}(K_m) and, given a shift word s, of mu_{F_i}(B minus s^i B)
    with B = r_L^-1(psi([c2, +inf)))."""
    if imax < 2:
        raise ValueError("imax must be at least 2")
    tw = model.tower
    path = line_path(model, line)
    lo = int(m)
    part = line_partition(model, line, (lo, lo + 1))
    cell = part.cell(str(lo))
    base = None
    if shift is not None:
        if c2 is None:
            raise PreconditionError("the shift witness needs c2")
        n = len(tw)
        base = retract_fiber(tw.level(n).tree, part.line_set, path.tree_set(tw, n, c2))
    rows = []
    for i in range(imax + 1):
        mu = empirical_measure(action, folner.words(i), x0)
        km = set_mass(action, mu, cell)
        extra = None
        if base is not None:
            si = shift * i
            try:
                extra = set_mass(action, mu, base) - mu.mass(
                    lambda x: contains(action.lt.tree, base, action.lt.to_tree(x))
                    and contains(action.lt.tree, base, action.apply_tree(invert_word(si), action.lt.to_tree(x)))
                )
            except EscapeError:
                extra = None
        rows.append((i, km, extra))
    verdict, thr = escape_verdict([r[1] for r in rows])
    return EscapeTable(str(lo), tuple(rows), verdict, thr)
