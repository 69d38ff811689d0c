"""Bundled scenarios: Warsaw-type zigzags, the H tower, line and ray actions, a rotated star."""

from __future__ import annotations

import json
from fractions import Fraction as Q

from .dynamics import Line, Ray
from .mtree import MTree
from .plaction import Path, Step, TowerPiece
from .plmap import PLMap
from .scenario import GenSpec, RunSpec, Scenario
from .tower import ArcSpec, Attachment, End, LimitSet, Tower, TowerPoint


def _zigzag_arcs(depth: int, stem: int, offset: int) -> list[ArcSpec]:
    """I+k, I-k, J+k, J-k for k = 1..depth, hanging from the top of arc ``stem``.

    ``offset`` is the number of arcs preceding the zigzags.
    """
    arcs = []
    idx = {}
    for k in range(1, depth + 1):
        for sign, tag in ((1, "+"), (-1, "-")):
            x0, x1 = sign * Q(k - 1, k), sign * Q(k, k + 1)
            if k == 1:
                att = Attachment(stem, Q(1), Q(0))
            else:
                att = Attachment(idx[f"J{tag}{k - 1}"], Q(1), Q(0))
            arcs.append(ArcSpec(f"I{tag}{k}", (att,), ((x0, Q(0)), (x1, Q(1)))))
            idx[f"I{tag}{k}"] = offset + len(arcs)
        for sign, tag in ((1, "+"), (-1, "-")):
            x = sign * Q(k, k + 1)
            arcs.append(ArcSpec(f"J{tag}{k}", (Attachment(idx[f"I{tag}{k}"], Q(1), Q(0)),), ((x, Q(1)), (x, Q(0)))))
            idx[f"J{tag}{k}"] = offset + len(arcs)
    return arcs


def _chain(tw: Tower, tag: str) -> tuple[int, ...]:
    return tuple(i for i, a in enumerate(tw.arcs, 1) if a.name[1:2] == tag and a.name[0] in "IJ")


def _unit_path(tw: Tower, chain) -> Path:
    return Path(tuple(Step(a, Q(0), Q(1), Q(k), Q(k + 1)) for k, a in enumerate(chain)))


def warsaw(depth: int = 16) -> Scenario:
    """Sides L, R, bottom B, stem M and two zigzags S- and S+ accumulating on L and R."""
    base = [
        ArcSpec("B", (), ((Q(-1), Q(-1)), (Q(1), Q(-1)))),
        ArcSpec("M", (Attachment(1, Q(1, 2), Q(0)),), ((Q(0), Q(-1)), (Q(0), Q(0)))),
        ArcSpec("L", (Attachment(1, Q(0), Q(0)),), ((Q(-1), Q(-1)), (Q(-1), Q(1)))),
        ArcSpec("R", (Attachment(1, Q(1), Q(0)),), ((Q(1), Q(-1)), (Q(1), Q(1)))),
    ]
    tw = Tower(tuple(base + _zigzag_arcs(depth, 2, 4)))
    plus, minus = _chain(tw, "+"), _chain(tw, "-")
    ends = (End("S+", plus), End("S-", minus))
    limits = (("S+", LimitSet("arc", 4, Q(1, 2), Q(1))), ("S-", LimitSet("arc", 3, Q(1, 2), Q(1))))
    p00 = tw.point("M", 1)
    s_plus = _unit_path(tw, plus)
    s_minus = _unit_path(tw, minus)
    big = Q(len(plus))
    rays = (
        Ray("S-", p00, end="S-"),
        Ray("S+", p00, end="S+"),
        Ray("L-", tw.point("L", 0), limit=tw.point("L", 1)),
        Line("S-S+", Ray("S-", p00, end="S-"), Ray("S+", p00, end="S+")),
    )
    push = GenSpec("push", "S+", ((Q(0), Q(2), Q(0), Q(4)), (Q(2), big, Q(4), big + 2)))
    return Scenario(
        name="warsaw",
        tower=tw,
        ends=ends,
        limits=limits,
        paths=(("S+", s_plus), ("S-", s_minus)),
        rays=rays,
        generators=(push,),
        relations=(),
        folner=json.dumps({"rule": "free_abelian", "generators": ["push"]}, sort_keys=True),
        run=RunSpec(base=p00, level=12, radius=6, ray="S+", line="S-S+", cell=0, imax=8),
        commands=("validate", "dendrite-check", "find-periodic", "classify-ray", "render"),
        description="Warsaw-circle model: a bottom arc with two sides, a stem, and zigzags "
        "S- and S+ whose tails accumulate on sub-arcs of the sides; push moves S+ outward.",
    )


def h_tower(depth: int = 8) -> Scenario:
    """The zigzag tower without the sides; its completion is an H-shaped tree."""
    base = [
        ArcSpec("B", (), ((Q(-1), Q(-1)), (Q(1), Q(-1)))),
        ArcSpec("M", (Attachment(1, Q(1, 2), Q(0)),), ((Q(0), Q(-1)), (Q(0), Q(0)))),
    ]
    tw = Tower(tuple(base + _zigzag_arcs(depth, 2, 2)))
    ends = (End("S+", _chain(tw, "+")), End("S-", _chain(tw, "-")))
    return Scenario(
        name="h_tower",
        tower=tw,
        ends=ends,
        run=RunSpec(level=12),
        commands=("validate", "dendrite-check", "render"),
        description="Bottom arc, stem and both zigzags; the d-completion adds the two ideal ends.",
    )


def _line_tower(k: int, planar: bool = True) -> tuple[Tower, Path]:
    """Unit arcs psi[j, j+1] added alternately right and left of psi(0)."""
    def x(t):
        return (1 - Q(1, 2**t)) if t >= 0 else -(1 - Q(1, 2 ** (-t)))

    arcs, where = [], {}
    for j in range(k):
        for lo in (j, -j - 1):
            i = len(arcs) + 1
            if i == 1:
                att = ()
            elif lo >= 0:
                att = (Attachment(where[lo - 1], Q(1), Q(0)),)
            else:
                att = (Attachment(where[lo + 1], Q(0), Q(1)),)
            pl = ((x(lo), Q(0)), (x(lo + 1), Q(0))) if planar else None
            arcs.append(ArcSpec(f"psi[{lo},{lo + 1}]", att, pl))
            where[lo] = i
    tw = Tower(tuple(arcs))
    steps = tuple(Step(where[lo], Q(0), Q(1), Q(lo), Q(lo + 1)) for lo in range(-k, k))
    return tw, Path(steps)


def _line_ends(tw: Tower):
    plus = tuple(i for i in range(1, len(tw) + 1, 2))
    minus = tuple(i for i in range(2, len(tw) + 1, 2))
    ends = (End("+", plus), End("-", minus))
    limits = (
        ("+", LimitSet("external", name="east", planar=(Q(1), Q(0)))),
        ("-", LimitSet("external", name="west", planar=(Q(-1), Q(0)))),
    )
    return ends, limits


def _line_rays(o):
    return (
        Ray("+", o, end="+"),
        Ray("-", o, end="-"),
        Line("psi", Ray("-", o, end="-"), Ray("+", o, end="+")),
    )


def dihedral_arc(k: int = 24) -> Scenario:
    """D_inf on the line compactified to an arc: a(t) = t + 1, b(t) = -t."""
    tw, psi = _line_tower(k)
    ends, limits = _line_ends(tw)
    o = psi.point(tw, 0)
    K = Q(k)
    gens = (
        GenSpec("a", "psi", ((-K, K, -K + 1, K + 1),)),
        GenSpec("b", "psi", ((-K, K, K, -K),)),
    )
    return Scenario(
        name="dihedral_arc",
        tower=tw,
        ends=ends,
        limits=limits,
        paths=(("psi", psi),),
        rays=_line_rays(o),
        generators=gens,
        relations=("b*b", "b*a*b*a"),
        folner=json.dumps({"rule": "infinite_dihedral", "rotation": "a", "reflection": "b"}, sort_keys=True),
        run=RunSpec(base=o, level=10, radius=6, ray="+", line="psi", cell=0, imax=10),
        description="Translation a and reflection b of the line; the two ends form the 2-periodic orbit.",
    )


def z_line(k: int = 24) -> Scenario:
    """Translation only; orbit mass escapes to the ends."""
    tw, psi = _line_tower(k)
    ends, limits = _line_ends(tw)
    o = psi.point(tw, 0)
    K = Q(k)
    return Scenario(
        name="z_line",
        tower=tw,
        ends=ends,
        limits=limits,
        paths=(("psi", psi),),
        rays=_line_rays(o),
        generators=(GenSpec("a", "psi", ((-K, K, -K + 1, K + 1),)),),
        folner=json.dumps({"rule": "free_abelian", "generators": ["a"]}, sort_keys=True),
        run=RunSpec(base=o, level=10, radius=6, ray="+", line="psi", cell=0, imax=20, shift="a", c2=Q(1)),
        description="The shift t -> t + 1 on the line; Følner averages of an orbit lose mass on every cell.",
    )


def fixed_line(k: int = 24) -> Scenario:
    """Contraction t -> t/2 fixing psi(0); orbit mass accumulates at the fixed point."""
    tw, psi = _line_tower(k)
    ends, limits = _line_ends(tw)
    K = Q(k)
    return Scenario(
        name="fixed_line",
        tower=tw,
        ends=ends,
        limits=limits,
        paths=(("psi", psi),),
        rays=_line_rays(psi.point(tw, 0)),
        generators=(GenSpec("h", "psi", ((-K, K, -K / 2, K / 2),)),),
        folner=json.dumps({"rule": "free_abelian", "generators": ["h"]}, sort_keys=True),
        run=RunSpec(base=psi.point(tw, 1), level=10, radius=4, ray="+", line="psi", cell=0, imax=4),
        description="The contraction t -> t/2 of the line with fixed point psi(0).",
    )


def z_ray(k: int = 12) -> Scenario:
    """Doubling t -> 2t on psi((0, +inf)); both ends are nonoscillatory."""
    arcs, by_lo, by_hi = [], {}, {}
    for j in range(k):
        for lo, hi, side in ((Q(2**j), Q(2 ** (j + 1)), 1), (Q(1, 2 ** (j + 1)), Q(1, 2**j), -1)):
            i = len(arcs) + 1
            if i == 1:
                att = ()
            elif side > 0:
                att = (Attachment(by_hi[lo], Q(1), Q(0)),)
            else:
                att = (Attachment(by_lo[hi], Q(0), Q(1)),)
            pl = ((lo / (1 + lo), Q(0)), (hi / (1 + hi), Q(0)))
            arcs.append(ArcSpec(f"psi[{lo},{hi}]", att, pl))
            by_lo[lo], by_hi[hi] = i, i
    tw = Tower(tuple(arcs))
    order = sorted(range(1, len(tw) + 1), key=lambda i: tw.planar(TowerPoint(i, Q(0)))[0])
    steps = []
    for i in order:
        (x0, _), (x1, _) = tw.arcs[i - 1].planar
        lo, hi = x0 / (1 - x0), x1 / (1 - x1)
        steps.append(Step(i, Q(0), Q(1), lo, hi))
    psi = Path(tuple(steps))
    ends = (End("+", tuple(range(1, len(tw) + 1, 2))), End("-", tuple(range(2, len(tw) + 1, 2))))
    limits = (
        ("+", LimitSet("external", name="z", planar=(Q(1), Q(0)))),
        ("-", LimitSet("external", name="o", planar=(Q(0), Q(0)))),
    )
    p1 = psi.point(tw, 1)
    return Scenario(
        name="z_ray",
        tower=tw,
        ends=ends,
        limits=limits,
        paths=(("psi", psi),),
        rays=(Ray("+", p1, end="+"), Ray("-", p1, end="-")),
        generators=(GenSpec("g", "psi", ((psi.lo, psi.hi, 2 * psi.lo, 2 * psi.hi),)),),
        folner=json.dumps({"rule": "free_abelian", "generators": ["g"]}, sort_keys=True),
        run=RunSpec(base=p1, level=8, radius=6, ray="+"),
        commands=("validate", "dendrite-check", "find-periodic", "classify-ray", "render"),
        description="Dyadic arcs of the open ray; doubling fixes both compactification points.",
    )


def fixed_vertex() -> Scenario:
    """Three legs rotated about their common vertex."""
    arcs = (
        ArcSpec("A", (), ((Q(0), Q(0)), (Q(1), Q(0)))),
        ArcSpec("B", (Attachment(1, Q(0), Q(0)),), ((Q(0), Q(0)), (Q(-1, 2), Q(1)))),
        ArcSpec("C", (Attachment(1, Q(0), Q(0)),), ((Q(0), Q(0)), (Q(-1, 2), Q(-1)))),
    )
    tw = Tower(arcs)
    rot = GenSpec(
        "r",
        None,
        (),
        (
            TowerPiece(1, Q(0), Q(1), 2, Q(0), Q(1)),
            TowerPiece(2, Q(0), Q(1), 3, Q(0), Q(1)),
            TowerPiece(3, Q(0), Q(1), 1, Q(0), Q(1)),
        ),
        (),
    )
    table = [["e", "r", "rr"], ["r", "rr", "e"], ["rr", "e", "r"]]
    return Scenario(
        name="fixed_vertex",
        tower=tw,
        generators=(rot,),
        relations=("r*r*r",),
        folner=json.dumps(
            {"rule": "finite_table", "elements": ["e", "r", "rr"], "table": table, "generators": {"r": "r"}, "identity": "e"},
            sort_keys=True,
        ),
        run=RunSpec(base=tw.point("A", 1), level=3, radius=3),
        commands=("validate", "dendrite-check", "find-periodic", "render"),
        description="A tripod whose legs are permuted cyclically; the centre is fixed.",
    )


ALL = {
    "warsaw": warsaw,
    "h_tower": h_tower,
    "dihedral_arc": dihedral_arc,
    "z_line": z_line,
    "fixed_line": fixed_line,
    "z_ray": z_ray,
    "fixed_vertex": fixed_vertex,
}


def dihedral_compact() -> tuple[MTree, dict[str, PLMap]]:
    """D_inf acting on a single edge: a fixes both ends and pushes inward points right, b flips."""
    tree = MTree(["L", "R"], [("L", "R", Q(1))])
    a = PLMap(tree, [(0, Q(0), Q(1, 3), 0, Q(0), Q(2, 3)), (0, Q(1, 3), Q(1), 0, Q(2, 3), Q(1))])
    b = PLMap(tree, [(0, Q(0), Q(1), 0, Q(1), Q(0))])
    return tree, {"a": a, "b": b}
