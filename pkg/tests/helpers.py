"""Random trees, towers and PL homeomorphisms shared by the test modules."""

from __future__ import annotations

import random
from fractions import Fraction as F

from uccdyn.mtree import MTree
from uccdyn.plmap import PLMap
from uccdyn.tower import ArcSpec, Attachment, Tower


def random_tree(rng: random.Random, n_edges: int, unit: bool = False) -> MTree:
    edges = []
    for i in range(n_edges):
        parent = rng.randrange(i + 1)
        length = F(1) if unit else F(rng.randrange(1, 9), rng.choice([1, 2, 4, 8]))
        edges.append((parent, i + 1, length))
    return MTree(list(range(n_edges + 1)), edges)


def random_tower(rng: random.Random, n_arcs: int) -> Tower:
    arcs = [ArcSpec("A1", ())]
    for i in range(2, n_arcs + 1):
        target = rng.randrange(1, i)
        s = F(rng.randrange(0, 9), 8)
        own = rng.choice([F(0), F(1)])
        arcs.append(ArcSpec(f"A{i}", (Attachment(target, s, own),)))
    return Tower(tuple(arcs))


def bump_homeo(rng: random.Random) -> list[tuple[F, F, F, F]]:
    """PL homeo of [0, 1] with slopes in {1/2, 1, 2} made of disjoint bumps.

    Every breakpoint and fixed point is a multiple of 1/256.
    """
    out, a = [], F(0)
    while a < 1:
        room = 1 - a
        h = F(rng.choice([1, 2, 4, 8]), 128)
        if rng.random() < 0.4 or 3 * h > room:
            step = min(room, F(rng.choice([1, 2, 4]), 32))
            out.append((a, a + step, a, a + step))
            a += step
            continue
        if rng.random() < 0.5:
            out += [(a, a + h, a, a + 2 * h), (a + h, a + 3 * h, a + 2 * h, a + 3 * h)]
        else:
            out += [(a, a + 2 * h, a, a + h), (a + 2 * h, a + 3 * h, a + h, a + 3 * h)]
        a += 3 * h
    return out


def random_self_homeo(rng: random.Random, max_edges: int = 8, pendant: int = 0) -> tuple[MTree, PLMap]:
    """Either a bump map over the identity of a random tree, or a rotation of
    k copies of a rooted tree glued at the centre, composed with bumps.

    ``pendant`` extra edges form an invariant path hanging off vertex 0.
    """
    if rng.random() < 0.5:
        tree = random_tree(rng, rng.randint(1, max_edges), unit=True)
        sigma = list(range(len(tree.edges)))
    else:
        k = rng.randint(2, 4)
        m = rng.randint(1, max_edges // k)
        base = random_tree(rng, m, unit=True)

        def lab(j, v):
            return 0 if v == 0 else 1 + j * m + (v - 1)

        edges = [(lab(j, a), lab(j, b), ln) for j in range(k) for a, b, ln in base.edges]
        tree = MTree(sorted({v for e in edges for v in e[:2]}), edges)
        sigma = [((e // m + 1) % k) * m + e % m for e in range(len(edges))]
    if pendant:
        top = max(tree.vertices)
        chain = [0] + [top + 1 + j for j in range(pendant)]
        edges = list(tree.edges) + [(a, b, F(1)) for a, b in zip(chain, chain[1:])]
        sigma = sigma + list(range(len(tree.edges), len(edges)))
        tree = MTree(sorted({v for e in edges for v in e[:2]}), edges)
    pieces = []
    for e, te in enumerate(sigma):
        for a, b, c, d in bump_homeo(rng):
            pieces.append((e, a, b, te, c, d))
    return tree, PLMap(tree, pieces)


def float_displacements(tree: MTree, f: PLMap, step: int = 4096):
    """Grid oracle: (edge, k, |f(x) - x|) for x = (edge, k/step), evaluated in floats
    straight from the piece table."""
    verts = tree.vertices
    dist = {}
    for v in verts:
        seen, todo = {v: 0.0}, [v]
        while todo:
            u = todo.pop()
            for e in tree.incident[u]:
                a, b, ln = tree.edges[e]
                w = b if a == u else a
                if w not in seen:
                    seen[w] = seen[u] + float(ln)
                    todo.append(w)
        dist[v] = seen
    out = []
    by_edge = {}
    for p in f.pieces:
        by_edge.setdefault(p.src, []).append((float(p.a), float(p.b), p.dst, float(p.c), float(p.d)))
    for e, (u, v, ln) in enumerate(tree.edges):
        L = float(ln)
        for k in range(step + 1):
            t = k / step
            a, b, dst, c, d = next(p for p in by_edge[e] if p[0] <= t <= p[1])
            s = c + (t - a) * (d - c) / (b - a)
            if dst == e:
                disp = abs(s - t) * L
            else:
                u2, v2, l2 = tree.edges[dst]
                L2 = float(l2)
                disp = min(
                    dx + dist[p][q] + dy
                    for p, dx in ((u, t * L), (v, (1 - t) * L))
                    for q, dy in ((u2, s * L2), (v2, (1 - s) * L2))
                )
            out.append((e, k, disp))
    return out


VERDICTS: list[str] = []


def verdict(n: int, ok: bool, detail: str) -> None:
    """Record and print one pass/fail line for acceptance criterion n, then assert it."""
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    VERDICTS.append(line)
    print(line)
    assert ok, line
