import random
from fractions import Fraction as F

import networkx as nx
import pytest
from helpers import random_tree
from hypothesis import given, settings
from hypothesis import strategies as st

from uccdyn.mtree import (
    InvalidPoint,
    MTree,
    TreeError,
    arc_set,
    complement,
    components,
    contains,
    convex_hull,
    diameter,
    difference,
    extreme_points,
    intersection,
    is_connected,
    issubset,
    point_order,
    point_set,
    quasi_retract,
    retract_fiber,
    segments_set,
    set_length,
    union,
    whole,
)

seeds = st.integers(0, 10**6)


def _pt(rng, tree):
    e = rng.randrange(len(tree.edges))
    return tree.point(e, F(rng.randrange(0, 9), 8))


def _subdivided_graph(tree, pts):
    """networkx graph on vertices plus the given points, for an independent distance."""
    g = nx.Graph()
    cuts = {e: {F(0), F(1)} for e in range(len(tree.edges))}
    for p in pts:
        cuts[p.edge].add(p.t)
    for e, (a, b, ln) in enumerate(tree.edges):
        ts = sorted(cuts[e])
        names = [a if t == 0 else b if t == 1 else ("e", e, t) for t in ts]
        for (t0, n0), (t1, n1) in zip(zip(ts, names), zip(ts[1:], names[1:])):
            g.add_edge(n0, n1, weight=(t1 - t0) * ln)
    return g


def _node(tree, p):
    v = tree.vertex_of(p)
    return v if v is not None else ("e", p.edge, p.t)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_distance_matches_networkx(seed):
    rng = random.Random(seed)
    tree = random_tree(rng, rng.randint(1, 9))
    pts = [_pt(rng, tree) for _ in range(5)]
    g = _subdivided_graph(tree, pts)
    for x in pts:
        for y in pts:
            want = nx.shortest_path_length(g, _node(tree, x), _node(tree, y), weight="weight")
            assert tree.distance(x, y) == want


def _random_set(rng, tree):
    segs = []
    for _ in range(rng.randint(0, 4)):
        e = rng.randrange(len(tree.edges))
        a, b = sorted(F(rng.randrange(0, 9), 8) for _ in range(2))
        if a < b:
            segs.append((e, a, b))
    extra = [_pt(rng, tree) for _ in range(rng.randint(0, 2))]
    return segments_set(tree, segs, extra=extra)


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_set_algebra_laws(seed):
    rng = random.Random(seed)
    tree = random_tree(rng, rng.randint(1, 6))
    a, b = _random_set(rng, tree), _random_set(rng, tree)
    assert difference(tree, a, b) == intersection(tree, a, complement(tree, b))
    assert complement(tree, union(tree, a, b)) == intersection(tree, complement(tree, a), complement(tree, b))
    assert union(tree, a, complement(tree, a)) == whole(tree)
    assert intersection(tree, a, complement(tree, a)).is_empty()
    assert issubset(tree, intersection(tree, a, b), a)
    for p in [_pt(rng, tree) for _ in range(6)]:
        assert contains(tree, union(tree, a, b), p) == (contains(tree, a, p) or contains(tree, b, p))


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_arcs_hulls_and_retractions(seed):
    rng = random.Random(seed)
    tree = random_tree(rng, rng.randint(1, 8))
    x, y, z = (_pt(rng, tree) for _ in range(3))
    a = arc_set(tree, tree.arc(x, y))
    assert is_connected(tree, a)
    assert set_length(tree, a) == tree.distance(x, y)
    hull = convex_hull(tree, [x, y, z])
    assert is_connected(tree, hull)
    assert all(contains(tree, hull, p) for p in (x, y, z))
    assert diameter(tree, hull) == max(tree.distance(p, q) for p in (x, y, z) for q in (x, y, z))
    # the retraction onto an arc lands on it and realises the distance to it
    r = quasi_retract(tree, a, z)
    assert contains(tree, a, r)
    assert all(tree.distance(z, r) <= tree.distance(z, q) for q in extreme_points(tree, a))
    assert tree.distance(x, z) == tree.distance(x, r) + tree.distance(r, z)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_fibers_partition_the_tree(seed):
    rng = random.Random(seed)
    tree = random_tree(rng, rng.randint(2, 8))
    y = arc_set(tree, tree.arc(_pt(rng, tree), _pt(rng, tree)))
    pts = extreme_points(tree, y)
    fibers = [retract_fiber(tree, y, point_set(tree, [p])) for p in pts]
    for f, p in zip(fibers, pts):
        assert contains(tree, f, p) and is_connected(tree, f)
    assert issubset(tree, retract_fiber(tree, y, y), whole(tree))
    assert retract_fiber(tree, y, y) == whole(tree)


def test_components_and_orders():
    tree = MTree([0, 1, 2, 3], [(0, 1, F(1)), (0, 2, F(1)), (0, 3, F(2))])
    centre = tree.vertex_point(0)
    assert point_order(tree, centre)[0] == 3
    assert point_order(tree, tree.vertex_point(3))[0] == 1
    assert point_order(tree, tree.point(2, F(1, 2)))[0] == 2
    s = difference(tree, whole(tree), point_set(tree, [centre]))
    comps = components(tree, s)
    assert len(comps) == 3 and not is_connected(tree, s)
    assert sorted(set_length(tree, c) for c in comps) == [1, 1, 2]


def test_invalid_input_is_rejected():
    with pytest.raises(TreeError):
        MTree([0, 1, 2], [(0, 1, F(1)), (1, 0, F(1))])
    with pytest.raises(TreeError):
        MTree([0, 1], [(0, 1, F(0))])
    tree = MTree([0, 1], [(0, 1, F(1))])
    with pytest.raises(InvalidPoint):
        tree.point(0, F(3, 2))
    with pytest.raises(InvalidPoint):
        tree.point(5, F(0))
