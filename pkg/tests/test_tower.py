import random
from fractions import Fraction as F

import pytest
from helpers import random_tower
from hypothesis import given, settings
from hypothesis import strategies as st

from uccdyn import fixtures
from uccdyn.tower import (
    ArcSpec,
    Attachment,
    LevelError,
    Tower,
    TowerPoint,
    d_metric,
    end_representative,
    end_tip,
    local_connectedness_cover,
    planar_consistency,
    tail_weight,
    validate_tower,
    weight,
)

P = lambda x, y: (F(x), F(y))  # noqa: E731


def _kinds(arcs):
    return {v.kind for v in validate_tower(Tower(tuple(arcs)))}


def test_weights():
    assert weight(1) == F(1, 2) and weight(3) == F(1, 8)
    assert tail_weight(0) == 1 and tail_weight(5) == F(1, 32)


def test_validation_catches_each_violation_kind():
    a = ArcSpec("a", (), (P(0, 0), P(1, 0)))
    assert _kinds([a, ArcSpec("b", (Attachment(1, F(1, 2)),), (P(F(1, 2), 0), P(F(1, 2), 1)))]) == set()
    assert "non-tree" in _kinds([ArcSpec("a"), ArcSpec("b")])
    assert "bad-attachment" in _kinds([ArcSpec("a"), ArcSpec("b", (Attachment(2, F(0)),))])
    assert "bad-attachment" in _kinds([ArcSpec("a", (Attachment(1, F(0)),))])
    assert "planar-mismatch" in _kinds([a, ArcSpec("b", (Attachment(1, F(1, 2)),), (P(0, 1), P(0, 2)))])
    cross = ArcSpec("b", (Attachment(1, F(0)),), (P(0, 0), P(1, 1)))
    assert "bad-intersection" in _kinds([a, ArcSpec("c", (Attachment(1, F(1)),), (P(1, 0), P(0, 1))), cross])
    assert "non-strict" in _kinds([a, ArcSpec("b", (Attachment(1, F(0)),), (P(0, 0), P(0, 0)))])
    assert "non-strict" in _kinds([a, ArcSpec("b", (Attachment(1, F(0)),), (P(0, 0), P(1, 0)))])


def test_metric_small_example():
    tw = Tower((ArcSpec("a"), ArcSpec("b", (Attachment(1, F(1, 2)),)), ArcSpec("c", (Attachment(2, F(1)),))))
    x, y = TowerPoint(1, F(0)), TowerPoint(3, F(1))
    # half of arc a, all of b, all of c
    assert d_metric(tw, 3, x, y) == F(1, 2) * F(1, 2) + F(1, 4) + F(1, 8)
    with pytest.raises(LevelError):
        d_metric(tw, 2, x, y)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_level_tree_round_trip(seed):
    rng = random.Random(seed)
    tw = random_tower(rng, rng.randint(1, 12))
    lt = tw.level(len(tw))
    for _ in range(10):
        p = TowerPoint(rng.randint(1, len(tw)), F(rng.randrange(0, 33), 32))
        assert lt.to_tower(lt.to_tree(p)) == tw.canon(p)
    assert lt.tree.total_length == sum(weight(i) for i in range(1, len(tw) + 1))


def test_end_points_and_planar_limits():
    s = fixtures.warsaw()
    tw, end = s.tower, s.model.end("S+")
    rep = end_representative(tw, end, 12)
    assert rep.arc <= 12
    tip = end_tip(tw, end, len(tw))
    assert tip.arc == end.chain[-1]
    chk = planar_consistency(s.model, "S+")
    assert chk.consistent and chk.hausdorff2[-1] < F(1, 100)


def test_cover_cells_are_small_and_connected():
    tw = fixtures.h_tower().tower
    n, cells = local_connectedness_cover(tw, F(1, 4), 12)
    assert tail_weight(n) < F(1, 12)
    assert all(d <= F(1, 4) for _, _, d in cells)
