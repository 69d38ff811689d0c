from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from uccdyn import fixtures
from uccdyn.mtree import contains
from uccdyn.plaction import (
    EscapeError,
    compatibility_levels,
    evaluate_word,
    format_word,
    invert_word,
    orbit_closes,
    orbit_hull,
    parse_word,
    reduce_word,
    relation_violations,
)
from uccdyn.tower import TowerPoint

letters = st.lists(st.tuples(st.sampled_from("abc"), st.sampled_from([1, -1])), max_size=12).map(tuple)


@given(letters)
def test_word_round_trips(w):
    r = reduce_word(w)
    assert reduce_word(r) == r
    assert reduce_word(r + invert_word(r)) == ()
    assert parse_word(format_word(w)) == w or not w


def test_parse_word_forms():
    assert parse_word("b*a*b^-1") == (("b", 1), ("a", 1), ("b", -1))
    assert parse_word("a^3") == (("a", 1),) * 3
    assert parse_word("e") == ()
    with pytest.raises(ValueError):
        parse_word("a^x")


def test_z_line_shift_and_escape():
    s = fixtures.z_line()
    action = s.action()
    psi = s.path("psi")
    x = psi.point(s.tower, F(1, 2))
    # a is the unit shift along psi
    assert evaluate_word(action, parse_word("a"), x) == s.tower.canon(psi.point(s.tower, F(3, 2)))
    assert evaluate_word(action, parse_word("a*a^-1"), x) == s.tower.canon(x)
    with pytest.raises(EscapeError):
        evaluate_word(action, parse_word("a") * 40, x)


def test_dihedral_relations_and_compatibility():
    s = fixtures.dihedral_arc()
    action = s.action()
    assert relation_violations(action) == []
    m = compatibility_levels(action, 8)
    assert set(m) == {"a", "b"} and all(8 <= v <= 10 for v in m.values())


def test_orbit_hull_of_fixed_vertex():
    s = fixtures.fixed_vertex()
    action = s.action()
    leaf = s.tower.point("A", 1)
    assert orbit_closes(action, leaf)
    pts, hull, words = orbit_hull(action, leaf, 2)
    assert len(set(pts)) == 3
    centre = action.lt.to_tree(s.tower.canon(TowerPoint(1, F(0))))
    assert contains(action.lt.tree, hull, centre) and words
    z = fixtures.z_line()
    assert not orbit_closes(z.action(), z.path("psi").point(z.tower, F(1, 2)), limit=8)
