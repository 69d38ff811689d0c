import random
from fractions import Fraction as F

import pytest
from helpers import random_self_homeo
from hypothesis import given, settings
from hypothesis import strategies as st

from uccdyn.dynamics import fixed_set
from uccdyn.mtree import MTree, contains, point_set, segments_set, whole
from uccdyn.plmap import DomainError, InjectivityViolation, NotSelfHomeomorphism, PLMap, image_set


def _grid(tree, k=8):
    return [tree.point(e, F(j, k)) for e in range(len(tree.edges)) for j in range(k + 1)]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_inverse_and_composition(seed):
    rng = random.Random(seed)
    tree, f = random_self_homeo(rng, 6)
    f.check_self_homeomorphism()
    g = f.inverse()
    ident = PLMap.identity(tree)
    fg, ff = f.compose(g), f.compose(f)
    for p in _grid(tree, 16):
        assert g(f(p)) == p
        assert fg(p) == p
        assert ff(p) == f(f(p))
        assert ident(p) == p
    assert fg.fixed_set() == whole(tree)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_image_set_is_pointwise_image(seed):
    rng = random.Random(seed)
    tree, f = random_self_homeo(rng, 6)
    e = rng.randrange(len(tree.edges))
    a, b = sorted(F(rng.randrange(0, 17), 16) for _ in range(2))
    s = segments_set(tree, [(e, a, b)] if a < b else [], extra=[tree.point(e, a)])
    img = image_set(f, s)
    for p in _grid(tree, 32):
        assert contains(tree, s, p) == contains(tree, img, f(p))


def test_fixed_set_of_a_flip_and_a_bump():
    tree = MTree([0, 1], [(0, 1, F(1))])
    flip = PLMap(tree, [(0, 0, 1, 0, 1, 0)])
    assert flip.fixed_set() == point_set(tree, [tree.point(0, F(1, 2))])
    bump = PLMap(tree, [(0, 0, F(1, 4), 0, 0, F(1, 2)), (0, F(1, 4), F(3, 4), 0, F(1, 2), F(3, 4)), (0, F(3, 4), 1, 0, F(3, 4), 1)])
    fix = fixed_set(bump)
    assert contains(tree, fix, tree.point(0, F(0))) and contains(tree, fix, tree.point(0, F(7, 8)))
    assert not contains(tree, fix, tree.point(0, F(1, 2)))
    assert bump.lipschitz() == 2


def test_rejections():
    tree = MTree([0, 1, 2], [(0, 1, F(1)), (1, 2, F(1))])
    fold = PLMap(tree, [(0, 0, 1, 0, 0, 1), (1, 0, 1, 0, 1, 0)])
    with pytest.raises(InjectivityViolation):
        fold.certify_injective()
    with pytest.raises(NotSelfHomeomorphism):
        fold.check_self_homeomorphism()
    partial = PLMap(tree, [(0, 0, 1, 0, 0, 1)])
    with pytest.raises(DomainError):
        partial(tree.point(1, F(1, 2)))
    torn = PLMap(tree, [(0, 0, F(1, 2), 0, 0, F(1, 2)), (0, F(1, 2), 1, 0, F(3, 4), 1), (1, 0, 1, 1, 0, 1)])
    assert torn.continuity_violations()
