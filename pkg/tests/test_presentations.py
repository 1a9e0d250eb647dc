import pytest

from quasiplane.presentations import (BackendError, BudgetError, PresentationError, cayley_ball,
                                      coset_fragments, coset_key, free_reduce, parse_presentation,
                                      reduce, same_coset, word_distance)

from conftest import FIG8, Z2


def test_free_group_parse():
    p = parse_presentation("gens a b\nrels\n")
    assert p.generators == ["a", "b"]
    assert p.relators == []
    assert p.backend == "free"


def test_unbalanced_bracket_reports_position():
    with pytest.raises(PresentationError) as e:
        parse_presentation("gens a b\nrels [a,b\n")
    assert "line 2" in str(e.value)
    assert "bracket" in str(e.value)


def test_unknown_generator():
    with pytest.raises(PresentationError):
        parse_presentation("gens a b\nrels a c\n")


def test_missing_gens():
    with pytest.raises(PresentationError):
        parse_presentation("rels [a,b]\n")


def test_backend_detection(genus2, z2z2):
    assert parse_presentation(Z2).backend == "free-abelian"
    assert z2z2.backend == "free-product"
    assert genus2.backend == "dehn"


def test_small_cancellation_rejected():
    with pytest.raises(BackendError):
        parse_presentation("gens a b\nrels a b a^-1 b^-1 a\nbackend dehn\n")


def test_free_reduction(f2):
    assert free_reduce((1, 2, -2, -1)) == ()
    assert reduce(f2, "a b b^-1 a^-1") == ()
    assert reduce(f2, "a a b") == (1, 1, 2)


def test_surface_relator_is_trivial(genus2):
    assert reduce(genus2, "abABcdCD") == ()
    assert reduce(genus2, "abABcdC") == (4,)
    assert reduce(genus2, "dcDCbaBA") == ()
    assert reduce(genus2, "bABcdCDa") == ()


def test_free_product_normal_form(z2z2):
    assert reduce(z2z2, "ab") == reduce(z2z2, "ba")
    assert len(reduce(z2z2, "acAC")) == 4
    assert word_distance(z2z2, z2z2.word("ab"), z2z2.word("ba")) == 0


def test_figure_eight_matrices():
    p = parse_presentation(FIG8)
    assert reduce(p, "XyxYxyXYxY") == ()
    assert reduce(p, "xyXY") != ()
    assert reduce(p, "xX") == ()


@pytest.mark.parametrize("text,R,size", [
    ("gens a\nrels\n", 3, 7),
    ("gens a b\nrels [a,b]\n", 2, 13),
    ("gens a b\nrels\n", 2, 17),
])
def test_ball_sizes(text, R, size):
    assert len(cayley_ball(parse_presentation(text), R)) == size


def test_genus2_spheres(genus2):
    assert cayley_ball(genus2, 2).sphere_sizes() == [1, 8, 56]


def test_budget():
    with pytest.raises(BudgetError):
        cayley_ball(parse_presentation("gens a b\nrels\n"), 8, budget=100)


def test_cosets(z2z2):
    assert coset_key(z2z2, z2z2.word("caB"), 0) == z2z2.word("c")
    assert same_coset(z2z2, z2z2.word("ab"), z2z2.word("ba"), 0)
    assert not same_coset(z2z2, z2z2.word("a"), z2z2.word("c"), 0)
    ball = cayley_ball(z2z2, 2)
    frags = coset_fragments(z2z2, ball, 0)
    assert sum(len(f.members) for f in frags) == len(ball)
    assert frags[0].key == () and frags[0].dist_to_base == 0
    assert len(frags[0].members) == 13
