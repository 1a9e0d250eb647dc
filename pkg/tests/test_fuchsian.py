import numpy as np

from quasiplane.fuchsian import OctagonGroup, hyperbolic_distance
from quasiplane.presentations import DehnOracle, cayley_ball, free_reduce, inverse


def test_relator_closes(genus2):
    oct_ = OctagonGroup(genus2.relators[0])
    assert oct_.normal_form(genus2.relators[0]) == ()
    assert oct_.length((1, 2)) == 2


def _random_word(rng, n):
    return free_reduce(tuple(int(l) for l in rng.choice([1, -1, 2, -2, 3, -3, 4, -4], n)))


def test_walk_agrees_with_dehn(genus2):
    oct_ = OctagonGroup(genus2.relators[0])
    dehn = DehnOracle(genus2)
    rng = np.random.default_rng(3)
    for _ in range(200):
        w = _random_word(rng, int(rng.integers(1, 16)))
        nf = oct_.normal_form(w)
        assert dehn.is_identity(nf + inverse(w))
        assert len(nf) <= len(dehn.dehn(w))


def test_short_normal_forms_match_search(genus2):
    oct_ = OctagonGroup(genus2.relators[0])
    dehn = DehnOracle(genus2)
    rng = np.random.default_rng(4)
    for _ in range(40):
        w = _random_word(rng, int(rng.integers(1, 5)))
        assert oct_.normal_form(w) == dehn.normal_form(w)


def test_sphere_growth(genus2):
    # growth series of the genus-2 surface group: 1, 8, 56, 392
    assert cayley_ball(genus2, 3).sphere_sizes() == [1, 8, 56, 392]


def test_tile_centres_are_separated(genus2):
    oct_ = OctagonGroup(genus2.relators[0])
    o = oct_.float_point(())
    for l in (1, -1, 2, -2, 3, -3, 4, -4):
        assert abs(hyperbolic_distance(o, oct_.float_point((l,))) - hyperbolic_distance(o, oct_.float_point((1,)))) < 1e-9
