import math

import numpy as np
import pytest

from quasiplane.boundary import build_net
from quasiplane.cusped import cusped_ball
from quasiplane.embed import (ConePoint, DepthError, coned_off_ball, coned_off_tube, cone_matrix, d_cone,
                              distortion_audit, embed_arc, fit_qi, persistence_check, project_to_cayley,
                              quadrant_net, ray_map, syllable_distance, transversality_audit)
from quasiplane.presentations import cayley_ball, parse_presentation, word_distance


@pytest.fixture(scope="module")
def f2_net(f2):
    return build_net(cusped_ball(f2, 5), 3)


def test_cone_distance_on_a_ray():
    rho = np.zeros((1, 1))
    a, b = ConePoint(0, 1), ConePoint(0, 4)
    assert d_cone(a, b, rho, 1.0) == pytest.approx(3)
    assert d_cone(a, a, rho, 1.0) == 0


def test_cone_matrix_matches_pointwise():
    rho = np.array([[0, 0.3], [0.3, 0]])
    pts = quadrant_net([0, 1], 3)
    M = cone_matrix(pts, rho, 0.5)
    i, j = np.triu_indices(len(pts), 1)
    want = [d_cone(pts[x], pts[y], rho, 0.5) for x, y in zip(i, j)]
    assert np.allclose(M, want)


def test_quadrant_validation():
    with pytest.raises(ValueError):
        quadrant_net([], 2)
    with pytest.raises(ValueError):
        quadrant_net([0], 2, step=0)


def test_vertical_line_is_isometric(f2_net):
    emb = embed_arc([0], f2_net)
    rec = distortion_audit(emb)
    assert rec["lambda"] == pytest.approx(1) and rec["c"] == pytest.approx(0)


def test_ray_map_follows_witness(f2_net):
    assert ray_map(ConePoint(5, 0), f2_net) == f2_net.space.basepoint
    assert ray_map(ConePoint(5, 2), f2_net) == f2_net.prefix(5, 2)
    with pytest.raises(DepthError):
        ray_map(ConePoint(5, 9), f2_net)


def test_arc_embedding_free_group(f2_net):
    emb = embed_arc([0, 1, 2], f2_net)
    rec = distortion_audit(emb)
    assert math.isfinite(rec["lambda"]) and rec["lambda"] < 3
    assert project_to_cayley(emb)["C3"] == 0


def test_fit_qi():
    x = np.array([1.0, 2.0, 3.0])
    assert fit_qi(x, x) == (1.0, 0.0)
    lam, c = fit_qi(x, 2 * x)
    assert lam + c <= 2 * 1.005


def test_coned_off_without_peripherals_is_word_metric(f2):
    G = coned_off_ball(f2, 3)
    ids = list(range(len(G.ball)))
    assert np.array_equal(G.dist_matrix(ids), G.ball.dist_matrix(ids))


def test_coned_off_collapses_cosets(z2z2):
    G = coned_off_ball(z2z2, 3)
    B = G.ball
    a3, b2 = B.index[z2z2.word("aaa")], B.index[z2z2.word("bb")]
    assert G.dist_matrix([0, a3, b2]).max() == 1
    assert G.dist_matrix([0, B.index[z2z2.word("ac")]])[0, 1] == 2


def test_tube_matches_syllables(z2z2):
    words = [z2z2.word(w) for w in ["", "a", "ac", "aca", "acab", "c"]]
    G, ids = coned_off_tube(z2z2, words)
    D = G.dist_matrix(ids)
    for i, u in enumerate(words):
        for j, v in enumerate(words):
            assert D[i, j] == syllable_distance(z2z2, u, v)


def test_syllables_need_peripheral_factors():
    p = parse_presentation("inverse case\ngens a b c d\nrels [a,b] [c,d]\nparabolic a b\n")
    with pytest.raises(ValueError):
        syllable_distance(p, (), (3,))


def test_transversality_routes_agree(z2z2):
    words = [z2z2.word(w) for w in ["", "a", "ac", "aca", "acac"]]
    B = cayley_ball(z2z2, 4)
    via_ball = transversality_audit([B.index[w] for w in words], z2z2, ball=B, Ms=(0, 1))
    via_words = transversality_audit(words, z2z2, Ms=(0, 1))
    assert via_ball.eta == via_words.eta
    assert not via_words.non_transversal


def test_segment_is_not_transversal(z2z2):
    words = [(1,) * k for k in range(6)]
    prof = transversality_audit(words, z2z2, Ms=(0,))
    assert prof.non_transversal


def test_persistence_flags_collapse(z2z2):
    words = [(1,) * k for k in range(10)]
    S = np.array([[word_distance(z2z2, u, v) for v in words] for u in words], float)
    G, ids = coned_off_tube(z2z2, words)
    rec = persistence_check(S, G.dist_matrix(ids))
    assert rec["collapsed"] and rec["image_diameter"] == 1
