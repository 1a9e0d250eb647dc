import math

import numpy as np
import pytest

from quasiplane.boundary import (OrbitGapError, WordSpace, avoidability_audit, build_net, chain,
                                 doubling_estimate, limit_sets, linconn_estimate, porosity_audit,
                                 rescale_audit, separation_audit)
from quasiplane.cusped import cusped_ball
from quasiplane.nets import MetricNet, ObstacleFamily, ObstacleSet, circle_net, grid_net


@pytest.fixture(scope="module")
def f2_net(f2):
    return build_net(cusped_ball(f2, 5), 3)


@pytest.fixture(scope="module")
def z2z2_net(z2z2):
    return build_net(cusped_ball(z2z2, 4), 2, margin=1.0)


def _prefix(u, v):
    k = 0
    while k < min(len(u), len(v)) and u[k] == v[k]:
        k += 1
    return k


def test_free_group_witnesses(f2_net):
    assert len(f2_net) == 4 * 3 ** 2
    assert f2_net.delta == 0
    assert f2_net.params.epsilon == 1


def test_free_group_visual_metric_is_prefix(f2, f2_net):
    words = [f2.word(w) for w in f2_net.words]
    for i in range(len(words)):
        for j in range(len(words)):
            want = 0.0 if i == j else math.exp(-_prefix(words[i], words[j]))
            assert f2_net.rho[i, j] == pytest.approx(want)


def test_word_space(f2):
    sp = WordSpace(f2)
    assert sp.d(f2.word("a"), f2.word("b")) == 2
    assert sp.dist_matrix([(), (1,), (1, 1)]).tolist() == [[0, 1, 2], [1, 0, 1], [2, 1, 0]]


def test_parabolic_points(z2z2_net):
    fam = limit_sets(z2z2_net)
    assert len(fam) >= 2
    assert all(V.origin["kind"] == "horoball" and len(V.ids) == 1 for V in fam)
    rec = separation_audit(fam, z2z2_net)
    assert rec["inv_C"] > 0
    assert rec["min_Delta"] > 0


def test_separation_needs_two_sets(f2_net):
    assert separation_audit(ObstacleFamily([]), f2_net)["pairs"] == []


def test_doubling_circle():
    rec = doubling_estimate(circle_net(64))
    assert rec["exhaustive"] and rec["N"] <= 5


def test_linconn_grid():
    net = grid_net(12)
    rec = linconn_estimate(net)
    assert rec["connected"] and rec["L"] <= 3


def test_linconn_flags_cantor_set(f2_net):
    rec = linconn_estimate(f2_net.net)
    assert rec["disconnected"] and rec["components"] > 1


def test_chain_on_grid():
    net = grid_net(16)
    c = chain(net, 0, 255)
    assert c.ids[0] == 0 and c.ids[-1] == 255
    assert c.gaps_ok()
    assert c.K1 <= 2
    assert chain(net, 3, 3).ids == [3]
    assert "below" in chain(net, 0, 1).note


def test_chain_disconnected():
    net = MetricNet(coords=np.array([[0.0, 0], [0.1, 0], [5, 0], [5.1, 0]]), h=0.1)
    with pytest.raises(ValueError):
        chain(net, 0, 3)


def test_porosity_whole_net_fails():
    net = grid_net(9)
    fam = ObstacleFamily([ObstacleSet(range(81), net.diameter())], L=4.0)
    rec = porosity_audit(fam, net)
    assert rec["constant"] == math.inf and not rec["passed"]


def test_porosity_point_passes():
    net = grid_net(9)
    fam = ObstacleFamily([ObstacleSet([40], 0.5)], L=4.0)
    rec = porosity_audit(fam, net)
    assert rec["passed"]


def test_avoidability():
    net = grid_net(41)
    coords = np.round(net.coords * 40).astype(int)
    mid = np.nonzero(coords[:, 0] == 20)[0]
    line = ObstacleSet(mid, 1.0)
    rec = avoidability_audit(line, net, 0.05, 2.0, n_arcs=5)
    assert not rec["skipped"] and not rec["passed"]
    sq = np.nonzero((np.abs(coords[:, 0] - 20) <= 2) & (np.abs(coords[:, 1] - 20) <= 2))[0]
    rec = avoidability_audit(ObstacleSet(sq, 0.2), net, 0.04, 2.0, n_arcs=5)
    assert not rec["skipped"] and rec["passed"]
    assert avoidability_audit(ObstacleSet(sq, 0.2), net, 0.1, 2.0)["skipped"]


def test_rescale_fallback_and_constant(f2_net):
    assert rescale_audit(f2_net, 0, 0.5)["branch"] == "fallback"
    rec = rescale_audit(f2_net, 0, 0.1)
    assert rec["constant"] >= 1 and math.isfinite(rec["constant"])


def test_rescale_orbit_gap(z2z2_net):
    bn = z2z2_net
    z = min(bn.marks)
    assert bn.space.level[bn.endpoint(z)] > 0
    # aim the rescaling point at the witness endpoint, which sits inside a horoball
    t = bn.depth(z)
    r = math.exp(-bn.params.epsilon * (t + bn.delta + 1)) / 2
    with pytest.raises(OrbitGapError):
        rescale_audit(bn, z, r, D=0.0)
