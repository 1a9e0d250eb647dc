import math

import numpy as np
import pytest

from quasiplane.nets import MetricNet, ObstacleFamily, ObstacleSet, carpet_net, grid_net
from quasiplane.quasiarc import (QuasiArcParams, StageFailure, build_quasi_arc, detour, follow_distance,
                                 follows_check, initial_arc, is_simple, loop_cut, scale_filtration,
                                 straighten, verify_quasi_arc, zigzag_arc)


def line(n):
    return MetricNet(coords=np.stack([np.arange(n, dtype=float), np.zeros(n)], axis=1))


def test_loop_cut():
    assert loop_cut([1, 2, 3, 2, 4]) == [1, 2, 4]
    assert loop_cut([1, 2, 3, 1, 5]) == [1, 5]
    assert is_simple(loop_cut([0, 1, 0, 1, 2]))


def test_straight_segment_is_a_quasi_arc():
    net = line(10)
    rec = verify_quasi_arc(list(range(10)), net, lam=1.0)
    assert rec["passed"] and rec["lambda_measured"] == pytest.approx(1)


def test_backtrack_is_caught():
    net = line(10)
    rec = verify_quasi_arc([0, 1, 2, 3, 9, 4, 5], net, lam=2.0)
    assert not rec["passed"]
    assert rec["lambda_measured"] > 2


def test_follows_spike():
    net = line(10)
    A = [0, 1, 2, 3]
    assert follows_check([0, 1, 2, 3], A, 0.0, net)[0]
    ok, k = follows_check([0, 1, 8, 2, 3], A, 1.0, net)
    assert not ok and k == 2
    assert follow_distance([0, 1, 8, 2, 3], A, net) == pytest.approx(5)


def test_follows_endpoints():
    net = line(10)
    assert not follows_check([1, 2, 3], [0, 1, 2, 3], 0.5, net)[0]


def test_scale_filtration():
    assert scale_filtration([1.0, 0.5, 1 / 3, 0.1], 1 / 3, 1.0) == [1, 1, 2, 3]
    with pytest.raises(ValueError):
        scale_filtration([2.0], 0.5, 1.0)


def test_straighten_zigzag():
    net = grid_net(32)
    arc = zigzag_arc(net, seed=1)
    iota = 8 * net.resolution()
    out, rep = straighten(arc, iota, net)
    assert rep["passed"] and rep["follows"]
    assert out[0] == arc[0] and out[-1] == arc[-1]
    assert is_simple(out)


def test_straighten_skips_tiny_iota():
    net = grid_net(8)
    arc = initial_arc(net)
    out, rep = straighten(arc, net.resolution() / 4, net)
    assert rep["skipped"] and out == arc


def test_detour_around_square():
    net = grid_net(41)
    idx = {tuple(np.round(c * 40).astype(int)): i for i, c in enumerate(net.coords)}
    V = ObstacleSet([idx[(20, y)] for y in range(18, 23)], 0.1)
    arc = [idx[(x, 20)] for x in range(41)]
    out, rep = detour(arc, V, 0.1, 2.0, net)
    assert rep["changed"]
    dV = net.dist_to_set(V.ids)
    assert dV[out].min() >= 0.1 / 4 - 1e-9
    assert out[0] == arc[0] and out[-1] == arc[-1]


def test_detour_fails_without_annulus():
    net = line(11)
    V = ObstacleSet([5], 1.0)
    with pytest.raises(StageFailure):
        detour(list(range(11)), V, 2.0, 2.0, net)


def test_parameters_report_violations():
    assert QuasiArcParams().invariant_violations()
    strict = QuasiArcParams(strict=True, kappa=3.0)
    with pytest.raises(ValueError):
        build_quasi_arc(grid_net(8), ObstacleFamily([]), strict)


def test_carpet_small():
    net, bnd = carpet_net(2, refine=1)
    fam = ObstacleFamily([ObstacleSet(ids, s) for ids, s in bnd], L=2.0)
    arc, rep = build_quasi_arc(net, fam, QuasiArcParams(kappa=3.0))
    assert rep.status == "pass"
    assert is_simple(arc)
    assert math.isfinite(rep.lambda_measured)
    assert rep.drift_total <= rep.drift_bound
