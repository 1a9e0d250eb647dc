import numpy as np
import pytest

from quasiplane.nets import (MetricNet, ObstacleSet, carpet_holes, carpet_net, circle_net, grid_net,
                             minimax_radius, path_in)


def test_needs_exactly_one_source():
    with pytest.raises(ValueError):
        MetricNet()
    with pytest.raises(ValueError):
        MetricNet(coords=np.zeros((2, 2)), D=np.zeros((2, 2)))


def test_grid_basics():
    net = grid_net(5)
    assert len(net) == 25
    assert net.resolution() == pytest.approx(0.25)
    assert net.diameter() == pytest.approx(2 ** 0.5)
    a, b = net.farthest_pair()
    assert net.d(a, b) == pytest.approx(2 ** 0.5)
    assert net.components()[0] == 1


def test_matrix_and_coords_agree():
    net = grid_net(4)
    D = net.sub(range(16))
    other = MetricNet(D=D)
    assert other.nn_resolution() == pytest.approx(net.nn_resolution())
    assert other.diameter() == pytest.approx(net.diameter())
    assert np.allclose(other.dist_to_set([0, 5]), net.dist_to_set([0, 5]))


def test_mst_resolution_bridges_gap():
    coords = np.array([[0, 0], [0.1, 0], [1, 0], [1.1, 0]])
    net = MetricNet(coords=coords)
    assert net.nn_resolution() == pytest.approx(0.1)
    assert net.mst_resolution() == pytest.approx(0.9)
    assert net.components()[0] == 2


def test_path_in_respects_mask():
    net = grid_net(5)
    allowed = np.ones(25, dtype=bool)
    allowed[[10, 11, 12, 13]] = False   # wall at x = 0.5 except the last row
    path = path_in(net, 0, 24, allowed=allowed)
    assert path[0] == 0 and path[-1] == 24
    assert not set(path) & {10, 11, 12, 13}
    allowed[14] = False
    assert path_in(net, 0, 24, allowed=allowed) is None


def test_minimax_radius_on_line():
    net = MetricNet(coords=np.array([[0.0, 0], [1, 0], [2, 0], [3, 0]]))
    R = minimax_radius(net, 0, h=1.0)
    assert R.tolist() == [0, 1, 2, 3]


def test_circle_resolution():
    net = circle_net(16)
    assert net.resolution() == pytest.approx(2 * np.sin(np.pi / 16))


def test_carpet_level1():
    holes = carpet_holes(1)
    assert holes == [(1, 1, 1)]
    net, bnd = carpet_net(2, refine=0)
    # 10 x 10 lattice; only the central hole has interior lattice points
    assert len(net) == 100 - 4
    assert len(bnd) == 1 + 8
    ids, side = bnd[0]
    assert side == pytest.approx(1 / 3)


def test_obstacle_set():
    with pytest.raises(ValueError):
        ObstacleSet([], 1.0)
    V = ObstacleSet([3, 1, 2], 0.5)
    assert V.ids == [1, 2, 3]
    assert V.as_record()["scale"] == 0.5
