import numpy as np
import pytest

from quasiplane.hypgeom import (VisualParams, delta_fourpoint, fourpoint_defect, geodesic, gromov_product,
                                gromov_products, product_inequality_audit, tree_approx)
from quasiplane.presentations import cayley_ball


def test_free_group_is_a_tree(f2):
    B = cayley_ball(f2, 3)
    est = delta_fourpoint(B)
    assert est.exhaustive and est.delta == 0


def test_products_are_common_prefixes(f2):
    B = cayley_ball(f2, 3)
    ab, aB = B.index[f2.word("a b")], B.index[f2.word("a b^-1")]
    assert gromov_product(B, 0, ab, aB) == 1
    assert gromov_product(B, 0, ab, ab) == 2


def test_square_defect():
    # four-cycle: d = 1 on sides, 2 across
    D = np.array([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]], float)
    assert fourpoint_defect(D, (0, 1, 2, 3)) == 1
    est = delta_fourpoint(D)
    assert est.delta == 1


def test_product_inequality_on_tree(f2):
    B = cayley_ball(f2, 3)
    D = B.dist_matrix(range(len(B)))
    rec = product_inequality_audit(D, 0, 0.0, triples=500)
    assert rec["holds"] and rec["worst_excess"] <= 0


def test_geodesic_prefers_least_label(f2):
    B = cayley_ball(f2, 2)
    path = geodesic(B, 0, B.index[f2.word("a b")])
    assert [B.words[v] for v in path] == [(), (1,), (1, 2)]


def test_tree_approx_exact_on_tree(f2):
    B = cayley_ball(f2, 2)
    ids = list(range(8))
    T = tree_approx(ids, B.dist_matrix(ids))
    assert T.additive_error == pytest.approx(0)


def test_tree_approx_square():
    D = np.array([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]], float)
    T = tree_approx(range(4), D)
    assert 0 < T.additive_error <= 1


def test_tree_approx_limit():
    with pytest.raises(ValueError):
        tree_approx(range(20), np.zeros((20, 20)))


def test_visual_params():
    vp = VisualParams(epsilon=0.5)
    assert vp.rho(np.array([2.0]))[0] == pytest.approx(np.exp(-1.0))
    assert VisualParams.default_epsilon(0) == 1
    with pytest.raises(ValueError):
        VisualParams(epsilon=0)
    assert gromov_products(np.array([[0, 2], [2, 0]]), 0)[1, 1] == 2
    big = np.full(5000, 2.0)
    assert np.allclose(vp.rho(big), np.exp(-1.0))
    lo, hi = VisualParams(1.0, 2.0).band(np.array([0.0]))
    assert lo[0] == 0.5 and hi[0] == 2
