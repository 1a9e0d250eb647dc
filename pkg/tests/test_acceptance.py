"""Acceptance checks. Each test prints one line: criterion number, PASS or FAIL, measured values, runtime."""
import math
import time

import numpy as np
import pytest

from quasiplane.boundary import build_net, chain, limit_sets, linconn_estimate, separation_audit
from quasiplane.cusped import cusped_ball, line_horoball, sandwich, strip_distance
from quasiplane.embed import coned_off_tube, persistence_check, transversality_audit
from quasiplane.hypgeom import delta_fourpoint, gromov_product
from quasiplane.nets import grid_net
from quasiplane.pipeline import PipelineConfig, build_context, cmd_embed
from quasiplane.presentations import cayley_ball, parse_presentation, word_distance
from quasiplane.quasiarc import (QuasiArcParams, build_quasi_arc, follows_check, is_simple, straighten,
                                 verify_quasi_arc, zigzag_arc)

from conftest import F2, Z2, Z2Z2


@pytest.fixture
def report(capsys):
    t0 = time.time()

    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n:>2} {'PASS' if ok else 'FAIL'}  {detail}  [{time.time() - t0:.1f}s]")
        return ok
    return emit


def test_01_strip_law(report):
    t = np.arange(1, 10 ** 4 + 1)
    err = max(abs(strip_distance(int(x), 1, 1) - 2 * math.log(x)) for x in t)
    assert report(1, err <= 1, f"max |strip(t) - 2 ln t| = {err:.5f} over t <= 10^4")


def test_02_combinatorial_horoball(report):
    H = line_horoball(2 ** 12 + 1, 14)
    d = H.distances_from(0)[0]
    t = np.arange(1, 2 ** 12 + 1)
    err = float(np.abs(d[t] - 2 * np.log2(t)).max())
    assert report(2, err <= 4, f"sup |d((0,0),(t,0)) - 2 log2 t| = {err:g} for t <= 4096")


def test_03_tree_exactness(report):
    p = parse_presentation(F2)
    B = cayley_ball(p, 4)
    est = delta_fourpoint(B)
    rng = np.random.default_rng(0)
    bad = 0
    for _ in range(1000):
        x, y = (int(v) for v in rng.integers(0, len(B), 2))
        u, v = B.words[x], B.words[y]
        k = 0
        while k < min(len(u), len(v)) and u[k] == v[k]:
            k += 1
        bad += gromov_product(B, 0, x, y) != k
    ok = est.exhaustive and est.delta == 0 and bad == 0
    assert report(3, ok, f"delta = {est.delta:g} (exhaustive={est.exhaustive}), prefix mismatches {bad}/1000")


def test_04_busemann_sandwich(report):
    p = parse_presentation(Z2 + "parabolic a b\n")
    X = cusped_ball(p, 6)
    rec = sandwich(X, 0)
    n = rec["n_inside"] + rec["n_outside"]
    assert report(4, rec["C"] <= 3, f"C = {rec['C']:g} over {n} vertices, depth {rec['T']}")


def test_05_separation(report):
    p = parse_presentation(Z2Z2)
    X = cusped_ball(p, 4)
    vals = []
    for T in (2, 4):
        bn = build_net(X, T, margin=1.0)
        fam = limit_sets(bn)
        rec = separation_audit(fam, bn)
        vals.append((T, len(bn), len(fam), rec["inv_C"]))
    (T1, n1, k1, c1), (T2, n2, k2, c2) = vals
    ok = c1 > 0 and c2 > 0 and 0.5 <= c1 / c2 <= 2
    assert report(5, ok, f"1/C = {c1:g} (T={T1}, {n1} pts, {k1} sets), {c2:g} (T={T2}, {n2} pts, {k2} sets)")


def test_06_carpet_quasi_arc(report):
    ctx = build_context(PipelineConfig(preset="carpet"))
    net = ctx.net
    arc, rep = build_quasi_arc(net, ctx.family, QuasiArcParams(kappa=3.0))
    lam = rep.lambda_measured
    vq = verify_quasi_arc(arc, net, lam=lam)
    h, diam = net.resolution(), net.diameter()
    clear = all(c["clearance"] >= c["scale"] / lam - 1e-9 for c in rep.clearances)
    span = net.diameter(arc) >= diam / 2 - h
    drift = rep.drift_total <= diam / 4
    ok = rep.status == "pass" and vq["passed"] and is_simple(arc) and clear and span and drift
    assert report(6, ok, f"lambda = {lam:.3f}, {len(arc)} points, clearance ok={clear}, "
                         f"drift {rep.drift_total:.3f} <= {diam / 4:.3f}, {len(ctx.family)} obstacles")


def test_07_straightening(report):
    net = grid_net(64)
    h = net.resolution()
    passed, worst_S = 0, 0.0
    for seed in range(100):
        arc = zigzag_arc(net, seed=seed)
        iota = h * (4 + 4 * (seed % 4))
        out, rep = straighten(arc, iota, net)
        ok, _ = follows_check(out, arc, iota, net)
        passed += bool(rep["passed"] and ok)
        worst_S = max(worst_S, rep["S_measured"])
    assert report(7, passed == 100, f"{passed}/100 zigzags, s = 0.5, max measured S = {worst_S:.3f} < 4")


def test_08_chains(report):
    net = grid_net(64)
    h = net.resolution()
    rng = np.random.default_rng(0)
    pairs = []
    while len(pairs) < 1000:
        a, b = (int(v) for v in rng.integers(0, len(net), 2))
        if net.d(a, b) >= 2 * h:
            pairs.append((a, b))
    K1, bad = 0.0, 0
    for a, b in pairs:
        c = chain(net, a, b)
        bad += not (c.max_gap <= c.rho / 2 + 1e-9)
        K1 = max(K1, c.K1)
    ok = bad == 0 and math.isfinite(K1)
    assert report(8, ok, f"{1000 - bad}/1000 gap checks, global K1 = {K1:.4f}")


def test_09_genus2(report, tmp_path):
    out = {}
    for T in (8, 10):
        cfg = PipelineConfig(preset="genus2", depth=T, out=str(tmp_path / f"T{T}"))
        ctx = build_context(cfg)
        tmp = tmp_path / f"T{T}"
        tmp.mkdir()
        lc = linconn_estimate(ctx.net)
        code, rec = cmd_embed(cfg, ctx)
        out[T] = (lc["connected"], code, rec)
    (c8, code8, r8), (c10, code10, r10) = out[8], out[10]
    l8, l10 = r8["distortion"]["lambda"], r10["distortion"]["lambda"]
    k8, k10 = r8["distortion"]["c"], r10["distortion"]["c"]

    def close(x, y):
        return abs(x - y) <= 0.1 * max(abs(x), abs(y), 1e-12) or (x == 0 and y == 0)
    eta = r10["transversality"]["eta"]
    lamp = r10["persistence"]["lambda"]
    ok = (c8 and c10 and code8 == 0 and code10 == 0 and close(l8, l10) and close(k8, k10)
          and all(math.isfinite(e) for e in eta) and math.isfinite(lamp))
    assert report(9, ok, f"(lambda, c) = ({l8:.3f}, {k8:.3f}) at T=8, ({l10:.3f}, {k10:.3f}) at T=10; "
                         f"eta = {eta}, lambda' = {lamp:.3f}")


def test_10_collapse_vs_persistence(report):
    p = parse_presentation(Z2Z2)
    seg = [(1,) * k for k in range(40)]
    alt = [((1, 3) * 20)[:k] for k in range(40)]
    res = []
    for words in (seg, alt):
        S = np.array([[word_distance(p, u, v) for v in words] for u in words], float)
        G, ids = coned_off_tube(p, words)
        prof = transversality_audit(words, p, Ms=(0, 1, 2))
        res.append(persistence_check(S, G.dist_matrix(ids), prof))
    a, b = res
    ok = a["collapsed"] and a["image_diameter"] <= 1 and not b["collapsed"] and b["lambda"] <= 4
    assert report(10, ok, f"segment image diameter {a['image_diameter']:g} (collapsed={a['collapsed']}), "
                          f"cross-factor lambda' = {b['lambda']:.3f}, c = {b['c']:.3f}")
