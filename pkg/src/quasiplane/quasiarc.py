"""Obstacle-avoiding quasi-arcs in doubling, linearly connected nets."""
from dataclasses import dataclass, field, asdict
import math

import numpy as np

from .nets import path_in

TOL = 1e-9


# --- arc primitives ------------------------------------------------------

def loop_cut(arc):
    """Remove loops: on revisiting a point, drop everything since its first visit."""
    out, pos = [], {}
    for p in arc:
        q = pos.get(p)
        if q is not None:
            for r in out[q + 1:]:
                del pos[r]
            out = out[:q + 1]
        else:
            pos[p] = len(out)
            out.append(p)
    return out


def is_simple(arc):
    return len(set(arc)) == len(arc)


def _columns(net, arc):
    """Yield (j, rho(arc[:j+1], arc[j]), running subarc diameters D[:j+1, j])."""
    arc = np.asarray(arc, dtype=np.int64)
    n = len(arc)
    D = np.zeros(n)
    for j in range(n):
        col = net.sub(arc[:j + 1], arc[j:j + 1])[:, 0]
        suf = np.maximum.accumulate(col[::-1])[::-1]
        D[:j + 1] = np.maximum(D[:j + 1], suf)
        yield j, col, D[:j + 1]


def subarc_diameters(net, arc):
    n = len(arc)
    M = np.zeros((n, n))
    for j, _, Dj in _columns(net, arc):
        M[:j + 1, j] = Dj
    return M


def verify_quasi_arc(arc, net, lam=None, window=math.inf):
    """Exhaustive check of diam(arc[x,y]) <= lam * rho(x,y) over pairs with rho <= window."""
    worst, at = 1.0 if len(arc) > 1 else 0.0, None
    for j, col, Dj in _columns(net, arc):
        if j == 0:
            continue
        c, d = col[:j], Dj[:j]
        m = (c <= window) & (c > 0)
        if not m.any():
            continue
        ratio = np.where(m, d / np.where(c > 0, c, 1), 0)
        i = int(np.argmax(ratio))
        if ratio[i] > worst:
            worst, at = float(ratio[i]), (int(arc[i]), int(arc[j]))
    passed = None if lam is None else worst <= lam + TOL
    return {"lambda_measured": worst, "worst_pair": at, "passed": passed, "window": window,
            "lambda": lam, "n_points": len(arc)}


def follows_check(B, A, iota, net):
    """Does B iota-follow A?  Greedy least monotone assignment with rho(b_k, a_p(k)) <= iota."""
    if not len(A) or not len(B):
        return False, None
    if net.d(B[0], A[0]) > iota + TOL or net.d(B[-1], A[-1]) > iota + TOL:
        return False, (0 if net.d(B[0], A[0]) > iota + TOL else len(B) - 1)
    R = net.sub(B, A)
    j = 0
    for k in range(1, len(B) - 1):
        ok = np.nonzero(R[k, j:] <= iota + TOL)[0]
        if not len(ok):
            return False, k
        j += int(ok[0])
    return True, None


def follow_distance(B, A, net):
    """Least iota with B iota-following A (monotone assignment, endpoints to endpoints)."""
    R = net.sub(B, A)
    F = np.full(R.shape[1], np.inf)
    F[0] = R[0, 0]
    for k in range(1, R.shape[0]):
        F = np.maximum(np.minimum.accumulate(F), R[k])
    return float(F[-1])


def local_structure(arc, net, radius):
    """max diam(J[x,y]) over pairs with rho(x,y) < radius."""
    worst, at = 0.0, None
    for j, col, Dj in _columns(net, arc):
        m = col[:j] < radius
        if m.any():
            d = np.where(m, Dj[:j], -1)
            i = int(np.argmax(d))
            if d[i] > worst:
                worst, at = float(d[i]), (int(arc[i]), int(arc[j]))
    return worst, at


# --- straightening -------------------------------------------------------

def _shortcut(arc, iota, s, net, allowed):
    out = [arc[0]]
    i, n = 0, len(arc)
    arr = np.asarray(arc, dtype=np.int64)
    while i < n - 1:
        r = net.sub(arr[i:i + 1], arr[i + 1:])[0]
        close = np.nonzero(r < s * iota)[0]
        j = i + 1 + (int(close[-1]) if len(close) else 0)
        if j > i + 1:
            mask = net.row(arc[i]) <= iota
            if allowed is not None:
                mask = mask & allowed
            mask[arc[i]] = mask[arc[j]] = True
            path = path_in(net, arc[i], arc[j], allowed=mask)
            if path is None:
                j = i + 1
                path = [arc[i], arc[j]]
        else:
            path = [arc[i], arc[j]]
        out.extend(path[1:])
        i = j
    return loop_cut(out)


def straighten(arc, iota, net, s=0.5, S=4.0, allowed=None):
    """Greedy shortcutting inside iota-balls; returns (arc, report) with measured (s, S)."""
    h = net.resolution()
    rep = {"iota": iota, "s": s, "S_target": S}
    if iota < 2 * h - TOL:
        rep.update(skipped=True, note="iota below twice the net resolution")
        return list(arc), rep
    out = _shortcut(list(arc), iota, s, net, allowed)
    diam, at = local_structure(out, net, s * iota)
    ok_f, wit = follows_check(out, arc, iota, net)
    rep.update(skipped=False, S_measured=diam / iota, worst_pair=at, follows=ok_f, follows_witness=wit,
               endpoints=(out[0] == arc[0] and out[-1] == arc[-1]),
               passed=bool(ok_f and diam < S * iota and out[0] == arc[0] and out[-1] == arc[-1]))
    return out, rep


# --- obstacle stages -----------------------------------------------------

def scale_filtration(scales, r, D0):
    """Class index n >= 1 with r^n < D/D0 <= r^(n-1) for each scale."""
    out = []
    for D in scales:
        if D > D0 * (1 + TOL):
            raise ValueError(f"scale {D} exceeds D0={D0}")
        x = math.log(D / D0) / math.log(r)
        out.append(int(math.floor(x + TOL)) + 1)
    return out


def _runs(mask):
    runs, k, n = [], 0, len(mask)
    while k < n:
        if mask[k]:
            e = k
            while e + 1 < n and mask[e + 1]:
                e += 1
            runs.append((k, e))
            k = e + 1
        else:
            k += 1
    return runs


class StageFailure(RuntimeError):
    def __init__(self, msg, witness=None):
        self.witness = witness
        super().__init__(msg)


def detour(arc, V, rn, L, net, allowed=None, dV=None):
    """Route arc around V: push endpoints out, replace crossings of N(V, rn/L) by annulus paths, cut loops."""
    if dV is None:
        dV = net.dist_to_set(V.ids)
    arc = list(arc)
    rep = {"scale": V.scale, "rn": rn}
    if dV[arc].min() >= 2 * rn - TOL:
        rep["changed"] = False
        return arc, rep
    r_av, inner = rn / L, rn / L ** 2
    zone = (dV >= inner - TOL) & (dV <= 2 * rn + TOL)
    if allowed is not None:
        zone &= allowed
    ends = (dV >= 2 * r_av - TOL) & (dV <= 2 * rn + TOL)
    if allowed is not None:
        ends &= allowed
    for side in (0, 1):
        a = arc if side == 0 else arc[::-1]
        if dV[a[0]] < r_av - TOL:
            cand = np.nonzero(ends)[0]
            if not len(cand):
                raise StageFailure("no porous point for endpoint push-out", a[0])
            x = int(cand[np.argmin(net.sub([a[0]], cand)[0])])
            a = [x] + a
        arc = a if side == 0 else a[::-1]
    inside = dV[arc] < r_av - TOL
    out, last = [], 0
    for s, e in _runs(inside):
        x, y = arc[s - 1], arc[e + 1]
        mask = zone.copy()
        mask[x] = mask[y] = True
        path = path_in(net, x, y, allowed=mask)
        if path is None:
            raise StageFailure(f"annulus disconnected around obstacle of scale {V.scale:.4g}", (x, y))
        out.extend(arc[last:s - 1])
        out.extend(path)
        last = e + 2
    out.extend(arc[last:])
    out = loop_cut(out)
    rep.update(changed=True, clearance=float(dV[out].min()), target=inner)
    return out, rep


@dataclass
class QuasiArcParams:
    r: float = 1 / 3
    L: float = 2.0
    N: float = 5.0
    s: float = 0.5
    S: float = 4.0
    D0: float = None
    kappa: float = None        # r'_n = kappa * D0 * r^n ; the proof's value is 1 / (16 L^2)
    strict: bool = False

    def stage_kappa(self):
        return 1.0 / (16 * self.L ** 2) if self.kappa is None else self.kappa

    def invariant_violations(self):
        bad = []
        sp = self.s / (8 * self.L ** 3)
        if self.L < 10:
            bad.append(f"L={self.L} < 10")
        bound = min(sp / (4 + 2 * self.S), 0.1, 1 / (32 * self.L ** 3))
        if self.r > bound:
            bad.append(f"r={self.r:.4g} > {bound:.3g}")
        if self.kappa is not None and abs(self.kappa - 1 / (16 * self.L ** 2)) > 1e-15:
            bad.append(f"kappa={self.kappa:.4g} differs from 1/(16 L^2)")
        return bad


@dataclass
class QuasiArcReport:
    status: str
    lambda_measured: float = None
    lambda_qa: float = None
    lambda_clear: float = None
    clearances: list = field(default_factory=list)
    diam_ratio: float = None
    drift_total: float = 0.0
    drift_bound: float = None
    stages: list = field(default_factory=list)
    iterations: int = 0
    notes: list = field(default_factory=list)
    invariant_violations: list = field(default_factory=list)

    def as_record(self):
        return asdict(self)


def initial_arc(net, h=None):
    a, b = net.farthest_pair()
    path = path_in(net, a, b, h=h)
    if path is None:
        raise StageFailure("net disconnected at working resolution", (a, b))
    return path


def clearance_table(arc, net, family):
    out = []
    for k, V in enumerate(family):
        c = float(net.dist_to_set(V.ids, points=arc).min())
        out.append({"set": k, "scale": V.scale, "clearance": c,
                    "ratio": (V.scale / c) if c > 0 else math.inf})
    return out


def build_quasi_arc(net, family, params, J0=None):
    h = net.resolution()
    diamZ = net.diameter()
    sets = list(family) if family is not None else []
    D0 = params.D0 if params.D0 is not None else (max(V.scale for V in sets) if sets else diamZ)
    viol = params.invariant_violations()
    if params.strict and viol:
        raise ValueError("quasi-arc parameters violate the construction's constraints: " + "; ".join(viol))
    kappa = params.stage_kappa()
    L = params.L
    classes = scale_filtration([V.scale for V in sets], params.r, D0) if sets else []
    J = list(J0) if J0 is not None else initial_arc(net)
    rep = QuasiArcReport(status="running", invariant_violations=viol)
    rep.drift_bound = diamZ / 4
    dists = [None] * len(sets)
    allowed = np.ones(net.n, dtype=bool)
    persist = {}
    n = 0
    while True:
        n += 1
        rn = kappa * D0 * params.r ** n
        if rn < h * (1 - TOL):
            rep.notes.append(f"stopped before stage {n}: r'_n={rn:.4g} below resolution {h:.4g}")
            if n == 1:
                rep.notes.append("net resolution coarser than the first stage scale")
            break
        prev = list(J)
        stage = {"n": n, "rn": rn, "obstacles": 0, "detours": []}
        members = [k for k, c in enumerate(classes) if c == n]
        for k in members:
            dists[k] = net.dist_to_set(sets[k].ids, bound=2 * rn + 2 * h)
            try:
                J, drep = detour(J, sets[k], rn, L, net, allowed, dists[k])
            except StageFailure as e:
                stage["failure"] = str(e)
                rep.stages.append(stage)
                rep.status = "stage-failure"
                rep.notes.append(f"stage {n}: {e} witness={e.witness}")
                return J, rep
            drep["set"] = k
            stage["detours"].append(drep)
            stage["obstacles"] += 1
        J = loop_cut(J)
        for k in members:
            # later stages may erode clearance down to the persistence level r'_n / (4 L^2)
            allowed &= dists[k] >= rn / (4 * L ** 2) - TOL
            persist[k] = rn / (4 * L ** 2)
        iota = rn / (2 * L ** 2)
        J, srep = straighten(J, iota, net, params.s, params.S, allowed)
        stage["straighten"] = srep
        stage["follow_distance"] = follow_distance(J, prev, net)
        rep.drift_total += stage["follow_distance"]
        rep.stages.append(stage)
        rep.iterations = n
        if n > 200:
            break
    rep.clearances = clearance_table(J, net, sets)
    for c in rep.clearances:
        c["persistence_level"] = persist.get(c["set"])
        c["persists"] = c["persistence_level"] is None or c["clearance"] >= c["persistence_level"] - TOL
    vq = verify_quasi_arc(J, net)
    rep.lambda_qa = vq["lambda_measured"]
    rep.lambda_clear = max([c["ratio"] for c in rep.clearances], default=1.0)
    rep.lambda_measured = max(rep.lambda_qa, rep.lambda_clear)
    rep.diam_ratio = net.diameter(J) / diamZ if diamZ > 0 else 1.0
    ok = (is_simple(J) and math.isfinite(rep.lambda_measured) and rep.diam_ratio >= 0.5 - h / diamZ - TOL)
    rep.status = "pass" if ok else "fail"
    return J, rep


def zigzag_arc(net, turns=6, seed=0):
    """Seeded zigzag: waypoints alternating between the left and right thirds, joined by net paths."""
    rng = np.random.default_rng(seed)
    if net.coords is None:
        raise ValueError("zigzag arcs need a coordinate net")
    lo, hi = net.coords.min(axis=0), net.coords.max(axis=0)
    span = hi - lo
    ys = np.sort(rng.uniform(0, 1, turns))
    way = []
    for t, y in enumerate(ys):
        x = rng.uniform(0, 1 / 3) + (2 / 3 if t % 2 else 0)
        way.append(lo + span * np.array([x, y]))
    ids = [int(net.tree.query(w)[1]) for w in way]
    arc = [ids[0]]
    for a, b in zip(ids, ids[1:]):
        if a != b:
            arc.extend(path_in(net, a, b, weighted=False)[1:])
    return loop_cut(arc)
