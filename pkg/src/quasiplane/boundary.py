"""Finite-depth boundary nets with visual metrics, obstacle families and their audits."""
from dataclasses import dataclass, field
import math
import warnings

import numpy as np

from .hypgeom import VisualParams, delta_fourpoint, geodesic
from .nets import MetricNet, ObstacleFamily, ObstacleSet, minimax_radius, path_in
from .presentations import cayley_ball, coset_key, inverse, reduce, shortlex_key

TOL = 1e-9


class OrbitGapError(ValueError):
    def __init__(self, msg, gap):
        self.gap = gap
        super().__init__(msg)


class WordSpace:
    """Group elements as normal-form words with the word metric."""

    def __init__(self, p):
        self.p = p
        self._nf = {}

    def nf(self, w):
        w = tuple(w)
        if w not in self._nf:
            self._nf[w] = reduce(self.p, w)
        return self._nf[w]

    def d(self, u, v):
        return len(self.nf(inverse(u) + tuple(v)))

    def dist_matrix(self, words):
        n = len(words)
        D = np.zeros((n, n))
        for i in range(n):
            wi = inverse(words[i])
            for j in range(i + 1, n):
                D[i, j] = D[j, i] = len(reduce(self.p, wi + tuple(words[j])))
        return D


@dataclass
class BoundaryNet:
    witnesses: list            # per point: node path from w (cusped) or the witness word (word space)
    rho: np.ndarray
    params: VisualParams
    T: int
    margin: float
    delta: float
    D: np.ndarray              # distances between witness endpoints
    space: object = field(repr=False, default=None)
    words: list = field(default_factory=list)
    marks: dict = field(default_factory=dict)
    resolution: str = "nn"     # "nn" or "mst": how the working resolution of .net is chosen
    _net: object = field(default=None, repr=False)

    def __len__(self):
        return len(self.witnesses)

    @property
    def net(self):
        if self._net is None:
            self._net = MetricNet(D=self.rho, name=f"boundary-T{self.T}")
            if self.resolution == "mst":
                self._net._h = self._net.mst_resolution()
        return self._net

    @property
    def products(self):
        d0 = np.array([self.depth(i) for i in range(len(self))], dtype=float)
        return 0.5 * (d0[:, None] + d0[None, :] - self.D)

    def depth(self, i):
        return len(self.witnesses[i]) - (1 if self.is_cusped else 0)

    @property
    def is_cusped(self):
        return not isinstance(self.space, WordSpace)

    def endpoint(self, i):
        return self.witnesses[i][-1] if self.is_cusped else self.witnesses[i]

    def prefix(self, i, t):
        """Point at distance t along witness i."""
        if t > self.depth(i):
            raise ValueError(f"depth {t} exceeds witness depth {self.depth(i)}")
        return self.witnesses[i][t] if self.is_cusped else self.witnesses[i][:t]

    def records(self):
        for i in range(len(self)):
            yield {"point_id": i, "witness_word": self.words[i], "marks": self.marks.get(i, [])}


def _rho_from(D, depths, params):
    d0 = np.asarray(depths, dtype=float)
    prod = 0.5 * (d0[:, None] + d0[None, :] - D)
    rho = params.rho(prod)
    np.fill_diagonal(rho, 0.0)
    return rho


def _greedy_merge(D, order, margin):
    kept = []
    blocked = np.zeros(D.shape[0], dtype=bool)
    for i in order:
        if not blocked[i]:
            kept.append(i)
            blocked |= D[i] < margin - TOL
    return kept


def estimate_delta(space, ids, cap=100, seed=0):
    ids = list(ids)
    if len(ids) > cap:
        rng = np.random.default_rng(seed)
        ids = sorted(int(i) for i in rng.choice(ids, cap, replace=False))
    return delta_fourpoint(space, ids)


def build_net(ball, T, params=None, margin=None, delta=None, parabolic=True, seed=0):
    """Boundary witnesses of depth T in a cusped ball, one per extendable shortlex geodesic."""
    X = ball
    d0 = X.row(X.basepoint)
    finite = np.isfinite(d0)
    if delta is None:
        delta = estimate_delta(X, np.nonzero(finite)[0], seed=seed).delta
    margin = 2 * delta + 1 if margin is None else margin
    m = int(math.ceil(margin))
    if T + m > d0[finite].max():
        raise ValueError(f"ball too small: depth {T} plus margin {m} exceeds reach {int(d0[finite].max())}")
    if params is None:
        params = VisualParams(VisualParams.default_epsilon(delta), 1.0)
    G = X.graph
    E = d0 == T + m
    for k in range(T + m - 1, T - 1, -1):
        E = (d0 == k) & (G @ E.astype(float) > 0)
    ends = [int(v) for v in np.nonzero(E)[0]]
    marks = {}
    para = []
    if parabolic:
        from .cusped import ray_base
        for h, O in enumerate(X.horoballs):
            lev = T - int(O.d_O)
            if 1 <= lev <= O.K:
                v = X.node(h, ray_base(X, h), lev)
                if d0[v] == T:
                    para.append((v, h))
    # parabolic witnesses first so merging keeps them
    cand = list(dict.fromkeys([v for v, _ in para] + ends))
    if not cand:
        raise ValueError(f"no witnesses at depth {T}")
    D = X.block(cand, cand)
    npara = len(dict.fromkeys(v for v, _ in para))
    order = list(range(npara)) + sorted(range(npara, len(cand)), key=lambda i: cand[i])
    kept = _greedy_merge(D, order, margin)
    pts = [cand[i] for i in kept]
    D = D[np.ix_(kept, kept)]
    index = {v: i for i, v in enumerate(pts)}
    for v, h in para:
        if v in index:
            marks.setdefault(index[v], []).append(f"parabolic:{h}")
    wit = [geodesic(X, v, X.basepoint)[::-1] for v in pts]
    words = []
    for v in pts:
        w = X.p.format(X.cayley.words[int(X.vertex[v])])
        words.append(w if X.level[v] == 0 else f"{w}@{int(X.level[v])}")
    rho = _rho_from(D, [T] * len(pts), params)
    return BoundaryNet(wit, rho, params, T, margin, delta, D, X, words, marks)


def _direction_word(oct_, theta, n):
    from decimal import Decimal, localcontext
    s = 2.0 * n
    while True:
        with localcontext() as ctx:
            ctx.prec = oct_.prec_for(int(2 * s))
            e = Decimal(s).exp()
            sh = (e - 1 / e) / 2
            x, y = sh * Decimal(math.cos(theta)), sh * Decimal(math.sin(theta))
            v = [(1 + x * x + y * y).sqrt(), x, y]
        w = oct_.walk(v, int(2 * s))
        if len(w) >= n:
            return w[:n]
        s *= 1.5


def build_surface_net(p, T, n_dirs=256, params=None, margin=None, delta=None, extra_words=(), seed=0):
    """Boundary witnesses for a genus-2 surface group from evenly spaced geodesic rays at o."""
    orc = p.oracle()
    oct_ = getattr(orc, "oct", None)
    if oct_ is None:
        raise ValueError("ray sampling needs a surface-group presentation")
    space = WordSpace(p)
    if delta is None:
        ball = cayley_ball(p, 3)
        delta = estimate_delta(ball, range(len(ball)), seed=seed).delta
    margin = 2 * delta + 1 if margin is None else margin
    m = int(math.ceil(margin))
    if params is None:
        params = VisualParams(VisualParams.default_epsilon(delta), 1.0)
    cand = []
    for w in extra_words:
        full = reduce(p, tuple(w))
        if len(full) >= T + m:
            cand.append(full[:T])
    n_extra = len(cand)
    for k in range(n_dirs):
        cand.append(_direction_word(oct_, 2 * math.pi * (k + 0.5) / n_dirs, T + m)[:T])
    head = list(dict.fromkeys(cand[:n_extra]))
    tail = sorted(set(cand[n_extra:]) - set(head), key=shortlex_key)
    cand = head + tail
    D = space.dist_matrix(cand)
    kept = _greedy_merge(D, range(len(cand)), margin)
    pts = [cand[i] for i in kept]
    D = D[np.ix_(kept, kept)]
    rho = _rho_from(D, [T] * len(pts), params)
    marks = {i: ["axis"] for i in range(len(head)) if i < len(kept) and kept[i] == i}
    return BoundaryNet(pts, rho, params, T, margin, delta, D, space, [p.format(w) for w in pts], marks,
                       resolution="mst")


# --- peripheral limit sets ---------------------------------------------------

def _coset_distance(space, x, g, h, reach):
    """min over |k| <= reach of d(x, g h^k) for a cyclic subgroup <h>."""
    best = math.inf
    for k in range(-reach, reach + 1):
        hk = tuple(h) * k if k >= 0 else inverse(h) * (-k)
        best = min(best, space.d(x, tuple(g) + hk))
    return best


def limit_sets(net, peripherals=None, R=None, coset_radius=0):
    """Obstacle sets: parabolic points for horoballs and witness clusters near hyperbolic-subgroup cosets."""
    eps = net.params.epsilon
    sets = []
    if net.is_cusped:
        X = net.space
        for i, tags in sorted(net.marks.items()):
            for t in tags:
                if t.startswith("parabolic:"):
                    h = int(t.split(":")[1])
                    dH = float(X.horoballs[h].d_O)
                    sets.append(ObstacleSet([i], math.exp(-eps * dH),
                                            {"kind": "horoball", "id": h, "d_H": dH}))
        p = X.p
    else:
        p = net.space.p
    hyp = p.hypsub if peripherals is None else peripherals
    if hyp:
        R = 2 * net.delta + 1 if R is None else R
        space = net.space if not net.is_cusped else WordSpace(p)
        for s, gens in enumerate(hyp):
            if len(gens) != 1:
                warnings.warn(f"hyperbolic subgroup {s}: only cyclic subgroups are supported, skipped")
                continue
            h = (gens[0] + 1,)
            cosets = {}
            for g in _short_words(p, coset_radius):
                key = coset_key(p, g, s, kind="hypsub") if g else ()
                cosets.setdefault(key, g)
            for key, g in sorted(cosets.items(), key=lambda kv: shortlex_key(kv[1])):
                dH = float(len(g))
                reach = net.T + len(g) + int(math.ceil(R)) + 1
                members = []
                for i in range(len(net)):
                    x = net.endpoint(i)
                    if net.is_cusped:
                        X = net.space
                        if X.level[x] > 0:
                            continue
                        x = X.cayley.words[x]
                    if _coset_distance(space, x, g, h, reach) <= R + TOL:
                        members.append(i)
                if not members:
                    warnings.warn(f"coset {p.format(g) or 'e'}<{p.format(h)}> has no limit witnesses at depth {net.T}")
                    continue
                sets.append(ObstacleSet(members, math.exp(-eps * dH),
                                        {"kind": "hypsub", "id": s, "coset": p.format(g), "d_H": dH}))
    return ObstacleFamily(sets)


def _short_words(p, r):
    if r <= 0:
        return [()]
    ball = cayley_ball(p, r)
    return list(ball.words)


# --- audits ------------------------------------------------------------------

def _set_rho(net, A, B):
    return float(net.rho[np.ix_(A, B)].min())


def separation_audit(family, net):
    sets = list(family)
    if len(sets) < 2:
        return {"pairs": [], "note": "fewer than two sets"}
    eps = net.params.epsilon
    pairs = []
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            A, B = sets[i], sets[j]
            r = _set_rho(net, A.ids, B.ids)
            dH = max(A.origin["d_H"], B.origin["d_H"]) if A.origin and B.origin else 0.0
            pairs.append({"sets": (i, j), "rho": r, "scaled": r * math.exp(eps * dH),
                          "Delta": r / min(A.scale, B.scale)})
    worst = min(pairs, key=lambda q: q["scaled"])
    return {"pairs": pairs, "inv_C": worst["scaled"], "worst": worst["sets"],
            "min_Delta": min(q["Delta"] for q in pairs), "L_hat": 1 / max(min(q["Delta"] for q in pairs), 1e-300)}


def _greedy_cover(net, ids, r):
    left = np.asarray(ids, dtype=np.int64)
    count = 0
    while len(left):
        c = left[0]
        d = net.sub([c], left)[0]
        left = left[d > r + TOL]
        count += 1
    return count


def doubling_estimate(net, exhaustive_limit=2000, samples=300, seed=0, radii=None):
    """Largest greedy cover of a ball B(c, r) by balls of radius r/2 centred in the net."""
    n = len(net)
    if n <= 1:
        return {"N": 1, "at": None, "exhaustive": True}
    diam = net.diameter()
    h = net.resolution() if n > 1 else 0
    if radii is None:
        lo = max(h, diam * 1e-3, 1e-12)
        radii = []
        r = diam
        while r >= lo - TOL:
            radii.append(r)
            r /= 2 ** 0.5
    if n <= exhaustive_limit:
        centers, exhaustive = range(n), True
    else:
        centers, exhaustive = np.random.default_rng(seed).choice(n, samples, replace=False), False
    best, at = 1, None
    for c in centers:
        row = net.row(int(c))
        for r in radii:
            ids = np.nonzero(row <= r + TOL)[0]
            if len(ids) <= best:
                continue
            k = _greedy_cover(net, ids, r / 2)
            if k > best:
                best, at = k, (int(c), float(r))
    return {"N": best, "at": at, "exhaustive": exhaustive, "radii": len(radii)}


def linconn_estimate(net, h=None, sources=None, max_sources=64, seed=0):
    """Chain-diameter to distance ratio over pairs, chains with steps <= h (minimax search)."""
    h = net.resolution() if h is None else h
    h_nn = net.nn_resolution()
    ncomp, lab = net.components(h)
    nn_comp = net.components(h_nn)[0]
    if sources is None:
        if len(net) <= max_sources:
            sources = range(len(net))
        else:
            sources = sorted(np.random.default_rng(seed).choice(len(net), max_sources, replace=False))
    L, at = 0.0, None
    for s in sources:
        R = minimax_radius(net, int(s), h)
        d = net.row(int(s))
        ok = np.isfinite(R) & (d > TOL)
        if ok.any():
            ratio = 2 * R[ok] / d[ok]
            k = int(np.argmax(ratio))
            if ratio[k] > L:
                L, at = float(ratio[k]), (int(s), int(np.nonzero(ok)[0][k]))
    comps = np.bincount(lab).tolist()
    h_mst = net.mst_resolution()
    return {"L": L, "at": at, "h": h, "connected": ncomp == 1, "components": ncomp,
            "component_sizes": comps, "disconnected": ncomp > 1, "h_nn": h_nn,
            "components_nn": nn_comp, "h_mst": h_mst, "mst_ratio": h_mst / h_nn if h_nn > 0 else None}


@dataclass
class Chain:
    ids: list
    rho: float
    max_gap: float
    diameter: float
    K1: float
    note: str = ""

    def gaps_ok(self):
        return self.max_gap <= self.rho / 2 + TOL or len(self.ids) <= 2


def chain(net, a, b, h=None):
    """Chain from a to b with gaps <= rho(a,b)/2 inside a minimax ball around a."""
    a, b = int(a), int(b)
    if a == b:
        return Chain([a], 0.0, 0.0, 0.0, 0.0, "single point")
    h = net.resolution() if h is None else h
    r = net.d(a, b)
    gap = r / 2
    if gap < h - TOL:
        return Chain([a, b], r, r, r, 1.0, "pair below twice the resolution")
    R = minimax_radius(net, a, h)
    if not np.isfinite(R[b]):
        raise ValueError(f"points {a} and {b} are disconnected at resolution {h:.4g}")
    allowed = net.row(a) <= R[b] + TOL
    path = path_in(net, a, b, allowed=allowed, h=h)
    arr = np.asarray(path, dtype=np.int64)
    out, i = [a], 0
    while i < len(arr) - 1:
        d = net.sub([arr[i]], arr[i + 1:])[0]
        ok = np.nonzero(d <= gap + TOL)[0]
        i = i + 1 + int(ok[-1])
        out.append(int(arr[i]))
    S = net.sub(out)
    gaps = [float(S[k, k + 1]) for k in range(len(out) - 1)]
    diam = float(S.max())
    return Chain(out, r, max(gaps), diam, diam / r)


def porosity_audit(family, net, scales=None, L=None, fractions=(1.0, 0.5, 0.25, 0.125)):
    """Per set and scale r: max over a in V of min over b in B(a,r) of r / rho(b, V)."""
    L = family.L if L is None else L
    out = []
    for k, V in enumerate(family):
        rs = scales[k] if scales is not None else [V.scale * f for f in fractions]
        dV = net.dist_to_set(V.ids)
        for r in rs:
            if r > V.scale * (1 + TOL):
                out.append({"set": k, "r": r, "skipped": True, "note": "scale above D(V)"})
                continue
            worst, below = 0.0, 0
            for a in V.ids:
                B = net.ball(a, r)
                if len(B) == 1:
                    below += 1
                    continue
                far = dV[B].max()
                worst = max(worst, r / far if far > TOL else math.inf)
            if below == len(V.ids):
                out.append({"set": k, "r": r, "skipped": True, "note": "scale below the local resolution"})
                continue
            rec = {"set": k, "r": r, "skipped": False, "constant": worst, "below_resolution": below}
            if L is not None:
                rec["passed"] = bool(worst <= L)
            out.append(rec)
    done = [q["constant"] for q in out if not q["skipped"]]
    return {"rows": out, "constant": max(done) if done else None,
            "passed": (all(q.get("passed", True) for q in out if not q["skipped"]) if L is not None else None)}


def avoidability_audit(V, net, r, L, n_arcs=20, seed=0):
    """Detours of crossing arcs inside the annulus A(V, r/L, 2rL) that 4rL-follow the original."""
    from .quasiarc import follows_check
    if r >= V.scale / (2 * L):
        return {"skipped": True, "note": f"scale gate: r={r:.4g} >= D(V)/(2L)={V.scale / (2 * L):.4g}"}
    dV = net.dist_to_set(V.ids)
    ends = np.nonzero((dV >= r - TOL) & (dV <= 2 * r + TOL))[0]
    zone = (dV >= r / L - TOL) & (dV <= 2 * r * L + TOL)
    rng = np.random.default_rng(seed)
    tested, failures = [], []
    tries = 0
    while len(tested) < n_arcs and tries < 20 * n_arcs and len(ends) >= 2:
        tries += 1
        x, y = (int(v) for v in rng.choice(ends, 2, replace=False))
        arc = path_in(net, x, y)
        if arc is None or dV[arc].min() >= r - TOL:
            continue
        J = path_in(net, x, y, allowed=zone)
        if J is None:
            rec = {"arc": (x, y), "detour": False}
        else:
            ok, wit = follows_check(J, arc, 4 * r * L, net)
            rec = {"arc": (x, y), "detour": True, "follows": ok, "witness": wit}
        tested.append(rec)
        if not (rec["detour"] and rec["follows"]):
            failures.append(rec)
    if not tested:
        return {"skipped": True, "note": "no crossing test arcs at this scale"}
    return {"skipped": False, "tested": len(tested), "failures": len(failures),
            "passed": not failures, "witness": failures[0] if failures else None}


def rescale_audit(net, z, r, D=1.0):
    """Move a small ball around z back to unit scale with a group element; measure the distortion."""
    eps, C0, delta = net.params.epsilon, net.params.C0, net.delta
    B = [int(i) for i in np.nonzero(net.rho[z] <= r + TOL)[0]]
    t = -math.log(2 * r * C0) / eps - delta - 1
    rec = {"z": int(z), "r": r, "t_star": t, "ball": len(B)}
    if t < 1 or round(t) > net.depth(z):
        rec.update(branch="fallback", g="", constant=1.0)
        return rec
    y = net.prefix(z, int(round(t)))
    if net.is_cusped:
        X = net.space
        row = X.row(y)
        cay = X.cayley_ids()
        u = int(cay[np.argmin(row[cay])])
        gap = float(row[u])
        if gap > D + TOL:
            raise OrbitGapError(f"no orbit point within {D} of the ray point (gap {gap:g})", gap)
        ends = [net.endpoint(i) for i in B]
        ry = X.row(u)[ends]
        g = inverse(X.cayley.words[u])
        Dab = net.D[np.ix_(B, B)]
        prod = 0.5 * (ry[:, None] + ry[None, :] - Dab)
    else:
        gap, space = 0.0, net.space
        g = inverse(space.nf(y))
        moved = [space.nf(g + tuple(net.endpoint(i))) for i in B]
        lens = np.array([len(w) for w in moved], dtype=float)
        Dab = net.D[np.ix_(B, B)]
        prod = 0.5 * (lens[:, None] + lens[None, :] - Dab)
    new = np.exp(-eps * prod)
    old = net.rho[np.ix_(B, B)] / r
    off = ~np.eye(len(B), dtype=bool)
    if off.any():
        ratio = new[off] / old[off]
        const = float(max(ratio.max(), 1 / ratio.min()))
    else:
        const = 1.0
    p = net.space.p
    rec.update(branch="rescale", g=p.format(g), gap=gap, constant=const)
    return rec
