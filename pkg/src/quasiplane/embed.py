"""Cone over a boundary arc, ray map into the cusped space, and coned-off persistence."""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .presentations import cayley_ball, coset_fragments, coset_key, inverse, reduce

TOL = 1e-9


class DepthError(ValueError):
    pass


@dataclass(frozen=True)
class ConePoint:
    z: int        # index of a boundary net point on the arc
    k: int        # level; t = exp(-eps * k * step)


def quadrant_net(arc, levels, step=1.0):
    if not len(arc):
        raise ValueError("empty arc")
    if step <= 0:
        raise ValueError("step must be positive")
    return [ConePoint(int(z), k) for z in arc for k in range(levels + 1)]


def d_cone(a, b, rho, eps, step=1.0):
    """Cone quasi-metric on the quadrant over a boundary arc."""
    if a == b:
        return 0.0
    tj, tk = math.exp(-eps * a.k * step), math.exp(-eps * b.k * step)
    r = 0.0 if a.z == b.z else float(rho[a.z, b.z])
    return 2 * math.log((r + max(tj, tk)) / math.sqrt(tj * tk)) / eps


def cone_matrix(points, rho, eps, step=1.0, pairs=None):
    z = np.array([p.z for p in points])
    k = np.array([p.k for p in points], dtype=float)
    if pairs is None:
        i, j = np.triu_indices(len(points), 1)
    else:
        i, j = np.asarray(pairs).T
    t = np.exp(-eps * k * step)
    r = np.where(z[i] == z[j], 0.0, rho[z[i], z[j]])
    return 2 * np.log((r + np.maximum(t[i], t[j])) / np.sqrt(t[i] * t[j])) / eps


def ray_map(cp, net, step=1.0):
    """Point at distance k*step along the witness geodesic of z."""
    t = int(round(cp.k * step))
    if t > net.depth(cp.z):
        raise DepthError(f"level {cp.k} needs depth {t}, witness has {net.depth(cp.z)}; build a deeper net")
    return net.prefix(cp.z, t)


@dataclass
class ConeEmbedding:
    points: list
    images: list
    net: object = field(repr=False)
    step: float = 1.0
    shadow: list = None
    offsets: list = None
    distortion: tuple = None

    def image_distances(self, pairs, use_shadow=False):
        imgs = self.shadow if use_shadow else self.images
        return _pair_distances(self.net, imgs, pairs)


def _pair_distances(net, imgs, pairs):
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if net.is_cusped:
        X = net.space
        nodes = sorted({int(imgs[i]) for i in pairs.ravel()})
        pos = {v: k for k, v in enumerate(nodes)}
        B = X.block(nodes, nodes)
        return np.array([B[pos[int(imgs[i])], pos[int(imgs[j])]] for i, j in pairs])
    sp = net.space
    return np.array([sp.d(imgs[i], imgs[j]) for i, j in pairs], dtype=float)


def embed_arc(arc, net, levels=None, step=1.0):
    levels = int(min(net.depth(z) for z in arc) / step) if levels is None else levels
    pts = quadrant_net(arc, levels, step)
    return ConeEmbedding(pts, [ray_map(c, net, step) for c in pts], net, step)


def _lam_grid():
    return 1.005 ** np.arange(0, 700)


def fit_qi(src, img):
    """Least lam + c(lam) over a geometric grid, c(lam) the additive constant needed at lam."""
    src, img = np.asarray(src, float), np.asarray(img, float)
    if not len(src):
        return 1.0, 0.0
    best = None
    for lam in _lam_grid():
        c = max(0.0, float((src / lam - img).max()), float((img - lam * src).max()))
        if best is None or lam + c < best[0] + best[1] - TOL:
            best = (float(lam), c)
    return best


def sample_pairs(n, samples=None, seed=0):
    if samples is None or n * (n - 1) // 2 <= samples:
        i, j = np.triu_indices(n, 1)
        return np.stack([i, j], axis=1)
    rng = np.random.default_rng(seed)
    P = rng.integers(0, n, size=(samples, 2))
    P = P[P[:, 0] != P[:, 1]]
    return np.sort(P, axis=1)


def distortion_audit(emb, pairs=None, samples=3000, seed=0):
    """(lam, c) with d_cone/lam - c <= d_X <= lam d_cone + c over the sampled pairs."""
    if len(emb.points) < 2:
        raise ValueError("need at least two cone points")
    pairs = sample_pairs(len(emb.points), samples, seed) if pairs is None else np.asarray(pairs)
    eps = emb.net.params.epsilon
    dc = cone_matrix(emb.points, emb.net.rho, eps, emb.step, pairs)
    dx = emb.image_distances(pairs)
    lam, c = fit_qi(dc, dx)
    gap = np.maximum(dc / lam - dx, dx - lam * dc)
    w = int(np.argmax(gap))
    emb.distortion = (lam, c)
    return {"lambda": lam, "c": c, "pairs": len(pairs),
            "worst": (emb.points[pairs[w][0]], emb.points[pairs[w][1]], float(dc[w]), float(dx[w]))}


def project_to_cayley(emb):
    """Nearest Cayley vertex to every image point; offsets recorded."""
    net = emb.net
    if not net.is_cusped:
        emb.shadow = list(emb.images)
        emb.offsets = [0.0] * len(emb.images)
        return {"C3": 0.0}
    X = net.space
    cay = X.cayley_ids()
    shadow, offs = [], []
    for v in emb.images:
        v = int(v)
        if X.level[v] == 0:
            shadow.append(v)
            offs.append(0.0)
            continue
        row = X.row(v)[cay]
        u = int(cay[np.argmin(row)])
        if not np.isfinite(row.min()):
            raise ValueError(f"image {v} has no Cayley vertex in the ball")
        shadow.append(u)
        offs.append(float(row.min()))
    emb.shadow, emb.offsets = shadow, offs
    return {"C3": max(offs)}


# --- transversality ----------------------------------------------------------

@dataclass
class TransversalityProfile:
    Ms: list
    eta: list
    worst: list = field(default_factory=list)
    diameter: float = 0.0

    @property
    def non_transversal(self):
        return bool(self.diameter > 0 and self.eta and self.eta[0] >= self.diameter - TOL)

    def as_record(self):
        return {"M": list(self.Ms), "eta": list(self.eta), "diameter": self.diameter,
                "non_transversal": self.non_transversal}


def _coset_dist(p, x, g, which):
    """d(x, gP) for product backends: length of the shortest element of x^-1 g P."""
    k = coset_key(p, inverse(tuple(x)) + tuple(g), which)
    if k is None:
        raise ValueError("coset distances need a product backend")
    return len(k)


def transversality_audit(points, p, ball=None, Ms=(0, 1, 2)):
    """eta(M) = max over peripheral cosets of diam(points within M of the coset).

    points are vertex ids of a Cayley ball, or words when ball is None.
    """
    Ms = sorted(Ms)
    if ball is not None:
        ids = [int(i) for i in points]
        rows = dijkstra(ball.graph, directed=False, indices=ids, unweighted=True)
        Dpts = rows[:, ids]
        cosets = []
        for w in range(len(p.parabolic)):
            for f in coset_fragments(p, ball, w):
                cosets.append((f"{w}:{p.format(ball.words[f.representative])}", rows[:, f.members].min(axis=1)))
    else:
        words = [reduce(p, w) for w in points]
        n = len(words)
        Dpts = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                Dpts[i, j] = Dpts[j, i] = len(reduce(p, inverse(words[i]) + words[j]))
        reach = cayley_ball(p, max(Ms)).words if Ms[-1] > 0 else [()]
        cosets, seen = [], set()
        for w in range(len(p.parabolic)):
            for x in words:
                for u in reach:
                    g = coset_key(p, x + tuple(u), w)
                    if g is None:
                        raise ValueError("coset keys unavailable for this backend")
                    if (w, g) in seen:
                        continue
                    seen.add((w, g))
                    cosets.append((f"{w}:{p.format(g)}", np.array([_coset_dist(p, y, g, w) for y in words])))
    diam = float(Dpts.max()) if len(Dpts) else 0.0
    eta, worst = [], []
    for M in Ms:
        best, at = 0.0, None
        for name, d in cosets:
            sel = np.nonzero(d <= M + TOL)[0]
            if len(sel):
                v = float(Dpts[np.ix_(sel, sel)].max())
                if v > best or at is None:
                    best, at = max(best, v), name
        eta.append(best)
        worst.append(at)
    # enforce monotone profile (intersections grow with M)
    eta = list(np.maximum.accumulate(eta)) if eta else eta
    return TransversalityProfile(Ms, [float(e) for e in eta], worst, diam)


# --- coned-off graphs --------------------------------------------------------

class ConedGraph:
    """Graph with a cone vertex per peripheral coset, joined by half-length edges."""

    def __init__(self, n_base, edges, cone_of, labels=None):
        self.n_base = n_base
        cones = sorted({c for cs in cone_of for c in cs})
        self.cone_index = {c: n_base + k for k, c in enumerate(cones)}
        r, c, w = [], [], []
        for i, j in edges:
            r.append(i)
            c.append(j)
            w.append(1.0)
        for i, cs in enumerate(cone_of):
            for cone in cs:
                r.append(i)
                c.append(self.cone_index[cone])
                w.append(0.5)
        n = n_base + len(cones)
        self.graph = csr_matrix((w + w, (r + c, c + r)), shape=(n, n))
        self.labels = labels
        self._rows = {}

    def rows(self, ids):
        ids = [int(i) for i in ids]
        todo = [i for i in dict.fromkeys(ids) if i not in self._rows]
        if todo:
            D = dijkstra(self.graph, directed=False, indices=todo)
            for i, row in zip(todo, D):
                self._rows[i] = row[:self.n_base]
        return np.array([self._rows[i] for i in ids])

    def dist_matrix(self, ids):
        ids = list(ids)
        return self.rows(ids)[:, ids]


def coned_off_ball(p, R, budget=None):
    """Cayley ball plus unit shortcuts inside every peripheral coset fragment."""
    from .presentations import DEFAULT_BUDGET
    ball = cayley_ball(p, R, budget or DEFAULT_BUDGET)
    cone_of = [[] for _ in range(len(ball))]
    for w in range(len(p.parabolic)):
        for f in coset_fragments(p, ball, w):
            for v in f.members:
                cone_of[v].append((w, f.representative))
    G = ConedGraph(len(ball), [(i, j) for i, j, _ in ball.edges], cone_of, ball.words)
    G.ball = ball
    return G


def coned_off_tube(p, words, radius=1):
    """Coned-off graph on the radius-neighbourhood of a word set; returns (graph, ids of the words)."""
    verts = {}
    words = [reduce(p, w) for w in words]
    frontier = list(dict.fromkeys(words))
    for w in frontier:
        verts.setdefault(w, len(verts))
    for _ in range(radius):
        nxt = []
        for w in frontier:
            for l in p.letters():
                u = reduce(p, w + (l,))
                if u not in verts:
                    verts[u] = len(verts)
                    nxt.append(u)
        frontier = nxt
    vlist = sorted(verts, key=verts.get)
    edges = []
    for w, i in verts.items():
        for l in p.letters():
            if l > 0:
                u = reduce(p, w + (l,))
                if u in verts:
                    edges.append((i, verts[u]))
    cone_of = []
    for w in vlist:
        cs = []
        for k in range(len(p.parabolic)):
            key = coset_key(p, w, k)
            if key is None:
                raise ValueError("coset keys unavailable for this backend")
            cs.append((k, key))
        cone_of.append(cs)
    G = ConedGraph(len(vlist), edges, cone_of, vlist)
    return G, [verts[w] for w in words]


def syllable_distance(p, u, v):
    """Coned-off distance in a free product whose factors are all peripheral: syllable count of u^-1 v."""
    orc = p.oracle()
    covered = set()
    for P in p.parabolic:
        covered |= {g + 1 for g in P}
    for b in orc.blocks:
        if not set(b) <= covered:
            raise ValueError("every factor must be peripheral")
    return len(orc.syllables(reduce(p, inverse(tuple(u)) + tuple(v))))


def persistence_check(source_D, image_D, profile=None):
    """Quasi-isometry constants of a point map into the coned-off metric."""
    S, I = np.asarray(source_D, float), np.asarray(image_D, float)
    n = S.shape[0] if S.ndim else 0
    if n == 0:
        return {"empty": True}
    i, j = np.triu_indices(n, 1)
    lam, c = fit_qi(S[i, j], I[i, j])
    src_diam, img_diam = float(S.max()), float(I.max())
    rec = {"empty": False, "lambda": lam, "c": c, "source_diameter": src_diam,
           "image_diameter": img_diam, "collapsed": bool(img_diam <= 1 + TOL and src_diam > 2)}
    if profile is not None:
        rec["eta"] = profile.as_record()
    return rec
