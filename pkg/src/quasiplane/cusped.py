"""Combinatorial horoballs and cusped balls X(G, P)."""
from collections import deque
from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .presentations import (BudgetError, cayley_ball, coset_fragments, inverse, reduce,
                            shortlex_key)

EDGE_BUDGET = 20_000_000


def strip_distance(t, h1=1.0, h2=1.0):
    """Hyperbolic distance in the upper half plane strip between (0,h1) and (t,h2)."""
    return math.acosh(1.0 + ((h1 - h2) ** 2 + t * t) / (2.0 * h1 * h2))


def default_depth(R):
    return int(math.ceil(math.log2(max(2 * R, 1)))) + 2


class Horoball:
    """Levels 0..K over a coset fragment; horizontal edges at level k join points at coset distance <= 2^k."""

    def __init__(self, members, K, coords=None, D=None, key=None, d_O=0, rep=None):
        self.members = list(members)
        self.size = len(self.members)
        if self.size == 0:
            raise ValueError("empty fragment")
        if K < 1:
            raise ValueError("horoball depth must be at least 1")
        self.coords = None if coords is None else np.asarray(coords, dtype=np.int64)
        self.D = None if D is None else np.asarray(D, dtype=np.int64)
        diam = self.diameter()
        cap = max(1, int(math.ceil(math.log2(max(2 * diam, 1)))))
        if K > cap:
            warnings.warn(f"horoball depth {K} clamped to {cap} (fragment diameter {diam})")
            K = cap
        self.K = K
        self.key = key
        self.d_O = d_O
        self.rep = self.members[0] if rep is None else rep
        self.pos = {v: m for m, v in enumerate(self.members)}

    def row(self, m):
        if self.coords is not None:
            return np.abs(self.coords - self.coords[m]).sum(axis=1)
        return self.D[m]

    def diameter(self):
        if self.coords is not None:
            c = self.coords
            # L1 diameter via the 2^dim sign trick
            if c.shape[1] == 0:
                return 0
            best = 0
            for signs in np.ndindex(*(2,) * c.shape[1]):
                s = c @ (np.array(signs) * 2 - 1)
                best = max(best, int(s.max() - s.min()))
            return best
        return int(self.D.max())

    def adjacent(self, m1, m2, k):
        return int(self.row(m1)[m2]) <= 2 ** k

    def horizontal_pairs(self, k):
        out = []
        for m in range(self.size):
            r = self.row(m)
            js = np.nonzero(r[m + 1:] <= 2 ** k)[0] + m + 1
            out.extend((m, int(j)) for j in js)
        return out

    def n_vertices(self):
        return self.size * (self.K + 1)

    def distances_from(self, m, level=0):
        """BFS inside the horoball graph alone; returns array [level, member]."""
        K, n = self.K, self.size
        dist = np.full((K + 1, n), -1, dtype=np.int64)
        remaining = np.ones((K + 1, n), dtype=bool)
        dist[level, m] = 0
        remaining[level, m] = False
        q = deque([(level, m)])
        while q:
            k, u = q.popleft()
            d = dist[k, u] + 1
            for k2 in (k - 1, k + 1):
                if 0 <= k2 <= K and remaining[k2, u]:
                    remaining[k2, u] = False
                    dist[k2, u] = d
                    q.append((k2, u))
            hit = np.nonzero(remaining[k] & (self.row(u) <= 2 ** k))[0]
            if len(hit):
                remaining[k, hit] = False
                dist[k, hit] = d
                q.extend((k, int(v)) for v in hit)
        return dist


def line_horoball(n, K):
    """Horoball over the Z-fragment {0, ..., n}."""
    return Horoball(range(n + 1), K, coords=np.arange(n + 1)[:, None])


def build_horoball(p, ball, fragment, K, which=0):
    """Horoball over a coset fragment of a Cayley ball, with exact coset distances."""
    P = p.subgroup_letters(which)
    gens = sorted({abs(l) for l in P})
    rep = fragment.representative
    rw = ball.words[rep]
    abelian = False
    if len(gens) == 1:
        abelian = True
    elif p.backend in ("free-abelian", "free-product"):
        orc = p.oracle()
        abelian = len({orc.block_of[g] for g in gens}) == 1
    if abelian:
        coords = []
        for v in fragment.members:
            w = reduce(p, inverse(rw) + ball.words[v])
            if any(l not in P for l in w):
                raise ValueError("fragment member outside the coset")
            c = [0] * len(gens)
            for l in w:
                c[gens.index(abs(l))] += 1 if l > 0 else -1
            coords.append(c)
        return Horoball(fragment.members, K, coords=coords, key=fragment.key,
                        d_O=fragment.dist_to_base, rep=rep)
    m = len(fragment.members)
    D = np.zeros((m, m), dtype=np.int64)
    for i in range(m):
        wi = inverse(ball.words[fragment.members[i]])
        for j in range(i + 1, m):
            D[i, j] = D[j, i] = len(reduce(p, wi + ball.words[fragment.members[j]]))
    return Horoball(fragment.members, K, D=D, key=fragment.key, d_O=fragment.dist_to_base, rep=rep)


@dataclass(frozen=True)
class CuspedPoint:
    vertex: int            # Cayley vertex (surface) or member vertex under the cusp point
    level: int = 0
    horoball: int = -1

    @property
    def is_cusp(self):
        return self.level > 0


class CuspedBall:
    def __init__(self, p, ball, horoballs, edge_budget=EDGE_BUDGET):
        self.p = p
        self.cayley = ball
        self.horoballs = horoballs
        self.basepoint = 0
        n = len(ball)
        self.offsets = []
        kinds, hb, vert, lev = [0] * n, [-1] * n, list(range(n)), [0] * n
        off = n
        for h, O in enumerate(horoballs):
            self.offsets.append(off)
            for k in range(1, O.K + 1):
                for v in O.members:
                    kinds.append(1)
                    hb.append(h)
                    vert.append(v)
                    lev.append(k)
            off += O.K * O.size
        self.n = off
        self.kind = np.array(kinds, dtype=np.int8)
        self.hb = np.array(hb, dtype=np.int64)
        self.vertex = np.array(vert, dtype=np.int64)
        self.level = np.array(lev, dtype=np.int64)
        rows, cols = [], []
        for i, j, _ in ball.edges:
            rows.append(i)
            cols.append(j)
        count = len(rows)
        for h, O in enumerate(horoballs):
            for m, v in enumerate(O.members):
                rows.append(v)
                cols.append(self.node(h, m, 1))
                for k in range(1, O.K):
                    rows.append(self.node(h, m, k))
                    cols.append(self.node(h, m, k + 1))
            for k in range(1, O.K + 1):
                for a, b in O.horizontal_pairs(k):
                    rows.append(self.node(h, a, k))
                    cols.append(self.node(h, b, k))
                count = len(rows)
                if count > edge_budget:
                    raise BudgetError(f"edge budget {edge_budget} exceeded in horoball {h} at level {k}")
        r = np.array(rows + cols, dtype=np.int64)
        c = np.array(cols + rows, dtype=np.int64)
        self.graph = csr_matrix((np.ones(len(r), dtype=np.float64), (r, c)), shape=(self.n, self.n))
        self.graph.sum_duplicates()
        self.graph.data[:] = 1.0
        self.n_edges = len(rows)
        self._rows = {}

    def node(self, h, m, k):
        """Node id of member m of horoball h at level k."""
        O = self.horoballs[h]
        if k == 0:
            return O.members[m]
        return self.offsets[h] + (k - 1) * O.size + m

    def point(self, i):
        return CuspedPoint(int(self.vertex[i]), int(self.level[i]), int(self.hb[i]))

    def node_of(self, pt):
        if pt.level == 0:
            return pt.vertex
        O = self.horoballs[pt.horoball]
        return self.node(pt.horoball, O.pos[pt.vertex], pt.level)

    def rows(self, sources):
        """Distance rows for the given sources (cached)."""
        sources = [int(s) for s in sources]
        todo = [s for s in dict.fromkeys(sources) if s not in self._rows]
        for k in range(0, len(todo), 256):
            chunk = todo[k:k + 256]
            D = shortest_path(self.graph, unweighted=True, directed=False, indices=chunk)
            for s, row in zip(chunk, D):
                self._rows[s] = row
        return np.array([self._rows[s] for s in sources])

    def row(self, s):
        return self.rows([s])[0]

    def block(self, sources, targets, chunk=256):
        """Distances sources x targets without caching the full rows."""
        sources = [int(v) for v in sources]
        tg = np.asarray(targets, dtype=np.int64)
        out = np.empty((len(sources), len(tg)))
        for k in range(0, len(sources), chunk):
            part = sources[k:k + chunk]
            cached = [v in self._rows for v in part]
            if all(cached):
                out[k:k + len(part)] = np.array([self._rows[v][tg] for v in part])
            else:
                D = shortest_path(self.graph, unweighted=True, directed=False, indices=part)
                out[k:k + len(part)] = D[:, tg]
        return out

    def d(self, i, j):
        return float(self.row(i)[j])

    def dist_matrix(self, ids):
        ids = list(ids)
        return self.rows(ids)[:, ids]

    def cayley_ids(self):
        return np.arange(len(self.cayley))


def cusped_ball(p, R, K=None, which=None, budget=None):
    """Cayley ball of radius R with a horoball over every parabolic coset fragment."""
    from .presentations import DEFAULT_BUDGET
    ball = cayley_ball(p, R, budget or DEFAULT_BUDGET)
    K = default_depth(R) if K is None else K
    hbs = []
    idx = range(len(p.parabolic)) if which is None else [which]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for w in idx:
            for f in coset_fragments(p, ball, w):
                hbs.append(build_horoball(p, ball, f, K, w))
    return CuspedBall(p, ball, hbs)


def ray_base(X, h):
    """Fragment member nearest the basepoint, shortlex tie-break."""
    O = X.horoballs[h]
    d0 = X.row(X.basepoint)
    return min(range(O.size), key=lambda m: (d0[O.members[m]], shortlex_key(X.cayley.words[O.members[m]])))


def busemann(X, h, x, T):
    """Truncated Busemann function d(gamma(T), x) - T along the vertical ray of horoball h."""
    O = X.horoballs[h]
    if T > O.K:
        raise ValueError(f"T={T} exceeds horoball depth {O.K}")
    g = X.node(h, ray_base(X, h), T)
    row = X.row(g)
    if isinstance(x, CuspedPoint):
        x = X.node_of(x)
    if np.ndim(x) == 0:
        return float(row[int(x)]) - T
    return row[np.asarray(x)] - T


def busemann_monotone(X, h, x, Ts):
    vals = [busemann(X, h, x, T) for T in Ts]
    return vals, all(a >= b for a, b in zip(vals, vals[1:]))


def sandwich(X, h, T=None):
    """Measured constant in the two-sided horoball/sublevel-set comparison."""
    O = X.horoballs[h]
    T = O.K if T is None else T
    beta = busemann(X, h, np.arange(X.n), T)
    d_O = float(X.row(X.basepoint)[O.members].min())
    inside = (X.hb == h) & (X.level >= 1)
    c_in = float((beta[inside] + d_O).max()) if inside.any() else 0.0
    finite = np.isfinite(beta) & ~inside
    c_out = float((-d_O - beta[finite]).max() + 1) if finite.any() else 0.0
    C = max(c_in, c_out, 0.0)
    return {"C": C, "C_inside": c_in, "C_outside": c_out, "d_O": d_O, "T": T,
            "n_inside": int(inside.sum()), "n_outside": int(finite.sum())}
