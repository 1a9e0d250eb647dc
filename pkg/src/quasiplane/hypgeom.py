"""Gromov products, four-point hyperbolicity, geodesics and tree approximation."""
from dataclasses import dataclass, field
import itertools

import numpy as np
from scipy.optimize import linprog

from .presentations import letter_key

EXHAUSTIVE_LIMIT = 200
TREE_LIMIT = 16


def distances(space, ids):
    ids = list(ids)
    if isinstance(space, np.ndarray):
        return space[np.ix_(ids, ids)]
    if hasattr(space, "dist_matrix"):
        return np.asarray(space.dist_matrix(ids))
    return np.asarray(space.dist)[np.ix_(ids, ids)]


def _row(space, i):
    if isinstance(space, np.ndarray):
        return space[i]
    if hasattr(space, "row"):
        return space.row(i)
    return np.asarray(space.dist)[i]


def gromov_product(space, w, x, y):
    D = distances(space, [w, x, y])
    return 0.5 * (D[0, 1] + D[0, 2] - D[1, 2])


def gromov_products(D, w):
    """Matrix of (x|y)_w from a distance matrix."""
    D = np.asarray(D, dtype=float)
    return 0.5 * (D[w][:, None] + D[w][None, :] - D)


@dataclass
class VisualParams:
    epsilon: float = 1.0
    C0: float = 1.0

    def __post_init__(self):
        if self.epsilon <= 0 or self.C0 < 1:
            raise ValueError("need epsilon > 0 and C0 >= 1")

    @staticmethod
    def default_epsilon(delta):
        return min(1.0, 1.0 / (4 * delta + 1))

    def rho(self, product):
        s = np.asarray(product, dtype=float)
        if s.size > 4096:
            # graph products take few distinct values; exp is the slow part
            u, inv = np.unique(s, return_inverse=True)
            return np.exp(-self.epsilon * u)[inv].reshape(s.shape)
        return np.exp(-self.epsilon * s)

    def band(self, product):
        s = np.asarray(product, dtype=float)
        return np.exp(-self.epsilon * s) / self.C0, self.C0 * np.exp(-self.epsilon * s)


@dataclass
class HyperbolicityEstimate:
    delta: float
    sample_count: int
    max_attained_at: tuple
    exhaustive: bool = False

    def as_record(self):
        return {"delta": self.delta, "samples": self.sample_count,
                "witness": list(self.max_attained_at), "exhaustive": self.exhaustive}


def fourpoint_defect(D, q):
    i, j, k, l = q
    s = sorted([D[i, j] + D[k, l], D[i, k] + D[j, l], D[i, l] + D[j, k]])
    return 0.5 * (s[2] - s[1])


def delta_fourpoint(space, ids=None, samples=20000, seed=0):
    """Max four-point defect; exhaustive up to EXHAUSTIVE_LIMIT points, otherwise seeded sampling."""
    if ids is None:
        n_all = space.shape[0] if isinstance(space, np.ndarray) else (
            len(space.cayley) if hasattr(space, "cayley") else len(space))
        ids = list(range(n_all))
    ids = list(ids)
    n = len(ids)
    if n < 4:
        raise ValueError("need at least four points")
    D = distances(space, ids).astype(np.float64)
    best, at, count = -1.0, None, 0
    if n <= EXHAUSTIVE_LIMIT:
        tri = np.array(list(itertools.combinations(range(n), 3)), dtype=np.int64)
        J, K, L = tri.T
        dkl, djl, djk = D[K, L], D[J, L], D[J, K]
        start = np.searchsorted(J, np.arange(n + 1))
        for i in range(n - 3):
            s0 = start[i + 1]
            j, k, l = J[s0:], K[s0:], L[s0:]
            a = D[i, j] + dkl[s0:]
            b = D[i, k] + djl[s0:]
            c = D[i, l] + djk[s0:]
            hi = np.maximum(np.maximum(a, b), c)
            lo = np.minimum(np.minimum(a, b), c)
            defect = 0.5 * (hi - (a + b + c - hi - lo))
            t = int(defect.argmax())
            if defect[t] > best:
                best, at = float(defect[t]), (ids[i], ids[j[t]], ids[k[t]], ids[l[t]])
        count = n * (n - 1) * (n - 2) * (n - 3) // 24
        return HyperbolicityEstimate(best, count, at, True)
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        q = tuple(rng.choice(n, 4, replace=False))
        v = fourpoint_defect(D, q)
        if v > best:
            best, at = v, tuple(ids[t] for t in q)
    return HyperbolicityEstimate(float(best), samples, at, False)


def product_inequality_audit(D, w, delta, triples=5000, seed=0):
    """Worst violation of (x|z) >= min((x|y),(y|z)) - delta over sampled triples."""
    G = gromov_products(D, w)
    n = G.shape[0]
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(triples):
        x, y, z = rng.integers(0, n, 3)
        worst = max(worst, min(G[x, y], G[y, z]) - delta - G[x, z])
    return {"worst_excess": float(worst), "holds": bool(worst <= 1e-12)}


def _edge_labels(space):
    lab = {}
    ball = getattr(space, "cayley", space)
    for i, j, l in getattr(ball, "edges", []):
        lab[(i, j)] = l
        lab[(j, i)] = -l
    return lab


def geodesic(space, x, y):
    """Shortest path from x to y; at each step the least edge label (then least node id) wins."""
    row = _row(space, y)
    if not np.isfinite(row[x]) or row[x] < 0:
        raise ValueError("disconnected pair")
    graph = space.graph if hasattr(space, "graph") else space.cayley_graph()
    labels = getattr(space, "_labels", None)
    if labels is None:
        labels = _edge_labels(space)
        try:
            space._labels = labels
        except AttributeError:
            pass
    path = [x]
    u = x
    while u != y:
        nb = graph.indices[graph.indptr[u]:graph.indptr[u + 1]]
        nb = [int(v) for v in nb if row[v] == row[u] - 1]

        def key(v):
            l = labels.get((u, v))
            return (0, letter_key(l), v) if l is not None else (1, 0, v)
        u = min(nb, key=key)
        path.append(u)
    return path


@dataclass
class TreeApprox:
    points: list
    edges: list                # (u, v, length); nodes >= len(points) are branch points
    additive_error: float
    n_nodes: int = 0
    metric: np.ndarray = field(default=None, repr=False)


def _linking_topology(D, base):
    """Single-linkage tree on Gromov products at base; returns node parents (rooted at base)."""
    n = D.shape[0]
    G = gromov_products(D, base)
    others = [i for i in range(n) if i != base]
    parent = {}
    top = {i: i for i in others}
    uf = {i: i for i in others}

    def find(a):
        while uf[a] != a:
            uf[a] = uf[uf[a]]
            a = uf[a]
        return a
    nxt = n
    pairs = sorted(itertools.combinations(others, 2), key=lambda t: (-G[t], t))
    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra == rb:
            continue
        node = nxt
        nxt += 1
        parent[top[ra]] = node
        parent[top[rb]] = node
        uf[rb] = ra
        top[ra] = node
    if others:
        roots = {top[find(i)] for i in others}
        for r in roots:
            parent[r] = base
    return parent, nxt


def _path_matrix(parent, n_nodes, n):
    adj = {}
    edges = sorted(parent.items())
    for k, (c, p) in enumerate(edges):
        adj.setdefault(c, []).append((p, k))
        adj.setdefault(p, []).append((c, k))
    pairs = list(itertools.combinations(range(n), 2))
    A = np.zeros((len(pairs), len(edges)))
    for r, (a, b) in enumerate(pairs):
        prev = {a: None}
        stack = [a]
        while stack:
            u = stack.pop()
            for v, k in adj.get(u, []):
                if v not in prev:
                    prev[v] = (u, k)
                    stack.append(v)
        v = b
        while prev[v] is not None:
            u, k = prev[v]
            A[r, k] = 1
            v = u
    return A, edges, pairs


def _fit(D, parent, n_nodes):
    n = D.shape[0]
    A, edges, pairs = _path_matrix(parent, n_nodes, n)
    d = np.array([D[a, b] for a, b in pairs], dtype=float)
    m = A.shape[1]
    # variables: edge lengths, t ; minimize t subject to |A l - d| <= t
    c = np.zeros(m + 1)
    c[-1] = 1
    A_ub = np.vstack([np.hstack([A, -np.ones((len(d), 1))]), np.hstack([-A, -np.ones((len(d), 1))])])
    b_ub = np.concatenate([d, -d])
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(0, None)] * (m + 1), method="highs")
    lengths = res.x[:m]
    T = np.zeros((n, n))
    for r, (a, b) in enumerate(pairs):
        T[a, b] = T[b, a] = A[r] @ lengths
    err = float(np.abs(T - D).max())
    return err, [(c_, p, float(l)) for (c_, p), l in zip(edges, lengths)], T


def _quartets(n):
    # the three resolved quartet topologies on 0..3 via branch nodes 4, 5
    for (a, b), (c, d) in [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))]:
        yield {a: 4, b: 4, c: 5, d: 5, 4: 5}, 6


def tree_approx(points, D, limit=TREE_LIMIT):
    """Tree metric close to D in sup norm; topologies from Gromov-product linking at every basepoint."""
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    if n > limit:
        raise ValueError(f"too many points for tree_approx ({n} > {limit})")
    if n == 1:
        return TreeApprox(list(points), [], 0.0, 1, np.zeros((1, 1)))
    cands = [_linking_topology(D, b) for b in range(n)]
    if n == 4:
        cands += list(_quartets(n))
    best = None
    for parent, n_nodes in cands:
        err, edges, T = _fit(D, parent, n_nodes)
        if best is None or err < best[0] - 1e-12:
            best = (err, edges, T, n_nodes)
    err, edges, T, n_nodes = best
    return TreeApprox(list(points), edges, err, n_nodes, T)


def horoball_product_check(X, h, ids):
    """|(a|a_O) - (d(q_a, q)/2 + d_O)| over ball points a, with a_O the top of horoball h."""
    from .cusped import ray_base
    O = X.horoballs[h]
    m0 = ray_base(X, h)
    top = X.node(h, m0, O.K)
    q = O.members[m0]
    w = X.basepoint
    rw, rt = X.row(w), X.row(top)
    d_O = float(rw[O.members].min())
    rows_members = X.rows(O.members)
    worst = 0.0
    for a in ids:
        prod = 0.5 * (rw[a] + rw[top] - rt[a])
        col = rows_members[:, a]
        qa = O.members[int(np.argmin(col))]
        dq = X.d(qa, q)
        worst = max(worst, abs(prod - (dq / 2 + d_O)))
    return worst
