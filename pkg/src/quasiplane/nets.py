"""Finite metric nets: explicit distance matrices or Euclidean point clouds."""
import heapq

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, minimum_spanning_tree
from scipy.spatial import cKDTree


class MetricNet:
    """Points 0..n-1 with a metric rho, given by coordinates (Euclidean) or a matrix."""

    def __init__(self, coords=None, D=None, name="", labels=None, h=None):
        if (coords is None) == (D is None):
            raise ValueError("give exactly one of coords or D")
        self.coords = None if coords is None else np.asarray(coords, dtype=float)
        self.D = None if D is None else np.asarray(D, dtype=float)
        self.n = len(self.coords) if self.coords is not None else self.D.shape[0]
        self.name = name
        self.labels = labels
        self._tree = None
        self._h = h
        self._graphs = {}

    def __len__(self):
        return self.n

    @property
    def tree(self):
        if self._tree is None and self.coords is not None:
            self._tree = cKDTree(self.coords)
        return self._tree

    def row(self, i):
        if self.D is not None:
            return self.D[i]
        return np.sqrt(((self.coords - self.coords[i]) ** 2).sum(axis=1))

    def d(self, i, j):
        if self.D is not None:
            return float(self.D[i, j])
        return float(np.sqrt(((self.coords[i] - self.coords[j]) ** 2).sum()))

    def sub(self, ids, jds=None):
        ids = np.asarray(ids, dtype=np.int64)
        jds = ids if jds is None else np.asarray(jds, dtype=np.int64)
        if self.D is not None:
            return self.D[np.ix_(ids, jds)]
        a, b = self.coords[ids], self.coords[jds]
        return np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))

    def ball(self, i, r):
        """Ids within closed distance r of point i."""
        if self.D is not None:
            return np.nonzero(self.D[i] <= r + 1e-12)[0]
        return np.array(sorted(self.tree.query_ball_point(self.coords[i], r + 1e-12)), dtype=np.int64)

    def dist_to_set(self, ids, points=None, bound=np.inf):
        """rho(p, V) for every point p (or the given points); values beyond bound may come back as inf."""
        ids = np.asarray(ids, dtype=np.int64)
        pts = np.arange(self.n) if points is None else np.asarray(points, dtype=np.int64)
        if len(ids) == 0:
            return np.full(len(pts), np.inf)
        if self.D is not None:
            return self.D[np.ix_(pts, ids)].min(axis=1)
        if np.isfinite(bound) and points is None:
            out = np.full(self.n, np.inf)
            V = self.coords[ids]
            lo, hi = V.min(axis=0) - bound, V.max(axis=0) + bound
            near = np.nonzero(np.all((self.coords >= lo) & (self.coords <= hi), axis=1))[0]
            if len(near):
                out[near], _ = cKDTree(self.coords[ids]).query(self.coords[near])
            return out
        d, _ = cKDTree(self.coords[ids]).query(self.coords[pts])
        return d

    def set_distance(self, A, B):
        return float(self.dist_to_set(A)[np.asarray(B, dtype=np.int64)].min())

    def diameter(self, ids=None):
        ids = np.arange(self.n) if ids is None else np.asarray(ids, dtype=np.int64)
        if len(ids) <= 1:
            return 0.0
        if self.D is not None:
            return float(self.D[np.ix_(ids, ids)].max())
        pts = self.coords[ids]
        if len(pts) > 2000:
            from scipy.spatial import ConvexHull
            try:
                pts = pts[ConvexHull(pts).vertices]
            except Exception:
                pass
        return float(np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1)).max())

    def farthest_pair(self):
        """Farthest pair, least ids first."""
        if self.D is not None:
            m = self.D.max()
            i, j = np.argwhere(self.D >= m - 1e-12)[0]
            return int(i), int(j)
        cand = np.arange(self.n)
        if self.coords.shape[1] == 2 and self.n > 3:
            from scipy.spatial import ConvexHull
            try:
                cand = np.sort(ConvexHull(self.coords).vertices)
            except Exception:
                pass
        best = (-1.0, 0, 0)
        for i in cand:
            r = self.row(i)
            j = int(np.argmax(r))
            if r[j] > best[0] + 1e-12:
                best = (float(r[j]), i, j)
        return best[1], best[2]

    def resolution(self):
        """Working resolution: the given h, else the nearest-neighbour resolution."""
        if self._h is None:
            self._h = self.nn_resolution()
        return self._h

    def nn_resolution(self):
        """Largest nearest-neighbour distance: every point has a neighbour within it."""
        if self.n < 2:
            return 0.0
        if self.D is not None:
            M = self.D + np.diag(np.full(self.n, np.inf))
            return float(M.min(axis=1).max())
        d, _ = self.tree.query(self.coords, k=2)
        return float(d[:, 1].max())

    def pairs_within(self, h):
        if self.D is not None:
            i, j = np.nonzero(np.triu(self.D <= h + 1e-12, 1))
            return np.stack([i, j], axis=1)
        return self.tree.query_pairs(h + 1e-12, output_type="ndarray")

    def graph(self, h=None):
        """Weighted graph G_h joining points at distance <= h."""
        h = self.resolution() if h is None else h
        key = round(h, 12)
        if key not in self._graphs:
            P = self.pairs_within(h)
            if len(P):
                if self.D is not None:
                    w = self.D[P[:, 0], P[:, 1]]
                else:
                    w = np.sqrt(((self.coords[P[:, 0]] - self.coords[P[:, 1]]) ** 2).sum(1))
                w = np.maximum(w, 1e-15)
                r = np.concatenate([P[:, 0], P[:, 1]])
                c = np.concatenate([P[:, 1], P[:, 0]])
                G = csr_matrix((np.concatenate([w, w]), (r, c)), shape=(self.n, self.n))
            else:
                G = csr_matrix((self.n, self.n))
            self._graphs[key] = G
        return self._graphs[key]

    def components(self, h=None):
        return connected_components(self.graph(h), directed=False)

    def mst_resolution(self):
        """Least h with G_h connected."""
        if self.n < 2:
            return 0.0
        if self.D is not None:
            T = minimum_spanning_tree(csr_matrix(np.maximum(self.D, 1e-15) * (1 - np.eye(self.n))))
        else:
            h = self.nn_resolution()
            while self.components(h)[0] > 1:
                h *= 1.5
            T = minimum_spanning_tree(self.graph(h))
        return float(T.data.max())

    def subnet(self, ids, name=None):
        ids = np.asarray(ids, dtype=np.int64)
        if self.D is not None:
            return MetricNet(D=self.D[np.ix_(ids, ids)], name=name or self.name)
        return MetricNet(coords=self.coords[ids], name=name or self.name)


def minimax_radius(net, a, h=None, allowed=None):
    """For every point b, the least R such that a chain with steps <= h inside B(a, R) joins a to b."""
    G = net.graph(h)
    f = net.row(a)
    best = np.full(net.n, np.inf)
    best[a] = f[a]
    pq = [(f[a], a)]
    while pq:
        v, u = heapq.heappop(pq)
        if v > best[u]:
            continue
        for x in G.indices[G.indptr[u]:G.indptr[u + 1]]:
            if allowed is not None and not allowed[x]:
                continue
            c = max(v, f[x])
            if c < best[x]:
                best[x] = c
                heapq.heappush(pq, (c, x))
    return best


def path_in(net, a, b, allowed=None, h=None, weighted=True):
    """Shortest path from a to b in G_h restricted to allowed points; None if disconnected."""
    G = net.graph(h)
    if allowed is not None:
        mask = np.asarray(allowed, dtype=bool)
        if not (mask[a] and mask[b]):
            return None
        idx = np.nonzero(mask)[0]
        pos = -np.ones(net.n, dtype=np.int64)
        pos[idx] = np.arange(len(idx))
        H = G[idx][:, idx]
        s, t = pos[a], pos[b]
    else:
        idx, H, s, t = None, G, a, b
    from scipy.sparse.csgraph import dijkstra
    dist, pred = dijkstra(H, directed=False, indices=s, return_predecessors=True, unweighted=not weighted)
    if not np.isfinite(dist[t]):
        return None
    path = [t]
    while path[-1] != s:
        path.append(pred[path[-1]])
    path.reverse()
    if idx is not None:
        path = [int(idx[v]) for v in path]
    return [int(v) for v in path]


# --- model nets ----------------------------------------------------------

def grid_net(k):
    """k x k grid of the unit square."""
    xs = np.linspace(0.0, 1.0, k)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    return MetricNet(coords=np.stack([X.ravel(), Y.ravel()], axis=1), name=f"grid{k}")


def circle_net(k):
    t = 2 * np.pi * np.arange(k) / k
    return MetricNet(coords=np.stack([np.cos(t), np.sin(t)], axis=1), name=f"circle{k}")


def carpet_holes(level, refine=0):
    """Removed open squares of the level-m pre-carpet, in lattice units 3^-(level+refine): (x0, y0, side)."""
    holes = []
    for m in range(1, level + 1):
        s = 3 ** (level + refine - m)
        cells = 3 ** (m - 1)
        for a in range(cells):
            for b in range(cells):
                x0, y0 = 3 * a * s, 3 * b * s
                # skip cells already removed at a coarser level
                if _in_hole(x0 + 1.5 * s, y0 + 1.5 * s, holes):
                    continue
                holes.append((x0 + s, y0 + s, s))
    return holes


def _in_hole(x, y, holes):
    for hx, hy, s in holes:
        if hx < x < hx + s and hy < y < hy + s:
            return True
    return False


def carpet_net(level=4, refine=1):
    """Lattice points of the level-m pre-carpet at spacing 3^-(level+refine), with hole boundaries.

    Returns the net and a list of (boundary ids, side length) per removed square.
    """
    N = 3 ** (level + refine)
    holes = carpet_holes(level, refine)
    I, J = np.meshgrid(np.arange(N + 1), np.arange(N + 1), indexing="ij")
    keep = np.ones(I.shape, dtype=bool)
    for hx, hy, s in holes:
        keep &= ~((I > hx) & (I < hx + s) & (J > hy) & (J < hy + s))
    pts = np.stack([I[keep], J[keep]], axis=1)
    index = {(int(i), int(j)): k for k, (i, j) in enumerate(pts)}
    boundaries = []
    for hx, hy, s in holes:
        ids = set()
        for t in range(s + 1):
            for q in ((hx + t, hy), (hx + t, hy + s), (hx, hy + t), (hx + s, hy + t)):
                ids.add(index[q])
        boundaries.append((sorted(ids), s / N))
    return MetricNet(coords=pts / N, name=f"carpet{level}"), boundaries


class ObstacleSet:
    def __init__(self, ids, scale, origin=None):
        self.ids = sorted(int(i) for i in ids)
        if not self.ids:
            raise ValueError("empty obstacle set")
        self.scale = float(scale)
        self.origin = origin

    def as_record(self):
        return {"ids": self.ids, "scale": self.scale, "origin": self.origin}


class ObstacleFamily:
    def __init__(self, sets, L=None, N=None):
        self.sets = list(sets)
        self.L = L
        self.N = N

    def __len__(self):
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)

    def as_record(self):
        return {"sets": [s.as_record() for s in self.sets], "L": self.L, "N": self.N}
