"""Exact word metric for genus-2 surface groups via the regular {8,8} tiling.

The tile adjacency graph is the Cayley graph of the side pairings, and every
tile edge extends to a full geodesic wall, so word length equals the number
of walls separating two tiles.  The walk below crosses the least-labelled
separating wall at each step, which produces the shortlex normal form.
"""
from decimal import Decimal, localcontext
import math

_PREC = 120


def _letter_key(l):
    return 2 * (abs(l) - 1) + (1 if l < 0 else 0)


def _matmul(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(3)) for j in range(3)] for i in range(3)]


def _matvec(A, v):
    return [A[0][0] * v[0] + A[0][1] * v[1] + A[0][2] * v[2],
            A[1][0] * v[0] + A[1][1] * v[1] + A[1][2] * v[2],
            A[2][0] * v[0] + A[2][1] * v[1] + A[2][2] * v[2]]


def _lorentz_inv(A):
    s = (-1, 1, 1)
    return [[A[j][i] * s[i] * s[j] for j in range(3)] for i in range(3)]


class OctagonGroup:
    """Side pairings of the regular octagon with interior angles pi/4."""

    def __init__(self, relator):
        rel = tuple(relator)
        if len(rel) != 8 or sorted(abs(l) for l in rel) != [1, 1, 2, 2, 3, 3, 4, 4]:
            raise ValueError("not a genus-2 surface relator")
        if sorted(rel) != [-4, -3, -2, -1, 1, 2, 3, 4]:
            raise ValueError("not a genus-2 surface relator")
        self.relator = rel
        # side k carries letter labels[k]; reading the relator around a vertex
        self.labels = [rel[k] if k % 2 == 0 else -rel[k] for k in range(8)]
        self.letters = sorted(set(self.labels), key=_letter_key)
        with localcontext() as ctx:
            ctx.prec = _PREC
            r2 = Decimal(2).sqrt()
            h = r2 / 2
            self.cosr = 1 + r2
            self.sinhr = (self.cosr * self.cosr - 1).sqrt()
            z = Decimal(0)
            one = Decimal(1)
            self.cs = [(one, z), (h, h), (z, one), (-h, h), (-one, z), (-h, -h), (z, -one), (h, -h)]
            self.walls = [(self.sinhr, self.cosr * c, self.cosr * s) for c, s in self.cs]
            ch2 = 2 * self.cosr * self.cosr - 1
            sh2 = 2 * self.sinhr * self.cosr
            boost = [[ch2, sh2, z], [sh2, ch2, z], [z, z, one]]
            self.mats = {}
            for i, x in enumerate(self.labels):
                j = self.labels.index(-x)
                R = self._rot((i + 4 - j) % 8)
                B = _matmul(_matmul(self._rot(i), boost), self._rot(-i % 8))
                self.mats[x] = _matmul(B, R)
            self.inv = {x: _lorentz_inv(M) for x, M in self.mats.items()}
            P = [[one, z, z], [z, one, z], [z, z, one]]
            for l in rel:
                P = _matmul(P, self.mats[l])
            err = max(abs(P[i][j] - (one if i == j else z)) for i in range(3) for j in range(3))
        if err > Decimal("1e-40"):
            raise ValueError("side pairing does not satisfy the relator")
        self.side = {x: i for i, x in enumerate(self.labels)}
        self.order = sorted(range(8), key=lambda k: _letter_key(self.labels[k]))
        self.fmats = {x: [[float(v) for v in row] for row in M] for x, M in self.mats.items()}

    def _rot(self, k):
        c, s = self.cs[k % 8]
        z = Decimal(0)
        return [[Decimal(1), z, z], [z, c, -s], [z, s, c]]

    @staticmethod
    def prec_for(n):
        return 30 + int(1.5 * n)

    def point(self, word):
        """Hyperboloid coordinates of word . o."""
        with localcontext() as ctx:
            ctx.prec = self.prec_for(len(word))
            v = [Decimal(1), Decimal(0), Decimal(0)]
            for l in reversed(word):
                v = _matvec(self.mats[l], v)
            return v

    def matrix(self, word):
        with localcontext() as ctx:
            ctx.prec = self.prec_for(len(word))
            one, z = Decimal(1), Decimal(0)
            P = [[one, z, z], [z, one, z], [z, z, one]]
            for l in word:
                P = _matmul(P, self.mats[l])
            return P

    def walk(self, v, n_hint):
        """Shortlex geodesic from o to the tile centred at v."""
        out = []
        with localcontext() as ctx:
            ctx.prec = self.prec_for(n_hint)
            while True:
                step = None
                t, x, y = v
                for k in self.order:
                    a, b, c = self.walls[k]
                    if b * x + c * y - a * t > 0:
                        step = self.labels[k]
                        break
                if step is None:
                    return tuple(out)
                out.append(step)
                v = _matvec(self.inv[step], v)

    def normal_form(self, word):
        return self.walk(self.point(word), len(word))

    def length(self, word):
        return len(self.normal_form(word))

    def float_point(self, word):
        v = [1.0, 0.0, 0.0]
        for l in reversed(word):
            M = self.fmats[l]
            v = [M[0][0] * v[0] + M[0][1] * v[1] + M[0][2] * v[2],
                 M[1][0] * v[0] + M[1][1] * v[1] + M[1][2] * v[2],
                 M[2][0] * v[0] + M[2][1] * v[1] + M[2][2] * v[2]]
        return v


def hyperbolic_distance(p, q):
    b = -p[0] * q[0] + p[1] * q[1] + p[2] * q[2]
    return math.acosh(max(1.0, float(-b)))
