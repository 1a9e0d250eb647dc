"""Exact SL(2, Z[w]) representation for the figure-eight knot group, w^2 + w + 1 = 0.

Elements of Z[w] are pairs (a, b) meaning a + b w.
"""
from .presentations import BackendError, BudgetError, free_reduce, letter_key

ONE, ZERO = (1, 0), (0, 0)


def zmul(x, y):
    a, b = x
    c, d = y
    return (a * c - b * d, a * d + b * c - b * d)


def zadd(x, y):
    return (x[0] + y[0], x[1] + y[1])


def zneg(x):
    return (-x[0], -x[1])


def mmul(A, B):
    return ((zadd(zmul(A[0][0], B[0][0]), zmul(A[0][1], B[1][0])),
             zadd(zmul(A[0][0], B[0][1]), zmul(A[0][1], B[1][1]))),
            (zadd(zmul(A[1][0], B[0][0]), zmul(A[1][1], B[1][0])),
             zadd(zmul(A[1][0], B[0][1]), zmul(A[1][1], B[1][1]))))


def minv(A):
    # determinant one
    return ((A[1][1], zneg(A[0][1])), (zneg(A[1][0]), A[0][0]))


IDENT = ((ONE, ZERO), (ZERO, ONE))


def word_matrix(mats, w):
    M = IDENT
    for l in w:
        M = mmul(M, mats[l])
    return M


def _candidates():
    X = ((ONE, ONE), (ZERO, ONE))
    for t in [(0, -1), (0, 1), (1, 1), (-1, -1)]:
        Y = ((ONE, ZERO), (t, ONE))
        yield X, Y


def riley_check(p):
    """Pick the parabolic representation killing every relator, or fail."""
    if p.rank != 2 or not p.relators:
        raise BackendError("exact-matrix backend expects a two-generator knot group presentation")
    for X, Y in _candidates():
        mats = {1: X, -1: minv(X), 2: Y, -2: minv(Y)}
        if all(word_matrix(mats, r) == IDENT for r in p.relators):
            return mats
    raise BackendError("no Riley representation over Z[w] kills the relators")


class MatrixOracle:
    """Shortlex normal forms by enumerating the ball in shortlex order, keyed by exact matrices."""

    budget = 2_000_000

    def __init__(self, p):
        self.p = p
        self.mats = riley_check(p)
        self.letters = sorted(self.mats, key=letter_key)
        self.found = {IDENT: ()}
        self.frontier = [((), IDENT)]
        self.radius = 0

    def _grow(self):
        nxt = []
        for w, M in self.frontier:
            for l in self.letters:
                if w and w[-1] == -l:
                    continue
                N = mmul(M, self.mats[l])
                if N not in self.found:
                    u = w + (l,)
                    self.found[N] = u
                    nxt.append((u, N))
        if len(self.found) > self.budget:
            raise BudgetError(f"matrix enumeration budget exceeded at radius {self.radius + 1}", self.radius)
        self.frontier = nxt
        self.radius += 1

    def normal_form(self, w):
        w = free_reduce(w)
        key = word_matrix(self.mats, w)
        while key not in self.found and self.radius < len(w):
            self._grow()
        return self.found[key]
