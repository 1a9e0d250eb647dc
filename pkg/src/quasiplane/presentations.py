"""Group presentations, word problem backends and Cayley balls.

Letters are nonzero ints: generator i is i+1, its inverse -(i+1).  Words are
tuples of letters.  Normal forms are shortlex for the order a < A < b < B < ...
"""
from dataclasses import dataclass, field
import itertools
import re

import numpy as np

from .fuchsian import OctagonGroup

BACKENDS = ("free", "free-abelian", "free-product", "dehn", "exact-matrix")
DEFAULT_BUDGET = 5_000_000


class PresentationError(ValueError):
    def __init__(self, msg, line=None, col=None):
        self.line, self.col = line, col
        if line is not None:
            msg = f"line {line}, column {col}: {msg}"
        super().__init__(msg)


class BackendError(ValueError):
    pass


class BudgetError(RuntimeError):
    def __init__(self, msg, reached=None):
        self.reached = reached
        super().__init__(msg)


def letter_key(l):
    return 2 * (abs(l) - 1) + (1 if l < 0 else 0)


def shortlex_key(w):
    return (len(w), tuple(letter_key(l) for l in w))


def inverse(w):
    return tuple(-l for l in reversed(w))


def free_reduce(w):
    out = []
    for l in w:
        if out and out[-1] == -l:
            out.pop()
        else:
            out.append(l)
    return tuple(out)


def cyclic_reduce(w):
    w = list(free_reduce(w))
    while len(w) > 1 and w[0] == -w[-1]:
        w = w[1:-1]
    return tuple(w)


def commutator(x, y):
    return x + y + inverse(x) + inverse(y)


def cyclic_conjugates(w):
    return [w[i:] + w[:i] for i in range(len(w))]


@dataclass
class Presentation:
    generators: list
    relators: list
    parabolic: list = field(default_factory=list)
    hypsub: list = field(default_factory=list)
    backend: str = "free"
    inverse_case: bool = False
    blocks: list = None
    _oracle: object = field(default=None, repr=False)

    @property
    def rank(self):
        return len(self.generators)

    def letters(self):
        out = []
        for i in range(self.rank):
            out += [i + 1, -(i + 1)]
        return out

    def word(self, text):
        return parse_word(text, self.generators, self.inverse_case)

    def format(self, w):
        parts = []
        for l in w:
            g = self.generators[abs(l) - 1]
            if l > 0:
                parts.append(g)
            elif self.inverse_case:
                parts.append(g.upper())
            else:
                parts.append(g + "^-1")
        return "".join(parts) if self.inverse_case else " ".join(parts)

    def oracle(self):
        if self._oracle is None:
            self._oracle = make_oracle(self)
        return self._oracle

    def subgroup_letters(self, which, kind="parabolic"):
        gens = (self.parabolic if kind == "parabolic" else self.hypsub)[which]
        s = set()
        for g in gens:
            s |= {g + 1, -(g + 1)}
        return s


# --- parsing -------------------------------------------------------------

class _WordParser:
    def __init__(self, s, gens, case, line, col0):
        self.s, self.i = s, 0
        self.gens = sorted(((g, k) for k, g in enumerate(gens)), key=lambda t: -len(t[0]))
        self.case, self.line, self.col0 = case, line, col0

    def err(self, msg, i=None):
        return PresentationError(msg, self.line, self.col0 + (self.i if i is None else i) + 1)

    def peek(self):
        while self.i < len(self.s) and self.s[self.i] in " \t*":
            self.i += 1
        return self.s[self.i] if self.i < len(self.s) else ""

    def word(self, stop):
        out = ()
        while True:
            c = self.peek()
            if c == "" or c in stop:
                return out
            out += self.factor()

    def factor(self):
        c = self.peek()
        start = self.i
        if c == "[":
            self.i += 1
            x = self.word(",]")
            if self.peek() != ",":
                raise self.err("expected ',' in commutator", start)
            self.i += 1
            y = self.word(",]")
            if self.peek() != "]":
                raise self.err("unbalanced bracket", start)
            self.i += 1
            a = commutator(x, y)
        elif c == "(":
            self.i += 1
            a = self.word(")")
            if self.peek() != ")":
                raise self.err("unbalanced parenthesis", start)
            self.i += 1
        elif c in "]),":
            raise self.err(f"unexpected '{c}'")
        else:
            a = self.symbol()
        if self.peek() == "^":
            m = re.match(r"\^\s*(-?\d+)", self.s[self.i:])
            if not m:
                raise self.err("bad exponent")
            self.i += m.end()
            n = int(m.group(1))
            a = a * n if n >= 0 else inverse(a) * (-n)
        return a

    def symbol(self):
        rest = self.s[self.i:]
        for g, k in self.gens:
            if rest.startswith(g):
                self.i += len(g)
                return (k + 1,)
            if self.case and rest.startswith(g.upper()) and g.upper() != g:
                self.i += len(g)
                return (-(k + 1),)
        raise self.err(f"unknown generator at '{rest[:8]}'")


def parse_word(text, gens, inverse_case=False, line=None, col=0):
    p = _WordParser(text, gens, inverse_case, line, col)
    w = p.word("")
    if p.peek():
        raise p.err(f"unexpected '{p.peek()}'")
    return w


def _split_words(s, line, col0):
    """Split a rels argument at top-level whitespace or commas."""
    out, opened, cur, start = [], [], "", 0
    for i, c in enumerate(s + " "):
        if c in "[(":
            opened.append(i)
        elif c in "])":
            if not opened:
                raise PresentationError("unbalanced bracket", line, col0 + i + 1)
            opened.pop()
        if not opened and (c.isspace() or c == ","):
            if cur.strip():
                out.append((cur, col0 + start))
            cur, start = "", i + 1
        else:
            if not cur:
                start = i
            cur += c
    if opened:
        raise PresentationError("unbalanced bracket", line, col0 + opened[-1] + 1)
    return out


def _statements(text):
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        pos = 0
        for part in line.split(";"):
            stripped = part.strip()
            if stripped:
                col = pos + (len(part) - len(part.lstrip()))
                yield ln, col, stripped
            pos += len(part) + 1


def parse_presentation(text, budget=None):
    gens, rels, para, hyp = None, [], [], []
    backend, case = None, False
    pending = []
    for ln, col, st in _statements(text):
        kw, _, arg = st.partition(" ")
        acol = col + len(kw) + 1
        arg_l = len(arg) - len(arg.lstrip())
        arg = arg.strip()
        acol += arg_l
        if kw == "inverse":
            if arg not in ("case", "caret"):
                raise PresentationError(f"unknown inverse convention '{arg}'", ln, acol + 1)
            case = arg == "case"
        elif kw == "gens":
            names = arg.split()
            for nm in names:
                if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", nm):
                    raise PresentationError(f"bad generator name '{nm}'", ln, acol + arg.find(nm) + 1)
            if len(set(names)) != len(names):
                raise PresentationError("duplicate generator", ln, acol + 1)
            gens = names
        elif kw in ("rels", "parabolic", "hypsub"):
            pending.append((kw, arg, ln, acol))
        elif kw == "backend":
            if arg not in BACKENDS:
                raise PresentationError(f"unknown backend '{arg}'", ln, acol + 1)
            backend = arg
        else:
            raise PresentationError(f"unknown statement '{kw}'", ln, col + 1)
    if gens is None:
        raise PresentationError("missing gens line", 1, 1)
    if case:
        for g in gens:
            if g != g.lower() or g.upper() in gens:
                raise PresentationError(f"generator '{g}' clashes with case inverse convention", 1, 1)
    for kw, arg, ln, acol in pending:
        if kw == "rels":
            for wtext, c in _split_words(arg, ln, acol):
                w = parse_word(wtext, gens, case, ln, c)
                r = cyclic_reduce(w)
                if not r:
                    raise PresentationError("relator reduces to the identity", ln, c + 1)
                rels.append(r)
        else:
            idx = []
            for nm in arg.split():
                if nm not in gens:
                    raise PresentationError(f"peripheral symbol '{nm}' is not a generator", ln, acol + arg.find(nm) + 1)
                idx.append(gens.index(nm))
            (para if kw == "parabolic" else hyp).append(sorted(set(idx)))
    p = Presentation(gens, rels, para, hyp, backend or "free", case)
    p.backend = backend or detect_backend(p)
    validate_backend(p)
    return p


# --- backend selection ---------------------------------------------------

def _same_relator(r, s):
    cands = cyclic_conjugates(r) + cyclic_conjugates(inverse(r))
    return s in cands


def _commutator_pairs(p):
    pairs = []
    for r in p.relators:
        if len(r) != 4 or r[0] == r[1] or abs(r[0]) == abs(r[1]):
            return None
        hit = None
        for i, j in itertools.combinations(range(p.rank), 2):
            if _same_relator(r, commutator((i + 1,), (j + 1,))):
                hit = (i, j)
                break
        if hit is None:
            return None
        pairs.append(hit)
    return pairs


def commutation_blocks(p):
    """Blocks if every relator commutes two generators and the commuting graph is a union of cliques."""
    pairs = _commutator_pairs(p)
    if pairs is None:
        return None
    adj = {i: {i} for i in range(p.rank)}
    for i, j in pairs:
        adj[i].add(j)
        adj[j].add(i)
    blocks, seen = [], set()
    for i in range(p.rank):
        if i in seen:
            continue
        b = sorted(adj[i])
        for j in b:
            if set(adj[j]) != set(b):
                return None
        seen |= set(b)
        blocks.append(b)
    return blocks


def pieces(relators):
    """Longest piece length for each relator (over cyclic conjugates of R and R^-1)."""
    cyc = []
    for k, r in enumerate(relators):
        for s in (r, inverse(r)):
            for c in cyclic_conjugates(s):
                cyc.append((k, c))
    best = [0] * len(relators)
    for (k1, u), (k2, v) in itertools.combinations(cyc, 2):
        # equal words at distinct positions mean a proper power: the whole word is a piece
        n = 0
        while n < min(len(u), len(v)) and u[n] == v[n]:
            n += 1
        best[k1] = max(best[k1], n)
        best[k2] = max(best[k2], n)
    return best


def detect_backend(p):
    if not p.relators:
        return "free"
    blocks = commutation_blocks(p)
    if blocks is not None:
        return "free-abelian" if len(blocks) == 1 else "free-product"
    return "dehn"


def validate_backend(p):
    b = p.backend
    if b == "free" and p.relators:
        raise BackendError("free backend given relators")
    if b in ("free-abelian", "free-product"):
        blocks = commutation_blocks(p) if p.relators else [[i] for i in range(p.rank)]
        if blocks is None:
            raise BackendError(f"{b} backend needs relators that are generator commutators")
        if b == "free-abelian" and len(blocks) != 1 and p.rank > 1:
            raise BackendError("free-abelian backend needs every pair of generators to commute")
        p.blocks = blocks
    if b == "dehn":
        for r, n in zip(p.relators, pieces(p.relators)):
            if 6 * n >= len(r):
                raise BackendError(
                    f"C'(1/6) fails: piece length {n} in relator of length {len(r)}, ratio {n / len(r):.4f} >= 1/6")
    if b == "exact-matrix":
        from .matrices import riley_check
        riley_check(p)


# --- oracles -------------------------------------------------------------

class ProductOracle:
    """Free products of free abelian blocks (Z^n and F_n are special cases)."""

    def __init__(self, p):
        self.p = p
        blocks = p.blocks or [[i] for i in range(p.rank)]
        self.blocks = [[g + 1 for g in b] for b in blocks]
        self.block_of = {}
        for k, b in enumerate(blocks):
            for g in b:
                self.block_of[g + 1] = k

    def syllables(self, w):
        syl = []  # list of (block, {gen: exp})
        for l in w:
            k = self.block_of[abs(l)]
            if syl and syl[-1][0] == k:
                e = syl[-1][1]
                e[abs(l)] = e.get(abs(l), 0) + (1 if l > 0 else -1)
                if not e[abs(l)]:
                    del e[abs(l)]
                if not e:
                    syl.pop()
            else:
                syl.append((k, {abs(l): 1 if l > 0 else -1}))
        return syl

    @staticmethod
    def word_of(syl):
        out = []
        for _, e in syl:
            for g in sorted(e):
                n = e[g]
                out += [g if n > 0 else -g] * abs(n)
        return tuple(out)

    def normal_form(self, w):
        return self.word_of(self.syllables(w))


class DehnOracle:
    """Dehn's algorithm; normal forms by bounded shortlex search."""

    max_search = 7

    def __init__(self, p):
        self.p = p
        self.halves = []
        for r in p.relators:
            for s in (r, inverse(r)):
                for c in cyclic_conjugates(s):
                    n = len(c)
                    for k in range(n // 2 + 1, n + 1):
                        self.halves.append((c[:k], inverse(c[k:])))
        self.halves.sort(key=lambda t: -len(t[0]))

    def dehn(self, w):
        w = free_reduce(w)
        changed = True
        while changed:
            changed = False
            for u, v in self.halves:
                n = len(u)
                for i in range(len(w) - n + 1):
                    if w[i:i + n] == u:
                        w = free_reduce(w[:i] + v + w[i + n:])
                        changed = True
                        break
                if changed:
                    break
        return w

    def is_identity(self, w):
        return not self.dehn(w)

    def normal_form(self, w):
        u = self.dehn(w)
        if len(u) > self.max_search:
            raise BudgetError(f"dehn normal form search limited to length {self.max_search}", len(u))
        letters = sorted(self.p.letters(), key=letter_key)
        inv_u = inverse(u)
        for n in range(len(u) + 1):
            for cand in itertools.product(letters, repeat=n):
                if free_reduce(cand) != cand:
                    continue
                if self.is_identity(cand + inv_u):
                    return cand
        return u


class SurfaceOracle:
    def __init__(self, p, octagon):
        self.p, self.oct = p, octagon

    def normal_form(self, w):
        return self.oct.normal_form(free_reduce(w))


def make_oracle(p):
    if p.backend in ("free", "free-abelian", "free-product"):
        return ProductOracle(p)
    if p.backend == "dehn":
        if p.rank == 4 and len(p.relators) == 1:
            try:
                return SurfaceOracle(p, OctagonGroup(p.relators[0]))
            except ValueError:
                pass
        return DehnOracle(p)
    if p.backend == "exact-matrix":
        from .matrices import MatrixOracle
        return MatrixOracle(p)
    raise BackendError(f"unknown backend {p.backend}")


def check_word(p, w):
    for l in w:
        if not isinstance(l, (int, np.integer)) or l == 0 or abs(l) > p.rank:
            raise PresentationError(f"unknown generator letter {l}")


def reduce(p, word):
    if isinstance(word, str):
        word = p.word(word)
    word = tuple(int(l) for l in word)
    check_word(p, word)
    return p.oracle().normal_form(word)


def word_distance(p, u, v):
    return len(reduce(p, inverse(u) + tuple(v)))


# --- Cayley balls --------------------------------------------------------

class CayleyBall:
    def __init__(self, p, radius, words, edges):
        self.p = p
        self.radius = radius
        self.words = words
        self.index = {w: i for i, w in enumerate(words)}
        self.edges = edges  # (i, j, letter) with j = i * letter
        self.basepoint = 0
        self.depth = np.array([len(w) for w in words], dtype=np.int64)
        self._dist = None
        self._adj = None

    def __len__(self):
        return len(self.words)

    def adjacency(self):
        if self._adj is None:
            from scipy.sparse import csr_matrix
            n = len(self.words)
            if self.edges:
                a = np.array([(i, j) for i, j, _ in self.edges], dtype=np.int64)
                r = np.concatenate([a[:, 0], a[:, 1]])
                c = np.concatenate([a[:, 1], a[:, 0]])
            else:
                r = c = np.zeros(0, dtype=np.int64)
            self._adj = csr_matrix((np.ones(len(r)), (r, c)), shape=(n, n))
            self._adj.data[:] = 1.0
        return self._adj

    @property
    def graph(self):
        return self.adjacency()

    def row(self, i):
        """Graph distances inside the ball from vertex i."""
        from scipy.sparse.csgraph import shortest_path
        return shortest_path(self.adjacency(), unweighted=True, directed=False, indices=[i])[0]

    def dist_matrix(self, ids):
        ids = list(ids)
        return self.dist[np.ix_(ids, ids)]

    def word_dist(self, i, j):
        return word_distance(self.p, self.words[i], self.words[j])

    @property
    def dist(self):
        """Word metric d_G on the ball vertices."""
        if self._dist is None:
            n = len(self.words)
            D = np.zeros((n, n), dtype=np.int64)
            for i in range(n):
                wi = inverse(self.words[i])
                for j in range(i + 1, n):
                    D[i, j] = D[j, i] = len(reduce(self.p, wi + self.words[j]))
            self._dist = D
        return self._dist

    def sphere_sizes(self):
        return np.bincount(self.depth, minlength=self.radius + 1).tolist()


def cayley_ball(p, R, budget=DEFAULT_BUDGET):
    """Exact ball of radius R, by BFS in shortlex order with normal-form dedup."""
    if R < 0:
        raise ValueError("radius must be nonnegative")
    letters = sorted(p.letters(), key=letter_key)
    nf = p.oracle().normal_form
    words = [()]
    index = {(): 0}
    frontier = [()]
    for r in range(R):
        nxt = []
        for w in frontier:
            for l in letters:
                if w and w[-1] == -l:
                    continue
                u = nf(w + (l,))
                if u in index:
                    continue
                if len(words) >= budget:
                    raise BudgetError(f"vertex budget {budget} exceeded at radius {r + 1}", r)
                index[u] = len(words)
                words.append(u)
                nxt.append(u)
        frontier = nxt
    edges, seen = [], set()
    for i, w in enumerate(words):
        for g in range(1, p.rank + 1):
            j = index.get(nf(w + (g,)))
            if j is not None and j != i and (min(i, j), max(i, j)) not in seen:
                seen.add((min(i, j), max(i, j)))
                edges.append((i, j, g))
    return CayleyBall(p, R, words, edges)


# --- cosets --------------------------------------------------------------

@dataclass
class CosetFragment:
    key: tuple
    members: list
    representative: int
    dist_to_base: int


def coset_key(p, w, which, kind="parabolic"):
    """Canonical label of the left coset wP, or None when no closed form is known."""
    P = p.subgroup_letters(which, kind)
    if p.backend not in ("free", "free-abelian", "free-product"):
        if len(P) != 2:
            return None
        # cyclic P = <x>: the shortlex-least element of w<x> is w x^k with |k| <= 2|w|
        x = max(P)
        nf = p.oracle().normal_form
        n = 2 * len(w) + 1
        return min((nf(tuple(w) + (x if k > 0 else -x,) * abs(k)) for k in range(-n, n + 1)),
                   key=shortlex_key)
    gens = {abs(l) for l in P}
    orc = p.oracle()
    touched = {orc.block_of[g] for g in gens}
    whole = all(set(orc.blocks[k]) <= gens for k in touched)
    if not whole and len(touched) > 1:
        return None
    syl = orc.syllables(w)
    if whole:
        while syl and syl[-1][0] in touched:
            syl.pop()
    elif syl and syl[-1][0] in touched:
        k, e = syl[-1]
        e = {g: n for g, n in e.items() if g not in gens and n}
        syl = syl[:-1] + ([(k, e)] if e else [])
    return orc.word_of(syl)


def same_coset(p, g, h, which, kind="parabolic"):
    P = p.subgroup_letters(which, kind)
    return all(l in P for l in reduce(p, inverse(g) + tuple(h)))


def coset_fragments(p, ball, which=0, kind="parabolic"):
    keys = [coset_key(p, w, which, kind) for w in ball.words]
    groups = {}
    if keys[0] is not None:
        for i, k in enumerate(keys):
            groups.setdefault(k, []).append(i)
    else:
        # generic: union adjacent vertices joined by P-letters, then merge by same-coset test
        P = p.subgroup_letters(which, kind)
        parent = list(range(len(ball)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x
        for i, j, l in ball.edges:
            if l in P:
                parent[find(i)] = find(j)
        roots = sorted({find(i) for i in range(len(ball))})
        reps = []
        for r in roots:
            for s in reps:
                if same_coset(p, ball.words[r], ball.words[s], which, kind):
                    parent[find(r)] = find(s)
                    break
            else:
                reps.append(r)
        for i in range(len(ball)):
            groups.setdefault(find(i), []).append(i)
    frags = []
    for k, mem in groups.items():
        mem.sort()
        rep = min(mem, key=lambda i: shortlex_key(ball.words[i]))
        frags.append(CosetFragment(k if keys[0] is not None else ball.words[rep], mem, rep, int(ball.depth[rep])))
    frags.sort(key=lambda f: shortlex_key(ball.words[f.representative]))
    return frags
