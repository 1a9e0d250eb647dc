"""Seeded, deterministic pipelines behind the command line."""
from dataclasses import dataclass, asdict, fields
import math
import os
import warnings

import numpy as np

from . import io
from .boundary import (avoidability_audit, build_net, build_surface_net, doubling_estimate, limit_sets,
                       linconn_estimate, porosity_audit, rescale_audit, separation_audit)
from .cusped import cusped_ball, sandwich
from .embed import (cone_matrix, coned_off_tube, distortion_audit, embed_arc, persistence_check,
                    project_to_cayley, transversality_audit)
from .hypgeom import VisualParams
from .nets import ObstacleFamily, ObstacleSet, carpet_net, grid_net
from .presentations import cayley_ball, parse_presentation
from .quasiarc import QuasiArcParams, StageFailure, build_quasi_arc

PRESENTATIONS = {
    "f2": "gens a b\nrels\n",
    "z2z2": "inverse case\ngens a b c d\nrels [a,b] [c,d]\nparabolic a b\nparabolic c d\n",
    "genus2": "inverse case\ngens a b c d\nrels [a,b][c,d]\n",
}

PRESETS = {
    "f2": dict(radius=7, depth=5),
    "z2z2": dict(radius=4, depth=2, margin=1.0),
    "genus2": dict(radius=3, depth=8, directions=256),
    "carpet": dict(level=4, refine=1, kappa=3.0),
    "square": dict(grid=64),
}

FALLBACK = dict(radius=4, depth=2, directions=256, level=4, refine=1, grid=64)


@dataclass
class PipelineConfig:
    preset: str = None
    presentation: str = None
    radius: int = None
    horoball_depth: int = None
    depth: int = None
    epsilon: float = None
    margin: float = None
    directions: int = None
    level: int = None
    refine: int = None
    grid: int = None
    r: float = 1 / 3
    L: float = 2.0
    kappa: float = None
    seed: int = 0
    out: str = "out"
    budget_vertices: int = 5_000_000
    threads: int = 1

    def __post_init__(self):
        if self.preset is not None:
            if self.preset not in PRESETS:
                raise ValueError(f"unknown preset {self.preset}")
            for k, v in PRESETS[self.preset].items():
                if getattr(self, k) is None:
                    setattr(self, k, v)
        for k, v in FALLBACK.items():
            if getattr(self, k) is None:
                setattr(self, k, v)
        if self.budget_vertices <= 0:
            raise ValueError("budget must be positive")

    @property
    def kind(self):
        if self.preset in ("carpet", "square"):
            return self.preset
        if self.preset == "genus2":
            return "surface"
        return "cusped"

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    def presentation_text(self):
        if self.presentation is not None:
            if not os.path.exists(self.presentation):
                raise FileNotFoundError(f"presentation file not found: {self.presentation}")
            with open(self.presentation) as f:
                return f.read()
        if self.preset in PRESENTATIONS:
            return PRESENTATIONS[self.preset]
        raise ValueError("no presentation given")


class Context:
    """In-memory objects for one configuration."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.p = self.ball = self.bnet = self.family = None
        self.net = None


def build_context(cfg):
    ctx = Context(cfg)
    if cfg.kind == "carpet":
        net, holes = carpet_net(cfg.level, cfg.refine)
        ctx.net = net
        ctx.family = ObstacleFamily([ObstacleSet(ids, side, {"kind": "square", "id": k, "d_H": None})
                                     for k, (ids, side) in enumerate(holes)], L=cfg.L)
        return ctx
    if cfg.kind == "square":
        ctx.net = grid_net(cfg.grid)
        ctx.family = ObstacleFamily([], L=cfg.L)
        return ctx
    ctx.p = parse_presentation(cfg.presentation_text())
    if cfg.kind == "surface":
        ctx.ball = cayley_ball(ctx.p, cfg.radius, cfg.budget_vertices)
        axes = []
        for gens in ctx.p.hypsub:
            for g in gens:
                axes += [(g + 1,) * (2 * cfg.depth + 8), (-(g + 1),) * (2 * cfg.depth + 8)]
        bnet = build_surface_net(ctx.p, cfg.depth, cfg.directions, margin=cfg.margin, seed=cfg.seed,
                                 extra_words=axes)
        if cfg.epsilon is not None:
            bnet = _reweight(bnet, VisualParams(cfg.epsilon, 1.0))
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ctx.ball = cusped_ball(ctx.p, cfg.radius, cfg.horoball_depth, budget=cfg.budget_vertices)
        params = None if cfg.epsilon is None else VisualParams(cfg.epsilon, 1.0)
        bnet = build_net(ctx.ball, cfg.depth, params, margin=cfg.margin, seed=cfg.seed)
    ctx.bnet = bnet
    ctx.net = bnet.net
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ctx.family = limit_sets(bnet)
    ctx.family.L = cfg.L
    return ctx


def _reweight(bnet, params):
    prod = 0.5 * (2 * bnet.T - bnet.D)
    rho = params.rho(prod)
    np.fill_diagonal(rho, 0.0)
    bnet.rho, bnet.params, bnet._net = rho, params, None
    return bnet


# --- build ---------------------------------------------------------------------

def cmd_build(cfg):
    ctx = build_context(cfg)
    os.makedirs(cfg.out, exist_ok=True)
    files = [io.write_json(os.path.join(cfg.out, "config.json"), cfg.to_dict())]
    if ctx.p is not None:
        path = os.path.join(cfg.out, "presentation.txt")
        with open(path, "w") as f:
            f.write(cfg.presentation_text())
        files.append(path)
        ball = getattr(ctx.ball, "cayley", ctx.ball)
        info = {"radius": ball.radius, "sphere_sizes": ball.sphere_sizes(), "backend": ctx.p.backend}
        if hasattr(ctx.ball, "horoballs"):
            info.update(nodes=int(ctx.ball.n), edges=int(ctx.ball.n_edges),
                        horoballs=[{"size": O.size, "K": O.K, "d_O": int(O.d_O),
                                    "representative": ctx.p.format(ball.words[O.rep])}
                                   for O in ctx.ball.horoballs])
        files.append(io.write_json(os.path.join(cfg.out, "ball.json"), info))
        files.append(io.write_jsonl(os.path.join(cfg.out, "ball.jsonl"), ball_records(ctx)))
        b = ctx.bnet
        files.append(io.write_jsonl(os.path.join(cfg.out, "net.jsonl"), b.records()))
        files.append(io.write_matrix(os.path.join(cfg.out, "rho.csv"), b.rho))
        files.append(io.write_json(os.path.join(cfg.out, "net.json"),
                                   {"T": b.T, "margin": b.margin, "delta": b.delta, "points": len(b),
                                    "epsilon": b.params.epsilon, "C0": b.params.C0,
                                    "resolution": ctx.net.resolution()}))
    else:
        files.append(io.write_matrix(os.path.join(cfg.out, "points.csv"), ctx.net.coords))
    files.append(io.write_json(os.path.join(cfg.out, "family.json"), ctx.family.as_record()))
    io.write_manifest(cfg.out, files, {"preset": cfg.preset, "seed": cfg.seed})
    return 0, {"files": [os.path.basename(f) for f in files], "points": len(ctx.net)}, ctx


def ball_records(ctx):
    X = ctx.ball
    if not hasattr(X, "horoballs"):
        d0 = X.depth
        for i, w in enumerate(X.words):
            yield {"id": i, "kind": "cayley", "coset": None, "level": 0, "dist_from_w": int(d0[i]),
                   "word": ctx.p.format(w)}
        for i, j, _ in X.edges:
            yield {"u": int(i), "v": int(j), "len": 1}
        return
    d0 = X.row(X.basepoint)
    for i in range(X.n):
        h = int(X.hb[i])
        yield {"id": i, "kind": "cayley" if X.kind[i] == 0 else "horoball", "coset": h if h >= 0 else None,
               "level": int(X.level[i]), "dist_from_w": float(d0[i])}
    G = X.graph.tocoo()
    for i, j in zip(G.row, G.col):
        if i < j:
            yield {"u": int(i), "v": int(j), "len": 1}


# --- audits ----------------------------------------------------------------------

ANCHORS = {
    "separation": "separation of peripheral limit sets",
    "doubling": "doubling constant of the boundary",
    "linconn": "linear connectedness of the boundary",
    "porosity": "porosity of obstacle sets",
    "avoidability": "avoidability of obstacle sets",
    "rescale": "rescaling small boundary balls by the group action",
    "busemann": "horoball versus Busemann sublevel sandwich",
    "quasiarc": "obstacle-avoiding quasi-arc",
    "embed": "quasi-isometric plane through a boundary arc",
}

AUDITS = tuple(k for k in ANCHORS if k not in ("quasiarc", "embed"))


def load_context(cfg):
    io.verify_manifest(cfg.out)
    return build_context(cfg)


def cmd_audit(cfg, which, ctx=None):
    if which not in AUDITS:
        raise ValueError(f"unknown audit {which}")
    ctx = ctx or load_context(cfg)
    net, fam = ctx.net, ctx.family
    ok, notes = True, []
    if which == "separation":
        if ctx.bnet is None:
            rep = {"pairs": [], "note": "no boundary net"}
        else:
            rep = separation_audit(fam, ctx.bnet)
        if rep.get("pairs"):
            ok = rep["inv_C"] > 0
        else:
            notes.append("fewer than two obstacle sets")
    elif which == "doubling":
        rep = doubling_estimate(net, seed=cfg.seed)
    elif which == "linconn":
        rep = linconn_estimate(net, seed=cfg.seed)
        if rep["disconnected"]:
            notes.append("net disconnected at working resolution (expected for Cantor boundaries)")
    elif which == "porosity":
        if not len(fam):
            rep = {"rows": [], "note": "empty family"}
        else:
            rep = porosity_audit(fam, net, L=None)
            ok = rep["constant"] is not None and math.isfinite(rep["constant"])
    elif which == "avoidability":
        rows = []
        for k, V in enumerate(list(fam)[:8]):
            r = V.scale / (4 * cfg.L)
            a = avoidability_audit(V, net, r, cfg.L, seed=cfg.seed)
            a["set"] = k
            rows.append(a)
        rep = {"rows": rows}
        done = [a for a in rows if not a.get("skipped")]
        ok = all(a["passed"] for a in done)
        if not done:
            notes.append("no set tested at its scale")
    elif which == "rescale":
        if ctx.bnet is None:
            raise ValueError("rescale needs a group boundary net")
        z = len(ctx.bnet) - 1
        rep = {"rows": [rescale_audit(ctx.bnet, z, r) for r in (0.5, 0.1, 0.02)]}
    elif which == "busemann":
        if not getattr(ctx.ball, "horoballs", None):
            raise ValueError("busemann audit needs a cusped ball with horoballs")
        rep = sandwich(ctx.ball, 0)
    rep = dict(rep)
    rep.update(audit=which, anchor=ANCHORS[which], passed=bool(ok), notes=notes)
    io.write_json(os.path.join(cfg.out, f"audit_{which}.json"), rep)
    return (0 if ok else 3), rep


# --- quasi-arc and embedding ---------------------------------------------------------

def _qa_params(cfg):
    return QuasiArcParams(r=cfg.r, L=cfg.L, kappa=cfg.kappa)


def cmd_quasiarc(cfg, ctx=None):
    ctx = ctx or load_context(cfg)
    fam = ctx.family if ctx.bnet is None else ObstacleFamily([])
    try:
        arc, rep = build_quasi_arc(ctx.net, fam, _qa_params(cfg))
    except StageFailure as e:
        out = {"status": "fail", "error": str(e), "witness": e.witness, "anchor": ANCHORS["quasiarc"]}
        io.write_json(os.path.join(cfg.out, "quasiarc.json"), out)
        return 3, out, None
    out = rep.as_record()
    out["anchor"] = ANCHORS["quasiarc"]
    io.write_json(os.path.join(cfg.out, "arc.json"),
                  {"points": [int(v) for v in arc], "net_ref": ctx.net.name,
                   "report": {k: v for k, v in out.items() if k != "stages"}})
    io.write_jsonl(os.path.join(cfg.out, "stages.jsonl"), out["stages"])
    io.write_json(os.path.join(cfg.out, "quasiarc.json"), out)
    return (0 if rep.status == "pass" else 3), out, arc


def cmd_embed(cfg, ctx=None, samples=3000):
    ctx = ctx or load_context(cfg)
    if ctx.bnet is None:
        raise ValueError("embed needs a group boundary net")
    code, qrep, arc = cmd_quasiarc(cfg, ctx)
    if code:
        return code, {"quasiarc": qrep, "error": qrep.get("error") or qrep.get("status"),
                      "anchor": ANCHORS["embed"]}
    b = ctx.bnet
    emb = embed_arc(arc, b)
    dist = distortion_audit(emb, samples=samples, seed=cfg.seed)
    proj = project_to_cayley(emb)
    p = ctx.p
    if b.is_cusped:
        X = b.space
        words = [X.cayley.words[int(v)] for v in emb.shadow]
    else:
        words = list(emb.shadow)
    uniq = list(dict.fromkeys(words))
    prof = transversality_audit(uniq, p, Ms=(0, 1, 2))
    # coned-off persistence over a sample of cone points
    rng = np.random.default_rng(cfg.seed)
    idx = np.arange(len(emb.points))
    if len(idx) > 60:
        idx = np.sort(rng.choice(idx, 60, replace=False))
    pts = [emb.points[i] for i in idx]
    n = len(pts)
    S = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    S[iu] = cone_matrix(pts, b.rho, b.params.epsilon, emb.step)
    S = S + S.T
    sub_words = [words[i] for i in idx]
    if p.parabolic:
        G, ids = coned_off_tube(p, sub_words)
        I = G.dist_matrix(ids)
    else:
        from .boundary import WordSpace
        sp = WordSpace(p)
        I = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                I[i, j] = I[j, i] = sp.d(sub_words[i], sub_words[j])
    pers = persistence_check(S, I, prof)
    out = {"anchor": ANCHORS["embed"], "quasiarc": {k: qrep[k] for k in ("status", "lambda_measured")},
           "distortion": dist, "C3": proj["C3"], "transversality": prof.as_record() if prof else None,
           "persistence": pers, "cone_points": len(emb.points)}
    recs = ({"cone": [c.z, c.k], "image_vertex": _img(b, v), "cayley_vertex": _img(b, s), "offset": o}
            for c, v, s, o in zip(emb.points, emb.images, emb.shadow, emb.offsets))
    io.write_jsonl(os.path.join(cfg.out, "embedding.jsonl"), recs)
    if prof:
        with open(os.path.join(cfg.out, "profile.csv"), "w") as f:
            f.write("M,eta\n")
            for M, e in zip(prof.Ms, prof.eta):
                f.write(f"{M},{e:.17g}\n")
    io.write_json(os.path.join(cfg.out, "embed.json"), out)
    return 0, out


def _img(b, v):
    if b.is_cusped:
        return int(v)
    return b.space.p.format(v)


def cmd_verify(path):
    return io.verify_manifest(path)
