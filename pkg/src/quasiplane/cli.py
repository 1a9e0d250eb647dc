"""quasiplane command line.

Exit codes: 0 ok, 1 usage or input error, 2 budget exceeded, 3 contract failure or stale artifacts.
"""
import argparse
import json
import logging
import os
import sys

from . import io
from .presentations import BudgetError, PresentationError

log = logging.getLogger("quasiplane")


class _Parser(argparse.ArgumentParser):
    # usage errors share exit code 1 with bad input; 2 is reserved for budgets
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parser():
    ap = _Parser(prog="quasiplane", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--preset", choices=["f2", "z2z2", "genus2", "carpet", "square"])
        p.add_argument("--presentation", help="presentation file (overrides the preset group)")
        p.add_argument("--radius", type=int)
        p.add_argument("--depth", type=int)
        p.add_argument("--horoball-depth", type=int)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--margin", type=float)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--budget-vertices", type=int, default=5_000_000)
        p.add_argument("--out", default="out")

    common(sub.add_parser("build", help="build ball, boundary net and obstacle family"))
    a = sub.add_parser("audit", help="run one audit on built artifacts")
    a.add_argument("which", choices=["separation", "doubling", "linconn", "porosity", "avoidability",
                                     "rescale", "busemann"])
    common(a)
    common(sub.add_parser("quasiarc", help="build an obstacle-avoiding quasi-arc"))
    common(sub.add_parser("embed", help="cone embedding, transversality and persistence"))
    v = sub.add_parser("verify", help="check artifact hashes against the manifest")
    v.add_argument("artifact", help="output directory or manifest path")
    return ap


def _config(args):
    from .pipeline import PipelineConfig
    if args.preset is None and args.presentation is None:
        cfg_path = os.path.join(args.out, "config.json")
        if not os.path.exists(cfg_path):
            raise FileNotFoundError(f"no --preset or --presentation, and no {cfg_path}")
        d = io.read_json(cfg_path)
        d["out"] = args.out
        return PipelineConfig.from_dict(d)
    return PipelineConfig(preset=args.preset, presentation=args.presentation, radius=args.radius,
                          depth=args.depth, horoball_depth=args.horoball_depth, epsilon=args.epsilon,
                          margin=args.margin, seed=args.seed, threads=args.threads,
                          budget_vertices=args.budget_vertices, out=args.out)


def _summary(rep):
    keep = {}
    for k, v in rep.items():
        if isinstance(v, dict):
            for k2, v2 in v.items():
                if isinstance(v2, (int, float, str, bool)):
                    keep[f"{k}.{k2}"] = v2
        elif isinstance(v, (int, float, str, bool)) or v is None:
            keep[k] = v
    return json.dumps(keep, sort_keys=True, default=str)


def run(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    from . import pipeline
    if args.cmd == "verify":
        man = pipeline.cmd_verify(args.artifact)
        print(f"ok: {len(man['files'])} files match the manifest")
        return 0
    cfg = _config(args)
    if args.cmd == "build":
        code, rep, _ = pipeline.cmd_build(cfg)
        print(f"built {rep['points']} points into {cfg.out}: {', '.join(rep['files'])}")
        return code
    if args.cmd == "audit":
        code, rep = pipeline.cmd_audit(cfg, args.which)
    elif args.cmd == "quasiarc":
        code, rep, _ = pipeline.cmd_quasiarc(cfg)
        for st in rep.get("stages", []):
            log.info("stage %s: r'=%.4g obstacles=%d", st["n"], st["rn"], st["obstacles"])
    else:
        code, rep = pipeline.cmd_embed(cfg)
    print(_summary(rep))
    for note in rep.get("notes", []):
        print("note:", note)
    return code


def main(argv=None):
    try:
        code = run(argv)
    except (FileNotFoundError, PresentationError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        code = 1
    except BudgetError as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        code = 2
    except io.StaleArtifactError as e:
        print(f"error: {e}", file=sys.stderr)
        code = 3
    sys.exit(code)


if __name__ == "__main__":
    main()
