"""Deterministic artifact files: JSON, JSON-lines, CSV matrices and hash manifests."""
import hashlib
import json
import os

import numpy as np


class StaleArtifactError(RuntimeError):
    pass


def _default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    if hasattr(o, "as_record"):
        return o.as_record()
    if hasattr(o, "__dict__"):
        return {k: v for k, v in vars(o).items() if not k.startswith("_")}
    raise TypeError(f"cannot serialise {type(o).__name__}")


def dumps(obj):
    return json.dumps(obj, sort_keys=True, default=_default, allow_nan=True)


def write_json(path, obj):
    with open(path, "w") as f:
        f.write(json.dumps(obj, sort_keys=True, indent=1, default=_default, allow_nan=True))
        f.write("\n")
    return path


def read_json(path):
    with open(path) as f:
        return json.load(f)


def write_jsonl(path, records):
    with open(path, "w") as f:
        for r in records:
            f.write(dumps(r))
            f.write("\n")
    return path


def read_jsonl(path):
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


def write_matrix(path, M):
    np.savetxt(path, np.asarray(M, dtype=float), delimiter=",", fmt="%.17g")
    return path


def read_matrix(path):
    return np.loadtxt(path, delimiter=",", ndmin=2)


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


MANIFEST = "manifest.json"


def write_manifest(outdir, files, extra=None):
    entries = {os.path.basename(p): sha256_file(p) for p in sorted(files)}
    rec = {"files": entries}
    if extra:
        rec.update(extra)
    return write_json(os.path.join(outdir, MANIFEST), rec)


def verify_manifest(path):
    """Check every hashed file; returns the manifest or raises StaleArtifactError."""
    if os.path.isdir(path):
        path = os.path.join(path, MANIFEST)
    if not os.path.exists(path):
        raise FileNotFoundError(f"no manifest at {path}")
    man = read_json(path)
    root = os.path.dirname(path)
    bad = []
    for name, digest in sorted(man["files"].items()):
        f = os.path.join(root, name)
        if not os.path.exists(f):
            bad.append(f"{name}: missing")
        elif sha256_file(f) != digest:
            bad.append(f"{name}: hash mismatch")
    if bad:
        raise StaleArtifactError("stale artifacts: " + "; ".join(bad))
    return man
