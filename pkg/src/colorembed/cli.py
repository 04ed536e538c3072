"""Command line entry point: ``colorembed {gen,certify,target,embed,verify,export}``.

Exit codes: 0 success, 1 negative result (a report is still written),
2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from . import __version__
from .bootstrap import embed_subdivision_joined, embed_subdivision_jumbled
from .certify import JumbledParams, is_joined, jumbled_check, min_joined, spectral_jumbled
from .engine import Embedding, EngineConfig, GoodnessParams, revalidate, verify_good
from .errors import (
    CapExceeded,
    ColorEmbedError,
    EmbeddingError,
    ExtensionError,
    GraphError,
    InternalInconsistency,
    PreconditionError,
    TargetError,
)
from .ffdist import DistanceGraphSpec, FieldPoint, build_distance_family, embed_distance_subdivision, ff_norm
from .graphs import Graph, GraphFamily, export_dot, load_family, save_family
from .targets import (
    build_expansion,
    build_subdivision,
    built_from_dict,
    built_to_dict,
    expansion_layout,
    make_pattern,
    mono_max_degree,
)

log = logging.getLogger("colorembed")

GOODNESS_CAP = int(os.environ.get("COLOREMBED_GOODNESS_CAP", 10**8))


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    inputs: list[str] = field(default_factory=list)
    output: str | None = None
    params: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1
    caps: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.threads < 1:
            raise UsageError("--threads must be positive")
        mode = self.params.get("mode")
        if mode is not None and mode not in ("exact", "incremental", "best-effort"):
            raise UsageError(f"unknown mode {mode!r}")

    def provenance(self) -> dict:
        return {"tool": "colorembed", "version": __version__, **asdict(self)}


def parse_kv(tokens) -> dict:
    """``["q=3", "R=1,2"]`` -> ``{"q": "3", "R": "1,2"}``."""
    out = {}
    for tok in tokens or []:
        if "=" not in tok:
            raise UsageError(f"expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _int(kv, key, default=None):
    if key not in kv:
        if default is None:
            raise UsageError(f"missing {key}=")
        return default
    try:
        return int(kv[key])
    except ValueError:
        raise UsageError(f"{key} must be an integer, got {kv[key]!r}") from None


def _float(kv, key, default=None):
    if key not in kv:
        if default is None:
            raise UsageError(f"missing {key}=")
        return default
    try:
        return float(kv[key])
    except ValueError:
        raise UsageError(f"{key} must be a number, got {kv[key]!r}") from None


def _params(kv) -> JumbledParams:
    try:
        return JumbledParams(_float(kv, "p"), _float(kv, "beta"))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _ints(s: str) -> list[int]:
    try:
        return [int(x) for x in s.split(",") if x]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {s!r}") from None


def _write_json(path, obj) -> None:
    text = json.dumps(obj, sort_keys=True, indent=1) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _caps() -> dict:
    from . import certify

    return {
        "joined": certify.JOINED_CAP,
        "jumbled_max_n": certify.JUMBLED_MAX_RIGHT,
        "jumbled_max_nt": certify.JUMBLED_MAX_LEFT,
        "goodness": GOODNESS_CAP,
    }


# --- gen -----------------------------------------------------------------------

def random_family(n: int, p: float, t: int, seed: int) -> GraphFamily:
    """``t`` independent ``G(n, p)`` graphs from one seed."""
    rng = np.random.default_rng(seed)
    graphs = []
    for _ in range(t):
        upper = np.triu(rng.random((n, n)) < p, 1)
        graphs.append(Graph.from_matrix((upper | upper.T).astype(np.int8)))
    return GraphFamily(tuple(graphs), meta={"kind": "random", "p": p, "seed": seed})


def matching_deleted(n: int) -> GraphFamily:
    """``K_n`` minus the perfect matching ``{2i, 2i+1}``."""
    if n % 2:
        raise UsageError("n must be even")
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if v != u + 1 or u % 2]
    return GraphFamily((Graph.from_edges(n, edges),), meta={"kind": "matching-deleted"})


def cmd_gen(args, cfg: RunConfig) -> int:
    chosen = [k for k in ("ffdist", "complete", "random", "matching_deleted") if getattr(args, k) is not None]
    if len(chosen) != 1:
        raise UsageError("give exactly one of --ffdist, --complete, --random, --matching-deleted")
    kind = chosen[0]
    kv = parse_kv(getattr(args, kind))
    if kind == "ffdist":
        spec = DistanceGraphSpec(_int(kv, "q"), _int(kv, "d", 2), tuple(_ints(kv.get("R", "1"))))
        F = build_distance_family(spec)
    elif kind == "complete":
        n = _int(kv, "n")
        F = GraphFamily(tuple(Graph.complete(n) for _ in range(_int(kv, "t", 1))), meta={"kind": "complete"})
    elif kind == "random":
        F = random_family(_int(kv, "n"), _float(kv, "p", 0.5), _int(kv, "t", 1), cfg.seed)
    else:
        F = matching_deleted(_int(kv, "n"))
    if args.output is None:
        raise UsageError("gen needs -o/--output")
    save_family(F, args.output)
    log.info("wrote %s: n=%d t=%d", args.output, F.n, F.t)
    return 0


# --- certify -------------------------------------------------------------------

def cmd_certify(args, cfg: RunConfig) -> int:
    F = load_family(args.family)
    reports = {}
    ok = True
    if args.joined is not None:
        kv = parse_kv(args.joined)
        if "s" in kv:
            rep = is_joined(F, _int(kv, "s"))
            reports["joined"] = rep.to_dict()
            ok &= rep.passed
        else:
            s = min_joined(F, _int(kv, "max", F.n))
            reports["min_joined"] = {"s": s}
            ok &= s is not None
    if args.jumbled is not None:
        method = args.jumbled[0] if args.jumbled else "spectral"
        kv = parse_kv(args.jumbled[1:])
        if method == "spectral":
            if F.t != 1:
                raise UsageError("spectral certification takes a single graph")
            try:
                params = spectral_jumbled(F.graph(1))
            except PreconditionError as exc:
                raise UsageError(str(exc)) from None
            reports["jumbled"] = {"verdict": "pass", "method": "spectral", "p": params.p, "beta": params.beta}
        elif method in ("exhaustive", "sampled"):
            params = _params(kv)
            rep = jumbled_check(F, params, mode=method, samples=_int(kv, "samples", 10**5), seed=cfg.seed)
            reports["jumbled"] = rep.to_dict()
            ok &= rep.passed
        else:
            raise UsageError(f"unknown jumbled method {method!r}")
    if not reports:
        raise UsageError("give --joined and/or --jumbled")
    _write_json(args.output, {"run": cfg.provenance(), "reports": reports})
    return 0 if ok else 1


# --- target --------------------------------------------------------------------

def cmd_target(args, cfg: RunConfig) -> int:
    kv = parse_kv(args.spec)
    D = _int(kv, "D", 3)
    ell = _int(kv, "ell")
    t = _int(kv, "t", 1)
    kind = kv.get("pattern", "constant")
    color = _int(kv, "color", 1)
    patterns = [make_pattern(ell, kind, seed=cfg.seed + i, t=t, color=color) for i in range(D * (D - 1) // 2)]
    table = dict(zip(combinations(range(D), 2), patterns))
    if args.kind == "subdivision":
        bt = build_subdivision(D, ell, table)
    else:
        size = _int(kv, "tree", 2)
        trees, specs = expansion_layout(D, [size] * D, ell, table, tree_color=color)
        bt = build_expansion(trees, specs)
    if args.output is None:
        raise UsageError("target needs -o/--output")
    d = built_to_dict(bt)
    d["run"] = cfg.provenance()
    _write_json(args.output, d)
    return 0


# --- embed ---------------------------------------------------------------------

def _distance_spec(F: GraphFamily) -> DistanceGraphSpec | None:
    m = F.meta or {}
    if {"q", "d", "distances"} <= set(m):
        return DistanceGraphSpec(int(m["q"]), int(m["d"]), tuple(m["distances"]))
    return None


def _read_target(path):
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: not valid JSON ({exc})") from None
    return built_from_dict(d)


def cmd_embed(args, cfg: RunConfig) -> int:
    F = load_family(args.family)
    bt = _read_target(args.target)
    kv = parse_kv(args.params)
    mode = kv.get("mode", "exact")
    cfg.params.update(kv)
    spec = _distance_spec(F)
    pipeline = kv.get("pipeline", "distance" if spec else "joined")
    out = {"run": cfg.provenance(), "pipeline": pipeline}
    try:
        if pipeline == "distance":
            if spec is None:
                raise UsageError("the family carries no distance metadata")
            s = _int(kv, "s", 0) or None
            de = embed_distance_subdivision(range(F.n), spec, bt, mode=mode, D=_int(kv, "D", 0) or None, s=s)
            e = _lift(de.embedding, F, de.old_ids)
            out.update(embedding=e.to_dict(), s=de.s, s_source=de.s_source, notes=de.notes)
            out["embedding"]["points"] = {str(h): list(p) for h, p in sorted(de.points.items())}
        elif pipeline == "joined":
            s, D = _int(kv, "s"), _int(kv, "D", max(3, mono_max_degree(bt.graph)))
            certified = mode == "exact" and _certify_quietly(F, s)
            config = EngineConfig(mode=mode, cap=GOODNESS_CAP, certified=certified, milestones=mode == "exact")
            regions, e = embed_subdivision_joined(F, bt, GoodnessParams(s, D), config)
            out.update(embedding=e.to_dict(), regions=regions.to_dict(), certified=certified)
        elif pipeline == "jumbled":
            params = _params(kv)
            config = EngineConfig(mode=mode, cap=GOODNESS_CAP, certified=mode == "exact")
            regions, e = embed_subdivision_jumbled(F, bt, _float(kv, "c"), params, _int(kv, "D", 3), config)
            out.update(embedding=e.to_dict(), regions=regions.to_dict())
        else:
            raise UsageError(f"unknown pipeline {pipeline!r}")
    except (PreconditionError, ExtensionError, InternalInconsistency) as exc:
        out["error"] = {"type": type(exc).__name__, "message": str(exc)}
        cond = getattr(exc, "condition", None)
        if cond:
            out["error"]["condition"] = cond
        _write_json(args.output, out)
        log.error("%s: %s", type(exc).__name__, exc)
        return 1
    _write_json(args.output, out)
    return 0


def _certify_quietly(F: GraphFamily, s: int) -> bool:
    """Whether ``F`` is provably ``s``-joined within the cap; unknown counts as no."""
    try:
        return is_joined(F, s).passed
    except (CapExceeded, PreconditionError):
        return False


def _lift(e: Embedding, F: GraphFamily, old_ids) -> Embedding:
    """Re-express an embedding on an induced subfamily in the ids of ``F``."""
    mapping = {h: old_ids[v] for h, v in e.map.items()}
    universe = [old_ids[v] for v in range(e.host.n) if (e.universe >> v) & 1]
    out = Embedding(F, e.target, mapping, e.params, e.config, universe)
    out.steps, out.flags = e.steps, e.flags
    return out


# --- verify --------------------------------------------------------------------

def cmd_verify(args, cfg: RunConfig) -> int:
    F = load_family(args.family)
    try:
        d = json.loads(Path(args.embedding).read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.embedding}: not valid JSON ({exc})") from None
    if "error" in d and "embedding" not in d:
        raise UsageError(f"{args.embedding} records a failed run: {d['error']['message']}")
    d = d.get("embedding", d)
    if "map" not in d or "target" not in d:
        raise UsageError(f"{args.embedding} is not an embedding file")
    try:
        e = Embedding.from_dict(d, F)
    except EmbeddingError as exc:
        # a map that is not injective cannot even be loaded
        _write_json(args.output, {"run": cfg.provenance(), "problems": [str(exc)]})
        log.error("%s", exc)
        return 1
    problems = revalidate(e)
    spec = _distance_spec(F)
    if args.target:
        bt = _read_target(args.target)
        want = bt.graph.edge_set()
        if spec is not None:
            want = {(uv, spec.color_of(c)) for uv, c in want}
        if e.target.edge_set() != want:
            problems.append("embedded target differs from the target file")
    if spec is not None and F.labels is not None:
        for u, v, c in e.target.edges():
            if u in e.map and v in e.map:
                x = FieldPoint(spec.q, spec.d, F.labels[e.map[u]])
                y = FieldPoint(spec.q, spec.d, F.labels[e.map[v]])
                got, label = ff_norm(x, y), spec.distances[c - 1]
                if got != label:
                    problems.append(f"edge ({u}, {v}) realizes distance {got}, label {label}")
    report = {"run": cfg.provenance(), "problems": problems}
    if args.goodness is not None:
        kv = parse_kv(args.goodness)
        bound = kv.get("bound", "2s")
        bound = 2 * e.params.s if bound == "2s" else _int(kv, "bound")
        rep = verify_good(e, mode=kv.get("mode", "exact"), bound=bound, cap=_int(kv, "cap", GOODNESS_CAP))
        report["goodness"] = rep.to_dict()
        if not rep.passed:
            problems.append(f"goodness fails: R({rep.witness}) = {rep.residual}")
    _write_json(args.output, report)
    for p in problems:
        log.error(p)
    return 1 if problems else 0


# --- export --------------------------------------------------------------------

def cmd_export(args, cfg: RunConfig) -> int:
    F = load_family(args.family)
    paths = export_dot(F, args.outdir, stem=Path(args.family).stem)
    for p in paths:
        print(p)
    return 0


# --- plumbing ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="colorembed", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0, help="single source of randomness (default 0)")
    ap.add_argument("--threads", type=int, default=1, help="worker count; results do not depend on it")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a host family")
    g.add_argument("--ffdist", nargs="+", metavar="K=V", help="distance family: q= d= R=1,2")
    g.add_argument("--complete", nargs="+", metavar="K=V", help="complete graphs: n= t=")
    g.add_argument("--random", nargs="+", metavar="K=V", help="independent G(n,p): n= p= t=")
    g.add_argument("--matching-deleted", dest="matching_deleted", nargs="+", metavar="K=V", help="K_n minus a perfect matching: n=")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("certify", help="joinedness / jumbledness reports")
    c.add_argument("family")
    c.add_argument("--joined", nargs="*", metavar="K=V", help="s=<int> to test, or max=<int> for the minimum")
    c.add_argument("--jumbled", nargs="*", metavar="ARG", help="spectral | exhaustive p= beta= | sampled p= beta= samples=")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_certify)

    t = sub.add_parser("target", help="build a subdivision or expansion target")
    t.add_argument("kind", choices=["subdivision", "expansion"])
    t.add_argument("spec", nargs="*", metavar="K=V", help="D= ell= pattern=constant|alternating|random t= color= tree=")
    t.add_argument("-o", "--output")
    t.set_defaults(func=cmd_target)

    e = sub.add_parser("embed", help="run an embedding pipeline")
    e.add_argument("family")
    e.add_argument("target")
    e.add_argument("params", nargs="*", metavar="K=V", help="pipeline=joined|jumbled|distance s= D= mode= p= beta= c=")
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_embed)

    v = sub.add_parser("verify", help="revalidate an embedding")
    v.add_argument("family")
    v.add_argument("embedding")
    v.add_argument("--target")
    v.add_argument("--goodness", nargs="*", metavar="K=V", help="bound=2s|<int> mode= cap=")
    v.add_argument("-o", "--output")
    v.set_defaults(func=cmd_verify)

    x = sub.add_parser("export", help="write DOT files for a family")
    x.add_argument("family")
    x.add_argument("outdir")
    x.set_defaults(func=cmd_export)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    inputs = [getattr(args, k) for k in ("family", "target", "embedding") if getattr(args, k, None)]
    try:
        cfg = RunConfig(args.command, inputs, getattr(args, "output", None), {}, args.seed, args.threads, _caps())
        log.info("seed %d", args.seed)
        return args.func(args, cfg)
    except (UsageError, GraphError, TargetError, CapExceeded, FileNotFoundError) as exc:
        print(f"colorembed: error: {exc}", file=sys.stderr)
        return 2
    except PreconditionError as exc:
        # a bad generator or target spec, as opposed to a failed pipeline hypothesis
        print(f"colorembed: error: {exc}", file=sys.stderr)
        return 2
    except ColorEmbedError as exc:
        print(f"colorembed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
