"""Command-line front end: ``detlocal <subcommand> ...``.

Every output carries {seed, config, tool_version}. JSON documents hold it
under a "meta" key; line-oriented outputs (CSV, NDJSON, code lists) start
with a single ``# {...}`` comment line. Files are written atomically.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def parse_params(text: str | None) -> dict:
    """``"n=4,ell=1"`` -> {"n": 4, "ell": 1}; values are ints when they parse as ints."""
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise UsageError(f"bad --params item {item!r}, expected key=value")
        key, val = item.split("=", 1)
        try:
            out[key.strip()] = int(val)
        except ValueError:
            out[key.strip()] = val.strip()
    return out


def parse_sizes(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"bad --sizes {text!r}") from None


def read_records(text: str) -> list[str]:
    """Data lines of a line-oriented output, skipping the ``#`` header."""
    return [ln for ln in text.splitlines() if ln and not ln.startswith("#")]


def _meta(args) -> dict:
    config = {k: v for k, v in sorted(vars(args).items())
              if k not in ("func", "out", "out_dir", "summary", "threads", "seed")}
    return {"seed": args.seed, "config": config, "tool_version": __version__}


def _header(args) -> str:
    return "# " + json.dumps(_meta(args), sort_keys=True) + "\n"


def atomic_write(path: str | os.PathLike | None, text: str) -> None:
    """Write ``text`` to path via a temp file and rename; ``None`` or ``-`` means stdout."""
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def _load_graph(path):
    from .incidence import SignedBipartiteIncidence
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"graph file {path} not found")
    doc = json.loads(p.read_text())
    return SignedBipartiteIncidence.from_json(doc)


def _graph_from_args(args):
    from .incidence import build
    if getattr(args, "graph", None):
        return _load_graph(args.graph)
    if not getattr(args, "family", None):
        raise UsageError("need --graph or --family")
    return build(args.family, **parse_params(args.params))


def _stream(seed, *key):
    from .experiments import stream
    return stream(seed, *key)


def _map(fn, n, threads):
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, range(n)))
    return [fn(j) for j in range(n)]


def cmd_generate(args):
    g = _graph_from_args(args)
    if args.format == "csv":
        from .incidence import signed_matrix
        b = signed_matrix(g)
        buf = io.StringIO()
        np.savetxt(buf, b, fmt="%d", delimiter=",")
        atomic_write(args.out, _header(args) + buf.getvalue())
    else:
        doc = g.to_json()
        doc["meta"] = _meta(args)
        atomic_write(args.out, _dump_json(doc))
    return EXIT_OK


def cmd_validate(args):
    from dataclasses import asdict
    from .incidence import validate
    g = _load_graph(args.graph)
    rep = validate(g)
    doc = {k: (sorted(v) if isinstance(v, (set, frozenset)) else v) for k, v in asdict(rep).items()}
    doc["ok"] = rep.ok
    doc["meta"] = _meta(args)
    atomic_write(args.out, _dump_json(_jsonable(doc)))
    if not rep.ok:
        print("detlocal: incidence: graph failed validation", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def cmd_spectral(args):
    from .spectral import decompose, default_eps_delta, structured_vertices, trace_identity_gap
    g = _graph_from_args(args)
    s = decompose(g)
    e0, d0 = default_eps_delta(g.d)
    eps = args.eps if args.eps is not None else e0
    delta = args.delta if args.delta is not None else d0
    sv = structured_vertices(s, eps, delta)
    summary = {"rank": int(s.rank), "trace_gap": float(trace_identity_gap(g)),
               "structured_count": int(len(sv)), "eps": eps, "delta": delta,
               "meta": _meta(args)}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "eigenvalue"])
    for i, lam in enumerate(s.eigenvalues):
        w.writerow([i, repr(float(lam))])
    atomic_write(args.out, _header(args) + buf.getvalue())
    if args.summary:
        atomic_write(args.summary, _dump_json(summary))
    return EXIT_OK


def cmd_sample(args):
    from . import dpp
    g = _graph_from_args(args)
    if args.method == "sequential":
        from .spectral import decompose, projection_subspace
        h = projection_subspace(decompose(g))
        draw = lambda rng: dpp.sample(h, rng)  # noqa: E731
    else:
        draw = dpp.IncidenceSampler(g).sample
    samples = _map(lambda j: draw(_stream(args.seed, j)), args.count, args.threads)
    lines = [json.dumps({"members": list(s.members)}) for s in samples]
    atomic_write(args.out, _header(args) + "".join(ln + "\n" for ln in lines))
    return EXIT_OK


def _dist_csv(dist) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["code", "probability"])
    for code, p in dist.to_rows():
        w.writerow([code, repr(p)])
    w.writerow(["residual", repr(float(dist.residual))])
    return buf.getvalue()


def cmd_tk_dist(args):
    from .limit import tk_distribution
    if args.radius % 2:
        raise UsageError("--radius must be even")
    dist = tk_distribution(args.k, args.radius, args.max_vertices)
    atomic_write(args.out, _header(args) + _dist_csv(dist))
    return EXIT_OK


def _emit_codes(args, draw):
    if args.radius % 2:
        raise UsageError("--radius must be even")
    codes = _map(lambda j: draw(_stream(args.seed, j)).code.decode(), args.count, args.threads)
    atomic_write(args.out, _header(args) + "".join(c + "\n" for c in codes))
    return EXIT_OK


def cmd_tk_sample(args):
    from .limit import sample_tk_ball
    return _emit_codes(args, lambda rng: sample_tk_ball(args.k, args.radius, rng))


def cmd_oneout_sample(args):
    from .limit import sample_one_out_ball
    return _emit_codes(args, lambda rng: sample_one_out_ball(args.k, args.d, args.radius, rng))


def cmd_enumerate_trees(args):
    from .limit import tk_ball_mass
    from .rootedtrees import aut_size, enumerate_valid_trees, matching_count, parts
    if args.radius % 2:
        raise UsageError("--radius must be even")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["code", "vertices", "aut_size", "matching_count", "probability"])
    trees = sorted(enumerate_valid_trees(args.k, args.radius, args.max_vertices),
                   key=lambda t: (t.n, t.code))
    for t in trees:
        w.writerow([t.code.decode(), t.n, aut_size(t), matching_count(t, parts(t)[2]),
                    repr(tk_ball_mass(t, args.k))])
    atomic_write(args.out, _header(args) + buf.getvalue())
    return EXIT_OK


def cmd_experiment(args):
    from .experiments import convergence_experiment
    if args.radius % 2:
        raise UsageError("--radius must be even")
    roots = None if args.roots == 0 else args.roots
    rep = convergence_experiment(args.family, parse_params(args.params), parse_sizes(args.sizes),
                                 args.k, args.radius, args.samples, roots, args.seed,
                                 threads=args.threads)
    doc = rep.to_json()
    doc["meta"] = _meta(args)
    doc = _jsonable(doc)
    if args.out_dir:
        out = Path(args.out_dir)
        atomic_write(out / "report.json", _dump_json(doc))
        atomic_write(out / "summary.csv", _header(args) + rep.summary_csv())
        for row in rep.rows:
            atomic_write(out / f"distribution_{row.size}.csv", _header(args) + _dist_csv(row.distribution))
    else:
        atomic_write(args.out, _dump_json(doc))
    return EXIT_OK


def cmd_oracle(args):
    from .dpp import enumerate_all
    from .spectral import decompose, projection_subspace
    g = _graph_from_args(args)
    pairs = enumerate_all(projection_subspace(decompose(g)))
    lines = [json.dumps({"members": list(s.members), "probability": w}) for s, w in pairs]
    atomic_write(args.out, _header(args) + "".join(ln + "\n" for ln in lines))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    from .incidence import _BUILDERS
    families = sorted(_BUILDERS)
    p = _Parser(prog="detlocal", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed=True):
        sp.add_argument("--out", "-o", default=None, help="output path (default stdout)")
        sp.add_argument("--seed", type=int, default=0, help="master seed")
        sp.add_argument("--threads", type=int, default=1)

    def graph_src(sp, required_graph=False):
        sp.add_argument("--graph", required=required_graph, help="graph JSON file")
        if not required_graph:
            sp.add_argument("--family", choices=families)
            sp.add_argument("--params", default="", help="comma-separated key=value pairs")

    sp = sub.add_parser("generate", help="build a family instance")
    sp.add_argument("--family", choices=families, required=True)
    sp.add_argument("--params", default="")
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    common(sp)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("validate", help="check regularity and C4-freeness")
    graph_src(sp, required_graph=True)
    common(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("spectral", help="eigenvalues of L- and structured vertices")
    graph_src(sp)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--summary", help="path for the JSON summary")
    common(sp)
    sp.set_defaults(func=cmd_spectral)

    sp = sub.add_parser("sample", help="exact samples of the determinantal measure")
    graph_src(sp)
    sp.add_argument("--count", type=int, default=1)
    sp.add_argument("--method", choices=["incidence", "sequential"], default="incidence")
    common(sp)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("tk-dist", help="exact ball law of the limit tree")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--radius", type=int, required=True)
    sp.add_argument("--max-vertices", type=int, required=True)
    common(sp)
    sp.set_defaults(func=cmd_tk_dist)

    for name, func, helptext in (("tk-sample", cmd_tk_sample, "balls of the limit tree"),
                                 ("oneout-sample", cmd_oneout_sample, "balls of the 1-out model")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--k", type=int, required=True)
        sp.add_argument("--radius", type=int, required=True)
        sp.add_argument("--count", type=int, default=1)
        if name == "oneout-sample":
            sp.add_argument("--d", type=int, required=True)
        common(sp)
        sp.set_defaults(func=func)

    sp = sub.add_parser("enumerate-trees", help="valid trees with their masses")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--radius", type=int, required=True)
    sp.add_argument("--max-vertices", type=int, required=True)
    common(sp)
    sp.set_defaults(func=cmd_enumerate_trees)

    sp = sub.add_parser("experiment", help="convergence of ball laws along a size ladder")
    sp.add_argument("--family", choices=families, required=True)
    sp.add_argument("--params", default="")
    sp.add_argument("--sizes", required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--radius", type=int, required=True)
    sp.add_argument("--samples", type=int, required=True)
    sp.add_argument("--roots", type=int, default=32, help="roots per sample, 0 for all")
    sp.add_argument("--out-dir", help="directory for report.json, summary.csv and per-size CSVs")
    common(sp)
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("oracle", help="brute-force enumeration of all positive-mass sets")
    graph_src(sp)
    common(sp)
    sp.set_defaults(func=cmd_oracle)
    return p


def _origin(exc) -> str:
    tb = traceback.extract_tb(exc.__traceback__)
    for frame in reversed(tb):
        p = Path(frame.filename)
        if p.parent.name == "detlocal":
            return p.stem.lstrip("_")
    return "cli"


def run(argv=None) -> int:
    from .spectral import NumericalError
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        return args.func(args)
    except UsageError as e:
        print(f"detlocal: cli: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, ValueError, KeyError, TypeError, json.JSONDecodeError) as e:
        print(f"detlocal: {_origin(e)}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, RuntimeError, OverflowError, MemoryError, ArithmeticError) as e:
        print(f"detlocal: {_origin(e)}: {e}", file=sys.stderr)
        return EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
