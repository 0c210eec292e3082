"""Command-line front end: perron, tropical, flatten, validate."""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

import numpy as np

from .driver import run
from .eigen import residual_valuation
from .errors import GenericnessViolation, PerronError
from .parsing import format_series, parse_document, series_from_json, series_to_json
from .series import INF, PuiseuxMatrix, PuiseuxSeries, is_inf
from .tropical import trop_eigenvalue, trop_eigenvector
from .wdigraph import adjacency_graph, flat_slanted_form

DIGITS = 12


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a rational p/q, got {text!r}") from None


def _pair(f) -> list:
    return None if is_inf(f) else [f.numerator, f.denominator]


def _unpair(p):
    return INF if p is None else Fraction(p[0], p[1])


def _load(path: str):
    with open(path, encoding="utf-8") as fh:
        return parse_document(fh.read())


def _series_json(x: PuiseuxSeries) -> dict:
    return {"terms": series_to_json(x), "trunc": _pair(x.trunc)}


def _series_back(d: dict) -> PuiseuxSeries:
    x = series_from_json(d["terms"])
    return PuiseuxSeries(x.terms, trunc=_unpair(d["trunc"]), tol=0.0)


def _tolerance(args) -> float:
    if args.tol is not None:
        return args.tol
    env = os.environ.get("PERRON_TOL")
    return float(env) if env else 1e-9


def cmd_perron(args) -> int:
    doc = _load(args.file)
    opts = doc.options
    depth = args.depth if args.depth is not None else _fraction(opts.get("depth", "2"))
    delta = args.delta if args.delta is not None else (_fraction(opts["delta"]) if "delta" in opts else None)
    seed = args.seed if args.seed is not None else int(opts.get("seed", 0))
    np.random.seed(seed)
    y = doc.matrix
    lam, vec, tr = run(y, depth, strict=args.strict, delta=delta, tol=_tolerance(args))
    if args.json:
        out = {
            "lambda": series_to_json(lam),
            "lambda_trunc": _pair(lam.trunc),
            "vector": [series_to_json(v) for v in vec],
            "vector_trunc": [_pair(v.trunc) for v in vec],
            "depth": _pair(depth),
            "matrix": [[_series_json(e) for e in row] for row in y],
            "transcript": tr.to_json(),
            "notes": tr.notes,
        }
        json.dump(out, sys.stdout, indent=1)
        sys.stdout.write("\n")
        return 0
    print(f"lambda = {format_series(lam, DIGITS)}")
    for i, v in enumerate(vec, 1):
        print(f"v[{i}] = {format_series(v, DIGITS)}")
    for st in tr.steps:
        shifts = ", ".join(f"S_{i}({r})" for i, r in st.transform) or "identity"
        print(f"# {st.process}: {shifts}; depth {st.depth_before} -> {st.depth_after}; "
              f"partition {list(map(list, st.partition_after))}")
    for note in tr.notes:
        print(f"# {note}")
    return 0


def _valuations(doc):
    if doc.kind == "tropical":
        return doc.matrix
    return doc.matrix.valuation_matrix()


def cmd_tropical(args) -> int:
    c = _valuations(_load(args.file))
    lam = trop_eigenvalue(c)
    v = trop_eigenvector(c)
    print(f"Lambda = {lam}")
    print("eigenvector = (" + ", ".join("inf" if is_inf(x) else str(x) for x in v) + ")")
    return 0


def cmd_flatten(args) -> int:
    c = _valuations(_load(args.file))
    g = adjacency_graph(c)
    res = flat_slanted_form(g, eps=args.delta)
    shifts = [res.transform.shift(u) for u in g.nodes]
    print("shifts = (" + ", ".join(str(r) for r in shifts) + ")")
    if res.parameter is not None:
        print(f"eps = {res.parameter}")
    print(res.graph.to_dot())
    return 0


def validate_document(data: dict, tol: float = 1e-9) -> list:
    """Problems found in a stored ``perron --json`` result; empty when valid."""
    problems = []
    y = PuiseuxMatrix([[_series_back(e) for e in row] for row in data["matrix"]])
    lam = PuiseuxSeries(series_from_json(data["lambda"]).terms, trunc=_unpair(data["lambda_trunc"]), tol=0.0)
    vec = tuple(PuiseuxSeries(series_from_json(v).terms, trunc=_unpair(t), tol=0.0)
                for v, t in zip(data["vector"], data["vector_trunc"]))
    depth = _unpair(data["depth"])
    if len(vec) != y.n:
        problems.append("vector length does not match the matrix")
        return problems
    if lam.is_zero or lam.leading_coeff <= 0:
        problems.append("eigenvalue is not positive")
    if any(not v.is_zero and v.leading_coeff < 0 for v in vec) or all(v.is_zero for v in vec):
        problems.append("vector is not nonnegative")
    rv = residual_valuation(y, lam, vec, tol)
    if not rv > y.val + depth:
        problems.append(f"residual valuation {rv} does not exceed {y.val + depth}")
    previous = None
    for k, st in enumerate(data.get("transcript", [])):
        before, after = _unpair(st["depth_before"]), _unpair(st["depth_after"])
        if after < before or (st["process"] in ("B", "C") and not after > before):
            problems.append(f"step {k}: depth does not increase")
        cover = sorted(i for p in st["partition_after"] for i in p)
        if cover != list(range(1, y.n + 1)):
            problems.append(f"step {k}: partition does not cover the indices")
        if previous is not None and sorted(map(tuple, st["partition_before"])) != previous:
            problems.append(f"step {k}: partition does not continue the previous step")
        previous = sorted(map(tuple, st["partition_after"]))
    return problems


def cmd_validate(args) -> int:
    with open(args.file, encoding="utf-8") as fh:
        data = json.load(fh)
    problems = validate_document(data, _tolerance(args))
    for p in problems:
        print(f"FAIL {p}")
    if problems:
        return 1
    print("ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="puiseux-perron", description="Perron roots of Puiseux matrices.")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("perron", help="Perron root and vector to a target depth")
    p.add_argument("file")
    p.add_argument("--depth", type=_fraction, default=None, help="target depth p/q (default 2)")
    p.add_argument("--json", action="store_true")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--delta", type=_fraction, default=None, help="gently-slanting parameter")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--strict", action="store_true", help="no fallback on a singular block group")
    p.set_defaults(func=cmd_perron)
    t = sub.add_parser("tropical", help="tropical eigenvalue and eigenvector of the valuations")
    t.add_argument("file")
    t.set_defaults(func=cmd_tropical)
    f = sub.add_parser("flatten", help="flat-slanted form of the adjacency graph")
    f.add_argument("file")
    f.add_argument("--delta", type=_fraction, default=None)
    f.set_defaults(func=cmd_flatten)
    v = sub.add_parser("validate", help="re-check a stored perron --json result")
    v.add_argument("file")
    v.add_argument("--tol", type=float, default=None)
    v.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GenericnessViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (PerronError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
