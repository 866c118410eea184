"""Command line: compile, validate, recommend, serve, examples and conformance.

Exit codes: 0 ok, 1 input/output failure, 2 invalid documents or
diagnostics, 3 no candidate survived the recommender.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__, api, docio
from .errors import AnimtxError, RecommendError, ValidationFailed
from .fixtures import ALL_FIXTURES, fixture_text

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_EMPTY = 0, 1, 2, 3
DEFAULT_PORT = 8765


def _read_doc(path: str):
    return docio.loads(docio.read_text(path), path)


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    p = Path(out)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8")


def _print_diags(diags) -> None:
    for d in diags:
        print(f"error: {d}", file=sys.stderr)


def cmd_validate(args) -> int:
    diags = api.validate_docs(_read_doc(args.start), _read_doc(args.end), _read_doc(args.spec),
                              args.total_duration)
    if diags:
        _print_diags(diags)
        return EXIT_INVALID
    print("ok")
    return EXIT_OK


def cmd_compile(args) -> int:
    doc = api.compile_docs(_read_doc(args.start), _read_doc(args.end), _read_doc(args.spec),
                           args.total_duration)
    _write(docio.dumps(doc, pretty=args.pretty), args.out)
    for w in doc["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def _pairs(items, what: str) -> dict:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or not name or not value:
            raise SystemExit(f"error: --{what} expects NAME=VALUE, got {item!r}")
        out[name] = value
    return out


def cmd_recommend(args) -> int:
    options = {}
    dims = _pairs(args.dimension, "dimension")
    if dims:
        options["dimension"] = dims
    keys = _pairs(args.keys, "keys")
    if keys:
        options["keys"] = {k: tuple(v.split(",")) for k, v in keys.items()}
    try:
        rec, doc = api.recommend_docs(_read_doc(args.start), _read_doc(args.end), args.stages,
                                      args.total_duration or api.DEFAULT_TOTAL_MS, args.top,
                                      args.cost_model, options)
    except RecommendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    for w in rec.warnings:
        print(f"warning: {w}", file=sys.stderr)
    for c in rec.counts:
        comps = ", ".join(f"{k} {r}/{p}/{s}" for k, (r, p, s) in c.components.items())
        print(f"N={c.n}: raw {c.raw}, pruned {c.pruned}, surviving {c.surviving}, "
              f"candidates {c.combined}" + (f" [{comps}]" if comps else ""))
    for line in rec.explanation:
        print(f"  {line}")
    for i, c in enumerate(rec.candidates, 1):
        print(f"#{i} N={c.n} score={c.score:.4f} {c.signature}")
    if args.out:
        from .report import write_report
        written = write_report(rec, args.out, args.top)
        print(f"wrote {len(written)} file(s) to {args.out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import serve
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")
    serve(args.host, args.port, args.static)
    return EXIT_OK


def cmd_examples(args) -> int:
    if args.name is None:
        print("\n".join(ALL_FIXTURES))
        return EXIT_OK
    if args.name not in ALL_FIXTURES:
        print(f"error: unknown example {args.name!r}", file=sys.stderr)
        return EXIT_INVALID
    out = Path(args.out or args.name)
    out.mkdir(parents=True, exist_ok=True)
    for part in ("start", "end", "transition"):
        (out / f"{part}.json").write_text(fixture_text(args.name, part), encoding="utf-8")
    print(f"wrote {args.name} to {out}")
    return EXIT_OK


def cmd_conformance(args) -> int:
    from .conformance import write_vectors
    write_vectors(args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _default_port() -> int:
    try:
        return int(os.environ.get("ANIMTX_PORT", DEFAULT_PORT))
    except ValueError:
        return DEFAULT_PORT


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="animtx", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def trio(sp):
        sp.add_argument("start", help="start chart JSON")
        sp.add_argument("end", help="end chart JSON")
        sp.add_argument("spec", help="transition JSON")
        sp.add_argument("--total-duration", type=_positive_int, default=None,
                        help="total duration in ms (resolves ratio timings)")

    sp = sub.add_parser("compile", help="compile a transition into an animation plan")
    trio(sp)
    sp.add_argument("--out", help="plan file (default stdout)")
    sp.add_argument("--pretty", action="store_true", help="indent the JSON output")
    sp.set_defaults(func=cmd_compile)

    sp = sub.add_parser("validate", help="report diagnostics for a transition")
    trio(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("recommend", help="rank candidate transitions for a chart pair")
    sp.add_argument("start", help="start chart JSON")
    sp.add_argument("end", help="end chart JSON")
    sp.add_argument("--stages", default="1,2,3", help="stage counts, e.g. 2 or 1,2,3 or 1-3")
    sp.add_argument("--total-duration", type=_positive_int, default=api.DEFAULT_TOTAL_MS,
                    help="total duration in ms (default %(default)s)")
    sp.add_argument("--top", type=_positive_int, default=5, help="candidates to keep")
    sp.add_argument("--cost-model", default="tuned",
                    help="preset name (initial, tuned) or cost model JSON path")
    sp.add_argument("--out", help="directory for specs, CSVs and the score chart")
    sp.add_argument("--dimension", action="append", metavar="SCALE=same|different",
                    help="override the detected domain dimension of a scale")
    sp.add_argument("--keys", action="append", metavar="MARK=f1,f2", help="join key fields")
    sp.set_defaults(func=cmd_recommend)

    sp = sub.add_parser("serve", help="run the local HTTP service")
    sp.add_argument("--port", type=int, default=_default_port(),
                    help="port (default $ANIMTX_PORT or %d)" % DEFAULT_PORT)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--static", help="directory of static files to serve (a player build)")
    sp.set_defaults(func=cmd_serve)

    sp = sub.add_parser("examples", help="list bundled examples or write one out")
    sp.add_argument("name", nargs="?")
    sp.add_argument("--out", help="target directory (default: the example name)")
    sp.set_defaults(func=cmd_examples)

    sp = sub.add_parser("conformance", help="write reference vectors for plan players")
    sp.add_argument("--out", default="conformance.json")
    sp.set_defaults(func=cmd_conformance)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValidationFailed as exc:
        _print_diags(exc.diagnostics)
        return EXIT_INVALID
    except AnimtxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
