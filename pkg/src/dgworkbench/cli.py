"""Command line entry points.

Every subcommand loads the corpus into a fresh Workbench and works on that
in-process snapshot; `serve` is the only long-running mode. Results go to
stdout as JSON, failures to stderr as the error's JSON form, exit code 1.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
from pathlib import Path

from .discourse import discourse_context, run_query
from .errors import WorkbenchError
from .interop import export_json, export_neo4j_csv
from .workbench import Workbench


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, ensure_ascii=False, indent=2) + "\n")


def _workbench(args: argparse.Namespace) -> Workbench:
    corpus = args.corpus or getattr(args, "dir", None) or "."
    return Workbench(corpus, args.grammar)


def _cmd_build(args: argparse.Namespace) -> int:
    wb = _workbench(args)
    snap = wb.snapshot
    _emit(
        {
            "pages": len(snap.blocks.pages),
            "blocks": len(snap.blocks.blocks),
            "nodes": len(snap.discourse.nodes),
            "edges": len(snap.discourse.edges),
            "generation": snap.generation,
        }
    )
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    wb = _workbench(args)
    _emit({"ok": True, "generation": wb.generation})
    return 0


def _cmd_query(args: argparse.Namespace) -> int:
    raw = sys.stdin.read() if args.query == "-" else args.query
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise WorkbenchError("E_PARSE", f"query is not valid JSON: {exc}") from exc
    wb = _workbench(args)
    table = run_query(wb.snapshot.discourse, doc)
    _emit({"columns": list(table.columns), "rows": [list(r) for r in table.rows]})
    return 0


def _cmd_context(args: argparse.Namespace) -> int:
    wb = _workbench(args)
    entries = discourse_context(wb.snapshot.discourse, args.title)
    _emit(
        {
            "title": args.title,
            "entries": [
                {
                    "direction": e.direction,
                    "label": e.label,
                    "other": e.other,
                    "anchors": [
                        {
                            "relation": a.relation_id,
                            "variant": a.variant_index,
                            "bindings": dict(a.bindings),
                        }
                        for a in e.anchors
                    ],
                }
                for e in entries
            ],
        }
    )
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    wb = _workbench(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    graphname = wb.root.resolve().name
    written: list[str] = []
    try:
        if args.format == "neo4j":
            bundle = export_neo4j_csv(wb.snapshot.discourse)
            for name, payload in (
                (f"{graphname}_nodes.csv", bundle.nodes_csv),
                (f"{graphname}_relations.csv", bundle.relations_csv),
            ):
                (out / name).write_bytes(payload)
                written.append(str(out / name))
        else:
            target = out / f"{graphname}.json"
            target.write_bytes(export_json(wb.snapshot.discourse))
            written.append(str(target))
    except OSError as exc:
        raise WorkbenchError("E_IO", f"cannot write export: {exc}") from exc
    _emit({"written": written})
    return 0


def _cmd_formalize(args: argparse.Namespace) -> int:
    wb = _workbench(args)
    result = wb.formalize_selection(
        args.block, (args.span[0], args.span[1]), args.type, args.citekey, wb.generation
    )
    _emit({"title": result.title, "existing": result.existing, "generation": result.generation})
    return 0


def _cmd_realize(args: argparse.Namespace) -> int:
    wb = _workbench(args)
    result = wb.realize(
        args.source, args.relation, args.destination, args.target_page, wb.generation
    )
    _emit({"generation": result.generation, "edits": len(result.edits)})
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    wb = _workbench(args)
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        probe.bind(("127.0.0.1", args.port))
    except OSError as exc:
        raise WorkbenchError("E_PORT", f"cannot bind 127.0.0.1:{args.port}: {exc}", port=args.port)
    finally:
        probe.close()
    if args.watch:
        wb.start_watching()
    try:
        uvicorn.run(create_app(wb), host="127.0.0.1", port=args.port, log_level="warning")
    finally:
        wb.stop_watching()
    return 0


def _add_corpus_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", default=None, help="corpus directory (default: current directory)")
    p.add_argument("--grammar", default=None, help="grammar file (default: <corpus>/grammar.json)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dgw", description="discourse graph workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="parse the corpus and print graph counts")
    p.add_argument("dir", nargs="?", default=None, help="corpus directory")
    _add_corpus_flags(p)
    p.set_defaults(run=_cmd_build)

    p = sub.add_parser("validate", help="parse the corpus, reporting the first error")
    p.add_argument("dir", nargs="?", default=None, help="corpus directory")
    _add_corpus_flags(p)
    p.set_defaults(run=_cmd_validate)

    p = sub.add_parser("query", help="run a query document against the corpus")
    p.add_argument("query", help="query JSON, or - to read it from stdin")
    _add_corpus_flags(p)
    p.set_defaults(run=_cmd_query)

    p = sub.add_parser("context", help="print the discourse context of a node")
    p.add_argument("title", help="node page title")
    _add_corpus_flags(p)
    p.set_defaults(run=_cmd_context)

    p = sub.add_parser("export", help="write the graph as Neo4j CSVs or a JSON archive")
    p.add_argument("--format", choices=("neo4j", "json"), default="neo4j")
    p.add_argument("-o", "--out", default=".", help="output directory")
    _add_corpus_flags(p)
    p.set_defaults(run=_cmd_export)

    p = sub.add_parser("formalize", help="turn a text span of a block into a discourse node")
    p.add_argument("--block", required=True, help="block id")
    p.add_argument("--span", nargs=2, type=int, required=True, metavar=("START", "END"))
    p.add_argument("--type", required=True, help="node type id")
    p.add_argument("--citekey", default=None)
    _add_corpus_flags(p)
    p.set_defaults(run=_cmd_formalize)

    p = sub.add_parser("realize", help="write a relation's idiom into the notebook")
    p.add_argument("--source", required=True, help="source node title")
    p.add_argument("--relation", required=True, help="relation id")
    p.add_argument("--destination", required=True, help="destination node title")
    p.add_argument("--target-page", required=True, help="page to write the idiom on")
    _add_corpus_flags(p)
    p.set_defaults(run=_cmd_realize)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--port", type=int, default=8088)
    p.add_argument("--watch", action="store_true", help="rebuild when corpus files change")
    _add_corpus_flags(p)
    p.set_defaults(run=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except WorkbenchError as exc:
        sys.stderr.write(json.dumps(exc.to_dict(), ensure_ascii=False) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
