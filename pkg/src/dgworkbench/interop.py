"""Export and import of discourse graphs.

Two surfaces: bulk-import CSV pairs for a property graph database, and a
lossless canonical JSON document that round-trips everything except the
block substrate. Both are deterministic byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import zipfile
from dataclasses import dataclass

from .blocks import page_uid
from .discourse import DiscourseGraph, DiscourseNode, assemble_discourse_graph
from .errors import WorkbenchError
from .grammar import (
    Grammar,
    grammar_to_doc,
    load_grammar,
    match_node_title,
    node_type,
    save_grammar,
)
from .patterns import Edge, MatchInstance

NODES_HEADER = ["uid:ID", "title", "nodeType", ":LABEL"]
RELATIONS_HEADER = [":START_ID", ":END_ID", ":TYPE"]


@dataclass(frozen=True)
class ExportBundle:
    nodes_csv: bytes
    relations_csv: bytes


def _csv_bytes(header: list[str], rows: list[list[str]]) -> bytes:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return out.getvalue().encode("utf-8")


def export_neo4j_csv(dg: DiscourseGraph) -> ExportBundle:
    """Node and relation CSVs ready for a bulk graph import.

    Node uids are the stable page ids, node :LABEL is the type's display
    label, relation :TYPE is the forward label upper-cased."""
    node_rows = sorted(
        [page_uid(n.title), n.title, n.type_id, node_type(dg.grammar, n.type_id).label]
        for n in dg.nodes.values()
    )
    rel_rows = sorted(
        [page_uid(e.source), page_uid(e.destination), e.label.upper()] for e in dg.edges
    )
    return ExportBundle(
        nodes_csv=_csv_bytes(NODES_HEADER, node_rows),
        relations_csv=_csv_bytes(RELATIONS_HEADER, rel_rows),
    )


def neo4j_zip(dg: DiscourseGraph, graphname: str) -> bytes:
    """The two CSVs zipped with pinned metadata, so identical graphs give
    identical archives."""
    bundle = export_neo4j_csv(dg)
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_STORED) as zf:
        for name, data in (
            (f"{graphname}_nodes.csv", bundle.nodes_csv),
            (f"{graphname}_relations.csv", bundle.relations_csv),
        ):
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            info.external_attr = 0o644 << 16
            zf.writestr(info, data)
    return buf.getvalue()


def grammar_hash(grammar: Grammar) -> str:
    return hashlib.sha256(save_grammar(grammar)).hexdigest()


def export_json(dg: DiscourseGraph) -> bytes:
    doc = {
        "nodes": [
            {
                "title": n.title,
                "type": n.type_id,
                "content": n.content,
                "citekey": n.citekey,
                "virtual": n.virtual,
            }
            for n in dg.nodes.values()
        ],
        "edges": [
            {
                "source": e.source,
                "label": e.label,
                "destination": e.destination,
                "anchors": [
                    {
                        "relation": a.relation_id,
                        "variant": a.variant_index,
                        "bindings": dict(a.bindings),
                    }
                    for a in e.anchors
                ],
            }
            for e in dg.edges
        ],
        "grammar": {"doc": grammar_to_doc(dg.grammar), "hash": grammar_hash(dg.grammar)},
    }
    return (json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _invalid(path: str, msg: str) -> WorkbenchError:
    return WorkbenchError("E_VALIDATE", f"{path}: {msg}", path=path)


def _fields(obj, allowed: set[str], path: str) -> dict:
    if not isinstance(obj, dict):
        raise _invalid(path, "expected an object")
    for key in obj:
        if key not in allowed:
            raise _invalid(path, f"unknown field {key!r}")
    for key in allowed:
        if key not in obj:
            raise _invalid(path, f"missing field {key!r}")
    return obj


def import_json(data: bytes | str) -> DiscourseGraph:
    """Rebuild a discourse graph from export_json output.

    Everything is revalidated: the grammar hash, node titles against the
    embedded grammar, edge endpoints, and anchor consistency. The result has
    no block substrate, so overlay reference counts are unavailable."""
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise WorkbenchError("E_PARSE", f"not valid JSON: {exc}") from exc
    _fields(doc, {"nodes", "edges", "grammar"}, "$")

    gdoc = _fields(doc["grammar"], {"doc", "hash"}, "grammar")
    grammar = load_grammar(gdoc["doc"])
    if grammar_hash(grammar) != gdoc["hash"]:
        raise _invalid("grammar.hash", "does not match the embedded grammar document")

    if not isinstance(doc["nodes"], list):
        raise _invalid("nodes", "expected a list")
    raw_nodes: dict[str, dict] = {}
    for i, rn in enumerate(doc["nodes"]):
        path = f"nodes[{i}]"
        _fields(rn, {"title", "type", "content", "citekey", "virtual"}, path)
        title = rn["title"]
        if not isinstance(title, str):
            raise _invalid(path, "title must be a string")
        if title in raw_nodes:
            raise _invalid(path, f"duplicate node title {title!r}")
        m = match_node_title(grammar, title)
        if m is None:
            raise _invalid(path, f"title {title!r} matches no node type")
        if (m.type_id, m.content, m.citekey) != (rn["type"], rn["content"], rn["citekey"]):
            raise _invalid(path, "type/content/citekey disagree with the title")
        if not isinstance(rn["virtual"], bool):
            raise _invalid(path, "virtual must be a boolean")
        raw_nodes[title] = rn
    nodes = {
        title: DiscourseNode(
            title=title,
            type_id=raw_nodes[title]["type"],
            content=raw_nodes[title]["content"],
            citekey=raw_nodes[title]["citekey"],
            virtual=raw_nodes[title]["virtual"],
            order=order,
        )
        for order, title in enumerate(sorted(raw_nodes))
    }

    if not isinstance(doc["edges"], list):
        raise _invalid("edges", "expected a list")
    relations_by_label = {r.label: r for r in grammar.relation_types}
    edges: list[Edge] = []
    seen_keys: set[tuple[str, str, str]] = set()
    for i, re_ in enumerate(doc["edges"]):
        path = f"edges[{i}]"
        _fields(re_, {"source", "label", "destination", "anchors"}, path)
        src, label, dst = re_["source"], re_["label"], re_["destination"]
        rel = relations_by_label.get(label)
        if rel is None:
            raise _invalid(path, f"unknown relation label {label!r}")
        for end, want in ((src, rel.source_type), (dst, rel.destination_type)):
            if end not in nodes:
                raise _invalid(path, f"endpoint {end!r} is not an exported node")
            if nodes[end].type_id != want:
                raise _invalid(path, f"endpoint {end!r} is not a {want} node")
        key = (src, label, dst)
        if key in seen_keys:
            raise _invalid(path, "duplicate edge")
        seen_keys.add(key)
        if not isinstance(re_["anchors"], list) or not re_["anchors"]:
            raise _invalid(path, "anchors must be a non-empty list")
        anchors = []
        for j, ra in enumerate(re_["anchors"]):
            apath = f"{path}.anchors[{j}]"
            _fields(ra, {"relation", "variant", "bindings"}, apath)
            if ra["relation"] != rel.id:
                raise _invalid(apath, f"anchor relation {ra['relation']!r} is not {rel.id!r}")
            if not isinstance(ra["variant"], int) or not 0 <= ra["variant"] < len(rel.patterns):
                raise _invalid(apath, "variant index out of range")
            b = ra["bindings"]
            if not isinstance(b, dict) or not all(
                isinstance(k, str) and isinstance(v, str) for k, v in b.items()
            ):
                raise _invalid(apath, "bindings must map variable names to values")
            if b.get("source") != src or b.get("destination") != dst:
                raise _invalid(apath, "bindings disagree with the edge endpoints")
            anchors.append(
                MatchInstance(
                    relation_id=rel.id,
                    variant_index=ra["variant"],
                    bindings=tuple(sorted(b.items())),
                )
            )
        edges.append(
            Edge(
                source=src,
                label=label,
                destination=dst,
                anchors=tuple(sorted(set(anchors), key=lambda a: (a.variant_index, a.bindings))),
            )
        )
    edges.sort(key=lambda e: (e.source, e.label, e.destination))
    return assemble_discourse_graph(grammar, nodes, tuple(edges), source=None)
