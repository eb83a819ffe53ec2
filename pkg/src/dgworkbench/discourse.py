"""The typed discourse graph built over a block graph snapshot.

Nodes are pages whose titles match a node type format, virtual pages
included. Edges come from the pattern matcher, deduplicated with anchors.
On top of that this module answers the questions the UI asks: what relates
to this node (context), what number does an attribute expression give it,
which nodes satisfy a query, and how heavily is it cited (overlay).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .blocks import BlockGraph, references_to
from .errors import WorkbenchError
from .grammar import (
    Grammar,
    eval_attr_expr,
    match_node_title,
    node_type,
    parse_attr_expr,
    visible_labels,
)
from .patterns import Edge, MatchInstance, match_all_relations


@dataclass(frozen=True)
class DiscourseNode:
    title: str
    type_id: str
    content: str
    citekey: str | None
    virtual: bool
    order: int  # position in sorted-title order; the files carry no timestamps


@dataclass(frozen=True)
class ContextEntry:
    direction: str  # "outgoing" | "incoming"
    label: str  # as seen from the focal node
    other: str
    anchors: tuple[MatchInstance, ...]


@dataclass(frozen=True)
class OverlayStats:
    relation_count: int
    reference_count: int | None  # None when built without a block graph


@dataclass(frozen=True)
class ResultTable:
    columns: tuple[str, ...]
    rows: tuple[tuple[str | int | float, ...], ...]


@dataclass(frozen=True)
class DiscourseGraph:
    grammar: Grammar
    nodes: dict[str, DiscourseNode]
    edges: tuple[Edge, ...]
    adjacency: dict[str, tuple[ContextEntry, ...]] = field(default_factory=dict)
    source: BlockGraph | None = None


def _build_adjacency(
    grammar: Grammar, nodes: dict[str, DiscourseNode], edges: tuple[Edge, ...]
) -> dict[str, tuple[ContextEntry, ...]]:
    complements = {r.label: r.complement for r in grammar.relation_types}
    acc: dict[str, list[ContextEntry]] = {t: [] for t in nodes}
    for e in edges:
        acc[e.source].append(ContextEntry("outgoing", e.label, e.destination, e.anchors))
        acc[e.destination].append(ContextEntry("incoming", complements[e.label], e.source, e.anchors))
    return {t: tuple(sorted(entries, key=lambda c: (c.label, c.other))) for t, entries in acc.items()}


def assemble_discourse_graph(
    grammar: Grammar,
    nodes: dict[str, DiscourseNode],
    edges: tuple[Edge, ...],
    source: BlockGraph | None,
) -> DiscourseGraph:
    return DiscourseGraph(
        grammar=grammar,
        nodes=nodes,
        edges=edges,
        adjacency=_build_adjacency(grammar, nodes, edges),
        source=source,
    )


def build_discourse_graph(graph: BlockGraph, grammar: Grammar) -> DiscourseGraph:
    nodes: dict[str, DiscourseNode] = {}
    for order, title in enumerate(graph.title_index):
        m = match_node_title(grammar, title)
        if m is None:
            continue
        nodes[title] = DiscourseNode(
            title=title,
            type_id=m.type_id,
            content=m.content,
            citekey=m.citekey,
            virtual=graph.pages[title].virtual,
            order=order,
        )
    # reindex orders over just the recognized nodes
    nodes = {
        t: DiscourseNode(n.title, n.type_id, n.content, n.citekey, n.virtual, i)
        for i, (t, n) in enumerate(nodes.items())
    }
    edges = tuple(
        e
        for e in match_all_relations(graph, grammar)
        if e.source in nodes and e.destination in nodes
    )
    return assemble_discourse_graph(grammar, nodes, edges, graph)


def _node(dg: DiscourseGraph, title: str) -> DiscourseNode:
    got = dg.nodes.get(title)
    if got is None:
        raise WorkbenchError("E_NO_NODE", f"no discourse node titled {title!r}", title=title)
    return got


def discourse_context(dg: DiscourseGraph, title: str) -> tuple[ContextEntry, ...]:
    """Every incident edge, outgoing under the forward label and incoming
    under the complement, sorted by (label, other)."""
    _node(dg, title)
    return dg.adjacency.get(title, ())


def evaluate_attribute(dg: DiscourseGraph, title: str, attr_name: str) -> int | float:
    node = _node(dg, title)
    attr = next((a for a in dg.grammar.attributes if a.name == attr_name), None)
    if attr is None or attr.node_type != node.type_id:
        raise WorkbenchError(
            "E_NO_ATTR",
            f"attribute {attr_name!r} is not defined for {node.type_id} nodes",
            attribute=attr_name,
            node_type=node.type_id,
        )
    counts: dict[str, int] = {}
    for entry in dg.adjacency.get(title, ()):
        counts[entry.label] = counts.get(entry.label, 0) + 1
    return eval_attr_expr(parse_attr_expr(attr.expr), counts)


_METADATA_FIELDS = ("title", "content", "citekey", "type")


def _bad_query(msg: str, **detail) -> WorkbenchError:
    return WorkbenchError("E_QUERY_VALIDATE", msg, **detail)


def run_query(dg: DiscourseGraph, q: dict) -> ResultTable:
    """Conjunctive node query.

    Shape: {"find": type id, "conditions": [{"relation": visible label,
    "target": {"node": title} | {"type": type id}}], "select": [field or
    attribute name]}. Conditions default to none, select to ["title"].
    A target title that names no current node simply matches nothing.
    """
    g = dg.grammar
    if not isinstance(q, dict):
        raise _bad_query("query must be an object")
    unknown = set(q) - {"find", "conditions", "select"}
    if unknown:
        raise _bad_query(f"unknown query field {sorted(unknown)[0]!r}")
    if "find" not in q:
        raise _bad_query("query needs a find type")
    find = q["find"]
    if not any(nt.id == find for nt in g.node_types):
        raise _bad_query(f"unknown node type {find!r}", find=find)
    labels = visible_labels(g)

    conditions = q.get("conditions", [])
    if not isinstance(conditions, list):
        raise _bad_query("conditions must be a list")
    checks: list[tuple[str, str, str]] = []  # (label, "node"|"type", value)
    for i, cond in enumerate(conditions):
        where = f"conditions[{i}]"
        if not isinstance(cond, dict) or set(cond) != {"relation", "target"}:
            raise _bad_query(f"{where} needs exactly the fields relation and target")
        label = cond["relation"]
        if label not in labels:
            raise _bad_query(f"{where}: unknown relation label {label!r}", label=label)
        target = cond["target"]
        if not isinstance(target, dict) or len(target) != 1 or next(iter(target)) not in ("node", "type"):
            raise _bad_query(f"{where}.target needs exactly one of node or type")
        kind, value = next(iter(target.items()))
        if not isinstance(value, str):
            raise _bad_query(f"{where}.target value must be a string")
        if kind == "type" and not any(nt.id == value for nt in g.node_types):
            raise _bad_query(f"{where}.target: unknown node type {value!r}", type=value)
        checks.append((label, kind, value))

    select = q.get("select", ["title"])
    if not isinstance(select, list) or not select or not all(isinstance(s, str) for s in select):
        raise _bad_query("select must be a non-empty list of names")
    attr_names = {a.name: a for a in g.attributes}
    for name in select:
        if name in _METADATA_FIELDS:
            continue
        attr = attr_names.get(name)
        if attr is None or attr.node_type != find:
            raise _bad_query(
                f"select field {name!r} is neither metadata nor a {find} attribute", field=name
            )

    def satisfied(title: str) -> bool:
        entries = dg.adjacency.get(title, ())
        for label, kind, value in checks:
            if kind == "node":
                ok = any(c.label == label and c.other == value for c in entries)
            else:
                ok = any(
                    c.label == label and dg.nodes[c.other].type_id == value for c in entries
                )
            if not ok:
                return False
        return True

    rows = []
    for title in sorted(dg.nodes):
        node = dg.nodes[title]
        if node.type_id != find or not satisfied(title):
            continue
        row: list[str | int | float] = []
        for name in select:
            if name == "title":
                row.append(node.title)
            elif name == "content":
                row.append(node.content)
            elif name == "citekey":
                row.append(node.citekey or "")
            elif name == "type":
                row.append(node.type_id)
            else:
                row.append(evaluate_attribute(dg, title, name))
        rows.append(tuple(row))
    return ResultTable(columns=tuple(select), rows=tuple(rows))


def overlay_stats(dg: DiscourseGraph, title: str) -> OverlayStats:
    """Incident relation count next to the inbound reference count.

    References from blocks on the node's own page do not count; a node's own
    template text should not inflate the badge."""
    _node(dg, title)
    relations = sum(1 for e in dg.edges if title in (e.source, e.destination))
    if dg.source is None:
        return OverlayStats(relation_count=relations, reference_count=None)
    refs = sum(
        1 for bid in references_to(dg.source, title) if dg.source.blocks[bid].page != title
    )
    return OverlayStats(relation_count=relations, reference_count=refs)


def node_attributes(dg: DiscourseGraph, title: str) -> dict[str, int | float]:
    """Every attribute defined for the node's type, evaluated."""
    node = _node(dg, title)
    return {
        a.name: evaluate_attribute(dg, title, a.name)
        for a in dg.grammar.attributes
        if a.node_type == node.type_id
    }
