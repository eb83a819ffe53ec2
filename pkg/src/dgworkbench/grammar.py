"""The user-extensible discourse grammar.

Node types are recognized from page titles by format strings such as
"EVD - {content} - {citekey}". Relation types carry one or more conjunctive
clause patterns over blocks and pages, with the reserved variables source and
destination naming the endpoints. Attributes are small arithmetic expressions
over per-node relation counts. The whole grammar round-trips through a JSON
document with sorted keys.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from typing import Any, Iterable

from .errors import WorkbenchError

CLAUSE_OPS = ("ref", "child", "desc", "on-page", "is-node", "title")
RESERVED_VARS = ("source", "destination")

_CITEKEY_RE = re.compile(r"[A-Za-z0-9_-]+")
_PLACEHOLDER_RE = re.compile(r"\{([a-z]+)\}")


@dataclass(frozen=True)
class NodeTypeDef:
    id: str
    label: str
    format: str  # contains {content} once, {citekey} at most once
    shortcut: str = ""
    color: str = ""
    template: tuple[str, ...] = ()


@dataclass(frozen=True)
class Clause:
    op: str
    args: tuple[str, str]


@dataclass(frozen=True)
class RelationPattern:
    variables: frozenset[str]
    clauses: tuple[Clause, ...]


@dataclass(frozen=True)
class RelationTypeDef:
    id: str
    label: str
    complement: str
    source_type: str
    destination_type: str
    patterns: tuple[RelationPattern, ...]


@dataclass(frozen=True)
class AttributeDef:
    name: str
    node_type: str
    expr: str


@dataclass(frozen=True)
class Grammar:
    node_types: tuple[NodeTypeDef, ...]
    relation_types: tuple[RelationTypeDef, ...]
    attributes: tuple[AttributeDef, ...]
    markers: tuple[tuple[str, str], ...] = ()  # (relation id, marker page title)


@dataclass(frozen=True)
class NodeMatch:
    type_id: str
    content: str
    citekey: str | None = None


def node_type(grammar: Grammar, type_id: str) -> NodeTypeDef:
    for nt in grammar.node_types:
        if nt.id == type_id:
            return nt
    raise WorkbenchError("E_NO_TYPE", f"no node type {type_id!r}", type=type_id)


def relation(grammar: Grammar, relation_id: str) -> RelationTypeDef:
    for rt in grammar.relation_types:
        if rt.id == relation_id:
            return rt
    raise WorkbenchError("E_NO_RELATION", f"no relation {relation_id!r}", relation=relation_id)


def marker_for(grammar: Grammar, relation_id: str) -> str | None:
    for rid, title in grammar.markers:
        if rid == relation_id:
            return title
    return None


def visible_labels(grammar: Grammar) -> dict[str, tuple[RelationTypeDef, bool]]:
    """Every forward and complement label, mapped to (relation, is_forward)."""
    out: dict[str, tuple[RelationTypeDef, bool]] = {}
    for rt in grammar.relation_types:
        out[rt.label] = (rt, True)
        out[rt.complement] = (rt, False)
    return out


# --- attribute expressions ---------------------------------------------------
#
#   expr   := term (("+" | "-") term)*
#   term   := factor ("*" factor)*
#   factor := NUMBER | "count(" IDENT ")" | "(" expr ")"

_TOKEN_RE = re.compile(r"\s*(\d+\.\d+|\d+|count\(|[()+*-]|[A-Za-z_][A-Za-z0-9_]*)")


def parse_attr_expr(text: str) -> tuple:
    """Parse to a little AST of nested tuples. Raises E_EXPR_PARSE."""
    tokens: list[str] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise WorkbenchError(
                    "E_EXPR_PARSE", f"bad token at offset {pos} in {text!r}", expr=text, at=pos
                )
            break
        tokens.append(m.group(1))
        pos = m.end()
    idx = 0

    def peek() -> str | None:
        return tokens[idx] if idx < len(tokens) else None

    def take(expected: str | None = None) -> str:
        nonlocal idx
        if idx >= len(tokens):
            raise WorkbenchError("E_EXPR_PARSE", f"unexpected end of {text!r}", expr=text)
        tok = tokens[idx]
        if expected is not None and tok != expected:
            raise WorkbenchError(
                "E_EXPR_PARSE", f"expected {expected!r}, got {tok!r} in {text!r}", expr=text
            )
        idx += 1
        return tok

    def factor() -> tuple:
        tok = take()
        if tok == "count(":
            name = take()
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
                raise WorkbenchError(
                    "E_EXPR_PARSE", f"count() needs a relation label, got {name!r}", expr=text
                )
            take(")")
            return ("count", name)
        if tok == "(":
            inner = expr()
            take(")")
            return inner
        if re.fullmatch(r"\d+\.\d+", tok):
            return ("num", float(tok))
        if tok.isdigit():
            return ("num", int(tok))
        raise WorkbenchError("E_EXPR_PARSE", f"unexpected {tok!r} in {text!r}", expr=text)

    def term() -> tuple:
        node = factor()
        while peek() == "*":
            take()
            node = ("*", node, factor())
        return node

    def expr() -> tuple:
        node = term()
        while peek() in ("+", "-"):
            node = (take(), node, term())
        return node

    ast = expr()
    if idx != len(tokens):
        raise WorkbenchError(
            "E_EXPR_PARSE", f"trailing tokens {tokens[idx:]!r} in {text!r}", expr=text
        )
    return ast


def expr_labels(ast: tuple) -> set[str]:
    if ast[0] == "count":
        return {ast[1]}
    if ast[0] == "num":
        return set()
    return expr_labels(ast[1]) | expr_labels(ast[2])


def eval_attr_expr(ast: tuple, counts: dict[str, int]) -> int | float:
    op = ast[0]
    if op == "num":
        return ast[1]
    if op == "count":
        return counts.get(ast[1], 0)
    a = eval_attr_expr(ast[1], counts)
    b = eval_attr_expr(ast[2], counts)
    return a + b if op == "+" else a - b if op == "-" else a * b


# --- title formats -----------------------------------------------------------


def _format_regex(fmt: str) -> re.Pattern[str]:
    out = []
    pos = 0
    for m in _PLACEHOLDER_RE.finditer(fmt):
        out.append(re.escape(fmt[pos : m.start()]))
        out.append("(?P<content>.+)" if m.group(1) == "content" else "@(?P<citekey>[A-Za-z0-9_-]+)")
        pos = m.end()
    out.append(re.escape(fmt[pos:]))
    return re.compile("^" + "".join(out) + "$")


def _literal_prefix(fmt: str) -> str:
    m = _PLACEHOLDER_RE.search(fmt)
    return fmt[: m.start()] if m else fmt


def match_node_title(grammar: Grammar, title: str) -> NodeMatch | None:
    """Recognize a page title as a discourse node, or None.

    E_AMBIGUOUS if more than one type format matches; grammar validation
    normally rules that out up front.
    """
    hits: list[NodeMatch] = []
    for nt in grammar.node_types:
        m = _format_regex(nt.format).match(title)
        if m:
            gd = m.groupdict()
            hits.append(NodeMatch(nt.id, gd["content"], gd.get("citekey")))
    if not hits:
        return None
    if len(hits) > 1:
        raise WorkbenchError(
            "E_AMBIGUOUS",
            f"title {title!r} matches node types {[h.type_id for h in hits]}",
            title=title,
        )
    return hits[0]


def format_node_title(
    grammar: Grammar, type_id: str, content: str, citekey: str | None = None
) -> str:
    """Render a node page title from a type's format string."""
    nt = node_type(grammar, type_id)
    needs_key = "{citekey}" in nt.format
    if needs_key and not citekey:
        raise WorkbenchError(
            "E_CITEKEY_REQUIRED", f"node type {type_id!r} requires a citekey", type=type_id
        )
    if citekey is not None:
        if not needs_key:
            raise WorkbenchError(
                "E_VALIDATE", f"node type {type_id!r} takes no citekey", type=type_id
            )
        if not _CITEKEY_RE.fullmatch(citekey):
            raise WorkbenchError("E_VALIDATE", f"bad citekey {citekey!r}", citekey=citekey)
    if not content:
        raise WorkbenchError("E_VALIDATE", "content must be non-empty", type=type_id)
    title = nt.format.replace("{content}", content)
    if needs_key:
        title = title.replace("{citekey}", "@" + citekey)
    return title


# --- validation --------------------------------------------------------------


def validate_grammar(grammar: Grammar) -> None:
    """Check every structural invariant; raises E_VALIDATE with a path."""

    def bad(path: str, msg: str) -> WorkbenchError:
        return WorkbenchError("E_VALIDATE", msg, path=path)

    type_ids = set()
    prefixes: list[tuple[str, str]] = []
    for i, nt in enumerate(grammar.node_types):
        path = f"nodeTypes[{i}]"
        if not nt.id:
            raise bad(path + ".id", "empty node type id")
        if nt.id in type_ids:
            raise bad(path + ".id", f"duplicate node type id {nt.id!r}")
        type_ids.add(nt.id)
        holes = _PLACEHOLDER_RE.findall(nt.format)
        if holes.count("content") != 1:
            raise bad(path + ".format", "format must contain {content} exactly once")
        if holes.count("citekey") > 1:
            raise bad(path + ".format", "format may contain {citekey} at most once")
        if set(holes) - {"content", "citekey"}:
            raise bad(path + ".format", f"unknown placeholder in {nt.format!r}")
        pfx = _literal_prefix(nt.format)
        for other_id, other_pfx in prefixes:
            if pfx.startswith(other_pfx) or other_pfx.startswith(pfx):
                raise bad(
                    path + ".format",
                    f"format prefix collides with node type {other_id!r}: "
                    f"titles could match both",
                )
        prefixes.append((nt.id, pfx))

    rel_ids: set[str] = set()
    labels: set[str] = set()
    for i, rt in enumerate(grammar.relation_types):
        path = f"relationTypes[{i}]"
        if not rt.id:
            raise bad(path + ".id", "empty relation id")
        if rt.id in rel_ids:
            raise bad(path + ".id", f"duplicate relation id {rt.id!r}")
        rel_ids.add(rt.id)
        if rt.label == rt.complement:
            raise bad(path + ".complement", "label and complement must differ")
        for name, where in ((rt.label, ".label"), (rt.complement, ".complement")):
            if not name:
                raise bad(path + where, "empty label")
            if name in labels:
                raise bad(path + where, f"label {name!r} already used by another relation")
            labels.add(name)
        if rt.source_type not in type_ids:
            raise bad(path + ".sourceType", f"unknown node type {rt.source_type!r}")
        if rt.destination_type not in type_ids:
            raise bad(path + ".destinationType", f"unknown node type {rt.destination_type!r}")
        if not rt.patterns:
            raise bad(path + ".patterns", "relation needs at least one pattern")
        for j, pat in enumerate(rt.patterns):
            _validate_pattern(pat, type_ids, f"{path}.patterns[{j}]")

    attr_keys: set[tuple[str, str]] = set()
    for i, at in enumerate(grammar.attributes):
        path = f"attributes[{i}]"
        if at.node_type not in type_ids:
            raise bad(path + ".nodeType", f"unknown node type {at.node_type!r}")
        if (at.node_type, at.name) in attr_keys:
            raise bad(path + ".name", f"duplicate attribute {at.name!r} for {at.node_type!r}")
        attr_keys.add((at.node_type, at.name))
        ast = parse_attr_expr(at.expr)
        for lbl in sorted(expr_labels(ast)):
            if lbl not in labels:
                raise WorkbenchError(
                    "E_UNKNOWN_RELATION",
                    f"attribute {at.name!r} counts unknown relation label {lbl!r}",
                    path=path + ".expr",
                    label=lbl,
                )

    for i, (rid, title) in enumerate(grammar.markers):
        path = f"markers[{i}]"
        if rid not in rel_ids:
            raise bad(path, f"marker names unknown relation {rid!r}")
        if not title:
            raise bad(path, "empty marker title")


def _validate_pattern(pat: RelationPattern, type_ids: set[str], path: str) -> None:
    def bad(sub: str, msg: str) -> WorkbenchError:
        return WorkbenchError("E_VALIDATE", msg, path=path + sub)

    for v in RESERVED_VARS:
        if v not in pat.variables:
            raise bad(".variables", f"pattern must declare the reserved variable {v!r}")
    if not pat.clauses:
        raise bad(".clauses", "pattern needs at least one clause")
    used: set[str] = set()
    for k, cl in enumerate(pat.clauses):
        if cl.op not in CLAUSE_OPS:
            raise bad(f".clauses[{k}]", f"unknown clause op {cl.op!r}")
        if len(cl.args) != 2 or not all(isinstance(a, str) and a for a in cl.args):
            raise bad(f".clauses[{k}]", "clause takes exactly two non-empty string arguments")
        if cl.op == "is-node" and cl.args[1] not in type_ids:
            raise bad(f".clauses[{k}]", f"is-node names unknown node type {cl.args[1]!r}")
        used.update(a for a in cl.args if a in pat.variables)
    for v in RESERVED_VARS:
        if v not in used:
            raise bad(".clauses", f"reserved variable {v!r} appears in no clause")
    if used != pat.variables:
        unused = sorted(pat.variables - used)
        raise bad(".variables", f"declared but unused variables {unused}")
    # connectivity: variables co-occurring in a clause are joined
    parent = {v: v for v in pat.variables}

    def find(v: str) -> str:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for cl in pat.clauses:
        vs = [a for a in cl.args if a in pat.variables]
        if len(vs) == 2:
            parent[find(vs[0])] = find(vs[1])
    roots = {find(v) for v in pat.variables}
    if len(roots) > 1:
        raise bad(".clauses", "pattern clauses do not connect all variables")


# --- JSON document -----------------------------------------------------------


def _take_fields(obj: dict, allowed: dict[str, Any], path: str) -> dict[str, Any]:
    if not isinstance(obj, dict):
        raise WorkbenchError("E_VALIDATE", f"expected an object at {path}", path=path)
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise WorkbenchError("E_VALIDATE", f"unknown field {unknown[0]!r} at {path}", path=path)
    out = dict(allowed)
    out.update(obj)
    return out


def _require(obj: dict, key: str, path: str) -> Any:
    if key not in obj or obj[key] is None:
        raise WorkbenchError("E_VALIDATE", f"missing field {key!r} at {path}", path=path)
    return obj[key]


def load_grammar(doc: dict | str | bytes) -> Grammar:
    """Build a validated Grammar from its JSON document (or JSON text)."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise WorkbenchError("E_PARSE", f"grammar is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise WorkbenchError("E_PARSE", "grammar document must be a JSON object")
    top = _take_fields(
        doc, {"nodeTypes": [], "relationTypes": [], "attributes": [], "markers": {}}, "$"
    )

    node_types = []
    for i, raw in enumerate(top["nodeTypes"]):
        path = f"nodeTypes[{i}]"
        f = _take_fields(
            raw,
            {"id": None, "label": None, "format": None, "shortcut": "", "color": "", "template": []},
            path,
        )
        node_types.append(
            NodeTypeDef(
                id=_require(f, "id", path),
                label=_require(f, "label", path),
                format=_require(f, "format", path),
                shortcut=f["shortcut"],
                color=f["color"],
                template=tuple(f["template"]),
            )
        )

    relation_types = []
    for i, raw in enumerate(top["relationTypes"]):
        path = f"relationTypes[{i}]"
        f = _take_fields(
            raw,
            {
                "id": None,
                "label": None,
                "complement": None,
                "sourceType": None,
                "destinationType": None,
                "patterns": None,
            },
            path,
        )
        patterns = []
        for j, rawpat in enumerate(_require(f, "patterns", path)):
            ppath = f"{path}.patterns[{j}]"
            pf = _take_fields(rawpat, {"variables": None, "clauses": None}, ppath)
            clauses = []
            for k, rawcl in enumerate(_require(pf, "clauses", ppath)):
                if not isinstance(rawcl, list) or len(rawcl) != 3:
                    raise WorkbenchError(
                        "E_VALIDATE",
                        f"clause must be [op, arg, arg] at {ppath}.clauses[{k}]",
                        path=f"{ppath}.clauses[{k}]",
                    )
                clauses.append(Clause(op=rawcl[0], args=(rawcl[1], rawcl[2])))
            patterns.append(
                RelationPattern(
                    variables=frozenset(_require(pf, "variables", ppath)),
                    clauses=tuple(clauses),
                )
            )
        relation_types.append(
            RelationTypeDef(
                id=_require(f, "id", path),
                label=_require(f, "label", path),
                complement=_require(f, "complement", path),
                source_type=_require(f, "sourceType", path),
                destination_type=_require(f, "destinationType", path),
                patterns=tuple(patterns),
            )
        )

    attributes = []
    for i, raw in enumerate(top["attributes"]):
        path = f"attributes[{i}]"
        f = _take_fields(raw, {"name": None, "nodeType": None, "expr": None}, path)
        attributes.append(
            AttributeDef(
                name=_require(f, "name", path),
                node_type=_require(f, "nodeType", path),
                expr=_require(f, "expr", path),
            )
        )

    markers_raw = top["markers"]
    if not isinstance(markers_raw, dict):
        raise WorkbenchError("E_VALIDATE", "markers must be an object", path="markers")
    markers = tuple(sorted((str(k), str(v)) for k, v in markers_raw.items()))

    g = Grammar(
        node_types=tuple(node_types),
        relation_types=tuple(relation_types),
        attributes=tuple(attributes),
        markers=markers,
    )
    validate_grammar(g)
    return g


def grammar_to_doc(grammar: Grammar) -> dict:
    return {
        "nodeTypes": [
            {
                "id": nt.id,
                "label": nt.label,
                "format": nt.format,
                "shortcut": nt.shortcut,
                "color": nt.color,
                "template": list(nt.template),
            }
            for nt in grammar.node_types
        ],
        "relationTypes": [
            {
                "id": rt.id,
                "label": rt.label,
                "complement": rt.complement,
                "sourceType": rt.source_type,
                "destinationType": rt.destination_type,
                "patterns": [
                    {
                        "variables": sorted(p.variables),
                        "clauses": [[c.op, c.args[0], c.args[1]] for c in p.clauses],
                    }
                    for p in rt.patterns
                ],
            }
            for rt in grammar.relation_types
        ],
        "attributes": [
            {"name": a.name, "nodeType": a.node_type, "expr": a.expr} for a in grammar.attributes
        ],
        "markers": {rid: title for rid, title in grammar.markers},
    }


def save_grammar(grammar: Grammar) -> bytes:
    """Canonical JSON bytes: sorted object keys, arrays in declaration order."""
    doc = grammar_to_doc(grammar)
    return (json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=2) + "\n").encode("utf-8")


# --- defaults ----------------------------------------------------------------


def _pat(variables: Iterable[str], clauses: list[tuple[str, str, str]]) -> RelationPattern:
    return RelationPattern(
        variables=frozenset(variables),
        clauses=tuple(Clause(op, (a, b)) for op, a, b in clauses),
    )


def _marker_patterns(marker: str, dest_type: str, source_type: str) -> tuple[RelationPattern, ...]:
    # V1: marker and source share the block right under the destination link
    # V2: the source link sits one level below the marker block
    # V3: marker and source written directly on the destination node's page
    return (
        _pat(
            ["source", "destination", "b1", "b2", "m"],
            [
                ("is-node", "destination", dest_type),
                ("ref", "b1", "destination"),
                ("child", "b2", "b1"),
                ("ref", "b2", "m"),
                ("title", "m", marker),
                ("ref", "b2", "source"),
                ("is-node", "source", source_type),
            ],
        ),
        _pat(
            ["source", "destination", "b1", "b2", "b3", "m"],
            [
                ("is-node", "destination", dest_type),
                ("ref", "b1", "destination"),
                ("child", "b2", "b1"),
                ("ref", "b2", "m"),
                ("title", "m", marker),
                ("child", "b3", "b2"),
                ("ref", "b3", "source"),
                ("is-node", "source", source_type),
            ],
        ),
        _pat(
            ["source", "destination", "b", "m"],
            [
                ("on-page", "b", "destination"),
                ("ref", "b", "m"),
                ("title", "m", marker),
                ("ref", "b", "source"),
            ],
        ),
    )


def default_grammar() -> Grammar:
    """The stock question/claim/evidence/source grammar."""
    node_types = (
        NodeTypeDef("QUE", "Question", "QUE - {content}", shortcut="Q", color="#d4a72c"),
        NodeTypeDef("CLM", "Claim", "CLM - {content}", shortcut="C", color="#7a1f3d"),
        NodeTypeDef("EVD", "Evidence", "EVD - {content} - {citekey}", shortcut="E", color="#0f7b6c"),
        NodeTypeDef("SRC", "Source", "SRC - {content}", shortcut="S", color="#5b6770"),
    )
    relation_types = (
        RelationTypeDef(
            id="informs",
            label="Informs",
            complement="InformedBy",
            source_type="EVD",
            destination_type="QUE",
            patterns=(
                # V1: any block on the question's page referencing the evidence
                _pat(
                    ["source", "destination", "b"],
                    [("on-page", "b", "destination"), ("ref", "b", "source")],
                ),
                # V2: evidence referenced anywhere under a block that references the question
                _pat(
                    ["source", "destination", "b", "q"],
                    [("ref", "q", "destination"), ("desc", "b", "q"), ("ref", "b", "source")],
                ),
            ),
        ),
        RelationTypeDef(
            id="supports",
            label="Supports",
            complement="SupportedBy",
            source_type="EVD",
            destination_type="CLM",
            patterns=_marker_patterns("SupportedBy", "CLM", "EVD"),
        ),
        RelationTypeDef(
            id="opposes",
            label="Opposes",
            complement="OpposedBy",
            source_type="EVD",
            destination_type="CLM",
            patterns=_marker_patterns("OpposedBy", "CLM", "EVD"),
        ),
    )
    attributes = (
        AttributeDef(
            name="robustness",
            node_type="CLM",
            expr="1*count(SupportedBy) - 1*count(OpposedBy)",
        ),
    )
    markers = (("opposes", "OpposedBy"), ("supports", "SupportedBy"))
    g = Grammar(node_types, relation_types, attributes, markers)
    validate_grammar(g)
    return g


# --- editing operations ------------------------------------------------------


def clone_relation_pattern(
    grammar: Grammar,
    relation_id: str,
    new_label: str,
    new_complement: str,
    new_source_type: str,
    new_destination_type: str,
) -> Grammar:
    """Copy a relation under a new name with retargeted endpoint types.

    is-node clauses on source/destination follow the new types, and title
    clauses naming the old relation's marker follow the new complement, so a
    corpus written with the new prefixes and marker matches the clone exactly
    as the old corpus matched the original.
    """
    rel = relation(grammar, relation_id)
    node_type(grammar, new_source_type)
    node_type(grammar, new_destination_type)
    taken = set(visible_labels(grammar))
    for name in (new_label, new_complement):
        if name in taken:
            raise WorkbenchError("E_DUP_LABEL", f"label {name!r} already in use", label=name)
    if new_label == new_complement:
        raise WorkbenchError("E_DUP_LABEL", "label and complement must differ", label=new_label)
    new_id = new_label.lower()
    if any(rt.id == new_id for rt in grammar.relation_types):
        raise WorkbenchError("E_DUP_LABEL", f"relation id {new_id!r} already in use", label=new_id)

    old_marker = marker_for(grammar, relation_id)

    def map_clause(cl: Clause) -> Clause:
        if cl.op == "is-node" and cl.args[0] == "source":
            return Clause("is-node", ("source", new_source_type))
        if cl.op == "is-node" and cl.args[0] == "destination":
            return Clause("is-node", ("destination", new_destination_type))
        if cl.op == "title" and old_marker is not None and cl.args[1] == old_marker:
            return Clause("title", (cl.args[0], new_complement))
        return cl

    patterns = tuple(
        RelationPattern(p.variables, tuple(map_clause(c) for c in p.clauses))
        for p in rel.patterns
    )
    new_rel = RelationTypeDef(
        id=new_id,
        label=new_label,
        complement=new_complement,
        source_type=new_source_type,
        destination_type=new_destination_type,
        patterns=patterns,
    )
    markers = grammar.markers
    if old_marker is not None:
        markers = tuple(sorted(markers + ((new_id, new_complement),)))
    out = replace(
        grammar, relation_types=grammar.relation_types + (new_rel,), markers=markers
    )
    validate_grammar(out)
    return out


def define_attribute(grammar: Grammar, node_type_id: str, name: str, expr: str) -> Grammar:
    """Add a computed attribute; the expression must parse and every counted
    label must exist in the grammar."""
    node_type(grammar, node_type_id)
    if any(a.name == name and a.node_type == node_type_id for a in grammar.attributes):
        raise WorkbenchError(
            "E_VALIDATE", f"attribute {name!r} already defined for {node_type_id!r}", name=name
        )
    ast = parse_attr_expr(expr)
    labels = set(visible_labels(grammar))
    for lbl in sorted(expr_labels(ast)):
        if lbl not in labels:
            raise WorkbenchError(
                "E_UNKNOWN_RELATION", f"no relation label {lbl!r}", label=lbl
            )
    out = replace(
        grammar, attributes=grammar.attributes + (AttributeDef(name, node_type_id, expr),)
    )
    validate_grammar(out)
    return out
