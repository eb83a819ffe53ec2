"""Conjunctive pattern matching over the block graph, and its inverse.

A relation pattern is a clause list over variables that bind to block ids or
page titles. Compilation orders clauses greedily: fully bound clauses become
checks, title generators go first, then whichever clause can probe the
narrowest index with a bound argument; full index scans are the last resort.
The reserved variables source and destination are additionally constrained to
the relation's declared endpoint node types the moment they bind, whether or
not the pattern spells that out with is-node clauses.

realize_relation runs the first pattern variant backwards: it synthesizes the
minimal block structure that the variant would match, as insert edits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .blocks import BlockGraph, block_uid
from .errors import WorkbenchError
from .grammar import Clause, Grammar, RelationPattern, marker_for, match_node_title, relation

# access kinds a plan step can use
CHECK = "check"
TITLE_GEN = "title"
TITLE_SCAN = "title-scan"
NODE_GEN = "is-node"
REF_BY_TARGET = "ref-by-target"
REF_BY_BLOCK = "ref-by-block"
REF_SCAN = "ref-scan"
CHILD_PARENT = "child-parent"
CHILD_CHILDREN = "child-children"
CHILD_SCAN = "child-scan"
PAGE_OF_BLOCK = "page-of-block"
BLOCKS_OF_PAGE = "blocks-of-page"
ON_PAGE_SCAN = "on-page-scan"
DESC_ANCESTORS = "desc-ancestors"
DESC_DESCENDANTS = "desc-descendants"
DESC_SCAN = "desc-scan"


@dataclass(frozen=True)
class PlanStep:
    clause: Clause
    access: str
    bound_before: frozenset[str]
    bound_after: frozenset[str]


@dataclass(frozen=True)
class CompiledPattern:
    relation_id: str
    variant_index: int
    source_type: str
    destination_type: str
    variables: frozenset[str]
    steps: tuple[PlanStep, ...]


@dataclass(frozen=True)
class MatchInstance:
    relation_id: str
    variant_index: int
    bindings: tuple[tuple[str, str], ...]  # sorted by variable name

    def value(self, var: str) -> str:
        for k, v in self.bindings:
            if k == var:
                return v
        raise KeyError(var)


@dataclass(frozen=True)
class Edge:
    source: str
    label: str
    destination: str
    anchors: tuple[MatchInstance, ...]


@dataclass(frozen=True)
class BlockEdit:
    """One mutation against a page file.

    kind "insert" places new text under parent (or at page root) at index;
    "set-text" replaces the text of an existing block; "create-page" just
    materializes an empty page file.
    """

    kind: str  # insert | set-text | create-page
    page: str
    parent: str | None = None
    index: int = 0
    block: str | None = None
    text: str = ""


def _connected(pattern: RelationPattern) -> bool:
    parent = {v: v for v in pattern.variables}

    def find(v: str) -> str:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for cl in pattern.clauses:
        vs = [a for a in cl.args if a in pattern.variables]
        if len(vs) == 2:
            parent[find(vs[0])] = find(vs[1])
    used = {a for cl in pattern.clauses for a in cl.args if a in pattern.variables}
    if used != pattern.variables:
        return False
    return len({find(v) for v in pattern.variables}) <= 1


def _rank(clause: Clause, bound: set[str], variables: frozenset[str]) -> tuple[int, str] | None:
    """(cost rank, access) for running clause now, or None if impossible yet."""
    a, b = clause.args
    a_free = a in variables and a not in bound
    b_free = b in variables and b not in bound
    if not a_free and not b_free:
        return (0, CHECK)
    if clause.op == "title":
        return (1, TITLE_GEN) if not b_free else (7, TITLE_SCAN)
    if clause.op == "ref":
        if not b_free:
            return (2, REF_BY_TARGET)
        if not a_free:
            return (3, REF_BY_BLOCK)
        return (8, REF_SCAN)
    if clause.op == "child":
        if not a_free:
            return (2, CHILD_PARENT)
        if not b_free:
            return (3, CHILD_CHILDREN)
        return (9, CHILD_SCAN)
    if clause.op == "on-page":
        if not a_free:
            return (2, PAGE_OF_BLOCK)
        if not b_free:
            return (4, BLOCKS_OF_PAGE)
        return (10, ON_PAGE_SCAN)
    if clause.op == "desc":
        if not a_free:
            return (3, DESC_ANCESTORS)
        if not b_free:
            return (5, DESC_DESCENDANTS)
        return (11, DESC_SCAN)
    if clause.op == "is-node":
        return (6, NODE_GEN)
    raise WorkbenchError("E_VALIDATE", f"unknown clause op {clause.op!r}")


def compile_pattern(grammar: Grammar, relation_id: str, variant_index: int) -> CompiledPattern:
    """Build the ordered execution plan for one pattern variant."""
    rel = relation(grammar, relation_id)
    if not 0 <= variant_index < len(rel.patterns):
        raise WorkbenchError(
            "E_NO_RELATION",
            f"relation {relation_id!r} has no variant {variant_index}",
            relation=relation_id,
            variant=variant_index,
        )
    pattern = rel.patterns[variant_index]
    if not _connected(pattern):
        raise WorkbenchError(
            "E_UNPLANNABLE",
            f"pattern variables are not connected ({relation_id} variant {variant_index})",
            relation=relation_id,
            variant=variant_index,
        )
    remaining = list(enumerate(pattern.clauses))
    bound: set[str] = set()
    steps: list[PlanStep] = []
    while remaining:
        ranked = []
        for decl_idx, cl in remaining:
            r = _rank(cl, bound, pattern.variables)
            if r is not None:
                ranked.append((r[0], decl_idx, r[1], cl))
        if not ranked:  # connected patterns always rank something
            raise WorkbenchError("E_UNPLANNABLE", "no clause can run", relation=relation_id)
        ranked.sort(key=lambda t: (t[0], t[1]))
        cost, decl_idx, access, cl = ranked[0]
        before = frozenset(bound)
        bound.update(a for a in cl.args if a in pattern.variables)
        steps.append(PlanStep(cl, access, before, frozenset(bound)))
        remaining = [(i, c) for i, c in remaining if i != decl_idx]
    return CompiledPattern(
        relation_id=relation_id,
        variant_index=variant_index,
        source_type=rel.source_type,
        destination_type=rel.destination_type,
        variables=pattern.variables,
        steps=tuple(steps),
    )


class _MatchContext:
    """Per-graph lookup caches shared across pattern executions."""

    def __init__(self, graph: BlockGraph, grammar: Grammar):
        self.graph = graph
        self.node_types: dict[str, str] = {}
        for title in graph.title_index:
            m = match_node_title(grammar, title)
            if m is not None:
                self.node_types[title] = m.type_id
        self.type_titles: dict[str, list[str]] = {}
        for title, tid in self.node_types.items():
            self.type_titles.setdefault(tid, []).append(title)
        for titles in self.type_titles.values():
            titles.sort()
        self._page_blocks: dict[str, list[str]] = {}

    def page_blocks(self, title: str) -> list[str]:
        got = self._page_blocks.get(title)
        if got is None:
            got = []
            page = self.graph.pages.get(title)
            if page is not None:
                stack = list(reversed(page.blocks))
                while stack:
                    bid = stack.pop()
                    got.append(bid)
                    stack.extend(reversed(self.graph.blocks[bid].children))
            self._page_blocks[title] = got
        return got


def _clause_holds(ctx: _MatchContext, clause: Clause, a: str, b: str) -> bool:
    g = ctx.graph
    op = clause.op
    if op == "ref":
        blk = g.blocks.get(a)
        return blk is not None and any(r.target == b for r in blk.refs)
    if op == "child":
        blk = g.blocks.get(a)
        return blk is not None and blk.parent == b
    if op == "desc":
        blk = g.blocks.get(a)
        while blk is not None and blk.parent is not None:
            if blk.parent == b:
                return True
            blk = g.blocks.get(blk.parent)
        return False
    if op == "on-page":
        blk = g.blocks.get(a)
        return blk is not None and blk.page == b
    if op == "is-node":
        return ctx.node_types.get(a) == b
    if op == "title":
        return a == b and a in g.pages
    raise WorkbenchError("E_VALIDATE", f"unknown clause op {op!r}")


def match_pattern(
    graph: BlockGraph,
    compiled: CompiledPattern,
    grammar: Grammar,
    ctx: _MatchContext | None = None,
) -> list[MatchInstance]:
    """All satisfying assignments, in deterministic binding order.

    Variables may alias the same value; there is no injectivity. Endpoint
    variables are rejected at bind time unless their page titles carry the
    relation's declared node types.
    """
    if ctx is None:
        ctx = _MatchContext(graph, grammar)
    g = graph
    variables = compiled.variables

    def ok_endpoint(var: str, value: str) -> bool:
        if var == "source":
            return ctx.node_types.get(value) == compiled.source_type
        if var == "destination":
            return ctx.node_types.get(value) == compiled.destination_type
        return True

    def bind(env: dict[str, str], var: str, value: str) -> dict[str, str] | None:
        if var in env:
            return env if env[var] == value else None
        if not ok_endpoint(var, value):
            return None
        out = dict(env)
        out[var] = value
        return out

    def resolve(env: dict[str, str], arg: str) -> str:
        return env[arg] if arg in variables else arg

    def run(i: int, env: dict[str, str]) -> Iterator[dict[str, str]]:
        if i == len(compiled.steps):
            yield env
            return
        step = compiled.steps[i]
        a_arg, b_arg = step.clause.args
        access = step.access
        if access == CHECK:
            if _clause_holds(ctx, step.clause, resolve(env, a_arg), resolve(env, b_arg)):
                yield from run(i + 1, env)
            return
        if access == TITLE_GEN:
            lit = resolve(env, b_arg)
            if lit in g.pages:
                nxt = bind(env, a_arg, lit)
                if nxt is not None:
                    yield from run(i + 1, nxt)
            return
        if access == TITLE_SCAN:
            for title in g.title_index:
                nxt = bind(env, a_arg, title)
                if nxt is None:
                    continue
                nxt = bind(nxt, b_arg, title)
                if nxt is not None:
                    yield from run(i + 1, nxt)
            return
        if access == NODE_GEN:
            for title in ctx.type_titles.get(resolve(env, b_arg), ()):
                nxt = bind(env, a_arg, title)
                if nxt is not None:
                    yield from run(i + 1, nxt)
            return
        if access == REF_BY_TARGET:
            target = resolve(env, b_arg)
            for bid in sorted(g.ref_index.get(target, ())):
                nxt = bind(env, a_arg, bid)
                if nxt is not None:
                    yield from run(i + 1, nxt)
            return
        if access == REF_BY_BLOCK:
            blk = g.blocks.get(resolve(env, a_arg))
            if blk is not None:
                for target in sorted({r.target for r in blk.refs}):
                    nxt = bind(env, b_arg, target)
                    if nxt is not None:
                        yield from run(i + 1, nxt)
            return
        if access == CHILD_PARENT:
            blk = g.blocks.get(resolve(env, a_arg))
            if blk is not None and blk.parent is not None:
                nxt = bind(env, b_arg, blk.parent)
                if nxt is not None:
                    yield from run(i + 1, nxt)
            return
        if access == CHILD_CHILDREN:
            blk = g.blocks.get(resolve(env, b_arg))
            if blk is not None:
                for cid in blk.children:
                    nxt = bind(env, a_arg, cid)
                    if nxt is not None:
                        yield from run(i + 1, nxt)
            return
        if access == PAGE_OF_BLOCK:
            blk = g.blocks.get(resolve(env, a_arg))
            if blk is not None:
                nxt = bind(env, b_arg, blk.page)
                if nxt is not None:
                    yield from run(i + 1, nxt)
            return
        if access == BLOCKS_OF_PAGE:
            for bid in ctx.page_blocks(resolve(env, b_arg)):
                nxt = bind(env, a_arg, bid)
                if nxt is not None:
                    yield from run(i + 1, nxt)
            return
        if access == DESC_ANCESTORS:
            blk = g.blocks.get(resolve(env, a_arg))
            while blk is not None and blk.parent is not None:
                nxt = bind(env, b_arg, blk.parent)
                if nxt is not None:
                    yield from run(i + 1, nxt)
                blk = g.blocks.get(blk.parent)
            return
        if access == DESC_DESCENDANTS:
            top = g.blocks.get(resolve(env, b_arg))
            if top is not None:
                stack = list(reversed(top.children))
                while stack:
                    bid = stack.pop()
                    stack.extend(reversed(g.blocks[bid].children))
                    nxt = bind(env, a_arg, bid)
                    if nxt is not None:
                        yield from run(i + 1, nxt)
            return
        if access == REF_SCAN:
            for target in sorted(g.ref_index):
                for bid in sorted(g.ref_index[target]):
                    nxt = bind(env, a_arg, bid)
                    if nxt is None:
                        continue
                    nxt = bind(nxt, b_arg, target)
                    if nxt is not None:
                        yield from run(i + 1, nxt)
            return
        if access == CHILD_SCAN:
            for bid in sorted(g.blocks):
                parent = g.blocks[bid].parent
                if parent is None:
                    continue
                nxt = bind(env, a_arg, bid)
                if nxt is None:
                    continue
                nxt = bind(nxt, b_arg, parent)
                if nxt is not None:
                    yield from run(i + 1, nxt)
            return
        if access == ON_PAGE_SCAN:
            for bid in sorted(g.blocks):
                nxt = bind(env, a_arg, bid)
                if nxt is None:
                    continue
                nxt = bind(nxt, b_arg, g.blocks[bid].page)
                if nxt is not None:
                    yield from run(i + 1, nxt)
            return
        if access == DESC_SCAN:
            for bid in sorted(g.blocks):
                up = g.blocks[bid].parent
                nxt0 = bind(env, a_arg, bid)
                if nxt0 is None:
                    continue
                while up is not None:
                    nxt = bind(nxt0, b_arg, up)
                    if nxt is not None:
                        yield from run(i + 1, nxt)
                    up = g.blocks[up].parent
            return
        raise WorkbenchError("E_UNPLANNABLE", f"unhandled access {access!r}")  # pragma: no cover

    results = {
        MatchInstance(
            relation_id=compiled.relation_id,
            variant_index=compiled.variant_index,
            bindings=tuple(sorted(env.items())),
        )
        for env in run(0, {})
    }
    return sorted(results, key=lambda m: m.bindings)


def match_all_relations(graph: BlockGraph, grammar: Grammar) -> list[Edge]:
    """Every relation edge in the corpus, deduplicated on (source, label,
    destination) with all contributing match instances kept as anchors."""
    ctx = _MatchContext(graph, grammar)
    buckets: dict[tuple[str, str, str], set[MatchInstance]] = {}
    for rel in grammar.relation_types:
        for vi in range(len(rel.patterns)):
            compiled = compile_pattern(grammar, rel.id, vi)
            for inst in match_pattern(graph, compiled, grammar, ctx):
                key = (inst.value("source"), rel.label, inst.value("destination"))
                buckets.setdefault(key, set()).add(inst)
    edges = []
    for (src, label, dst), insts in sorted(buckets.items()):
        anchors = tuple(sorted(insts, key=lambda m: (m.variant_index, m.bindings)))
        edges.append(Edge(source=src, label=label, destination=dst, anchors=anchors))
    return edges


# --- realization -------------------------------------------------------------


def realize_relation(
    graph: BlockGraph,
    grammar: Grammar,
    source: str,
    relation_id: str,
    destination: str,
    target_page: str,
) -> list[BlockEdit]:
    """Emit insert edits that write the relation's first variant as text.

    Marker-style variants become a block referencing the destination with a
    child referencing the marker and the source. Variants anchored on the
    destination page (on-page clauses) are written there, ignoring
    target_page. Re-realizing an existing edge emits edits anyway; matching
    afterwards just merges the new anchor into the same edge.
    """
    rel = relation(grammar, relation_id)
    for title, want, side in (
        (source, rel.source_type, "source"),
        (destination, rel.destination_type, "destination"),
    ):
        m = match_node_title(grammar, title)
        if m is None or m.type_id != want:
            raise WorkbenchError(
                "E_TYPE_MISMATCH",
                f"{side} {title!r} is not a {want} node",
                title=title,
                expected=want,
            )
    pattern = rel.patterns[0]
    variables = pattern.variables

    # resolve page-typed variables: endpoints are given, title literals pin markers
    pages: dict[str, str] = {"source": source, "destination": destination}
    for cl in pattern.clauses:
        if cl.op == "title" and cl.args[0] in variables:
            pages[cl.args[0]] = cl.args[1]

    block_vars: dict[str, dict] = {}

    def block_var(name: str) -> dict:
        if name not in block_vars:
            block_vars[name] = {"refs": [], "parent": None, "page": None}
        return block_vars[name]

    for cl in pattern.clauses:
        a, b = cl.args
        if cl.op == "ref":
            target = pages.get(b, b if b not in variables else None)
            if target is None:
                raise WorkbenchError(
                    "E_UNPLANNABLE",
                    f"cannot realize {relation_id!r}: ref target {b!r} has no page",
                    relation=relation_id,
                )
            block_var(a)["refs"].append(target)
        elif cl.op in ("child", "desc"):
            block_var(a)["parent"] = b
            block_var(b)
        elif cl.op == "on-page":
            page = pages.get(b)
            if page is None:
                raise WorkbenchError(
                    "E_UNPLANNABLE",
                    f"cannot realize {relation_id!r}: on-page target {b!r} unresolved",
                    relation=relation_id,
                )
            block_var(a)["page"] = page
        # is-node and title clauses hold by construction

    # place roots, then children in dependency order
    placed: dict[str, tuple[str, tuple[int, ...]]] = {}  # var -> (page, path)
    edits: list[BlockEdit] = []
    root_counts: dict[str, int] = {}

    def existing_roots(page: str) -> int:
        p = graph.pages.get(page)
        return len(p.blocks) if p is not None else 0

    def place(name: str) -> None:
        if name in placed:
            return
        spec = block_vars[name]
        if spec["parent"] is not None:
            place(spec["parent"])
            parent_page, parent_path = placed[spec["parent"]]
            parent_id = block_uid(parent_page, parent_path)
            # realized parents are fresh blocks, so siblings are batch-local
            index = sum(
                1
                for pg, pth in placed.values()
                if pg == parent_page and pth[:-1] == parent_path
            )
            path = parent_path + (index,)
            placed[name] = (parent_page, path)
            edits.append(
                BlockEdit(
                    kind="insert",
                    page=parent_page,
                    parent=parent_id,
                    index=index,
                    text=_render_refs(spec["refs"]),
                )
            )
        else:
            page = spec["page"] or target_page
            idx = root_counts.get(page, existing_roots(page))
            root_counts[page] = idx + 1
            path = (idx,)
            placed[name] = (page, path)
            edits.append(
                BlockEdit(
                    kind="insert",
                    page=page,
                    parent=None,
                    index=idx,
                    text=_render_refs(spec["refs"]),
                )
            )

    for name in block_vars:
        place(name)
    return edits


def _render_refs(targets: list[str]) -> str:
    seen: list[str] = []
    for t in targets:
        if t not in seen:
            seen.append(t)
    return " ".join(f"[[{t}]]" for t in seen)
