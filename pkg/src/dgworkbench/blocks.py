"""Outline notebooks as a block/page graph.

A corpus is a directory tree of .md files. Each file is one page, its title
the file stem. Lines starting with "- " (after indentation) open blocks;
deeper indentation nests a block under the previous shallower one; any other
non-blank line continues the current block's text. Block text can reference
pages ([[Title]]), tags (#word or #[[Multi Word]]) and blocks ((id)), and the
graph indexes all of it both ways.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import WorkbenchError

REF_PAGE = "page-ref"
REF_TAG = "tag-ref"
REF_BLOCK = "block-ref"

# bullet = optional indent, then "- ", then the rest of the line
_BULLET_RE = re.compile(r"^([ \t]*)- (.*)$")
# explicit id token at the end of a bullet line: " ^id"
_ID_TOKEN_RE = re.compile(r" \^([A-Za-z0-9-]+)$")
# tag word after '#'
_TAG_WORD_RE = re.compile(r"[A-Za-z0-9_-]+")
# ((block-id)), ids share the explicit-id alphabet
_BLOCK_REF_RE = re.compile(r"\(\(([A-Za-z0-9-]+)\)\)")


@dataclass(frozen=True)
class Ref:
    """One reference inside block text. span is [start, end) in UTF-8 bytes."""

    kind: str  # page-ref | tag-ref | block-ref
    target: str  # page title or block id; tag targets unify with page titles
    span: tuple[int, int]


@dataclass
class Block:
    id: str
    page: str
    parent: str | None
    children: list[str]
    text: str
    refs: list[Ref]


@dataclass
class Page:
    title: str
    blocks: list[str]  # root block ids in document order
    virtual: bool = False


@dataclass
class BlockGraph:
    pages: dict[str, Page]
    blocks: dict[str, Block]
    ref_index: dict[str, set[str]]  # target -> ids of blocks referencing it
    title_index: list[str]  # sorted page titles
    page_paths: dict[str, str] = field(default_factory=dict)  # title -> corpus-relative file path


def block_uid(title: str, path: tuple[int, ...]) -> str:
    """Deterministic block id: 12 hex chars of sha256 over page title and sibling-index path."""
    key = title + "\x00" + "/".join(str(i) for i in path)
    return hashlib.sha256(key.encode("utf-8")).hexdigest()[:12]


def page_uid(title: str) -> str:
    """Stable page id, the empty-path case of the block id rule."""
    return block_uid(title, ())


def _find_balanced(text: str, start: int) -> int:
    """Index just past the ']]' closing the '[[' at start, or -1 if unbalanced."""
    depth = 0
    j = start
    n = len(text)
    while j < n:
        if text.startswith("[[", j):
            depth += 1
            j += 2
        elif text.startswith("]]", j):
            depth -= 1
            j += 2
            if depth == 0:
                return j
        else:
            j += 1
    return -1


def extract_refs(text: str) -> list[Ref]:
    """Scan block text for references.

    Spans are non-overlapping and ordered by start. Nested [[..[[..]]..]]
    yields the outermost balanced form; malformed syntax is plain text.
    """
    out: list[Ref] = []
    # char index -> byte offset, built lazily only when a non-ascii char shows up
    if text.isascii():
        boff = None
    else:
        boff = [0]
        for ch in text:
            boff.append(boff[-1] + len(ch.encode("utf-8")))

    def bspan(a: int, b: int) -> tuple[int, int]:
        if boff is None:
            return (a, b)
        return (boff[a], boff[b])

    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "[" and text.startswith("[[", i):
            end = _find_balanced(text, i)
            if end != -1 and text[i + 2 : end - 2]:
                out.append(Ref(REF_PAGE, text[i + 2 : end - 2], bspan(i, end)))
                i = end
            else:
                i += 2
            continue
        if ch == "#":
            if text.startswith("#[[", i):
                end = _find_balanced(text, i + 1)
                if end != -1 and text[i + 3 : end - 2]:
                    out.append(Ref(REF_TAG, text[i + 3 : end - 2], bspan(i, end)))
                    i = end
                    continue
                i += 3
                continue
            m = _TAG_WORD_RE.match(text, i + 1)
            if m:
                out.append(Ref(REF_TAG, m.group(), bspan(i, m.end())))
                i = m.end()
            else:
                i += 1
            continue
        if ch == "(" and text.startswith("((", i):
            m = _BLOCK_REF_RE.match(text, i)
            if m:
                out.append(Ref(REF_BLOCK, m.group(1), bspan(i, m.end())))
                i = m.end()
            else:
                i += 2
            continue
        i += 1
    return out


@dataclass
class _Line:
    level: int
    text: str
    explicit_id: str | None
    lineno: int


def _split_outline(title: str, text: str) -> list[_Line]:
    """Lines to (level, text) records; detects the file's indent unit and
    enforces it. Continuation lines are folded into the previous record."""
    records: list[_Line] = []
    unit: str | None = None
    for lineno, raw in enumerate(text.replace("\r\n", "\n").split("\n"), start=1):
        if not raw.strip():
            continue
        m = _BULLET_RE.match(raw)
        if not m:
            if not records:
                raise WorkbenchError(
                    "E_INDENT", "content before the first bullet", page=title, line=lineno
                )
            records[-1].text += "\n" + raw.lstrip(" \t")
            continue
        indent, rest = m.group(1), m.group(2)
        if indent:
            if unit is None:
                unit = "\t" if indent[0] == "\t" else "  "
            want = "\t" if unit == "\t" else " "
            if any(c != want for c in indent):
                raise WorkbenchError(
                    "E_INDENT", "mixed tab and space indentation", page=title, line=lineno
                )
            if unit == "\t":
                level = len(indent)
            else:
                if len(indent) % 2:
                    raise WorkbenchError(
                        "E_INDENT",
                        "indentation is not a whole number of 2-space units",
                        page=title,
                        line=lineno,
                    )
                level = len(indent) // 2
        else:
            level = 0
        idm = _ID_TOKEN_RE.search(rest)
        if idm:
            records.append(_Line(level, rest[: idm.start()], idm.group(1), lineno))
        else:
            records.append(_Line(level, rest, None, lineno))
    return records


def parse_page(title: str, text: str) -> tuple[Page, list[Block]]:
    """Parse one page's outline text into a Page plus its Blocks.

    Raises E_INDENT (with line numbers) on malformed indentation and
    E_DUP_BLOCK_ID when two explicit ids collide within the page.
    """
    page = Page(title=title, blocks=[], virtual=False)
    blocks: list[Block] = []
    # stack of (block, sibling-index path); child counters live on the blocks
    stack: list[tuple[Block, tuple[int, ...]]] = []
    child_counts: dict[int, int] = {}  # id(block) -> children so far
    root_count = 0
    seen_ids: dict[str, int] = {}

    for rec in _split_outline(title, text):
        if rec.level > len(stack):
            raise WorkbenchError(
                "E_INDENT",
                f"indent jumps from level {len(stack) - 1 if stack else -1} to {rec.level}",
                page=title,
                line=rec.lineno,
            )
        del stack[rec.level :]
        if stack:
            parent_block, parent_path = stack[-1]
            idx = child_counts.get(id(parent_block), 0)
            child_counts[id(parent_block)] = idx + 1
            path = parent_path + (idx,)
            parent_id: str | None = parent_block.id
        else:
            path = (root_count,)
            root_count += 1
            parent_id = None
        bid = rec.explicit_id or block_uid(title, path)
        if bid in seen_ids:
            raise WorkbenchError(
                "E_DUP_BLOCK_ID",
                f"block id {bid!r} appears twice",
                page=title,
                line=rec.lineno,
            )
        seen_ids[bid] = rec.lineno
        block = Block(
            id=bid, page=title, parent=parent_id, children=[], text=rec.text, refs=extract_refs(rec.text)
        )
        if parent_id is None:
            page.blocks.append(bid)
        else:
            stack[-1][0].children.append(bid)
        blocks.append(block)
        stack.append((block, path))
    return page, blocks


def parse_corpus(root_dir: str | Path) -> BlockGraph:
    """Parse every .md file under root_dir into one indexed BlockGraph.

    Deterministic for identical file bytes: files are walked in sorted order
    and generated ids depend only on page title and outline position. Page
    and tag references to missing titles materialize as virtual pages.
    """
    root = Path(root_dir)
    if not root.is_dir():
        raise WorkbenchError("E_IO", f"corpus root is not a directory: {root}", path=str(root))
    try:
        files = sorted(
            (p for p in root.rglob("*.md") if p.is_file()),
            key=lambda p: p.relative_to(root).as_posix(),
        )
    except OSError as exc:
        raise WorkbenchError("E_IO", f"cannot walk corpus: {exc}", path=str(root)) from exc

    pages: dict[str, Page] = {}
    blocks: dict[str, Block] = {}
    page_paths: dict[str, str] = {}
    for f in files:
        rel = f.relative_to(root).as_posix()
        try:
            data = f.read_bytes()
        except OSError as exc:
            raise WorkbenchError("E_IO", f"cannot read {rel}: {exc}", file=rel) from exc
        try:
            text = data.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise WorkbenchError("E_ENCODING", f"{rel} is not valid UTF-8", file=rel) from exc
        title = f.stem.strip()
        if title in pages:
            raise WorkbenchError(
                "E_DUP_TITLE",
                f"two files share the page title {title!r}",
                file=rel,
                other=page_paths[title],
            )
        try:
            page, page_blocks = parse_page(title, text)
        except WorkbenchError as exc:
            exc.detail.setdefault("file", rel)
            raise
        pages[title] = page
        page_paths[title] = rel
        for b in page_blocks:
            if b.id in blocks:
                raise WorkbenchError(
                    "E_DUP_BLOCK_ID",
                    f"block id {b.id!r} appears in {blocks[b.id].page!r} and {title!r}",
                    file=rel,
                )
            blocks[b.id] = b

    ref_index: dict[str, set[str]] = {}
    for b in blocks.values():
        for r in b.refs:
            ref_index.setdefault(r.target, set()).add(b.id)
            if r.kind in (REF_PAGE, REF_TAG) and r.target not in pages:
                pages[r.target] = Page(title=r.target, blocks=[], virtual=True)

    return BlockGraph(
        pages=pages,
        blocks=blocks,
        ref_index=ref_index,
        title_index=sorted(pages),
        page_paths=page_paths,
    )


def references_to(graph: BlockGraph, target: str) -> list[str]:
    """Ids of blocks referencing target (a title or block id), sorted by
    (page title, block id). Unknown targets yield []."""
    ids = graph.ref_index.get(target, set())
    return sorted(ids, key=lambda b: (graph.blocks[b].page, b))


def descendants(graph: BlockGraph, block_id: str) -> list[str]:
    """Transitive children of a block in preorder, excluding the block itself."""
    if block_id not in graph.blocks:
        raise WorkbenchError("E_NO_BLOCK", f"no block {block_id!r}", block=block_id)
    out: list[str] = []
    stack = list(reversed(graph.blocks[block_id].children))
    while stack:
        bid = stack.pop()
        out.append(bid)
        stack.extend(reversed(graph.blocks[bid].children))
    return out


def serialize_page(graph: BlockGraph, title: str) -> str:
    """Canonical outline text for a page: 2-space indent, explicit ^id tokens
    only where reparsing would otherwise produce a different id."""
    page = graph.pages.get(title)
    if page is None:
        raise WorkbenchError("E_NO_PAGE", f"no page {title!r}", page=title)
    lines: list[str] = []

    def emit(bid: str, level: int, path: tuple[int, ...]) -> None:
        b = graph.blocks[bid]
        first, *rest = b.text.split("\n")
        pin = b.id != block_uid(title, path)
        # reparsing strips a trailing " ^token"; pin the real id so text survives
        if not pin and _ID_TOKEN_RE.search(first):
            pin = True
        indent = "  " * level
        lines.append(indent + "- " + first + (f" ^{b.id}" if pin else ""))
        for cont in rest:
            lines.append(indent + "  " + cont)
        for i, child in enumerate(b.children):
            emit(child, level + 1, path + (i,))

    for i, bid in enumerate(page.blocks):
        emit(bid, 0, (i,))
    return "\n".join(lines) + ("\n" if lines else "")
