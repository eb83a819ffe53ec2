"""Stateful shell over a notebook directory.

Holds the current block and discourse snapshots behind a generation counter,
applies edit batches to the page files atomically (write temp, rename, all
or nothing per batch), formalizes text selections into node pages, and can
watch the directory for outside edits. Reads always see a complete snapshot;
mutations serialize through one lock and bump the generation exactly once.
"""

from __future__ import annotations

import os
import stat
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from .blocks import Block, BlockGraph, Page, block_uid, parse_corpus, serialize_page
from .discourse import DiscourseGraph, build_discourse_graph
from .errors import WorkbenchError
from .grammar import (
    Grammar,
    default_grammar,
    format_node_title,
    grammar_to_doc,
    load_grammar,
    save_grammar,
)
from .patterns import BlockEdit, realize_relation

# characters a page title cannot carry: the title must survive both a file
# stem and a [[...]] embedding
_TITLE_FORBIDDEN = ("/", "\\", "\n", "\x00", "[[", "]]")


@dataclass(frozen=True)
class Snapshot:
    generation: int
    blocks: BlockGraph
    discourse: DiscourseGraph


@dataclass(frozen=True)
class FormalizeResult:
    title: str
    existing: bool
    edits: tuple[BlockEdit, ...]
    generation: int


@dataclass(frozen=True)
class RealizeResult:
    edits: tuple[BlockEdit, ...]
    generation: int


class Workbench:
    def __init__(self, corpus_dir: str | Path, grammar_path: str | Path | None = None):
        self.root = Path(corpus_dir)
        if grammar_path is not None:
            self.grammar_path: Path | None = Path(grammar_path)
        else:
            candidate = self.root / "grammar.json"
            self.grammar_path = candidate if candidate.exists() else None
        self.grammar = self._load_grammar()
        self._write_lock = threading.Lock()
        self._watcher: _Watcher | None = None
        self._snapshot = self._build(generation=1)
        self._fs_state = self._scan_fs()

    # --- snapshots ---------------------------------------------------------

    @property
    def snapshot(self) -> Snapshot:
        return self._snapshot

    @property
    def generation(self) -> int:
        return self._snapshot.generation

    def _load_grammar(self) -> Grammar:
        if self.grammar_path is None:
            return default_grammar()
        try:
            raw = self.grammar_path.read_bytes()
        except OSError as exc:
            raise WorkbenchError(
                "E_IO", f"cannot read grammar {self.grammar_path}: {exc}", file=str(self.grammar_path)
            ) from exc
        return load_grammar(raw)

    def _build(self, generation: int) -> Snapshot:
        graph = parse_corpus(self.root)
        return Snapshot(
            generation=generation,
            blocks=graph,
            discourse=build_discourse_graph(graph, self.grammar),
        )

    def rebuild(self) -> int:
        """Re-read grammar and corpus from disk and swap in a new snapshot."""
        with self._write_lock:
            return self._rebuild_locked()

    def _rebuild_locked(self) -> int:
        self.grammar = self._load_grammar()
        self._snapshot = self._build(self._snapshot.generation + 1)
        self._fs_state = self._scan_fs()
        return self._snapshot.generation

    def _check_generation(self, expected: int) -> None:
        if expected != self._snapshot.generation:
            raise WorkbenchError(
                "E_CONFLICT",
                f"generation {expected} is stale (current {self._snapshot.generation})",
                expected=expected,
                current=self._snapshot.generation,
            )

    # --- edit application ----------------------------------------------------

    def apply_edits(self, edits: list[BlockEdit] | tuple[BlockEdit, ...], generation: int) -> int:
        """Apply one batch to the files, all or nothing, and rebuild."""
        with self._write_lock:
            self._check_generation(generation)
            self._apply_locked(list(edits))
            return self._rebuild_locked()

    def _apply_locked(self, edits: list[BlockEdit]) -> None:
        graph = self._snapshot.blocks
        shadows: dict[str, tuple[Page, dict[str, Block]]] = {}
        assigned: set[str] = set()

        def shadow(title: str) -> tuple[Page, dict[str, Block]]:
            # unknown and virtual pages materialize on first touch
            got = shadows.get(title)
            if got is None:
                page = graph.pages.get(title)
                if page is None or page.virtual:
                    for bad in _TITLE_FORBIDDEN:
                        if bad in title:
                            raise WorkbenchError(
                                "E_TITLE_INVALID", f"title cannot contain {bad!r}", title=title
                            )
                    got = (Page(title=title, blocks=[], virtual=False), {})
                else:
                    blocks: dict[str, Block] = {}
                    stack = list(page.blocks)
                    while stack:
                        bid = stack.pop()
                        src = graph.blocks[bid]
                        blocks[bid] = Block(
                            id=src.id,
                            page=src.page,
                            parent=src.parent,
                            children=list(src.children),
                            text=src.text,
                            refs=[],
                        )
                        stack.extend(src.children)
                    got = (Page(title=title, blocks=list(page.blocks), virtual=False), blocks)
                shadows[title] = got
            return got

        def fresh_id(title: str, path: tuple[int, ...]) -> str:
            bid = block_uid(title, path)
            salt = 0
            while bid in graph.blocks or bid in assigned:
                salt += 1
                bid = block_uid(title, path + (salt,))  # collision shove; serializer pins it
            assigned.add(bid)
            return bid

        def path_of(page: Page, blocks: dict[str, Block], bid: str) -> tuple[int, ...]:
            rev: list[int] = []
            cur = bid
            while True:
                parent = blocks[cur].parent
                siblings = page.blocks if parent is None else blocks[parent].children
                rev.append(siblings.index(cur))
                if parent is None:
                    return tuple(reversed(rev))
                cur = parent

        for n, e in enumerate(edits):
            where = f"edits[{n}]"
            if e.kind == "create-page":
                existing = graph.pages.get(e.page)
                if existing is not None and not existing.virtual:
                    raise WorkbenchError(
                        "E_VALIDATE", f"{where}: page {e.page!r} already exists", title=e.page
                    )
                shadow(e.page)
            elif e.kind == "insert":
                page, blocks = shadow(e.page)
                if e.parent is None:
                    siblings = page.blocks
                    parent_path: tuple[int, ...] = ()
                else:
                    if e.parent not in blocks:
                        raise WorkbenchError(
                            "E_NO_BLOCK", f"{where}: no parent block {e.parent!r}", block=e.parent
                        )
                    siblings = blocks[e.parent].children
                    parent_path = path_of(page, blocks, e.parent)
                if not 0 <= e.index <= len(siblings):
                    raise WorkbenchError(
                        "E_VALIDATE",
                        f"{where}: insert index {e.index} out of range 0..{len(siblings)}",
                    )
                bid = fresh_id(e.page, parent_path + (e.index,))
                blocks[bid] = Block(
                    id=bid, page=e.page, parent=e.parent, children=[], text=e.text, refs=[]
                )
                siblings.insert(e.index, bid)
            elif e.kind == "set-text":
                src = graph.blocks.get(e.block or "")
                if src is None:
                    raise WorkbenchError(
                        "E_NO_BLOCK", f"{where}: no block {e.block!r}", block=e.block
                    )
                _, blocks = shadow(src.page)
                blocks[e.block].text = e.text
            else:
                raise WorkbenchError("E_VALIDATE", f"{where}: unknown edit kind {e.kind!r}")

        # serialize every touched page through the canonical writer
        mini = BlockGraph(
            pages={t: p for t, (p, _) in shadows.items()},
            blocks={bid: b for _, (_, bs) in shadows.items() for bid, b in bs.items()},
            ref_index={},
            title_index=sorted(shadows),
        )
        outputs: dict[Path, bytes] = {}
        for title in shadows:
            rel = graph.page_paths.get(title, f"{title}.md")
            outputs[self.root / rel] = serialize_page(mini, title).encode("utf-8")

        self._write_files(outputs)

    def _write_files(self, outputs: dict[Path, bytes]) -> None:
        for target in outputs:
            if target.exists():
                mode = target.stat().st_mode
                if not mode & stat.S_IWUSR:
                    raise WorkbenchError(
                        "E_IO", f"{target} is not writable", file=str(target)
                    )
            elif not target.parent.stat().st_mode & stat.S_IWUSR:
                raise WorkbenchError(
                    "E_IO", f"{target.parent} is not writable", file=str(target.parent)
                )
        temps: list[tuple[Path, Path]] = []
        try:
            for target, data in outputs.items():
                tmp = target.parent / f".{target.name}.{os.getpid()}.tmp"
                tmp.write_bytes(data)
                temps.append((tmp, target))
        except OSError as exc:
            for tmp, _ in temps:
                tmp.unlink(missing_ok=True)
            raise WorkbenchError("E_IO", f"write failed: {exc}") from exc
        for tmp, target in temps:
            os.replace(tmp, target)

    # --- formalize -----------------------------------------------------------

    def formalize_selection(
        self,
        block_id: str,
        span: tuple[int, int],
        node_type_id: str,
        citekey: str | None,
        generation: int,
    ) -> FormalizeResult:
        """Turn a byte span of a block into a node reference.

        Creates the node page (populated from the type's template) unless a
        real page with that title already exists, which is reported with the
        existing flag instead. The span is replaced by [[title]] either way.
        """
        with self._write_lock:
            self._check_generation(generation)
            graph = self._snapshot.blocks
            block = graph.blocks.get(block_id)
            if block is None:
                raise WorkbenchError("E_NO_BLOCK", f"no block {block_id!r}", block=block_id)
            raw = block.text.encode("utf-8")
            start, end = span
            if not (0 <= start < end <= len(raw)):
                raise WorkbenchError(
                    "E_SPAN",
                    f"span [{start},{end}) outside text of {len(raw)} bytes",
                    start=start,
                    end=end,
                )
            try:
                selection = raw[start:end].decode("utf-8").strip()
            except UnicodeDecodeError as exc:
                raise WorkbenchError(
                    "E_SPAN", f"span [{start},{end}) splits a character", start=start, end=end
                ) from exc
            if not selection:
                raise WorkbenchError("E_SPAN", "selection is blank", start=start, end=end)
            title = format_node_title(self.grammar, node_type_id, selection, citekey)
            for bad in _TITLE_FORBIDDEN:
                if bad in title:
                    raise WorkbenchError(
                        "E_TITLE_INVALID", f"title cannot contain {bad!r}", title=title
                    )
            page = graph.pages.get(title)
            existing = page is not None and not page.virtual
            edits: list[BlockEdit] = []
            if not existing:
                edits.append(BlockEdit(kind="create-page", page=title))
                template = next(
                    nt.template for nt in self.grammar.node_types if nt.id == node_type_id
                )
                for i, text in enumerate(template):
                    edits.append(BlockEdit(kind="insert", page=title, parent=None, index=i, text=text))
            new_text = (raw[:start] + f"[[{title}]]".encode("utf-8") + raw[end:]).decode("utf-8")
            edits.append(BlockEdit(kind="set-text", page=block.page, block=block_id, text=new_text))
            self._apply_locked(edits)
            new_gen = self._rebuild_locked()
            return FormalizeResult(
                title=title, existing=existing, edits=tuple(edits), generation=new_gen
            )

    # --- realize -------------------------------------------------------------

    def realize(
        self, source: str, relation_id: str, destination: str, target_page: str, generation: int
    ) -> RealizeResult:
        with self._write_lock:
            self._check_generation(generation)
            edits = realize_relation(
                self._snapshot.blocks, self.grammar, source, relation_id, destination, target_page
            )
            self._apply_locked(edits)
            new_gen = self._rebuild_locked()
            return RealizeResult(edits=tuple(edits), generation=new_gen)

    # --- grammar -------------------------------------------------------------

    def grammar_doc(self) -> dict:
        return grammar_to_doc(self.grammar)

    def set_grammar(self, doc: dict, generation: int) -> int:
        with self._write_lock:
            self._check_generation(generation)
            grammar = load_grammar(doc)
            path = self.grammar_path or (self.root / "grammar.json")
            self._write_files({path: save_grammar(grammar)})
            self.grammar_path = path
            return self._rebuild_locked()

    # --- watching --------------------------------------------------------------

    def _scan_fs(self) -> dict[str, tuple[int, int]]:
        state: dict[str, tuple[int, int]] = {}
        for f in self.root.rglob("*.md"):
            try:
                st = f.stat()
            except OSError:
                continue
            state[str(f)] = (st.st_mtime_ns, st.st_size)
        if self.grammar_path is not None and self.grammar_path.exists():
            st = self.grammar_path.stat()
            state[str(self.grammar_path)] = (st.st_mtime_ns, st.st_size)
        return state

    def start_watching(self, poll: float = 0.1, debounce: float = 0.25) -> None:
        if self._watcher is None:
            self._watcher = _Watcher(self, poll, debounce)
            self._watcher.start()

    def stop_watching(self) -> None:
        if self._watcher is not None:
            self._watcher.stop()
            self._watcher = None


class _Watcher(threading.Thread):
    """Polls file stats; one rebuild per quiet period after changes."""

    def __init__(self, wb: Workbench, poll: float, debounce: float):
        super().__init__(daemon=True, name="corpus-watch")
        self.wb = wb
        self.poll = poll
        self.debounce = debounce
        self._halt = threading.Event()

    def stop(self) -> None:
        self._halt.set()
        self.join(timeout=5)

    def run(self) -> None:
        last_seen: dict | None = None
        changed_at: float | None = None
        failed_on: dict | None = None
        while not self._halt.wait(self.poll):
            current = self.wb._scan_fs()
            if current == self.wb._fs_state or current == failed_on:
                last_seen = None
                changed_at = None
                continue
            if current != last_seen:  # still being written; restart the quiet timer
                last_seen = current
                changed_at = time.monotonic()
                continue
            if changed_at is not None and time.monotonic() - changed_at >= self.debounce:
                try:
                    self.wb.rebuild()
                    failed_on = None
                except WorkbenchError:
                    failed_on = current  # broken corpus; wait for the next change
                last_seen = None
                changed_at = None
