"""Workbench state: atomic edit application, formalize, grammar swaps,
generation bookkeeping, and the directory watcher."""

from __future__ import annotations

import dataclasses
import json
import time

import pytest

from dgworkbench.blocks import page_uid
from dgworkbench.discourse import overlay_stats
from dgworkbench.errors import WorkbenchError
from dgworkbench.grammar import (
    NodeTypeDef,
    clone_relation_pattern,
    default_grammar,
    grammar_to_doc,
)
from dgworkbench.patterns import BlockEdit
from dgworkbench.workbench import Workbench

from conftest import write_corpus

SUSCEPTIBLE = "children are unlikely to be susceptible"
EVD_TITLE = f"EVD - {SUSCEPTIBLE} - @zhuChildrenAreUnlikely2020"


@pytest.fixture
def wb(base_corpus):
    return Workbench(base_corpus)


def test_initial_snapshot_is_generation_one(wb):
    assert wb.generation == 1
    assert len(wb.snapshot.discourse.nodes) == 6
    assert len(wb.snapshot.discourse.edges) == 6


def test_realize_applies_edits_and_bumps_generation(wb, base_corpus):
    res = wb.realize("EVD - e1 - @s1", "opposes", "CLM - c2", "synthesis outline", generation=1)
    assert res.generation == 2
    assert wb.generation == 2
    keys = {(e.source, e.label, e.destination) for e in wb.snapshot.discourse.edges}
    assert ("EVD - e1 - @s1", "Opposes", "CLM - c2") in keys
    text = (base_corpus / "synthesis outline.md").read_text(encoding="utf-8")
    assert text.endswith("- [[CLM - c2]]\n  - [[OpposedBy]] [[EVD - e1 - @s1]]\n")
    assert not list(base_corpus.glob("*.tmp"))


def test_stale_generation_conflicts_without_touching_files(wb, base_corpus):
    before = {f.name: f.read_bytes() for f in base_corpus.glob("*.md")}
    with pytest.raises(WorkbenchError) as e:
        wb.realize("EVD - e1 - @s1", "opposes", "CLM - c2", "synthesis outline", generation=7)
    assert e.value.code == "E_CONFLICT"
    assert wb.generation == 1
    assert {f.name: f.read_bytes() for f in base_corpus.glob("*.md")} == before


def test_realize_onto_a_virtual_destination_materializes_it(tmp_path):
    corpus = write_corpus(
        tmp_path / "c",
        {"notes": "- about [[QUE - fresh]]\n", "EVD - e - @k": "- finding\n"},
    )
    wb = Workbench(corpus)
    wb.realize("EVD - e - @k", "informs", "QUE - fresh", "notes", generation=1)
    assert (corpus / "QUE - fresh.md").read_text(encoding="utf-8") == "- [[EVD - e - @k]]\n"


def test_formalize_creates_the_page_and_rewrites_the_span(wb, base_corpus):
    block_id = next(
        b.id for b in wb.snapshot.blocks.blocks.values() if b.text == "todo: find contradicting evidence"
    )
    text = "todo: find contradicting evidence"
    start = text.index("find")
    res = wb.formalize_selection(
        block_id,
        (start, start + len("find contradicting evidence")),
        "EVD",
        "lee2021",
        generation=1,
    )
    assert res.title == "EVD - find contradicting evidence - @lee2021"
    assert res.existing is False
    assert res.generation == 2
    assert (base_corpus / f"{res.title}.md").exists()
    block = wb.snapshot.blocks.blocks[block_id]
    assert block.text == f"todo: [[{res.title}]]"
    assert overlay_stats(wb.snapshot.discourse, res.title).reference_count == 1


def test_formalizing_the_same_text_twice_reuses_the_page(tmp_path):
    corpus = write_corpus(
        tmp_path / "c",
        {"notes": "- claim statement holds today\n- again claim statement holds\n"},
    )
    wb = Workbench(corpus)
    graph = wb.snapshot.blocks
    phrase = "claim statement holds"
    first = next(b.id for b in graph.blocks.values() if b.text == "claim statement holds today")
    second = next(b.id for b in graph.blocks.values() if b.text == "again claim statement holds")
    r1 = wb.formalize_selection(first, (0, len(phrase)), "CLM", None, generation=1)
    assert (r1.title, r1.existing) == ("CLM - claim statement holds", False)
    pages_after_first = sorted(f.name for f in corpus.glob("*.md"))
    r2 = wb.formalize_selection(second, (6, 6 + len(phrase)), "CLM", None, generation=2)
    assert (r2.title, r2.existing) == (r1.title, True)
    assert sorted(f.name for f in corpus.glob("*.md")) == pages_after_first
    texts = {b.text for b in wb.snapshot.blocks.blocks.values()}
    assert f"again [[{r1.title}]]" in texts


def test_formalize_spans_are_byte_offsets(tmp_path):
    corpus = write_corpus(tmp_path / "c", {"notes": "- émile notes a result\n"})
    wb = Workbench(corpus)
    block_id = next(iter(wb.snapshot.blocks.blocks))
    text = "émile notes a result"
    raw = text.encode("utf-8")
    start = raw.index(b"notes a result")
    res = wb.formalize_selection(block_id, (start, len(raw)), "CLM", None, generation=1)
    assert res.title == "CLM - notes a result"
    assert wb.snapshot.blocks.blocks[block_id].text == "émile [[CLM - notes a result]]"


def test_formalize_onto_a_virtual_page_is_not_a_collision(tmp_path):
    corpus = write_corpus(tmp_path / "c", {"notes": "- see [[CLM - tidy result]]\n- tidy result\n"})
    wb = Workbench(corpus)
    block_id = next(b.id for b in wb.snapshot.blocks.blocks.values() if b.text == "tidy result")
    res = wb.formalize_selection(block_id, (0, len("tidy result")), "CLM", None, generation=1)
    assert res.title == "CLM - tidy result"
    assert res.existing is False
    assert (corpus / "CLM - tidy result.md").exists()


@pytest.mark.parametrize(
    "span,code",
    [
        ((3, 3), "E_SPAN"),
        ((0, 10_000), "E_SPAN"),
        ((5, 2), "E_SPAN"),
    ],
)
def test_bad_spans_are_rejected(wb, span, code):
    block_id = next(iter(wb.snapshot.blocks.blocks))
    with pytest.raises(WorkbenchError) as e:
        wb.formalize_selection(block_id, span, "CLM", None, generation=1)
    assert e.value.code == code


def test_span_splitting_a_character_is_rejected(tmp_path):
    corpus = write_corpus(tmp_path / "c", {"notes": "- émile\n"})
    wb = Workbench(corpus)
    block_id = next(iter(wb.snapshot.blocks.blocks))
    with pytest.raises(WorkbenchError) as e:
        wb.formalize_selection(block_id, (0, 1), "CLM", None, generation=1)  # é is two bytes
    assert e.value.code == "E_SPAN"


def test_blank_selection_is_rejected(tmp_path):
    corpus = write_corpus(tmp_path / "c", {"notes": "- a   b\n"})
    wb = Workbench(corpus)
    block_id = next(iter(wb.snapshot.blocks.blocks))
    with pytest.raises(WorkbenchError) as e:
        wb.formalize_selection(block_id, (1, 3), "CLM", None, generation=1)
    assert e.value.code == "E_SPAN"


def test_formalize_validation_errors(wb):
    block_id = next(iter(wb.snapshot.blocks.blocks))
    with pytest.raises(WorkbenchError) as e:
        wb.formalize_selection("nope", (0, 2), "CLM", None, generation=1)
    assert e.value.code == "E_NO_BLOCK"
    with pytest.raises(WorkbenchError) as e:
        wb.formalize_selection(block_id, (0, 4), "EVD", None, generation=1)
    assert e.value.code == "E_CITEKEY_REQUIRED"
    assert wb.generation == 1


def test_titles_that_cannot_be_files_are_rejected(tmp_path):
    corpus = write_corpus(tmp_path / "c", {"notes": "- results a/b ratio\n"})
    wb = Workbench(corpus)
    block_id = next(iter(wb.snapshot.blocks.blocks))
    with pytest.raises(WorkbenchError) as e:
        wb.formalize_selection(block_id, (0, len("results a/b")), "CLM", None, generation=1)
    assert e.value.code == "E_TITLE_INVALID"


def test_formalize_populates_the_node_template(tmp_path):
    g = default_grammar()
    claim = next(nt for nt in g.node_types if nt.id == "CLM")
    patched = dataclasses.replace(claim, template=("status:: draft", "evidence below"))
    g = dataclasses.replace(
        g, node_types=tuple(patched if nt.id == "CLM" else nt for nt in g.node_types)
    )
    corpus = write_corpus(tmp_path / "c", {"notes": "- solid finding here\n"})
    (corpus / "grammar.json").write_bytes(
        json.dumps(grammar_to_doc(g), ensure_ascii=False, indent=2, sort_keys=True).encode()
    )
    wb = Workbench(corpus)
    block_id = next(iter(wb.snapshot.blocks.blocks))
    res = wb.formalize_selection(block_id, (0, len("solid finding")), "CLM", None, generation=1)
    created = (corpus / f"{res.title}.md").read_text(encoding="utf-8")
    assert created == "- status:: draft\n- evidence below\n"


def test_apply_edits_validates_targets(wb):
    with pytest.raises(WorkbenchError) as e:
        wb.apply_edits(
            [BlockEdit(kind="insert", page="CLM - c1", parent="ffffffffffff", index=0, text="x")],
            generation=1,
        )
    assert e.value.code == "E_NO_BLOCK"
    with pytest.raises(WorkbenchError) as e:
        wb.apply_edits(
            [BlockEdit(kind="insert", page="CLM - c1", parent=None, index=9, text="x")],
            generation=1,
        )
    assert e.value.code == "E_VALIDATE"
    with pytest.raises(WorkbenchError) as e:
        wb.apply_edits([BlockEdit(kind="set-text", page="CLM - c1", block="ffff", text="x")], generation=1)
    assert e.value.code == "E_NO_BLOCK"
    assert wb.generation == 1


def test_inserting_at_the_head_pins_displaced_block_ids(tmp_path):
    corpus = write_corpus(tmp_path / "c", {"notes": "- original first\n"})
    wb = Workbench(corpus)
    old_id = next(iter(wb.snapshot.blocks.blocks))
    wb.apply_edits(
        [BlockEdit(kind="insert", page="notes", parent=None, index=0, text="now first")],
        generation=1,
    )
    lines = (corpus / "notes.md").read_text(encoding="utf-8").splitlines()
    # The displaced block must keep its id via an explicit pin; the new block
    # lands ahead of it and may carry a pin of its own since the path id for
    # index 0 is still owned by the old block.
    assert lines[0].startswith("- now first")
    assert lines[1] == f"- original first ^{old_id}"
    block = wb.snapshot.blocks.blocks[old_id]
    assert block.text == "original first"
    new_id = next(i for i, b in wb.snapshot.blocks.blocks.items() if b.text == "now first")
    assert new_id != old_id


def test_read_only_files_fail_before_anything_is_written(wb, base_corpus):
    target = base_corpus / "synthesis outline.md"
    target.chmod(0o444)
    try:
        before = {f.name: f.read_bytes() for f in base_corpus.glob("*.md")}
        with pytest.raises(WorkbenchError) as e:
            wb.realize("EVD - e1 - @s1", "opposes", "CLM - c2", "synthesis outline", generation=1)
        assert e.value.code == "E_IO"
        assert {f.name: f.read_bytes() for f in base_corpus.glob("*.md")} == before
        assert not list(base_corpus.glob(".*tmp"))
        assert wb.generation == 1
    finally:
        target.chmod(0o644)


def test_grammar_swap_enables_cloned_relations_end_to_end(tmp_path):
    corpus = write_corpus(
        tmp_path / "c",
        {"CLM - lab result holds": "- basis\n", "CON - field deployment works": "- why\n"},
    )
    wb = Workbench(corpus)
    g = default_grammar()
    g = dataclasses.replace(
        g,
        node_types=g.node_types
        + (NodeTypeDef("CON", "Conclusion", "CON - {content}", shortcut="N", color="#333333"),),
    )
    g = clone_relation_pattern(g, "supports", "Substantiates", "SubstantiatedBy", "CLM", "CON")
    gen = wb.set_grammar(grammar_to_doc(g), generation=1)
    assert gen == 2
    assert (corpus / "grammar.json").exists()
    res = wb.realize(
        "CLM - lab result holds",
        "substantiates",
        "CON - field deployment works",
        "CON - field deployment works",
        generation=2,
    )
    keys = {(e.source, e.label, e.destination) for e in wb.snapshot.discourse.edges}
    assert ("CLM - lab result holds", "Substantiates", "CON - field deployment works") in keys
    assert res.generation == 3


def test_invalid_grammar_document_is_rejected(wb):
    doc = grammar_to_doc(default_grammar())
    doc["nodeTypes"][0]["format"] = "no placeholder here"
    with pytest.raises(WorkbenchError) as e:
        wb.set_grammar(doc, generation=1)
    assert e.value.code == "E_VALIDATE"
    assert wb.generation == 1


def test_watcher_rebuilds_after_external_edits(base_corpus):
    wb = Workbench(base_corpus)
    wb.start_watching(poll=0.02, debounce=0.05)
    try:
        (base_corpus / "CLM - c3.md").write_text("- a third claim\n", encoding="utf-8")
        deadline = time.monotonic() + 5
        while wb.generation == 1 and time.monotonic() < deadline:
            time.sleep(0.02)
        assert wb.generation > 1
        assert "CLM - c3" in wb.snapshot.discourse.nodes
        settled = wb.generation
        time.sleep(0.3)
        assert wb.generation == settled  # quiet directory, no extra rebuilds
    finally:
        wb.stop_watching()


def test_watcher_waits_out_broken_intermediate_states(base_corpus):
    wb = Workbench(base_corpus)
    wb.start_watching(poll=0.02, debounce=0.05)
    try:
        bad = base_corpus / "broken.md"
        bad.write_text("- ok\n   - three spaces break the unit\n", encoding="utf-8")
        time.sleep(0.5)
        assert wb.generation == 1  # failed build leaves the old snapshot
        bad.write_text("- ok\n  - fixed\n", encoding="utf-8")
        deadline = time.monotonic() + 5
        while wb.generation == 1 and time.monotonic() < deadline:
            time.sleep(0.02)
        assert "broken" in wb.snapshot.blocks.pages
    finally:
        wb.stop_watching()


def test_rebuild_is_idempotent_on_an_unchanged_corpus(wb):
    first = wb.snapshot
    gen = wb.rebuild()
    assert gen == 2
    assert wb.snapshot.discourse.nodes == first.discourse.nodes
    assert wb.snapshot.discourse.edges == first.discourse.edges
    assert page_uid("CLM - c1") in {page_uid(t) for t in wb.snapshot.discourse.nodes}
