"""Outline parsing, reference extraction, and the indexed block graph."""

from __future__ import annotations

import hashlib
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dgworkbench.blocks import (
    Ref,
    block_uid,
    descendants,
    extract_refs,
    page_uid,
    parse_corpus,
    parse_page,
    references_to,
    serialize_page,
)
from dgworkbench.errors import WorkbenchError


# A deliberately naive second opinion on ref extraction: one regex per kind,
# scanned in a single alternation pass, no nesting support. Agrees with the
# real scanner on every text without nested or malformed brackets.
_ORACLE_RE = re.compile(
    r"#\[\[([^\[\]]+)\]\]|\[\[([^\[\]]+)\]\]|#([A-Za-z0-9_-]+)|\(\(([A-Za-z0-9-]+)\)\)"
)


def oracle_refs(text: str) -> list[Ref]:
    out = []
    for m in _ORACLE_RE.finditer(text):
        span = (len(text[: m.start()].encode()), len(text[: m.end()].encode()))
        if m.group(1) is not None:
            out.append(Ref("tag-ref", m.group(1), span))
        elif m.group(2) is not None:
            out.append(Ref("page-ref", m.group(2), span))
        elif m.group(3) is not None:
            out.append(Ref("tag-ref", m.group(3), span))
        else:
            out.append(Ref("block-ref", m.group(4), span))
    return out


def test_extract_refs_kinds_and_spans():
    text = "see ((abc123)) and #method"
    expected = [
        Ref("block-ref", "abc123", (4, 14)),
        Ref("tag-ref", "method", (19, 26)),
    ]
    assert extract_refs(text) == expected
    assert oracle_refs(text) == expected


def test_extract_refs_page_and_multiword_tag():
    text = "per [[CLM - c1]] see #[[Supported By]] ok"
    got = extract_refs(text)
    assert got == oracle_refs(text)
    assert [(r.kind, r.target) for r in got] == [
        ("page-ref", "CLM - c1"),
        ("tag-ref", "Supported By"),
    ]
    for r in got:
        s, e = r.span
        assert text.encode()[s:e].decode().endswith("]]") or text[s:e].startswith("#")


def test_extract_refs_nested_brackets_resolve_outermost():
    got = extract_refs("x [[a [[b]] c]] y")
    assert got == [Ref("page-ref", "a [[b]] c", (2, 15))]


def test_extract_refs_malformed_is_plain_text():
    assert extract_refs("[[unclosed and (( and # alone") == []
    # the inner balanced link still counts when the outer one never closes
    assert extract_refs("[[a [[b]]") == [Ref("page-ref", "b", (4, 9))]


def test_extract_refs_spans_are_byte_offsets():
    text = "émile [[p]]"
    (ref,) = extract_refs(text)
    raw = text.encode()
    s, e = ref.span
    assert raw[s:e] == b"[[p]]"


_FRAG = st.one_of(
    st.just("plain "),
    st.just("[[Page One]] "),
    st.just("#tag "),
    st.just("#[[Multi Word]] "),
    st.just("((deadbeef)) "),
    st.just("x#y "),
)


@settings(max_examples=120)
@given(st.lists(_FRAG, max_size=8))
def test_extract_refs_agrees_with_naive_oracle(frags):
    text = "".join(frags)
    assert extract_refs(text) == oracle_refs(text)


def test_parse_page_structure_and_generated_ids():
    text = "- alpha\n  - beta\n- gamma\n"
    page, blocks = parse_page("P", text)
    assert [b.text for b in blocks] == ["alpha", "beta", "gamma"]
    by_id = {b.id: b for b in blocks}
    roots = page.blocks
    assert len(roots) == 2
    assert by_id[roots[0]].children == [blocks[1].id]
    assert by_id[roots[1]].children == []
    # recompute the id rule from scratch: sha256 over "title \x00 path"
    def uid(path):
        return hashlib.sha256(("P\x00" + "/".join(map(str, path))).encode()).hexdigest()[:12]

    assert roots[0] == uid((0,))
    assert by_id[roots[0]].children[0] == uid((0, 0))
    assert roots[1] == uid((1,))
    assert block_uid("P", (0, 0)) == uid((0, 0))
    assert page_uid("P") == uid(())


def test_parse_page_explicit_id_wins():
    page, blocks = parse_page("P", "- alpha ^a1\n")
    assert blocks[0].id == "a1"
    assert blocks[0].text == "alpha"


def test_parse_page_duplicate_explicit_ids_rejected():
    with pytest.raises(WorkbenchError) as e:
        parse_page("P", "- a ^x1\n- b ^x1\n")
    assert e.value.code == "E_DUP_BLOCK_ID"


def test_parse_page_continuation_lines_join_with_newline():
    page, blocks = parse_page("P", "- first line\n  second line\n- next\n")
    assert blocks[0].text == "first line\nsecond line"
    assert blocks[1].text == "next"


def test_parse_page_tab_unit_detected():
    page, blocks = parse_page("P", "- a\n\t- b\n\t\t- c\n")
    assert blocks[0].children == [blocks[1].id]
    assert blocks[1].children == [blocks[2].id]


def test_parse_page_mixed_indent_rejected():
    with pytest.raises(WorkbenchError) as e:
        parse_page("P", "- a\n  - b\n\t- c\n")
    assert e.value.code == "E_INDENT"
    assert e.value.detail["line"] == 3


def test_parse_page_odd_spaces_rejected():
    with pytest.raises(WorkbenchError) as e:
        parse_page("P", "- a\n   - b\n")
    assert e.value.code == "E_INDENT"


def test_parse_page_level_jump_rejected():
    with pytest.raises(WorkbenchError) as e:
        parse_page("P", "- a\n    - b\n")
    assert e.value.code == "E_INDENT"
    assert e.value.detail["line"] == 2


def test_parse_page_crlf_normalized():
    _, blocks = parse_page("P", "- a\r\n  - b\r\n")
    assert [b.text for b in blocks] == ["a", "b"]


def test_parse_corpus_builds_indexes_and_virtual_pages(tmp_path):
    (tmp_path / "A.md").write_text("- hello [[B]] and [[Ghost]]\n- plain\n", encoding="utf-8")
    (tmp_path / "B.md").write_text("- see #A and ((%s))\n" % block_uid("A", (0,)), encoding="utf-8")
    g = parse_corpus(tmp_path)
    assert set(g.pages) == {"A", "B", "Ghost"}
    assert g.pages["Ghost"].virtual
    assert not g.pages["A"].virtual
    assert g.title_index == sorted(g.pages)
    a0 = g.pages["A"].blocks[0]
    b0 = g.pages["B"].blocks[0]
    assert g.ref_index["B"] == {a0}
    assert g.ref_index["A"] == {b0}
    assert g.ref_index[block_uid("A", (0,))] == {b0}
    assert g.page_paths == {"A": "A.md", "B": "B.md"}


def test_parse_corpus_duplicate_titles_rejected(tmp_path):
    (tmp_path / "X.md").write_text("- a\n", encoding="utf-8")
    sub = tmp_path / "sub"
    sub.mkdir()
    (sub / "X.md").write_text("- b\n", encoding="utf-8")
    with pytest.raises(WorkbenchError) as e:
        parse_corpus(tmp_path)
    assert e.value.code == "E_DUP_TITLE"


def test_parse_corpus_bad_encoding_rejected(tmp_path):
    (tmp_path / "bad.md").write_bytes(b"- caf\xe9\n")
    with pytest.raises(WorkbenchError) as e:
        parse_corpus(tmp_path)
    assert e.value.code == "E_ENCODING"
    assert e.value.detail["file"] == "bad.md"


def test_parse_corpus_missing_root_rejected(tmp_path):
    with pytest.raises(WorkbenchError) as e:
        parse_corpus(tmp_path / "nope")
    assert e.value.code == "E_IO"


def test_parse_corpus_indent_error_names_file_and_line(tmp_path):
    (tmp_path / "ok.md").write_text("- fine\n", encoding="utf-8")
    (tmp_path / "broken.md").write_text("- a\n    - b\n", encoding="utf-8")
    with pytest.raises(WorkbenchError) as e:
        parse_corpus(tmp_path)
    assert e.value.code == "E_INDENT"
    assert e.value.detail["file"] == "broken.md"
    assert e.value.detail["line"] == 2


def test_references_to_sorted_and_total(tmp_path):
    (tmp_path / "N.md").write_text("- target page\n", encoding="utf-8")
    (tmp_path / "B.md").write_text("- [[N]] first\n", encoding="utf-8")
    (tmp_path / "A.md").write_text("- [[N]] again\n- [[N]] twice on page\n", encoding="utf-8")
    g = parse_corpus(tmp_path)
    got = references_to(g, "N")
    expect = sorted(
        [b.id for b in g.blocks.values() if any(r.target == "N" for r in b.refs)],
        key=lambda i: (g.blocks[i].page, i),
    )
    assert got == expect
    assert [g.blocks[i].page for i in got] == ["A", "A", "B"]
    assert references_to(g, "Unknown") == []


def test_descendants_preorder():
    text = "- r\n  - a\n    - a1\n  - b\n- other\n"
    page, blocks = parse_page("P", text)
    g = parse_corpus_from_blocks(page, blocks)
    r = page.blocks[0]
    ids = {b.text: b.id for b in blocks}
    assert descendants(g, r) == [ids["a"], ids["a1"], ids["b"]]
    with pytest.raises(WorkbenchError) as e:
        descendants(g, "zz")
    assert e.value.code == "E_NO_BLOCK"


def parse_corpus_from_blocks(page, blocks):
    from dgworkbench.blocks import BlockGraph

    return BlockGraph(
        pages={page.title: page},
        blocks={b.id: b for b in blocks},
        ref_index={},
        title_index=[page.title],
    )


def test_forest_invariant_and_index_coherence(tmp_path):
    (tmp_path / "One.md").write_text(
        "- a [[Two]]\n  - b #tag\n  - c ((zz))\n- d [[Two]]\n", encoding="utf-8"
    )
    (tmp_path / "Two.md").write_text("- e [[One]]\n", encoding="utf-8")
    g = parse_corpus(tmp_path)
    # forest: every block reachable from exactly one page through parent/children
    seen: list[str] = []
    for t, p in g.pages.items():
        stack = list(p.blocks)
        while stack:
            bid = stack.pop()
            b = g.blocks[bid]
            assert b.page == t
            seen.append(bid)
            for c in b.children:
                assert g.blocks[c].parent == bid
                stack.append(c)
    assert sorted(seen) == sorted(g.blocks)
    # ref_index matches a brute-force scan of every block's refs
    brute: dict[str, set[str]] = {}
    for b in g.blocks.values():
        for r in b.refs:
            brute.setdefault(r.target, set()).add(b.id)
    assert g.ref_index == brute


def test_parse_corpus_deterministic(tmp_path):
    (tmp_path / "A.md").write_text("- x [[B]]\n  - y\n", encoding="utf-8")
    (tmp_path / "B.md").write_text("- z ^bee\n", encoding="utf-8")
    g1 = parse_corpus(tmp_path)
    g2 = parse_corpus(tmp_path)
    assert g1 == g2


def test_serialize_roundtrip_identity(tmp_path):
    (tmp_path / "Page.md").write_text(
        "- alpha [[B]] ^keep\n\t- beta\n\t\t- gamma #t\n- delta\n  continued text\n",
        encoding="utf-8",
    )
    (tmp_path / "B.md").write_text("- b\n", encoding="utf-8")
    g1 = parse_corpus(tmp_path)
    for title, path in list(g1.page_paths.items()):
        (tmp_path / path).write_text(serialize_page(g1, title), encoding="utf-8")
    g2 = parse_corpus(tmp_path)
    assert g1 == g2


def test_serialize_pins_id_lookalike_text():
    page, blocks = parse_page("P", "- note ends like ^a1 ^b2\n")
    # explicit id b2, remaining text still ends with a token lookalike
    assert blocks[0].id == "b2"
    assert blocks[0].text == "note ends like ^a1"
    g = parse_corpus_from_blocks(page, blocks)
    out = serialize_page(g, "P")
    page2, blocks2 = parse_page("P", out)
    assert blocks2[0].id == "b2"
    assert blocks2[0].text == "note ends like ^a1"


_WORD = st.text(alphabet="abcdefgh xyz", min_size=1, max_size=12).filter(
    lambda s: s.strip() and not s.startswith("-")
)


@st.composite
def _outlines(draw):
    lines = ["- " + draw(_WORD)]
    depth = 0
    for _ in range(draw(st.integers(0, 11))):
        depth = draw(st.integers(0, min(depth + 1, 3)))
        lines.append("  " * depth + "- " + draw(_WORD))
    return "\n".join(lines) + "\n"


@settings(max_examples=80)
@given(_outlines())
def test_random_outlines_roundtrip(text):
    page, blocks = parse_page("P", text)
    g = parse_corpus_from_blocks(page, blocks)
    reparsed_page, reparsed_blocks = parse_page("P", serialize_page(g, "P"))
    assert reparsed_page == page
    assert reparsed_blocks == blocks
