"""Shared fixtures: the hand-checked base corpus and a seeded corpus generator."""

from __future__ import annotations

import random
import shutil
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

_WORDS = "alpha beta gamma delta cohort method trial result figure protocol".split()

# attribute expressions the parser must refuse
MALFORMED_EXPRS = [
    "",
    "count(",
    "1 +",
    "2*(count(SupportedBy)",
    "count()",
]

# the worked synthesis query: evidence informing one question while opposing any claim
OPPOSING_EVIDENCE_QUERY = {
    "find": "EVD",
    "conditions": [
        {"relation": "Informs", "target": {"node": "QUE - q1"}},
        {"relation": "Opposes", "target": {"type": "CLM"}},
    ],
    "select": ["title", "citekey"],
}


@pytest.fixture
def base_corpus(tmp_path: Path) -> Path:
    dst = tmp_path / "base_corpus"
    shutil.copytree(FIXTURES / "base_corpus", dst)
    return dst


def write_corpus(root: Path, files: dict[str, str]) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    for title, text in files.items():
        (root / f"{title}.md").write_text(text, encoding="utf-8")
    return root


def random_corpus_files(rng: random.Random, big: bool = False) -> dict[str, str]:
    """A corpus with real relation idioms, near misses, and noise.

    Small by default (roughly 20 to 80 blocks); big=True pushes the total
    toward 500 blocks while keeping the same vocabulary.
    """
    ques = [f"QUE - q{i}" for i in range(rng.randint(1, 2))]
    clms = [f"CLM - c{i}" for i in range(rng.randint(1, 3))]
    evds = [f"EVD - e{i} - @key{i}" for i in range(rng.randint(1, 3))]
    markers = ["SupportedBy", "OpposedBy"]
    notes = [f"note {i}" for i in range(rng.randint(2, 4) * (3 if big else 1))]
    nodes = ques + clms + evds
    all_targets = nodes + markers + notes + ["Stray page"]
    next_id = [0]

    def ref_text(t: str) -> str:
        if " " not in t and rng.random() < 0.4:
            return "#" + t
        if rng.random() < 0.25:
            return f"#[[{t}]]"
        return f"[[{t}]]"

    def block_text() -> str:
        parts = [rng.choice(_WORDS) for _ in range(rng.randint(1, 3))]
        for _ in range(rng.randint(0, 2)):
            parts.insert(rng.randrange(len(parts) + 1), ref_text(rng.choice(all_targets)))
        return " ".join(parts)

    def bullet(depth: int, text: str) -> str:
        line = "  " * depth + "- " + text
        if rng.random() < 0.06:
            line += f" ^xid{next_id[0]}"
            next_id[0] += 1
        return line

    def idiom_lines() -> list[str]:
        c = rng.choice(clms)
        e = rng.choice(evds)
        q = rng.choice(ques)
        mk = rng.choice(markers)
        shape = rng.randrange(5)
        if shape == 0:  # marker and source on one child
            return [bullet(0, ref_text(c)), bullet(1, f"{ref_text(mk)} {ref_text(e)}")]
        if shape == 1:  # marker block, source one deeper
            return [bullet(0, ref_text(c)), bullet(1, ref_text(mk)), bullet(2, ref_text(e))]
        if shape == 2:  # question reviewed with evidence below
            return [bullet(0, f"reviewing {ref_text(q)}"), bullet(1, f"{ref_text(e)} relevant")]
        if shape == 3:  # near miss: no marker between claim and evidence
            return [bullet(0, ref_text(c)), bullet(1, ref_text(e))]
        return [bullet(0, f"{ref_text(c)} next to {ref_text(e)} inline")]

    def outline(n_blocks: int, seed_lines: list[str] | None = None) -> str:
        lines = list(seed_lines or [])
        depth = 0
        while len(lines) < n_blocks:
            depth = 0 if not lines else rng.randint(0, min(depth + 1, 3))
            lines.append(bullet(depth, block_text()))
            if rng.random() < 0.05:
                lines.append("  " * depth + "  continuation text here")
        return "\n".join(lines) + "\n"

    per_page = (8, 30) if big else (2, 8)
    files: dict[str, str] = {}
    outline_seed: list[str] = []
    for _ in range(rng.randint(2, 5) * (3 if big else 1)):
        outline_seed.extend(idiom_lines())
    files["daily outline"] = outline(len(outline_seed) + rng.randint(0, 4), outline_seed)
    for t in notes:
        files[t] = outline(rng.randint(*per_page))
    for t in nodes:
        if rng.random() < 0.6:
            seed = []
            if t in ques:
                for _ in range(rng.randint(0, 2)):
                    seed.append(bullet(0, ref_text(rng.choice(evds))))
            if t in clms and rng.random() < 0.5:
                seed.append(bullet(0, f"{ref_text(rng.choice(markers))} {ref_text(rng.choice(evds))}"))
            files[t] = outline(rng.randint(1, 4) + len(seed), seed)
    return files


@pytest.fixture
def make_random_corpus(tmp_path: Path):
    def make(seed: int, big: bool = False) -> Path:
        rng = random.Random(seed)
        return write_corpus(tmp_path / f"corpus_{seed}", random_corpus_files(rng, big=big))

    return make
