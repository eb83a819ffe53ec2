"""Regenerate the recorded service responses under test/fixtures.

Run from the repository root after changing the service:

    python3 frontend/scripts/record_fixtures.py

Drives the real service (in-process) over the hand-checked corpus and
captures every response the UI tests replay, including the mutation flows,
so UI-displayed values stay assertable against genuine API output.
"""

from __future__ import annotations

import json
import shutil
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

REPO = Path(__file__).resolve().parents[2]
FIXTURES = REPO / "frontend" / "test" / "fixtures"
sys.path.insert(0, str(REPO / "src"))

from dgworkbench.service import create_app  # noqa: E402
from dgworkbench.workbench import Workbench  # noqa: E402

OPPOSING_EVIDENCE_QUERY = {
    "find": "EVD",
    "conditions": [
        {"relation": "Informs", "target": {"node": "QUE - q1"}},
        {"relation": "Opposes", "target": {"type": "CLM"}},
    ],
    "select": ["title", "citekey"],
}


def save(name: str, payload) -> None:
    path = FIXTURES / name
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    print(f"wrote {path.relative_to(REPO)}")


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    scratch = Path(tempfile.mkdtemp())
    corpus = scratch / "corpus"
    shutil.copytree(REPO / "tests" / "fixtures" / "base_corpus", corpus)
    wb = Workbench(corpus)
    client = TestClient(create_app(wb))

    save("grammar.json", client.get("/grammar").json())
    save("generation.json", client.get("/generation").json())
    save("nodes.json", client.get("/nodes").json())
    save("context_clm_c1.json", client.get("/nodes/CLM - c1/context").json())
    save("context_clm_c2.json", client.get("/nodes/CLM - c2/context").json())
    save("context_evd_e1.json", client.get("/nodes/EVD - e1 - @s1/context").json())
    save("overlay_clm_c1.json", client.get("/nodes/CLM - c1/overlay").json())
    save("overlay_clm_c2.json", client.get("/nodes/CLM - c2/overlay").json())
    save("query_opposing.json", client.post("/query", json=OPPOSING_EVIDENCE_QUERY).json())
    save("page_reading_notes.json", client.get("/pages/reading notes").json())
    save("export_initial.json", client.get("/export/json").json())

    realize = client.post(
        "/realize",
        json={
            "source": "EVD - e1 - @s1",
            "relationId": "supports",
            "destination": "CLM - c2",
            "targetPage": "synthesis outline",
            "generation": 1,
        },
    )
    assert realize.status_code == 200, realize.text
    save("realize_supports.json", realize.json())
    save("context_evd_e1_after_realize.json", client.get("/nodes/EVD - e1 - @s1/context").json())
    save("context_clm_c2_after_realize.json", client.get("/nodes/CLM - c2/context").json())
    save("export_after_realize.json", client.get("/export/json").json())

    page = client.get("/pages/reading notes").json()
    todo = next(b for b in page["blocks"] if b["text"] == "todo: find contradicting evidence")
    formalize = client.post(
        "/formalize",
        json={
            "blockId": todo["id"],
            "span": [6, 33],
            "nodeType": "EVD",
            "citekey": "lee2021",
            "generation": 2,
        },
    )
    assert formalize.status_code == 200, formalize.text
    save("formalize_response.json", formalize.json())
    save("page_reading_notes_after.json", client.get("/pages/reading notes").json())
    title = formalize.json()["title"]
    save("overlay_formalized.json", client.get(f"/nodes/{title}/overlay").json())

    stale = client.post(
        "/realize",
        json={
            "source": "EVD - e2 - @s2",
            "relationId": "supports",
            "destination": "CLM - c2",
            "targetPage": "synthesis outline",
            "generation": 1,
        },
    )
    assert stale.status_code == 409, stale.text
    save("conflict_error.json", stale.json())

    shutil.rmtree(scratch)


if __name__ == "__main__":
    main()
