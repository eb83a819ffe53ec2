"""Request and response bodies for the HTTP API.

Field names are camelCase on the wire and snake_case in Python; requests
accept either spelling. Query bodies are deliberately absent: /query takes
the query document as-is and run_query is its only validator.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict
from pydantic.alias_generators import to_camel


class _Wire(BaseModel):
    model_config = ConfigDict(alias_generator=to_camel, populate_by_name=True)


class Anchor(_Wire):
    relation: str
    variant: int
    bindings: dict[str, str]


class NodeSummary(_Wire):
    title: str
    type: str
    content: str
    citekey: str | None
    virtual: bool
    order: int


class RefOut(_Wire):
    kind: str
    target: str
    span: tuple[int, int]


class BlockOut(_Wire):
    id: str
    text: str
    refs: list[RefOut]
    children: list["BlockOut"]


class PageResponse(_Wire):
    title: str
    virtual: bool
    blocks: list[BlockOut]


class ContextEntryOut(_Wire):
    direction: str
    label: str
    other: str
    anchors: list[Anchor]


class ContextResponse(_Wire):
    title: str
    entries: list[ContextEntryOut]


class OverlayResponse(_Wire):
    title: str
    relation_count: int
    reference_count: int | None
    attributes: dict[str, int | float]


class QueryResponse(_Wire):
    columns: list[str]
    rows: list[list[str | int | float]]


class EditOut(_Wire):
    kind: str
    page: str
    parent: str | None
    index: int
    text: str


class FormalizeRequest(_Wire):
    block_id: str
    span: tuple[int, int]
    node_type: str
    citekey: str | None = None
    generation: int


class FormalizeResponse(_Wire):
    title: str
    existing: bool
    edits: list[EditOut]
    generation: int


class RealizeRequest(_Wire):
    source: str
    relation_id: str
    destination: str
    target_page: str
    generation: int


class RealizeResponse(_Wire):
    edits: list[EditOut]
    generation: int


class GrammarPut(_Wire):
    doc: dict
    generation: int


class GenerationResponse(_Wire):
    generation: int
