"""HTTP facade over a Workbench.

Every response carries the current build generation in an X-Generation
header; mutating endpoints additionally take the caller's generation in the
body and answer with the new one. Handlers are plain sync functions: the
workbench is blocking and guards writes with its own lock, so they run on
the framework's thread pool and reads stay responsive during a rebuild.
"""

from __future__ import annotations

from fastapi import Body, FastAPI, Query, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ..discourse import discourse_context, node_attributes, overlay_stats, run_query
from ..errors import WorkbenchError
from ..grammar import node_type as grammar_node_type
from ..interop import export_json, neo4j_zip
from ..workbench import Workbench
from . import schemas

# Everything else maps to 400: bad input, not a missing thing or our fault.
_STATUS = {
    "E_CONFLICT": 409,
    "E_NO_NODE": 404,
    "E_NO_PAGE": 404,
    "E_NO_BLOCK": 404,
    "E_IO": 500,
    "E_PORT": 500,
}


def _edits_out(edits) -> list[schemas.EditOut]:
    return [
        schemas.EditOut(kind=e.kind, page=e.page, parent=e.parent, index=e.index, text=e.text)
        for e in edits
    ]


def create_app(wb: Workbench) -> FastAPI:
    app = FastAPI(title="discourse graph workbench", docs_url=None, redoc_url=None)

    # The browser UI is served from its own origin; the service is loopback
    # only, so a permissive policy is safe.  The exposed headers let scripts
    # read the generation stamp and the export filename.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=["X-Generation", "Content-Disposition"],
    )

    @app.middleware("http")
    async def stamp_generation(request: Request, call_next):
        response = await call_next(request)
        response.headers["X-Generation"] = str(wb.generation)
        return response

    @app.exception_handler(WorkbenchError)
    async def workbench_error(request: Request, exc: WorkbenchError):
        # Same body shape the CLI prints on stderr, so callers share a parser.
        return JSONResponse(status_code=_STATUS.get(exc.code, 400), content=exc.to_dict())

    @app.get("/generation", response_model=schemas.GenerationResponse)
    def generation():
        return schemas.GenerationResponse(generation=wb.generation)

    @app.get("/nodes", response_model=list[schemas.NodeSummary])
    def list_nodes(type_id: str | None = Query(default=None, alias="type")):
        dg = wb.snapshot.discourse
        if type_id is not None:
            grammar_node_type(dg.grammar, type_id)  # unknown type is a 400, not an empty list
        nodes = sorted(dg.nodes.values(), key=lambda n: n.order)
        return [
            schemas.NodeSummary(
                title=n.title,
                type=n.type_id,
                content=n.content,
                citekey=n.citekey,
                virtual=n.virtual,
                order=n.order,
            )
            for n in nodes
            if type_id is None or n.type_id == type_id
        ]

    @app.get("/pages/{title}", response_model=schemas.PageResponse)
    def page_blocks(title: str):
        # The block view needs raw page text; nothing else exposes it.
        graph = wb.snapshot.blocks
        page = graph.pages.get(title)
        if page is None:
            raise WorkbenchError("E_NO_PAGE", f"no page {title!r}", title=title)

        def block_out(block_id: str) -> schemas.BlockOut:
            b = graph.blocks[block_id]
            return schemas.BlockOut(
                id=b.id,
                text=b.text,
                refs=[schemas.RefOut(kind=r.kind, target=r.target, span=r.span) for r in b.refs],
                children=[block_out(c) for c in b.children],
            )

        return schemas.PageResponse(
            title=title,
            virtual=page.virtual,
            blocks=[block_out(root) for root in page.blocks],
        )

    @app.get("/nodes/{title}/context", response_model=schemas.ContextResponse)
    def node_context(title: str):
        dg = wb.snapshot.discourse
        entries = discourse_context(dg, title)
        return schemas.ContextResponse(
            title=title,
            entries=[
                schemas.ContextEntryOut(
                    direction=e.direction,
                    label=e.label,
                    other=e.other,
                    anchors=[
                        schemas.Anchor(
                            relation=a.relation_id,
                            variant=a.variant_index,
                            bindings=dict(a.bindings),
                        )
                        for a in e.anchors
                    ],
                )
                for e in entries
            ],
        )

    @app.get("/nodes/{title}/overlay", response_model=schemas.OverlayResponse)
    def node_overlay(title: str):
        dg = wb.snapshot.discourse
        stats = overlay_stats(dg, title)
        return schemas.OverlayResponse(
            title=title,
            relation_count=stats.relation_count,
            reference_count=stats.reference_count,
            attributes=node_attributes(dg, title),
        )

    @app.post("/query", response_model=schemas.QueryResponse)
    def query(q: dict = Body()):
        table = run_query(wb.snapshot.discourse, q)
        return schemas.QueryResponse(columns=list(table.columns), rows=[list(r) for r in table.rows])

    @app.post("/formalize", response_model=schemas.FormalizeResponse)
    def formalize(req: schemas.FormalizeRequest):
        result = wb.formalize_selection(
            req.block_id, tuple(req.span), req.node_type, req.citekey, req.generation
        )
        return schemas.FormalizeResponse(
            title=result.title,
            existing=result.existing,
            edits=_edits_out(result.edits),
            generation=result.generation,
        )

    @app.post("/realize", response_model=schemas.RealizeResponse)
    def realize(req: schemas.RealizeRequest):
        result = wb.realize(
            req.source, req.relation_id, req.destination, req.target_page, req.generation
        )
        return schemas.RealizeResponse(edits=_edits_out(result.edits), generation=result.generation)

    @app.get("/grammar")
    def get_grammar():
        return JSONResponse(content=wb.grammar_doc())

    @app.put("/grammar", response_model=schemas.GenerationResponse)
    def put_grammar(req: schemas.GrammarPut):
        new_gen = wb.set_grammar(req.doc, req.generation)
        return schemas.GenerationResponse(generation=new_gen)

    @app.get("/export/neo4j")
    def export_neo4j():
        graphname = wb.root.name
        payload = neo4j_zip(wb.snapshot.discourse, graphname)
        return Response(
            content=payload,
            media_type="application/zip",
            headers={"Content-Disposition": f'attachment; filename="{graphname}_neo4j.zip"'},
        )

    @app.get("/export/json")
    def export_graph_json():
        graphname = wb.root.name
        payload = export_json(wb.snapshot.discourse)
        return Response(
            content=payload,
            media_type="application/json",
            headers={"Content-Disposition": f'attachment; filename="{graphname}.json"'},
        )

    return app
