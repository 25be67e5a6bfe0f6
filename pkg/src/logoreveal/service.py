"""Local HTTP service backing the interactive-editing UI.

Single-process, file-backed, local-first. All endpoints are JSON except the
variant page, which serves the emitted self-contained HTML for sandboxed
preview frames.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import HTMLResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .config import RunConfig
from .workspace import EditFailed, EditRequest, ProjectNotFound, VariantNotFound, Workspace


class GenerateBody(BaseModel):
    n: int = 4


class EditBody(BaseModel):
    prompt: str
    request_id: Optional[str] = None


def create_app(root: Path, config: RunConfig = RunConfig(), frontend_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="logoreveal service")
    workspace = Workspace(root, config)
    app.state.workspace = workspace

    @app.get("/api/projects")
    def list_projects():
        return workspace.list_projects()

    @app.post("/api/projects/{project_id}/generate")
    def generate(project_id: str, body: GenerateBody):
        try:
            variants, errors = workspace.generate(project_id, body.n)
        except ProjectNotFound:
            raise HTTPException(status_code=404, detail=f"project {project_id!r} not found")
        return {"variants": [v.to_dict() for v in variants], "errors": errors}

    @app.get("/api/projects/{project_id}/variants")
    def list_variants(project_id: str):
        try:
            return [v.to_dict() for v in workspace.list_variants(project_id)]
        except ProjectNotFound:
            raise HTTPException(status_code=404, detail=f"project {project_id!r} not found")

    @app.get("/api/variants/{variant_id}/page.html", response_class=HTMLResponse)
    def variant_page(variant_id: str):
        try:
            return workspace.variant_page(variant_id)
        except VariantNotFound:
            raise HTTPException(status_code=404, detail=f"variant {variant_id!r} not found")

    @app.get("/api/variants/{variant_id}/report")
    def variant_report(variant_id: str):
        try:
            return workspace.variant_report(variant_id)
        except VariantNotFound:
            raise HTTPException(status_code=404, detail=f"variant {variant_id!r} not found")

    @app.post("/api/variants/{variant_id}/edit")
    def edit(variant_id: str, body: EditBody):
        if not body.prompt.strip():
            raise HTTPException(status_code=422, detail="prompt must be non-empty")
        try:
            child = workspace.handle_edit(
                EditRequest(variant_id=variant_id, prompt=body.prompt, request_id=body.request_id)
            )
        except VariantNotFound:
            raise HTTPException(status_code=404, detail=f"variant {variant_id!r} not found")
        except EditFailed as exc:
            raise HTTPException(status_code=500, detail=f"edit failed: {exc}")
        return child.to_dict()

    if frontend_dir and Path(frontend_dir).exists():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="frontend")

    return app
