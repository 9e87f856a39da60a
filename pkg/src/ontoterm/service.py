"""HTTP/JSON API: the surface every client (CLI, web UI) operates through.

All mutations funnel through the per-project single-writer commit with
optimistic version checks; reads are served from snapshots.  Errors are
structured bodies ``{"code": ..., "message": ...}``.  Authentication is a
bearer-token user registry; authorization is project membership.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Optional

from fastapi import Depends, FastAPI, Header, Query, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import collab, filters, ingest, ontology, stats as stats_mod
from .errors import (
    AlreadyClassified,
    AlreadyMerged,
    AlreadyPromoted,
    CycleDetected,
    CyclePresent,
    DuplicateEdge,
    DuplicateTerm,
    WorkbenchError,
)
from .model import Project, Scheme, attach_journal_file

DEFAULT_PAGE_SIZE = 100
MAX_PAGE_SIZE = 1000

_CONFLICTING = (
    DuplicateTerm, DuplicateEdge, AlreadyMerged, AlreadyClassified,
    AlreadyPromoted, CycleDetected, CyclePresent,
)
_NOT_FOUND_CODES = {
    "unknown_term", "unknown_user", "unknown_class", "unknown_concept",
    "unknown_edge", "unknown_source",
}


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, **details):
        self.status = status
        self.body = {"code": code, "message": message}
        if details:
            self.body["details"] = details


class Registry:
    """Server-side state: projects, user tokens, optional journal directory."""

    def __init__(self, data_dir: str | Path | None = None):
        self.projects: dict[str, Project] = {}
        self.tokens: dict[str, str] = {}  # token -> user id
        self.data_dir = Path(data_dir) if data_dir else None
        self._lock = threading.Lock()
        if self.data_dir:
            self.data_dir.mkdir(parents=True, exist_ok=True)
            for path in sorted(self.data_dir.glob("*.journal")):
                project = Project.load(path)
                attach_journal_file(project, path)
                self.projects[project.id] = project

    def register_user(self, user: str, token: str) -> None:
        with self._lock:
            self.tokens[token] = user

    def add_project(self, project: Project) -> None:
        with self._lock:
            self.projects[project.id] = project
        if self.data_dir:
            path = self.data_dir / f"{project.id}.journal"
            from .model import write_journal

            write_journal(path, project.journal)
            attach_journal_file(project, path)

    def get(self, project_id: str) -> Project:
        project = self.projects.get(project_id)
        if project is None:
            raise ApiError(404, "unknown_project", f"no project {project_id!r}")
        return project

    def find_term_project(self, term_id: str) -> Project:
        for project in self.projects.values():
            if term_id in project.terms:
                return project
        raise ApiError(404, "unknown_term", f"no term {term_id!r} on this server")


class ProjectCreate(BaseModel):
    name: str
    scheme: str = "open"
    reconciler: Optional[str] = None
    members: list[str] = []
    concept_prefix: str = "NP"


class UserCreate(BaseModel):
    user: str
    token: str


class CommandBody(BaseModel):
    expected_version: int
    op: str
    args: dict = {}


def _term_dict(project: Project, term) -> dict:
    d = term.to_dict()
    d["index_occurrences"] = len(project.occurrences.get(term.id, []))
    return d


def create_app(registry: Registry | None = None) -> FastAPI:
    registry = registry or Registry()
    app = FastAPI(title="ontoterm", version="0.1.0")
    app.state.registry = registry

    def auth(authorization: str = Header(default="")) -> str:
        if not authorization.startswith("Bearer "):
            raise ApiError(401, "unauthorized", "missing bearer token")
        user = registry.tokens.get(authorization[len("Bearer "):])
        if user is None:
            raise ApiError(401, "unauthorized", "unknown token")
        return user

    def member_project(project_id: str, user: str) -> Project:
        project = registry.get(project_id)
        if user not in project.users:
            raise ApiError(403, "forbidden", f"user {user!r} is not a project member")
        return project

    @app.exception_handler(ApiError)
    async def api_error_handler(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content=exc.body)

    @app.exception_handler(WorkbenchError)
    async def workbench_error_handler(_req: Request, exc: WorkbenchError):
        if isinstance(exc, _CONFLICTING):
            status = 409
        elif exc.code in _NOT_FOUND_CODES:
            status = 404
        else:
            status = 400
        return JSONResponse(status_code=status, content=exc.to_dict())

    @app.post("/users", status_code=201)
    def register_user(body: UserCreate):
        registry.register_user(body.user, body.token)
        return {"user": body.user}

    @app.get("/projects")
    def list_projects(user: str = Depends(auth)):
        return [
            {
                "id": p.id,
                "name": p.name,
                "version": p.version,
                "scheme": p.scheme.to_dict(),
            }
            for p in sorted(registry.projects.values(), key=lambda p: p.id)
            if user in p.users
        ]

    @app.post("/projects", status_code=201)
    def create_project(body: ProjectCreate, user: str = Depends(auth)):
        project = Project.create(
            name=body.name,
            scheme=Scheme(mode=body.scheme, reconciler=body.reconciler),
            users={user, *body.members},
            actor=user,
            concept_prefix=body.concept_prefix,
        )
        registry.add_project(project)
        return {"id": project.id, "name": project.name, "version": project.version}

    @app.get("/projects/{project_id}/terms")
    def list_terms(
        project_id: str,
        filter: str = Query(default="all"),
        sort: str = Query(default="surface:asc"),
        page: int = Query(default=1, ge=1),
        page_size: int = Query(default=DEFAULT_PAGE_SIZE, ge=1, le=MAX_PAGE_SIZE),
        user: str = Depends(auth),
    ):
        project = member_project(project_id, user).snapshot()
        expr = filters.parse_filter(filter or "all")
        ids = filters.evaluate(expr, project, viewer=user)
        ordered = filters.sort_terms(ids, filters.parse_sort_keys(sort), project)
        start = (page - 1) * page_size
        items = [_term_dict(project, project.terms[tid]) for tid in ordered[start:start + page_size]]
        return {
            "total": len(ordered),
            "page": page,
            "page_size": page_size,
            "version": project.version,
            "items": items,
        }

    @app.get("/terms/{term_id}/kwic")
    def term_kwic(
        term_id: str,
        window: int = Query(default=5, ge=0),
        user: str = Depends(auth),
    ):
        project = registry.find_term_project(term_id)
        if user not in project.users:
            raise ApiError(403, "forbidden", f"user {user!r} is not a project member")
        lines = ingest.kwic(project.snapshot(), term_id, window)
        return {
            "term_id": term_id,
            "window": window,
            "lines": [{"left": l, "match": m, "right": r} for l, m, r in lines],
        }

    @app.post("/projects/{project_id}/commit")
    def commit(project_id: str, body: CommandBody, user: str = Depends(auth)):
        project = member_project(project_id, user)
        command = collab.Command(
            expected_version=body.expected_version, actor=user, op=body.op,
            args=body.args,
        )
        result = collab.commit_command(project, command)
        if not result.ok:
            return JSONResponse(
                status_code=409,
                content={
                    "code": "conflict",
                    "message": "expected_version is stale",
                    "current_version": result.version,
                },
            )
        out = {"version": result.version}
        if isinstance(result.result, (list, dict, str, int)):
            out["result"] = result.result
        return out

    @app.get("/projects/{project_id}/statuses/{term_id}")
    def statuses(project_id: str, term_id: str, user: str = Depends(auth)):
        project = member_project(project_id, user).snapshot()
        return {
            "term_id": term_id,
            "scheme": project.scheme.mode,
            "statuses": collab.visible_statuses(project, user, term_id),
        }

    @app.get("/projects/{project_id}/consensus")
    def consensus(
        project_id: str,
        mode: str,
        filter: str = Query(default="all"),
        user: str = Depends(auth),
    ):
        project = member_project(project_id, user).snapshot()
        ids = filters.evaluate(filters.parse_filter(filter), project, viewer=user)
        return {"mode": mode, "term_ids": sorted(collab.consensus(project, ids, mode))}

    @app.get("/projects/{project_id}/export")
    def export(project_id: str, format: str, user: str = Depends(auth)):
        project = member_project(project_id, user).snapshot()
        exporters = {
            "obo": ontology.export_obo,
            "owl": ontology.export_owl,
            "tsv": ontology.export_tsv,
        }
        if format not in exporters:
            raise ApiError(400, "bad_format", f"format must be one of {sorted(exporters)}")
        payload = exporters[format](project)
        return Response(content=payload, media_type="text/plain; charset=utf-8")

    @app.post("/projects/{project_id}/import")
    async def import_(project_id: str, format: str, request: Request,
                      user: str = Depends(auth)):
        project = member_project(project_id, user)
        data = await request.body()
        if format == "tsv":
            report = ingest.import_tsv(project, data, actor=user).to_dict()
        elif format == "yatea":
            report = ingest.import_yatea(project, data, actor=user).to_dict()
        elif format == "obo":
            report = ontology.import_obo(project, data, actor=user)
        else:
            raise ApiError(400, "bad_format", "format must be tsv, yatea or obo")
        return {"version": project.version, "report": report}

    @app.get("/projects/{project_id}/concepts/tree")
    def concepts_tree(project_id: str, user: str = Depends(auth)):
        project = member_project(project_id, user).snapshot()
        return {"version": project.version, "roots": ontology.concept_tree(project)}

    @app.get("/projects/{project_id}/stats")
    def project_stats(project_id: str, user: str = Depends(auth)):
        project = member_project(project_id, user).snapshot()
        return stats_mod.compute_stats(project).to_dict()

    @app.get("/filters/parse")
    def parse_filter_endpoint(q: str, user: str = Depends(auth)):
        expr = filters.parse_filter(q)
        return {"ok": True, "canonical": filters.to_text(expr)}

    return app
