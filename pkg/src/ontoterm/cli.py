"""Batch driver: every subcommand is a thin mapping onto one core or API
operation.

Targets either a local journal file (``--project PATH``) or a live server
(``--server URL --token TOK``).  ``--json`` switches to stable-schema,
key-sorted JSON output.  Exit codes: 0 ok, 1 usage, 2 validation or
consistency failure, 3 I/O, 4 version conflict.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import collab, filters, ingest, model, ontology, stats as stats_mod, variants
from .errors import WorkbenchError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_CONFLICT = 4


class ConflictExit(Exception):
    def __init__(self, current_version: int):
        super().__init__(f"version conflict; current version is {current_version}")


class Backend:
    """Local journal-file backend; commands mutate and append atomically."""

    def __init__(self, path: Path, must_exist: bool = True):
        self.path = path
        if path.exists():
            self.project = model.Project.load(path)
        elif must_exist:
            raise click.UsageError(f"no project journal at {path}; run 'init' first")
        else:
            self.project = None
        if self.project is not None:
            model.attach_journal_file(self.project, path)


class Remote:
    def __init__(self, url: str, token: str):
        import httpx

        self.url = url.rstrip("/")
        self.client = httpx.Client(
            base_url=self.url, headers={"Authorization": f"Bearer {token}"}, timeout=30.0
        )

    def check(self, resp):
        if resp.status_code == 409:
            body = resp.json()
            raise ConflictExit(body.get("current_version", -1))
        if resp.status_code >= 400:
            try:
                body = resp.json()
            except ValueError:
                body = {"code": "http_error", "message": resp.text}
            raise WorkbenchError(f"{body.get('code')}: {body.get('message')}")
        return resp

    def project_version(self, project_id: str) -> int:
        for p in self.check(self.client.get("/projects")).json():
            if p["id"] == project_id:
                return p["version"]
        raise WorkbenchError(f"no project {project_id!r} on server")

    def commit(self, project_id: str, op: str, args: dict) -> dict:
        version = self.project_version(project_id)
        resp = self.client.post(
            f"/projects/{project_id}/commit",
            json={"expected_version": version, "op": op, "args": args},
        )
        return self.check(resp).json()


def emit(ctx, payload: dict, text: str | None = None) -> None:
    if ctx.obj["json"]:
        click.echo(json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False))
    else:
        click.echo(text if text is not None else json.dumps(payload, sort_keys=True))


def local(ctx) -> Backend:
    if ctx.obj["server"]:
        raise click.UsageError("this subcommand requires a local --project journal")
    if not ctx.obj["project"]:
        raise click.UsageError("--project PATH is required")
    return Backend(Path(ctx.obj["project"]))


def remote(ctx) -> Remote | None:
    if not ctx.obj["server"]:
        return None
    return Remote(ctx.obj["server"], ctx.obj["token"] or "")


@click.group()
@click.option("--project", type=click.Path(), default=None,
              help="Local journal file for the project.")
@click.option("--server", default=None, help="Base URL of a live server.")
@click.option("--server-project", default=None,
              help="Project id on the server (with --server).")
@click.option("--token", default=None, help="Bearer token (with --server).")
@click.option("--json", "json_out", is_flag=True, help="Machine-readable output.")
@click.pass_context
def cli(ctx, project, server, server_project, token, json_out):
    """Terminology and ontology workbench, batch mode."""
    ctx.obj = {
        "project": project,
        "server": server,
        "server_project": server_project,
        "token": token,
        "json": json_out,
    }


def _server_pid(ctx) -> str:
    pid = ctx.obj["server_project"]
    if not pid:
        raise click.UsageError("--server-project is required with --server")
    return pid


@cli.command()
@click.option("--name", required=True)
@click.option("--scheme", type=click.Choice(["open", "blind", "double-blind"]),
              default="open")
@click.option("--reconciler", default=None)
@click.option("--user", "users", multiple=True, help="Project member (repeatable).")
@click.option("--prefix", default="NP", help="Concept id prefix.")
@click.pass_context
def init(ctx, name, scheme, reconciler, users, prefix):
    """Create a new project journal."""
    if not ctx.obj["project"]:
        raise click.UsageError("--project PATH is required")
    path = Path(ctx.obj["project"])
    if path.exists():
        raise click.UsageError(f"{path} already exists")
    project = model.Project.create(
        name=name,
        scheme=model.Scheme(mode=scheme.replace("-", "_"), reconciler=reconciler),
        users=users,
        concept_prefix=prefix,
    )
    model.write_journal(path, project.journal)
    emit(ctx, {"id": project.id, "version": project.version},
         f"initialized project {project.id} at {path}")


@cli.command("import")
@click.option("--format", "fmt", type=click.Choice(["tsv", "yatea", "obo"]),
              required=True)
@click.argument("file", type=click.Path(exists=True))
@click.pass_context
def import_cmd(ctx, fmt, file):
    """Import a term list or ontology file."""
    data = Path(file).read_bytes()
    rem = remote(ctx)
    if rem:
        pid = _server_pid(ctx)
        resp = rem.check(rem.client.post(
            f"/projects/{pid}/import", params={"format": fmt}, content=data))
        body = resp.json()
        emit(ctx, body, f"imported: {json.dumps(body['report'], sort_keys=True)}")
        return
    backend = local(ctx)
    if fmt == "tsv":
        report = ingest.import_tsv(backend.project, data).to_dict()
    elif fmt == "yatea":
        report = ingest.import_yatea(backend.project, data).to_dict()
    else:
        report = ontology.import_obo(backend.project, data)
    emit(ctx, report,
         f"accepted {report.get('accepted', report.get('concepts', 0))}, "
         f"rejected {report.get('rejected', 0)}")


@cli.command("index-corpus")
@click.option("--manifest", type=click.Path(exists=True), default=None,
              help="doc_id<TAB>path<TAB>section manifest file.")
@click.argument("files", nargs=-1, type=click.Path(exists=True))
@click.pass_context
def index_corpus(ctx, manifest, files):
    """Build the occurrence index from corpus text."""
    backend = local(ctx)
    if manifest:
        corpus = ingest.read_corpus_manifest(manifest)
    elif files:
        corpus = ingest.read_corpus_files(list(files))
    else:
        raise click.UsageError("give corpus FILES or --manifest")
    counts = ingest.index_contexts(backend.project, corpus)
    emit(ctx, {"terms_with_occurrences": len(counts),
               "occurrences": sum(counts.values())},
         f"indexed {sum(counts.values())} occurrences of {len(counts)} terms")


def _listing(project, query, sort_keys, viewer=None):
    expr = filters.parse_filter(query)
    ids = filters.evaluate(expr, project, viewer=viewer)
    ordered = filters.sort_terms(ids, filters.parse_sort_keys(sort_keys), project)
    return [project.terms[tid] for tid in ordered]


@cli.command("filter")
@click.option("--query", default="all")
@click.option("--sort", "sort_keys", default="surface:asc")
@click.option("--page", type=int, default=1)
@click.option("--page-size", type=int, default=100)
@click.pass_context
def filter_cmd(ctx, query, sort_keys, page, page_size):
    """List terms matching a filter expression."""
    rem = remote(ctx)
    if rem:
        pid = _server_pid(ctx)
        body = rem.check(rem.client.get(
            f"/projects/{pid}/terms",
            params={"filter": query, "sort": sort_keys, "page": page,
                    "page_size": page_size})).json()
        items = body["items"]
        emit(ctx, body, "\n".join(
            f"{t['id']}\t{t['surface']}\t{t['occ_count']}" for t in items))
        return
    backend = local(ctx)
    terms = _listing(backend.project, query, sort_keys)
    start = (page - 1) * page_size
    items = [t.to_dict() for t in terms[start:start + page_size]]
    payload = {"total": len(terms), "page": page, "page_size": page_size,
               "items": items}
    emit(ctx, payload,
         "\n".join(f"{t['id']}\t{t['surface']}\t{t['occ_count']}" for t in items))


@cli.command("sort")
@click.option("--query", default="all")
@click.option("--keys", required=True, help="e.g. occ:desc,surface:asc")
@click.pass_context
def sort_cmd(ctx, query, keys):
    """Sort the terms matched by a filter."""
    backend = local(ctx)
    terms = _listing(backend.project, query, keys)
    payload = {"items": [t.to_dict() for t in terms]}
    emit(ctx, payload,
         "\n".join(f"{t.id}\t{t.surface}\t{t.occ_count}" for t in terms))


@cli.command("merge")
@click.option("--rules", type=click.Path(exists=True), default=None,
              help="Rules file; defaults to the built-in rule set.")
@click.pass_context
def merge_cmd(ctx, rules):
    """Apply variant-merge rules to all visible terms."""
    backend = local(ctx)
    rule_set = (variants.parse_rules(Path(rules).read_text("utf-8"))
                if rules else variants.default_rules())
    report = variants.apply_merge_rules(backend.project, rule_set)
    d = report.to_dict()
    emit(ctx, d,
         f"merged {d['merged_count']} terms in {len(d['groups'])} groups "
         f"({d['reduction_pct']}% of {d['initial_visible']} visible)")


@cli.group("class")
def class_group():
    """Synonym class operations."""


@class_group.command("create")
@click.option("--rep", "representative", required=True)
@click.option("--member", "members", multiple=True,
              help="TERM_ID:LINK_TYPE (repeatable).")
@click.pass_context
def class_create(ctx, representative, members):
    backend = local(ctx)
    parsed = []
    for m in members:
        tid, _, link = m.rpartition(":")
        if not tid:
            raise click.UsageError(f"bad --member {m!r}; use TERM_ID:LINK_TYPE")
        parsed.append((tid, link))
    class_id = variants.create_class(backend.project, representative, parsed)
    emit(ctx, {"class_id": class_id}, f"created class {class_id}")


@class_group.command("add")
@click.argument("class_id")
@click.argument("term_id")
@click.argument("link_type")
@click.pass_context
def class_add(ctx, class_id, term_id, link_type):
    backend = local(ctx)
    variants.add_member(backend.project, class_id, term_id, link_type)
    emit(ctx, {"class_id": class_id, "term_id": term_id}, "added")


@class_group.command("rep")
@click.argument("class_id")
@click.argument("term_id")
@click.pass_context
def class_rep(ctx, class_id, term_id):
    backend = local(ctx)
    variants.set_representative(backend.project, class_id, term_id)
    emit(ctx, {"class_id": class_id, "representative": term_id}, "representative set")


@class_group.command("remove")
@click.argument("class_id")
@click.argument("term_id")
@click.pass_context
def class_remove(ctx, class_id, term_id):
    backend = local(ctx)
    variants.remove_member(backend.project, class_id, term_id)
    emit(ctx, {"class_id": class_id, "term_id": term_id}, "removed")


@class_group.command("dissolve")
@click.argument("class_id")
@click.pass_context
def class_dissolve(ctx, class_id):
    backend = local(ctx)
    variants.dissolve_class(backend.project, class_id)
    emit(ctx, {"class_id": class_id}, "dissolved")


@cli.group("concept")
def concept_group():
    """Concept and hierarchy operations."""


@concept_group.command("promote")
@click.argument("source_id")
@click.option("--label", default=None)
@click.option("--informal", is_flag=True)
@click.pass_context
def concept_promote(ctx, source_id, label, informal):
    backend = local(ctx)
    cid = ontology.promote(backend.project, source_id, label, informal=informal)
    emit(ctx, {"concept_id": cid}, f"created concept {cid}")


@concept_group.command("isa")
@click.argument("child")
@click.argument("parent")
@click.option("--remove", is_flag=True)
@click.pass_context
def concept_isa(ctx, child, parent, remove):
    backend = local(ctx)
    if remove:
        ontology.remove_is_a(backend.project, child, parent)
    else:
        ontology.add_is_a(backend.project, child, parent)
    emit(ctx, {"child": child, "parent": parent, "removed": remove}, "ok")


@concept_group.command("move")
@click.argument("concept")
@click.argument("old_parent")
@click.argument("new_parent")
@click.pass_context
def concept_move(ctx, concept, old_parent, new_parent):
    backend = local(ctx)
    ontology.move_subtree(backend.project, concept, old_parent, new_parent)
    emit(ctx, {"concept": concept, "new_parent": new_parent}, "moved")


@cli.command("check")
@click.pass_context
def check_cmd(ctx):
    """Run consistency checks; non-zero exit when issues exist."""
    backend = local(ctx)
    issues = ontology.check_consistency(backend.project)
    payload = {"issues": [i.to_dict() for i in issues]}
    emit(ctx, payload,
         "no issues" if not issues else
         "\n".join(f"{i.kind}: {i.message}" for i in issues))
    if issues:
        sys.exit(EXIT_VALIDATION)


@cli.command("stats")
@click.option("--out-dir", type=click.Path(), default=None,
              help="Write stats.tsv and stats.png into this directory.")
@click.pass_context
def stats_cmd(ctx, out_dir):
    """Project statistics; optionally rendered to a report directory."""
    rem = remote(ctx)
    if rem:
        pid = _server_pid(ctx)
        d = rem.check(rem.client.get(f"/projects/{pid}/stats")).json()
        report = stats_mod.StatsReport(**d)
    else:
        backend = local(ctx)
        report = stats_mod.compute_stats(backend.project)
        d = report.to_dict()
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stats_mod.write_stats_tsv(report, out / "stats.tsv")
        stats_mod.render_stats_figure(report, out / "stats.png")
    emit(ctx, d, "\n".join(f"{k}\t{v}" for k, v in d.items()))


@cli.command("export")
@click.option("--format", "fmt", type=click.Choice(["obo", "owl", "tsv"]),
              required=True)
@click.option("-o", "--output", type=click.Path(), default=None)
@click.pass_context
def export_cmd(ctx, fmt, output):
    """Export the ontology (obo, owl) or the term table (tsv)."""
    rem = remote(ctx)
    if rem:
        pid = _server_pid(ctx)
        data = rem.check(rem.client.get(
            f"/projects/{pid}/export", params={"format": fmt})).content
    else:
        backend = local(ctx)
        exporters = {"obo": ontology.export_obo, "owl": ontology.export_owl,
                     "tsv": ontology.export_tsv}
        data = exporters[fmt](backend.project)
        backend.project.commit("cli", "exported", {"format": fmt})
    if output:
        Path(output).write_bytes(data)
        emit(ctx, {"written": output, "bytes": len(data)},
             f"wrote {len(data)} bytes to {output}")
    else:
        click.echo(data.decode("utf-8"), nl=False)


@cli.command("validate")
@click.option("--user", required=True)
@click.option("--term", required=True)
@click.option("--label", type=click.Choice(list(model.STATUS_LABELS)), required=True)
@click.option("--comment", default="")
@click.pass_context
def validate_cmd(ctx, user, term, label, comment):
    """Set a validation status on a term."""
    rem = remote(ctx)
    if rem:
        pid = _server_pid(ctx)
        body = rem.commit(pid, "set_status",
                          {"term_id": term, "label": label, "comment": comment})
        emit(ctx, body, f"version {body['version']}")
        return
    backend = local(ctx)
    if user not in backend.project.users:
        collab.add_user(backend.project, user)
    version = collab.set_status(backend.project, user, term, label, comment)
    emit(ctx, {"version": version}, f"version {version}")


@cli.command("serve")
@click.option("--port", type=int, default=8000)
@click.option("--host", default="127.0.0.1")
@click.option("--data-dir", type=click.Path(), default=None,
              help="Directory of *.journal files to load and persist.")
@click.option("--scheme", type=click.Choice(["open", "blind", "double-blind"]),
              default="open", help="Default scheme for new projects.")
@click.pass_context
def serve_cmd(ctx, port, host, data_dir, scheme):
    """Run the HTTP API server."""
    import uvicorn

    from .service import Registry, create_app

    registry = Registry(data_dir=data_dir)
    app = create_app(registry)
    app.state.default_scheme = scheme.replace("-", "_")
    uvicorn.run(app, host=host, port=port)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.UsageError as e:
        click.echo(f"usage error: {e.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_USAGE
    except ConflictExit as e:
        click.echo(str(e), err=True)
        return EXIT_CONFLICT
    except FileNotFoundError as e:
        click.echo(f"i/o error: {e}", err=True)
        return EXIT_IO
    except OSError as e:
        click.echo(f"i/o error: {e}", err=True)
        return EXIT_IO
    except WorkbenchError as e:
        if e.code in ("encoding_error", "corrupt_journal"):
            click.echo(f"i/o error: {e.message}", err=True)
            return EXIT_IO
        click.echo(f"error: {e.code}: {e.message}", err=True)
        return EXIT_VALIDATION
    except SystemExit as e:
        return int(e.code or 0)


if __name__ == "__main__":
    sys.exit(main())
