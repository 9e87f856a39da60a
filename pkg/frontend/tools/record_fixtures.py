"""Record API fixtures for the web-UI contract tests.

Runs the real service in-process and captures deterministic request /
response exchanges into ``frontend/tests/fixtures/``:

- ``filter_roundtrip.json``: 50 generated filter-builder widget states,
  the grammar text the builder emits for each, and the server parser's
  canonical rendering (plus proof the canonical form is a fixpoint).
- ``bulk_validate.json``: a 60-term grid page, the single ``set_statuses``
  commit that validates 50 selected rows, and the stale-version replay
  that yields a 409 conflict.
- ``redacted_statuses.json``: scheme-filtered validation payloads for a
  non-validated viewer under blind and double-blind schemes, alongside
  the labels that were hidden.

The emission logic here mirrors ``src/filterBuilder.ts`` exactly; the
vitest suite asserts the TypeScript emitter reproduces every recorded
string byte for byte.
"""
from __future__ import annotations

import json
import random
import sys
from pathlib import Path

from fastapi.testclient import TestClient

from ontoterm import service

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

TEXT_FIELDS = ["surface", "lemma", "pos", "head", "expansion"]
NUMERIC_FIELDS = ["occ", "words"]
TEXT_OPS = ["=", "!=", "~"]
NUMERIC_OPS = ["=", "!=", ">=", "<=", ">", "<"]

TEXT_VALUES = [
    "tree",
    "mature avocado tree",
    "public controversy",
    'say "hello"',
    "back\\slash path",
    "a.*b",
    "DNA sequence",
    "%yield",
    "NP",
]
TERM_IDS = ["p1.T1", "p1.T17", "grid.T3"]
USERS = ["alice", "bob"]
LABELS = ["valid", "invalid", "pending"]


def quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit(node: dict) -> str:
    """Mirror of emitFilterText in src/filterBuilder.ts."""
    kind = node["kind"]
    if kind == "all":
        return "all"
    if kind == "visible":
        return f"visible({'true' if node['value'] else 'false'})"
    if kind == "field":
        value = node["value"]
        rendered = str(value) if isinstance(value, int) else quote(value)
        return f"{node['field']} {node['op']} {rendered}"
    if kind == "status":
        return f"status({quote(node['user'])}, {quote(node['label'])})"
    if kind == "sharedhead":
        return f"sharedhead({quote(node['termId'])})"
    if kind == "sharedexp":
        return f"sharedexp({quote(node['termId'])})"
    if kind == "subterms":
        return f"subterms({emit(node['inner'])})"
    if kind == "not":
        inner = emit(node["inner"])
        if node["inner"]["kind"] == "group":
            return f"not ({inner})"
        return f"not {inner}"
    if kind == "group":
        sep = " and " if node["joiner"] == "and" else " or "
        parts = []
        for item in node["items"]:
            s = emit(item)
            if item["kind"] == "group":
                s = f"({s})"
            parts.append(s)
        return sep.join(parts)
    raise ValueError(f"unknown node kind {kind!r}")


def random_state(rng: random.Random, depth: int) -> dict:
    kinds = ["all", "visible", "field", "field", "status", "sharedhead", "sharedexp"]
    if depth > 0:
        kinds += ["subterms", "not", "group", "group", "group"]
    kind = rng.choice(kinds)
    if kind == "all":
        return {"kind": "all"}
    if kind == "visible":
        return {"kind": "visible", "value": rng.random() < 0.5}
    if kind == "field":
        if rng.random() < 0.5:
            return {
                "kind": "field",
                "field": rng.choice(TEXT_FIELDS),
                "op": rng.choice(TEXT_OPS),
                "value": rng.choice(TEXT_VALUES),
            }
        return {
            "kind": "field",
            "field": rng.choice(NUMERIC_FIELDS),
            "op": rng.choice(NUMERIC_OPS),
            "value": rng.randrange(0, 700),
        }
    if kind == "status":
        return {"kind": "status", "user": rng.choice(USERS), "label": rng.choice(LABELS)}
    if kind in ("sharedhead", "sharedexp"):
        return {"kind": kind, "termId": rng.choice(TERM_IDS)}
    if kind == "subterms":
        return {"kind": "subterms", "inner": random_state(rng, depth - 1)}
    if kind == "not":
        return {"kind": "not", "inner": random_state(rng, depth - 1)}
    items = [random_state(rng, depth - 1) for _ in range(rng.randrange(2, 4))]
    return {"kind": "group", "joiner": rng.choice(["and", "or"]), "items": items}


def curated_states() -> list[dict]:
    """Hand-picked states guaranteeing every widget kind and quoting edge."""
    return [
        {"kind": "all"},
        {"kind": "visible", "value": False},
        {"kind": "field", "field": "surface", "op": "=", "value": 'say "hello"'},
        {"kind": "field", "field": "lemma", "op": "~", "value": "back\\slash path"},
        {"kind": "field", "field": "occ", "op": ">=", "value": 500},
        {"kind": "status", "user": "alice", "label": "valid"},
        {"kind": "sharedhead", "termId": "p1.T1"},
        {"kind": "sharedexp", "termId": "p1.T17"},
        {"kind": "subterms", "inner": {"kind": "field", "field": "head", "op": "=", "value": "tree"}},
        {
            "kind": "not",
            "inner": {
                "kind": "group",
                "joiner": "or",
                "items": [
                    {"kind": "visible", "value": True},
                    {"kind": "field", "field": "words", "op": "<", "value": 3},
                ],
            },
        },
        {
            "kind": "group",
            "joiner": "and",
            "items": [
                {"kind": "field", "field": "pos", "op": "=", "value": "NP"},
                {
                    "kind": "group",
                    "joiner": "or",
                    "items": [
                        {"kind": "field", "field": "occ", "op": ">", "value": 10},
                        {"kind": "status", "user": "bob", "label": "pending"},
                    ],
                },
            ],
        },
    ]


def auth(user: str) -> dict:
    return {"Authorization": f"Bearer tok-{user}"}


def make_client() -> TestClient:
    app = service.create_app(service.Registry())
    client = TestClient(app)
    for user in ("alice", "bob", "carol", "dave"):
        r = client.post("/users", json={"user": user, "token": f"tok-{user}"})
        assert r.status_code == 201, r.text
    return client


def record_filters(client: TestClient) -> None:
    rng = random.Random(20260823)
    states = curated_states()
    while len(states) < 50:
        states.append(random_state(rng, 3))
    entries = []
    kinds_seen = set()
    for state in states:
        emitted = emit(state)
        r = client.get("/filters/parse", params={"q": emitted}, headers=auth("alice"))
        assert r.status_code == 200, f"{emitted!r}: {r.text}"
        canonical = r.json()["canonical"]
        r2 = client.get("/filters/parse", params={"q": canonical}, headers=auth("alice"))
        assert r2.status_code == 200 and r2.json()["canonical"] == canonical
        entries.append({"state": state, "emitted": emitted, "canonical": canonical})
        stack = [state]
        while stack:
            n = stack.pop()
            kinds_seen.add(n["kind"])
            stack.extend(n.get("items", []))
            if "inner" in n:
                stack.append(n["inner"])
    expected_kinds = {
        "all", "visible", "field", "status", "sharedhead", "sharedexp",
        "subterms", "not", "group",
    }
    assert kinds_seen == expected_kinds, kinds_seen
    (FIXTURE_DIR / "filter_roundtrip.json").write_text(
        json.dumps({"cases": entries}, indent=1), "utf-8"
    )
    print(f"filter_roundtrip.json: {len(entries)} cases")


def record_bulk(client: TestClient) -> None:
    r = client.post(
        "/projects",
        json={"name": "grid-demo", "scheme": "open", "members": ["bob"]},
        headers=auth("alice"),
    )
    pid = r.json()["id"]
    version = r.json()["version"]
    candidates = [
        {"surface": f"candidate term {i:02d}", "lemma": f"candidate term {i:02d}",
         "pos": "NP", "occ_count": 3 + i}
        for i in range(60)
    ]
    r = client.post(
        f"/projects/{pid}/commit",
        json={"expected_version": version, "op": "add_terms",
              "args": {"candidates": candidates}},
        headers=auth("alice"),
    )
    assert r.status_code == 200, r.text
    page = client.get(
        f"/projects/{pid}/terms",
        params={"filter": "all", "sort": "surface:asc", "page": 1, "page_size": 60},
        headers=auth("alice"),
    ).json()
    assert page["total"] == 60
    selected = [row["id"] for row in page["items"][:50]]
    request_body = {
        "expected_version": page["version"],
        "op": "set_statuses",
        "args": {
            "updates": [
                {"term_id": tid, "label": "invalid", "comment": ""} for tid in selected
            ]
        },
    }
    r = client.post(f"/projects/{pid}/commit", json=request_body, headers=auth("alice"))
    assert r.status_code == 200, r.text
    response = r.json()
    assert response["version"] == page["version"] + 1
    # Replaying the identical envelope is now stale: the server answers 409.
    stale = client.post(f"/projects/{pid}/commit", json=request_body, headers=auth("alice"))
    assert stale.status_code == 409
    statuses = client.get(
        f"/projects/{pid}/statuses/{selected[0]}", headers=auth("bob")
    ).json()
    (FIXTURE_DIR / "bulk_validate.json").write_text(
        json.dumps(
            {
                "project_id": pid,
                "page": page,
                "selected": selected,
                "request": request_body,
                "response": response,
                "conflict_response": {"status": 409, "body": stale.json()},
                "status_sample": statuses,
            },
            indent=1,
        ),
        "utf-8",
    )
    print(f"bulk_validate.json: {len(selected)} rows, one commit, version "
          f"{page['version']} -> {response['version']}")


def record_redacted(client: TestClient) -> None:
    out: dict = {"hidden_labels": ["valid", "invalid"], "schemes": {}}
    for mode, extra in (("blind", {}), ("double_blind", {"reconciler": "dave"})):
        r = client.post(
            "/projects",
            json={"name": f"{mode}-demo", "scheme": mode,
                  "members": ["bob", "carol", "dave"], **extra},
            headers=auth("alice"),
        )
        pid = r.json()["id"]
        version = r.json()["version"]
        r = client.post(
            f"/projects/{pid}/commit",
            json={"expected_version": version, "op": "add_terms",
                  "args": {"candidates": [{"surface": "somaclonal variation",
                                           "lemma": "somaclonal variation",
                                           "pos": "NP", "occ_count": 12}]}},
            headers=auth("alice"),
        )
        tid = r.json()["result"][0]
        version = r.json()["version"]
        for user, label in (("alice", "valid"), ("carol", "invalid")):
            r = client.post(
                f"/projects/{pid}/commit",
                json={"expected_version": version, "op": "set_status",
                      "args": {"term_id": tid, "label": label,
                               "comment": f"{label} per review"}},
                headers=auth(user),
            )
            assert r.status_code == 200, r.text
            version = r.json()["version"]
        # bob has not validated this term: everything foreign is hidden.
        payload = client.get(
            f"/projects/{pid}/statuses/{tid}", headers=auth("bob")
        ).json()
        out["schemes"][mode] = {"project_id": pid, "term_id": tid,
                                "viewer": "bob", "payload": payload}
    blind = out["schemes"]["blind"]["payload"]["statuses"]
    assert blind and all(rec == {"redacted": True} for rec in blind)
    assert out["schemes"]["double_blind"]["payload"]["statuses"] == []
    (FIXTURE_DIR / "redacted_statuses.json").write_text(
        json.dumps(out, indent=1), "utf-8"
    )
    print("redacted_statuses.json: blind placeholders "
          f"{len(blind)}, double_blind records 0")


def main() -> int:
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    client = make_client()
    record_filters(client)
    record_bulk(client)
    record_redacted(client)
    return 0


if __name__ == "__main__":
    sys.exit(main())
