"""Concepts, the is-a hierarchy, consistency checks, and exports.

The hierarchy is a DAG (multiple parents allowed); cycles are rejected at
insert time with the offending path.  Exports are pure snapshot functions:
OBO 1.2-style flat files (the round-trippable format), OWL functional-style
syntax, and a TSV joining every visible term to its class and concept.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import model
from .errors import (
    AlreadyPromoted,
    CycleDetected,
    CyclePresent,
    DuplicateEdge,
    ParseError,
    UnknownConcept,
    UnknownEdge,
    UnknownSource,
)
from .model import Project
from .textutil import word_tokens

# link type -> (OBO scope, synonym type name or None)
_LINK_TO_OBO = {
    "exact": ("EXACT", None),
    "typographic": ("EXACT", "typographic"),
    "acronym": ("EXACT", "acronym"),
    "quasi": ("RELATED", None),
    "translation": ("RELATED", "translation"),
}
_OBO_TO_LINK = {(scope, typ): link for link, (scope, typ) in _LINK_TO_OBO.items()}

_SYNONYMTYPEDEFS = (
    'synonymtypedef: acronym "acronym" EXACT',
    'synonymtypedef: translation "translation" RELATED',
    'synonymtypedef: typographic "typographic variation" EXACT',
)

_INFORMAL_COMMENT = "informal concept bag"


@dataclass
class ConsistencyIssue:
    kind: str  # cycle | orphan-label | shared-class | dangling-ref
    subjects: list[str]
    message: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "subjects": self.subjects, "message": self.message}


# ----------------------------------------------------------------------
# Mutations


def promote(
    project: Project,
    source_id: str,
    label_override: str | None = None,
    informal: bool = False,
    actor: str = "ontology",
) -> str:
    """Create a concept from a synonym class or a single term."""
    lexicalization = None
    source_term = None
    if source_id in project.classes:
        cls_ = project.classes[source_id]
        for concept in project.concepts.values():
            if concept.lexicalization == source_id:
                raise AlreadyPromoted(
                    f"class {source_id!r} already lexicalizes concept {concept.id!r}"
                )
        lexicalization = source_id
        label = label_override or project.terms[cls_.representative].surface
    elif source_id in project.terms:
        for concept in project.concepts.values():
            if concept.source_term == source_id:
                raise AlreadyPromoted(
                    f"term {source_id!r} already labels concept {concept.id!r}"
                )
        source_term = source_id
        label = label_override or project.terms[source_id].surface
    else:
        raise UnknownSource(f"no class or term {source_id!r}")
    with project._lock:
        concept_id = project.next_concept_id()
        project._concept_seq -= 1  # commit re-derives the counter from the id
        project.commit(
            actor,
            "concept_promoted",
            {
                "concept_id": concept_id,
                "label": label,
                "lexicalization": lexicalization,
                "source_term": source_term,
                "informal": informal,
            },
        )
    return concept_id


def _require_concept(project: Project, cid: str) -> model.Concept:
    c = project.concepts.get(cid)
    if c is None:
        raise UnknownConcept(f"no concept {cid!r}")
    return c


def _find_path(project: Project, src: str, dst: str, skip_edge=None) -> list[str] | None:
    """A parent-chain path src -> ... -> dst, or None; DFS over is-a edges."""
    stack = [(src, [src])]
    seen = set()
    while stack:
        node, path = stack.pop()
        if node == dst:
            return path
        if node in seen:
            continue
        seen.add(node)
        for parent in sorted(project.concepts[node].parents):
            if skip_edge and (node, parent) == skip_edge:
                continue
            stack.append((parent, path + [parent]))
    return None


def add_is_a(project: Project, child: str, parent: str, actor: str = "ontology") -> None:
    child_c = _require_concept(project, child)
    _require_concept(project, parent)
    if child == parent:
        raise CycleDetected(f"{child!r} cannot be its own parent", path=[child, child])
    if parent in child_c.parents:
        raise DuplicateEdge(f"edge {child!r} is_a {parent!r} already present")
    path = _find_path(project, parent, child)
    if path is not None:
        raise CycleDetected(
            f"edge {child!r} is_a {parent!r} would close a cycle via "
            + " -> ".join(path),
            path=path,
        )
    project.commit(actor, "is_a_added", {"child": child, "parent": parent})


def remove_is_a(project: Project, child: str, parent: str, actor: str = "ontology") -> None:
    child_c = _require_concept(project, child)
    _require_concept(project, parent)
    if parent not in child_c.parents:
        raise UnknownEdge(f"no edge {child!r} is_a {parent!r}")
    project.commit(actor, "is_a_removed", {"child": child, "parent": parent})


def move_subtree(
    project: Project, concept: str, old_parent: str, new_parent: str,
    actor: str = "ontology",
) -> None:
    """Atomic reparent: rejected whole if the new edge would cycle."""
    c = _require_concept(project, concept)
    _require_concept(project, new_parent)
    if old_parent not in c.parents:
        raise UnknownEdge(f"no edge {concept!r} is_a {old_parent!r}")
    if concept == new_parent:
        raise CycleDetected(f"{concept!r} cannot be its own parent",
                            path=[concept, concept])
    path = _find_path(project, new_parent, concept, skip_edge=(concept, old_parent))
    if path is not None:
        raise CycleDetected(
            f"moving {concept!r} under {new_parent!r} would close a cycle via "
            + " -> ".join(path),
            path=path,
        )
    project.commit(
        actor,
        "subtree_moved",
        {"concept": concept, "old_parent": old_parent, "new_parent": new_parent},
    )


# ----------------------------------------------------------------------
# Consistency


def find_cycles(project: Project) -> list[list[str]]:
    """All parent-graph cycles (one witness path per cycle found)."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {cid: WHITE for cid in project.concepts}
    cycles = []

    def dfs(node, path):
        color[node] = GRAY
        path.append(node)
        for parent in sorted(project.concepts[node].parents):
            if parent not in color:
                continue  # dangling parent; reported separately
            if color[parent] == GRAY:
                cycles.append(path[path.index(parent):] + [parent])
            elif color[parent] == WHITE:
                dfs(parent, path)
        path.pop()
        color[node] = BLACK

    for cid in sorted(project.concepts):
        if color[cid] == WHITE:
            dfs(cid, [])
    return cycles


def check_consistency(project: Project) -> list[ConsistencyIssue]:
    issues: list[ConsistencyIssue] = []
    for cycle in find_cycles(project):
        issues.append(
            ConsistencyIssue("cycle", cycle, "is-a cycle: " + " -> ".join(cycle))
        )
    visible_surfaces = {t.surface for t in project.visible_terms().values()}
    lexicalizers: dict[str, list[str]] = {}
    for cid in sorted(project.concepts):
        concept = project.concepts[cid]
        if concept.label not in visible_surfaces:
            issues.append(
                ConsistencyIssue(
                    "orphan-label",
                    [cid],
                    f"concept {cid} label {concept.label!r} matches no visible term",
                )
            )
        if concept.lexicalization is not None:
            if concept.lexicalization not in project.classes:
                issues.append(
                    ConsistencyIssue(
                        "dangling-ref",
                        [cid, concept.lexicalization],
                        f"concept {cid} lexicalization {concept.lexicalization!r} "
                        "is not an existing class",
                    )
                )
            else:
                lexicalizers.setdefault(concept.lexicalization, []).append(cid)
        for parent in sorted(concept.parents):
            if parent not in project.concepts:
                issues.append(
                    ConsistencyIssue(
                        "dangling-ref",
                        [cid, parent],
                        f"concept {cid} has unknown parent {parent!r}",
                    )
                )
    for class_id, cids in sorted(lexicalizers.items()):
        if len(cids) > 1:
            issues.append(
                ConsistencyIssue(
                    "shared-class",
                    [class_id, *cids],
                    f"class {class_id} lexicalizes {len(cids)} concepts",
                )
            )
    for class_id in sorted(project.classes):
        cls_ = project.classes[class_id]
        for tid in sorted(cls_.members):
            term = project.terms.get(tid)
            if term is None or not term.visible:
                issues.append(
                    ConsistencyIssue(
                        "dangling-ref",
                        [class_id, tid],
                        f"class {class_id} member {tid!r} is missing or merged",
                    )
                )
    for tid in sorted(project.terms):
        target = project.terms[tid].merged_into
        if target is not None and target not in project.terms:
            issues.append(
                ConsistencyIssue(
                    "dangling-ref", [tid, target],
                    f"term {tid} merged into unknown term {target!r}",
                )
            )
    for tid in sorted(project.validations):
        if tid not in project.terms:
            issues.append(
                ConsistencyIssue(
                    "dangling-ref", [tid],
                    f"validation records reference unknown term {tid!r}",
                )
            )
    return issues


def _require_acyclic(project: Project) -> None:
    cycles = find_cycles(project)
    if cycles:
        raise CyclePresent("cannot export: is-a cycle " + " -> ".join(cycles[0]))


# ----------------------------------------------------------------------
# OBO


def _obo_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _concept_synonyms(project: Project, concept: model.Concept) -> list[tuple[str, str, str | None]]:
    """(text, scope, type-name) triples for a concept's non-representative members."""
    if concept.lexicalization is None:
        return []
    cls_ = project.classes.get(concept.lexicalization)
    if cls_ is None:
        return []
    out = []
    for tid in cls_.members:
        if tid == cls_.representative:
            continue
        term = project.terms.get(tid)
        if term is None:
            continue
        scope, typ = _LINK_TO_OBO[cls_.members[tid]]
        out.append((term.surface, scope, typ))
    out.sort(key=lambda x: (x[0], x[1], x[2] or ""))
    return out


def export_obo(project: Project) -> bytes:
    _require_acyclic(project)
    lines = ["format-version: 1.2"]
    if project.name:
        lines.append(f"ontology: {project.name}")
    lines.extend(_SYNONYMTYPEDEFS)
    for cid in sorted(project.concepts):
        concept = project.concepts[cid]
        lines.append("")
        lines.append("[Term]")
        lines.append(f"id: {cid}")
        lines.append(f"name: {concept.label}")
        if concept.informal:
            lines.append(f"comment: {_INFORMAL_COMMENT}")
        for text, scope, typ in _concept_synonyms(project, concept):
            typ_part = f" {typ}" if typ else ""
            lines.append(f'synonym: "{_obo_escape(text)}" {scope}{typ_part} []')
        for parent in sorted(concept.parents):
            label = project.concepts[parent].label if parent in project.concepts else "?"
            lines.append(f"is_a: {parent} ! {label}")
    return ("\n".join(lines) + "\n").encode("utf-8")


_SYNONYM_LINE_RE = re.compile(
    r'^"(?P<text>(?:[^"\\]|\\.)*)"\s+(?P<scope>EXACT|RELATED|BROAD|NARROW)'
    r'(?:\s+(?P<type>[\w-]+))?\s*(?:\[.*\])?\s*$'
)


def import_obo(project: Project, data: bytes, actor: str = "import") -> dict:
    """Import an OBO flat file as one atomic mutation.

    Creates a term for every concept name and synonym text (surface = lemma,
    pos NP, zero occurrences), a synonym class per concept that has
    synonyms, and fresh concept ids mapped from the file's ids.  Unknown
    tags and non-Term stanzas are ignored.
    """
    text = data.decode("utf-8")
    stanzas: list[dict] = []
    current: dict | None = None
    in_term = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("!"):
            continue
        if line.startswith("["):
            in_term = line == "[Term]"
            if in_term:
                current = {"line": lineno, "synonyms": [], "is_a": [], "informal": False}
                stanzas.append(current)
            continue
        if not in_term or current is None:
            continue
        tag, _, value = line.partition(":")
        value = value.strip()
        if tag == "id":
            current["id"] = value
        elif tag == "name":
            current["name"] = value
        elif tag == "comment":
            if value == _INFORMAL_COMMENT:
                current["informal"] = True
        elif tag == "is_a":
            target = value.split("!", 1)[0].strip()
            current["is_a"].append((lineno, target))
        elif tag == "synonym":
            m = _SYNONYM_LINE_RE.match(value)
            if not m:
                raise ParseError(f"unparsable synonym line: {value!r}", line=lineno)
            syn_text = re.sub(r"\\(.)", lambda mm: mm.group(1), m.group("text"))
            key = (m.group("scope"), m.group("type"))
            link = _OBO_TO_LINK.get(key)
            if link is None:
                raise ParseError(
                    f"unsupported synonym scope/type {key!r}", line=lineno
                )
            current["synonyms"].append((lineno, syn_text, link))
        # all other tags tolerated and ignored

    for st in stanzas:
        if "id" not in st:
            raise ParseError("[Term] stanza missing id", line=st["line"])
        if "name" not in st:
            raise ParseError(f"[Term] {st['id']} missing name", line=st["line"])

    with project._lock:
        new_terms: list[dict] = []
        term_by_surface: dict[str, str] = {}

        def term_for(surface: str, lineno: int) -> str:
            if surface in term_by_surface:
                return term_by_surface[surface]
            existing = project.find_triple(surface, surface, "NP")
            if existing is not None:
                term_by_surface[surface] = existing
                return existing
            tid = project.next_term_id()
            wt = word_tokens(surface)
            new_terms.append(
                {
                    "id": tid,
                    "surface": surface,
                    "lemma": surface,
                    "pos": "NP",
                    "head_lemma": wt[-1] if len(wt) > 1 else surface,
                    "expansion_lemma": " ".join(wt[:-1]) if len(wt) > 1 else "",
                    "word_count": max(len(wt), 1),
                    "occ_count": 0,
                    "merged_into": None,
                    "doc_refs": [],
                }
            )
            term_by_surface[surface] = tid
            return tid

        classes_payload = []
        concepts_payload = []
        edges_payload = []
        id_map: dict[str, str] = {}
        classified: set[str] = set()
        for st in stanzas:
            id_map[st["id"]] = project.next_concept_id()
        for st in stanzas:
            rep_tid = term_for(st["name"], st["line"])
            lexicalization = None
            if st["synonyms"]:
                members = {rep_tid: "exact"}
                for lineno, syn_text, link in st["synonyms"]:
                    tid = term_for(syn_text, lineno)
                    if tid in classified or (tid in members and tid != rep_tid):
                        raise ParseError(
                            f"synonym {syn_text!r} already classified elsewhere",
                            line=lineno,
                        )
                    members[tid] = link if tid != rep_tid else "exact"
                if rep_tid in classified:
                    raise ParseError(
                        f"name {st['name']!r} already classified elsewhere",
                        line=st["line"],
                    )
                classified.update(members)
                class_id = project.next_class_id()
                classes_payload.append(
                    {
                        "class_id": class_id,
                        "representative": rep_tid,
                        "members": sorted(members.items()),
                    }
                )
                lexicalization = class_id
            concepts_payload.append(
                {
                    "concept_id": id_map[st["id"]],
                    "label": st["name"],
                    "lexicalization": lexicalization,
                    "source_term": None if lexicalization else rep_tid,
                    "informal": st["informal"],
                }
            )
        for st in stanzas:
            for lineno, target in st["is_a"]:
                if target not in id_map:
                    raise ParseError(f"is_a target {target!r} not in file", line=lineno)
                edges_payload.append([id_map[st["id"]], id_map[target]])

        # Counters were advanced while building; commit re-derives them from
        # the ids, so roll back before applying.
        project._term_seq -= len(new_terms)
        project._class_seq -= len(classes_payload)
        project._concept_seq -= len(stanzas)
        project.commit(
            actor,
            "ontology_imported",
            {
                "terms": new_terms,
                "classes": classes_payload,
                "concepts": concepts_payload,
                "edges": sorted(edges_payload),
            },
        )
    return {
        "concepts": len(concepts_payload),
        "classes": len(classes_payload),
        "terms_created": len(new_terms),
        "edges": len(edges_payload),
    }


# ----------------------------------------------------------------------
# OWL (functional-style syntax) and TSV


def _owl_local(concept_id: str) -> str:
    return ":" + concept_id.replace(":", "_")


def _owl_literal(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_owl(project: Project) -> bytes:
    _require_acyclic(project)
    base = f"http://purl.example.org/{project.id or 'ontology'}"
    lines = [
        f"Prefix(:=<{base}#>)",
        "Prefix(rdfs:=<http://www.w3.org/2000/01/rdf-schema#>)",
        "Prefix(skos:=<http://www.w3.org/2004/02/skos/core#>)",
        f"Ontology(<{base}>",
    ]
    for cid in sorted(project.concepts):
        concept = project.concepts[cid]
        local = _owl_local(cid)
        lines.append(f"Declaration(Class({local}))")
        lines.append(
            f"AnnotationAssertion(rdfs:label {local} {_owl_literal(concept.label)})"
        )
        for text, scope, _typ in _concept_synonyms(project, concept):
            prop = "skos:altLabel" if scope == "EXACT" else "skos:related"
            lines.append(f"AnnotationAssertion({prop} {local} {_owl_literal(text)})")
        for parent in sorted(concept.parents):
            lines.append(f"SubClassOf({local} {_owl_local(parent)})")
    lines.append(")")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _status_summary(project: Project, term_id: str) -> str:
    counts: dict[str, int] = {}
    for rec in project.validations.get(term_id, {}).values():
        counts[rec.label] = counts.get(rec.label, 0) + 1
    return ";".join(f"{label}:{counts[label]}" for label in sorted(counts))


def export_tsv(project: Project) -> bytes:
    """One row per visible term with its class and concept context."""
    _require_acyclic(project)
    class_by_term: dict[str, model.SynonymClass] = {}
    for cls_ in project.classes.values():
        for tid in cls_.members:
            class_by_term[tid] = cls_
    concept_by_class = {
        c.lexicalization: c for c in project.concepts.values() if c.lexicalization
    }
    concept_by_term = {
        c.source_term: c for c in project.concepts.values() if c.source_term
    }
    header = [
        "term_surface", "lemma", "status_summary", "class_representative",
        "concept_id", "concept_label", "parent_ids",
    ]
    rows = [header]
    for tid in sorted(project.visible_terms()):
        term = project.terms[tid]
        cls_ = class_by_term.get(tid)
        concept = None
        if cls_ is not None:
            concept = concept_by_class.get(cls_.id)
        if concept is None:
            concept = concept_by_term.get(tid)
        rows.append(
            [
                term.surface,
                term.lemma,
                _status_summary(project, tid),
                project.terms[cls_.representative].surface if cls_ else "",
                concept.id if concept else "",
                concept.label if concept else "",
                "|".join(sorted(concept.parents)) if concept else "",
            ]
        )
    return ("\n".join("\t".join(row) for row in rows) + "\n").encode("utf-8")


def concept_tree(project: Project) -> list[dict]:
    """Root-down nested view; a multi-parent concept appears under each parent."""
    children: dict[str, list[str]] = {cid: [] for cid in project.concepts}
    roots = []
    for cid in sorted(project.concepts):
        concept = project.concepts[cid]
        if not concept.parents:
            roots.append(cid)
        for parent in concept.parents:
            if parent in children:
                children[parent].append(cid)

    def build(cid: str) -> dict:
        concept = project.concepts[cid]
        return {
            "id": cid,
            "label": concept.label,
            "informal": concept.informal,
            "children": [build(k) for k in sorted(children[cid])],
        }

    return [build(cid) for cid in roots]
