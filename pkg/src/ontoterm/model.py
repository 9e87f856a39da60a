"""Domain types and the journaled project store.

The journal is the persistence format: every accepted mutation is one
appended event, ``version`` equals journal length, and replaying the journal
from an empty state reproduces the live collections exactly.  Operation
modules validate preconditions, build a fully-determined event payload
(generated ids included), and call :meth:`Project.commit`; the same
``_apply`` dispatch runs for live commits and for replay, which makes replay
the correctness oracle.
"""

from __future__ import annotations

import copy
import json
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Optional

from .errors import (
    CorruptJournal,
    DuplicateTerm,
    InvariantViolation,
    ReadOnlySnapshot,
)
from .textutil import word_tokens

STATUS_LABELS = ("valid", "invalid", "pending")
LINK_TYPES = ("exact", "acronym", "typographic", "quasi", "translation")
SCHEME_MODES = ("open", "blind", "double_blind")


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass
class TermCandidate:
    """One extracted term with its linguistic fields and merge state."""

    id: str
    surface: str
    lemma: str
    pos: str
    head_lemma: str
    expansion_lemma: str  # space-joined lemma sequence; empty for monolexical
    word_count: int
    occ_count: int
    merged_into: Optional[str] = None
    doc_refs: list[str] = field(default_factory=list)

    @property
    def visible(self) -> bool:
        return self.merged_into is None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "surface": self.surface,
            "lemma": self.lemma,
            "pos": self.pos,
            "head_lemma": self.head_lemma,
            "expansion_lemma": self.expansion_lemma,
            "word_count": self.word_count,
            "occ_count": self.occ_count,
            "merged_into": self.merged_into,
            "doc_refs": list(self.doc_refs),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TermCandidate":
        return cls(
            id=d["id"],
            surface=d["surface"],
            lemma=d["lemma"],
            pos=d["pos"],
            head_lemma=d["head_lemma"],
            expansion_lemma=d["expansion_lemma"],
            word_count=d["word_count"],
            occ_count=d["occ_count"],
            merged_into=d.get("merged_into"),
            doc_refs=list(d.get("doc_refs", [])),
        )


@dataclass
class Occurrence:
    """A literal hit of a term surface inside one corpus sentence."""

    term_id: str
    doc_id: str
    sentence_text: str
    char_start: int
    char_end: int

    def to_dict(self) -> dict:
        return {
            "term_id": self.term_id,
            "doc_id": self.doc_id,
            "sentence_text": self.sentence_text,
            "char_start": self.char_start,
            "char_end": self.char_end,
        }


@dataclass
class SynonymClass:
    """Equivalence class of terms; members map term id -> link type."""

    id: str
    representative: str
    members: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "representative": self.representative,
            "members": dict(sorted(self.members.items())),
        }


@dataclass
class Concept:
    """Node in the is-a hierarchy, lexicalized by at most one synonym class."""

    id: str
    label: str
    lexicalization: Optional[str] = None
    source_term: Optional[str] = None
    parents: set[str] = field(default_factory=set)
    informal: bool = False

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "label": self.label,
            "lexicalization": self.lexicalization,
            "source_term": self.source_term,
            "parents": sorted(self.parents),
            "informal": self.informal,
        }


@dataclass
class ValidationRecord:
    user: str
    term_id: str
    label: str
    comment: str
    timestamp: str

    def to_dict(self) -> dict:
        return {
            "user": self.user,
            "term_id": self.term_id,
            "label": self.label,
            "comment": self.comment,
            "timestamp": self.timestamp,
        }


@dataclass
class Scheme:
    mode: str = "open"
    reconciler: Optional[str] = None

    def to_dict(self) -> dict:
        return {"mode": self.mode, "reconciler": self.reconciler}


@dataclass(frozen=True)
class JournalEntry:
    seq: int
    actor: str
    timestamp: str
    kind: str
    payload: dict

    def to_line(self) -> str:
        return "\t".join(
            [str(self.seq), self.actor, self.timestamp, self.kind, canonical_json(self.payload)]
        )

    @classmethod
    def from_line(cls, line: str, lineno: int) -> "JournalEntry":
        parts = line.rstrip("\n").split("\t", 4)
        if len(parts) != 5:
            raise CorruptJournal(f"line {lineno}: expected 5 tab-separated fields")
        seq_s, actor, timestamp, kind, payload_s = parts
        try:
            seq = int(seq_s)
        except ValueError:
            raise CorruptJournal(f"line {lineno}: bad seq {seq_s!r}") from None
        try:
            payload = json.loads(payload_s)
        except json.JSONDecodeError as e:
            raise CorruptJournal(f"line {lineno}: bad payload: {e}") from None
        return cls(seq=seq, actor=actor, timestamp=timestamp, kind=kind, payload=payload)


EVENT_KINDS = frozenset(
    {
        "project_created",
        "user_added",
        "terms_added",
        "contexts_indexed",
        "statuses_set",
        "merged",
        "unmerged",
        "class_created",
        "class_member_added",
        "class_member_removed",
        "class_representative_set",
        "class_dissolved",
        "concept_promoted",
        "is_a_added",
        "is_a_removed",
        "subtree_moved",
        "ontology_imported",
        "exported",
    }
)


class Project:
    """The single source of truth: collections plus the append-only journal.

    All mutations are serialized through a per-project lock (single writer);
    reads work on :meth:`snapshot` copies that never see later mutations.
    """

    def __init__(self):
        self.id: Optional[str] = None
        self.name: Optional[str] = None
        self.scheme = Scheme()
        self.concept_prefix = "NP"
        self.users: set[str] = set()
        self.version = 0
        self.terms: dict[str, TermCandidate] = {}
        self.occurrences: dict[str, list[Occurrence]] = {}
        self.classes: dict[str, SynonymClass] = {}
        self.concepts: dict[str, Concept] = {}
        # validations[term_id][user] -> ValidationRecord
        self.validations: dict[str, dict[str, ValidationRecord]] = {}
        self.journal: list[JournalEntry] = []
        self.readonly = False
        self._term_seq = 0
        self._class_seq = 0
        self._concept_seq = 0
        self._triple_index: dict[tuple[str, str, str], str] = {}
        self._lock = threading.RLock()
        self._sinks: list[Callable[[JournalEntry], None]] = []

    # ------------------------------------------------------------------
    # Construction and persistence

    @classmethod
    def create(
        cls,
        name: str,
        scheme: Scheme | None = None,
        users: Iterable[str] = (),
        actor: str = "system",
        project_id: str | None = None,
        concept_prefix: str = "NP",
    ) -> "Project":
        p = cls()
        payload = {
            "id": project_id or uuid.uuid4().hex[:8],
            "name": name,
            "scheme": (scheme or Scheme()).to_dict(),
            "users": sorted(set(users)),
            "concept_prefix": concept_prefix,
        }
        p.commit(actor, "project_created", payload)
        return p

    @classmethod
    def replay(cls, entries: Iterable[JournalEntry]) -> "Project":
        p = cls()
        for entry in entries:
            if entry.seq != p.version + 1:
                raise CorruptJournal(
                    f"journal gap: expected seq {p.version + 1}, got {entry.seq}"
                )
            if entry.kind not in EVENT_KINDS:
                raise CorruptJournal(f"unknown event kind {entry.kind!r} at seq {entry.seq}")
            try:
                p._apply(entry.kind, entry.payload)
            except (KeyError, TypeError, ValueError) as e:
                raise CorruptJournal(f"invalid event at seq {entry.seq}: {e}") from e
            p.journal.append(entry)
            p.version += 1
        return p

    @classmethod
    def load(cls, path: str | Path) -> "Project":
        return cls.replay(read_journal(path))

    def add_sink(self, sink: Callable[[JournalEntry], None]) -> None:
        self._sinks.append(sink)

    # ------------------------------------------------------------------
    # Mutation core

    def commit(self, actor: str, kind: str, payload: dict) -> int:
        if self.readonly:
            raise ReadOnlySnapshot("snapshots cannot be mutated")
        if kind not in EVENT_KINDS:
            raise InvariantViolation(f"unknown event kind {kind!r}")
        with self._lock:
            entry = JournalEntry(
                seq=self.version + 1,
                actor=actor,
                timestamp=now_iso(),
                kind=kind,
                payload=payload,
            )
            self._apply(kind, payload)
            self.journal.append(entry)
            self.version += 1
            for sink in self._sinks:
                sink(entry)
            return self.version

    def snapshot(self) -> "Project":
        """Immutable deep copy carrying the version it was taken at."""
        with self._lock:
            p = Project()
            p.id = self.id
            p.name = self.name
            p.scheme = copy.deepcopy(self.scheme)
            p.concept_prefix = self.concept_prefix
            p.users = set(self.users)
            p.version = self.version
            p.terms = copy.deepcopy(self.terms)
            p.occurrences = copy.deepcopy(self.occurrences)
            p.classes = copy.deepcopy(self.classes)
            p.concepts = copy.deepcopy(self.concepts)
            p.validations = copy.deepcopy(self.validations)
            p.journal = list(self.journal)
            p._term_seq = self._term_seq
            p._class_seq = self._class_seq
            p._concept_seq = self._concept_seq
            p._triple_index = dict(self._triple_index)
            p.readonly = True
            return p

    # ------------------------------------------------------------------
    # Event application (infallible on valid payloads; shared with replay)

    def _apply(self, kind: str, payload: dict) -> None:
        getattr(self, "_apply_" + kind)(payload)

    def _apply_project_created(self, p: dict) -> None:
        self.id = p["id"]
        self.name = p["name"]
        self.scheme = Scheme(mode=p["scheme"]["mode"], reconciler=p["scheme"].get("reconciler"))
        self.users = set(p.get("users", []))
        self.concept_prefix = p.get("concept_prefix", "NP")

    def _apply_user_added(self, p: dict) -> None:
        self.users.add(p["user"])

    def _apply_terms_added(self, p: dict) -> None:
        for d in p["terms"]:
            term = TermCandidate.from_dict(d)
            self.terms[term.id] = term
            self._triple_index[(term.surface, term.lemma, term.pos)] = term.id
            n = _id_ordinal(term.id)
            if n is not None:
                self._term_seq = max(self._term_seq, n)

    def _apply_contexts_indexed(self, p: dict) -> None:
        index: dict[str, list[Occurrence]] = {}
        for d in p["occurrences"]:
            index.setdefault(d["term_id"], []).append(
                Occurrence(
                    term_id=d["term_id"],
                    doc_id=d["doc_id"],
                    sentence_text=d["sentence_text"],
                    char_start=d["char_start"],
                    char_end=d["char_end"],
                )
            )
        self.occurrences = index

    def _apply_statuses_set(self, p: dict) -> None:
        for d in p["records"]:
            rec = ValidationRecord(
                user=d["user"],
                term_id=d["term_id"],
                label=d["label"],
                comment=d.get("comment", ""),
                timestamp=d["timestamp"],
            )
            self.validations.setdefault(rec.term_id, {})[rec.user] = rec

    def _apply_merged(self, p: dict) -> None:
        for group in p["groups"]:
            canonical = self.terms[group["canonical"]]
            for dup_id in group["merged"]:
                dup = self.terms[dup_id]
                dup.merged_into = canonical.id
                canonical.occ_count += dup.occ_count
        for change in p.get("class_changes", []):
            action = change["action"]
            if action == "remove_member":
                self.classes[change["class_id"]].members.pop(change["term_id"], None)
            elif action == "set_representative":
                cls_ = self.classes[change["class_id"]]
                cls_.representative = change["term_id"]
                cls_.members[change["term_id"]] = "exact"
            elif action == "dissolve":
                del self.classes[change["class_id"]]

    def _apply_unmerged(self, p: dict) -> None:
        term = self.terms[p["term_id"]]
        # The canonical may itself have been merged since; give the count
        # back along the whole chain so every holder stays exact.
        holder = term.merged_into
        while holder is not None:
            self.terms[holder].occ_count -= term.occ_count
            holder = self.terms[holder].merged_into
        term.merged_into = None

    def _apply_class_created(self, p: dict) -> None:
        cls_ = SynonymClass(
            id=p["class_id"],
            representative=p["representative"],
            members={tid: link for tid, link in p["members"]},
        )
        self.classes[cls_.id] = cls_
        n = _id_ordinal(cls_.id)
        if n is not None:
            self._class_seq = max(self._class_seq, n)

    def _apply_class_member_added(self, p: dict) -> None:
        self.classes[p["class_id"]].members[p["term_id"]] = p["link_type"]

    def _apply_class_member_removed(self, p: dict) -> None:
        del self.classes[p["class_id"]].members[p["term_id"]]

    def _apply_class_representative_set(self, p: dict) -> None:
        cls_ = self.classes[p["class_id"]]
        cls_.representative = p["term_id"]
        # The representative always carries an exact link.
        cls_.members[p["term_id"]] = "exact"

    def _apply_class_dissolved(self, p: dict) -> None:
        del self.classes[p["class_id"]]

    def _apply_concept_promoted(self, p: dict) -> None:
        concept = Concept(
            id=p["concept_id"],
            label=p["label"],
            lexicalization=p.get("lexicalization"),
            source_term=p.get("source_term"),
            informal=p.get("informal", False),
        )
        self.concepts[concept.id] = concept
        n = _concept_ordinal(concept.id)
        if n is not None:
            self._concept_seq = max(self._concept_seq, n)

    def _apply_is_a_added(self, p: dict) -> None:
        self.concepts[p["child"]].parents.add(p["parent"])

    def _apply_is_a_removed(self, p: dict) -> None:
        self.concepts[p["child"]].parents.discard(p["parent"])

    def _apply_subtree_moved(self, p: dict) -> None:
        concept = self.concepts[p["concept"]]
        concept.parents.discard(p["old_parent"])
        concept.parents.add(p["new_parent"])

    def _apply_ontology_imported(self, p: dict) -> None:
        self._apply_terms_added({"terms": p.get("terms", [])})
        for c in p.get("classes", []):
            self._apply_class_created(c)
        for c in p.get("concepts", []):
            self._apply_concept_promoted(c)
        for child, parent in p.get("edges", []):
            self._apply_is_a_added({"child": child, "parent": parent})

    def _apply_exported(self, p: dict) -> None:
        pass  # traceability only; no state change

    # ------------------------------------------------------------------
    # Id generation (deterministic: ids land in event payloads)

    def next_term_id(self) -> str:
        self._term_seq += 1
        return f"{self.id}.T{self._term_seq}"

    def next_class_id(self) -> str:
        self._class_seq += 1
        return f"{self.id}.C{self._class_seq}"

    def next_concept_id(self) -> str:
        self._concept_seq += 1
        return f"{self.concept_prefix}:{self._concept_seq:07d}"

    # ------------------------------------------------------------------
    # Queries

    def visible_terms(self) -> dict[str, TermCandidate]:
        return {tid: t for tid, t in self.terms.items() if t.visible}

    def find_triple(self, surface: str, lemma: str, pos: str) -> Optional[str]:
        return self._triple_index.get((surface, lemma, pos))

    def class_of_term(self, term_id: str) -> Optional[SynonymClass]:
        for cls_ in self.classes.values():
            if term_id in cls_.members:
                return cls_
        return None

    def state_dict(self) -> dict:
        """Canonical dump of all collections for replay-equality checks."""
        return {
            "id": self.id,
            "name": self.name,
            "scheme": self.scheme.to_dict(),
            "concept_prefix": self.concept_prefix,
            "users": sorted(self.users),
            "version": self.version,
            "terms": {tid: t.to_dict() for tid, t in sorted(self.terms.items())},
            "occurrences": {
                tid: [o.to_dict() for o in occs]
                for tid, occs in sorted(self.occurrences.items())
            },
            "classes": {cid: c.to_dict() for cid, c in sorted(self.classes.items())},
            "concepts": {cid: c.to_dict() for cid, c in sorted(self.concepts.items())},
            "validations": {
                tid: {u: r.to_dict() for u, r in sorted(recs.items())}
                for tid, recs in sorted(self.validations.items())
            },
        }


def _id_ordinal(term_or_class_id: str) -> Optional[int]:
    _, _, tail = term_or_class_id.rpartition(".")
    if len(tail) > 1 and tail[0] in "TC" and tail[1:].isdigit():
        return int(tail[1:])
    return None


def _concept_ordinal(concept_id: str) -> Optional[int]:
    _, _, tail = concept_id.rpartition(":")
    return int(tail) if tail.isdigit() else None


# ----------------------------------------------------------------------
# Core operations


def validate_candidate(surface: str, lemma: str, pos: str, head_lemma: str,
                       expansion_lemma: str, word_count: int, occ_count: int) -> None:
    if not surface:
        raise InvariantViolation("surface must be non-empty")
    if not lemma:
        raise InvariantViolation("lemma must be non-empty")
    wt = word_tokens(lemma)
    if word_count != len(wt):
        raise InvariantViolation(
            f"word_count {word_count} does not match lemma token count {len(wt)}"
            f" for {lemma!r}"
        )
    if word_count < 1:
        raise InvariantViolation("word_count must be positive")
    if occ_count < 0:
        raise InvariantViolation("occ_count must be non-negative")
    if word_count == 1:
        if expansion_lemma:
            raise InvariantViolation(
                f"monolexical term {lemma!r} must have empty expansion"
            )
        if head_lemma != lemma:
            raise InvariantViolation(
                f"monolexical term {lemma!r} must have head_lemma equal to lemma"
            )


def add_terms(project: Project, candidates: list[dict], actor: str = "system") -> list[str]:
    """Store candidates (dicts without ids); returns new ids in input order.

    Empty input is a no-op: no journal entry, version unchanged.
    """
    if not candidates:
        return []
    seen: dict[tuple[str, str, str], int] = {}
    payload_terms = []
    ids = []
    with project._lock:
        for i, c in enumerate(candidates):
            surface = c["surface"]
            lemma = c.get("lemma", surface)
            pos = c.get("pos", "NP")
            word_count = c.get("word_count", len(word_tokens(lemma)))
            head_lemma = c.get("head_lemma", "")
            expansion_lemma = c.get("expansion_lemma", "")
            if not head_lemma:
                # Right-headed default: head is the last lemma token.
                wt = word_tokens(lemma)
                if len(wt) <= 1:
                    head_lemma = lemma
                else:
                    head_lemma = wt[-1]
                    if not expansion_lemma:
                        expansion_lemma = " ".join(wt[:-1])
            occ_count = c.get("occ_count", 0)
            validate_candidate(surface, lemma, pos, head_lemma, expansion_lemma,
                               word_count, occ_count)
            triple = (surface, lemma, pos)
            existing = project.find_triple(*triple)
            if existing is not None:
                raise DuplicateTerm(
                    f"term ({surface!r}, {lemma!r}, {pos!r}) already present",
                    colliding_id=existing,
                )
            if triple in seen:
                raise DuplicateTerm(
                    f"term ({surface!r}, {lemma!r}, {pos!r}) duplicated in input "
                    f"(rows {seen[triple]} and {i})"
                )
            seen[triple] = i
            tid = project.next_term_id()
            ids.append(tid)
            payload_terms.append(
                {
                    "id": tid,
                    "surface": surface,
                    "lemma": lemma,
                    "pos": pos,
                    "head_lemma": head_lemma,
                    "expansion_lemma": expansion_lemma,
                    "word_count": word_count,
                    "occ_count": occ_count,
                    "merged_into": None,
                    "doc_refs": list(c.get("doc_refs", [])),
                }
            )
        # next_term_id already advanced the counter; rebuild is id-driven, so
        # roll back nothing: commit applies the same payload we built.
        project._term_seq -= len(ids)
        project.commit(actor, "terms_added", {"terms": payload_terms})
        return ids


# ----------------------------------------------------------------------
# Journal file I/O: one event per line,
# seq<TAB>actor<TAB>iso8601<TAB>kind<TAB>canonical-json, UTF-8, LF.


def read_journal(path: str | Path) -> list[JournalEntry]:
    entries = []
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            entries.append(JournalEntry.from_line(line, lineno))
    return entries


def write_journal(path: str | Path, entries: Iterable[JournalEntry]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for entry in entries:
            fh.write(entry.to_line() + "\n")


def attach_journal_file(project: Project, path: str | Path) -> None:
    """Persist every future commit by appending to ``path``."""

    def sink(entry: JournalEntry) -> None:
        with open(path, "a", encoding="utf-8", newline="\n") as fh:
            fh.write(entry.to_line() + "\n")

    project.add_sink(sink)
