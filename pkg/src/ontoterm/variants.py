"""Variant merging, structural term relations, and typed synonym classes.

Merge rules are explicit data: each rule names a field (surface or lemma),
a gating regex, and a canonicalizer.  Terms whose canonicalized
(surface, lemma) keys coincide are merged under the member with the highest
occurrence count (ties: shortest surface, then id), with the group recorded
in the journal so merged terms stay retrievable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources

from . import model
from .errors import (
    AlreadyClassified,
    AlreadyMerged,
    InvariantViolation,
    NotAMember,
    NotMerged,
    ParseError,
    SelfMerge,
    UnknownClass,
    UnknownTerm,
)
from .model import LINK_TYPES, Project
from .textutil import is_subterm

# Plural-stripping suffix table: (suffix, replacement, minimum word length).
# "ss" endings are left alone ("glass" is not a plural).
PLURAL_SUFFIXES = (
    ("ies", "y", 5),
    ("ss", "ss", 0),
    ("s", "", 4),
)


def _deplural_word(word: str) -> str:
    lower = word.lower()
    for suffix, repl, min_len in PLURAL_SUFFIXES:
        if lower.endswith(suffix) and len(word) >= min_len:
            if repl == suffix:
                return word
            return word[: len(word) - len(suffix)] + repl
    return word


def canon_lowercase(value: str) -> str:
    return value.lower()


def canon_deplural(value: str) -> str:
    """Strip a plural suffix from the final word of the value."""
    parts = value.split(" ")
    parts[-1] = _deplural_word(parts[-1])
    return " ".join(parts)


def canon_collapse(value: str) -> str:
    """Hyphens become spaces; whitespace runs collapse to single spaces."""
    return " ".join(value.replace("-", " ").split())


CANONICALIZERS = {
    "lowercase": lambda args: canon_lowercase,
    "deplural": lambda args: canon_deplural,
    "collapse": lambda args: canon_collapse,
    "replace": lambda args: (lambda v: re.sub(args[0], args[1], v)),
}


@dataclass
class MergeRule:
    name: str
    field: str  # "surface" or "lemma"
    match: re.Pattern
    canonicalizer: str
    args: tuple = ()

    def __post_init__(self):
        if isinstance(self.match, str):
            self.match = re.compile(self.match)
        if self.field not in ("surface", "lemma"):
            raise InvariantViolation(f"rule {self.name!r}: bad field {self.field!r}")
        if self.canonicalizer not in CANONICALIZERS:
            raise InvariantViolation(
                f"rule {self.name!r}: unknown canonicalizer {self.canonicalizer!r}"
            )
        self._fn = CANONICALIZERS[self.canonicalizer](self.args)

    def apply(self, value: str) -> str:
        if not self.match.search(value):
            return value
        out = self._fn(value)
        if self._fn(out) != out:
            raise InvariantViolation(
                f"rule {self.name!r} is not idempotent on {value!r}"
            )
        return out


@dataclass
class MergeReport:
    groups: list[tuple[str, list[str]]]
    merged_count: int
    initial_visible: int
    final_visible: int
    reduction_pct: float

    def to_dict(self) -> dict:
        return {
            "groups": [{"canonical": c, "merged": m} for c, m in self.groups],
            "merged_count": self.merged_count,
            "initial_visible": self.initial_visible,
            "final_visible": self.final_visible,
            "reduction_pct": round(self.reduction_pct, 1),
        }


def parse_rules(text: str) -> list[MergeRule]:
    """One rule per line: ``name<TAB>field<TAB>pattern<TAB>canonicalizer[<TAB>args...]``.

    Blank lines and ``#`` comments are skipped.
    """
    rules = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) < 4:
            raise ParseError(f"rules line {lineno}: expected at least 4 fields", line=lineno)
        name, fld, pattern, canon = parts[:4]
        try:
            compiled = re.compile(pattern)
        except re.error as e:
            raise ParseError(f"rules line {lineno}: bad pattern: {e}", line=lineno) from None
        rules.append(MergeRule(name, fld, compiled, canon, tuple(parts[4:])))
    return rules


def default_rules() -> list[MergeRule]:
    text = resources.files("ontoterm.data").joinpath("default_rules.tsv").read_text("utf-8")
    return parse_rules(text)


def canonical_key(term: model.TermCandidate, rules: list[MergeRule]) -> tuple[str, str]:
    work = {"surface": term.surface, "lemma": term.lemma}
    for rule in rules:
        work[rule.field] = rule.apply(work[rule.field])
    return (work["surface"], work["lemma"])


def _pick_canonical(terms: list[model.TermCandidate]) -> model.TermCandidate:
    # Encodes the representative preference: frequency first, then length.
    return min(terms, key=lambda t: (-t.occ_count, len(t.surface), t.id))


def _class_changes_for(project: Project, merged_ids: set[str]) -> list[dict]:
    changes = []
    for cls_ in sorted(project.classes.values(), key=lambda c: c.id):
        removed = sorted(mid for mid in cls_.members if mid in merged_ids)
        if not removed:
            continue
        for tid in removed:
            changes.append({"action": "remove_member", "class_id": cls_.id, "term_id": tid})
        if cls_.representative in removed:
            remaining = [project.terms[tid] for tid in cls_.members if tid not in removed]
            if remaining:
                new_rep = _pick_canonical(remaining)
                changes.append(
                    {"action": "set_representative", "class_id": cls_.id, "term_id": new_rep.id}
                )
            else:
                changes.append({"action": "dissolve", "class_id": cls_.id})
    return changes


def apply_merge_rules(
    project: Project, rules: list[MergeRule], actor: str = "merge"
) -> MergeReport:
    """Group visible terms by canonical key and merge each group.

    Idempotent: a second application over the survivors merges nothing.
    """
    visible = project.visible_terms()
    initial_visible = len(visible)
    by_key: dict[tuple[str, str], list[model.TermCandidate]] = {}
    for term in visible.values():
        by_key.setdefault(canonical_key(term, rules), []).append(term)

    groups = []
    merged_ids: set[str] = set()
    for key in sorted(by_key):
        members = by_key[key]
        if len(members) < 2:
            continue
        canonical = _pick_canonical(members)
        dups = sorted(t.id for t in members if t.id != canonical.id)
        groups.append({"canonical": canonical.id, "merged": dups})
        merged_ids.update(dups)

    if groups:
        project.commit(
            actor,
            "merged",
            {"groups": groups, "class_changes": _class_changes_for(project, merged_ids)},
        )
    merged_count = len(merged_ids)
    return MergeReport(
        groups=[(g["canonical"], g["merged"]) for g in groups],
        merged_count=merged_count,
        initial_visible=initial_visible,
        final_visible=initial_visible - merged_count,
        reduction_pct=(100.0 * merged_count / initial_visible) if initial_visible else 0.0,
    )


def merge(
    project: Project, canonical_id: str, duplicate_ids: list[str], actor: str = "merge"
) -> None:
    """Merge duplicates into the canonical term, transferring counts."""
    for tid in [canonical_id, *duplicate_ids]:
        if tid not in project.terms:
            raise UnknownTerm(f"no term {tid!r}")
    if canonical_id in duplicate_ids:
        raise SelfMerge(f"cannot merge {canonical_id!r} into itself")
    if not project.terms[canonical_id].visible:
        raise AlreadyMerged(f"canonical {canonical_id!r} is itself merged")
    for tid in duplicate_ids:
        if not project.terms[tid].visible:
            raise AlreadyMerged(f"term {tid!r} is already merged")
    if len(set(duplicate_ids)) != len(duplicate_ids):
        raise InvariantViolation("duplicate ids repeated in merge request")
    if not duplicate_ids:
        raise InvariantViolation("nothing to merge")
    merged_ids = set(duplicate_ids)
    project.commit(
        actor,
        "merged",
        {
            "groups": [{"canonical": canonical_id, "merged": sorted(duplicate_ids)}],
            "class_changes": _class_changes_for(project, merged_ids),
        },
    )


def unmerge(project: Project, term_id: str, actor: str = "merge") -> None:
    """Restore a merged term and give its count back from the canonical."""
    term = project.terms.get(term_id)
    if term is None:
        raise UnknownTerm(f"no term {term_id!r}")
    if term.merged_into is None:
        raise NotMerged(f"term {term_id!r} is not merged")
    project.commit(actor, "unmerged", {"term_id": term_id})


# ----------------------------------------------------------------------
# Structural relations (visible terms only)


def subterms_of(project: Project, term_id: str) -> set[str]:
    term = project.terms.get(term_id)
    if term is None:
        raise UnknownTerm(f"no term {term_id!r}")
    return {
        tid
        for tid, t in project.visible_terms().items()
        if is_subterm(t.lemma, term.lemma)
    }


def superterms_of(project: Project, term_id: str) -> set[str]:
    term = project.terms.get(term_id)
    if term is None:
        raise UnknownTerm(f"no term {term_id!r}")
    return {
        tid
        for tid, t in project.visible_terms().items()
        if is_subterm(term.lemma, t.lemma)
    }


# ----------------------------------------------------------------------
# Synonym classes


def _check_term_classifiable(project: Project, term_id: str) -> None:
    term = project.terms.get(term_id)
    if term is None:
        raise UnknownTerm(f"no term {term_id!r}")
    if not term.visible:
        raise AlreadyMerged(f"merged term {term_id!r} cannot join a class")
    existing = project.class_of_term(term_id)
    if existing is not None:
        raise AlreadyClassified(
            f"term {term_id!r} already belongs to class {existing.id!r}",
            class_id=existing.id,
        )


def _check_link_type(link_type: str) -> None:
    if link_type not in LINK_TYPES:
        raise InvariantViolation(f"unknown link type {link_type!r}")


def create_class(
    project: Project,
    representative_id: str,
    members: list[tuple[str, str]],
    actor: str = "class",
) -> str:
    """New synonym class; the representative is auto-included as exact."""
    member_map: dict[str, str] = {}
    for tid, link in members:
        _check_link_type(link)
        member_map[tid] = link
    member_map[representative_id] = "exact"
    for tid in member_map:
        _check_term_classifiable(project, tid)
    with project._lock:
        class_id = project.next_class_id()
        project._class_seq -= 1  # commit re-derives the counter from the id
        project.commit(
            actor,
            "class_created",
            {
                "class_id": class_id,
                "representative": representative_id,
                "members": sorted(member_map.items()),
            },
        )
    return class_id


def _get_class(project: Project, class_id: str) -> model.SynonymClass:
    cls_ = project.classes.get(class_id)
    if cls_ is None:
        raise UnknownClass(f"no class {class_id!r}")
    return cls_


def add_member(
    project: Project, class_id: str, term_id: str, link_type: str, actor: str = "class"
) -> None:
    _get_class(project, class_id)
    _check_link_type(link_type)
    _check_term_classifiable(project, term_id)
    project.commit(
        actor,
        "class_member_added",
        {"class_id": class_id, "term_id": term_id, "link_type": link_type},
    )


def remove_member(project: Project, class_id: str, term_id: str, actor: str = "class") -> None:
    cls_ = _get_class(project, class_id)
    if term_id not in cls_.members:
        raise NotAMember(f"term {term_id!r} is not in class {class_id!r}")
    if term_id == cls_.representative:
        raise InvariantViolation(
            "cannot remove the representative; set another representative first"
        )
    project.commit(
        actor, "class_member_removed", {"class_id": class_id, "term_id": term_id}
    )


def set_representative(
    project: Project, class_id: str, term_id: str, actor: str = "class"
) -> None:
    cls_ = _get_class(project, class_id)
    if term_id not in cls_.members:
        raise NotAMember(f"term {term_id!r} is not in class {class_id!r}")
    project.commit(
        actor, "class_representative_set", {"class_id": class_id, "term_id": term_id}
    )


def dissolve_class(project: Project, class_id: str, actor: str = "class") -> None:
    _get_class(project, class_id)
    project.commit(actor, "class_dissolved", {"class_id": class_id})


# ----------------------------------------------------------------------
# Synonym-candidate hints (precomputed variation links, format provisional)


def parse_hints(text: str) -> list[tuple[str, str]]:
    """Two tab-separated term surfaces per line; suggestions only."""
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError(f"hints line {lineno}: expected 2 fields", line=lineno)
        pairs.append((parts[0], parts[1]))
    return pairs


def suggest_memberships(project: Project, pairs: list[tuple[str, str]]) -> list[dict]:
    """Resolve hint pairs against visible terms; nothing is committed."""
    by_surface: dict[str, str] = {}
    for tid, term in project.visible_terms().items():
        by_surface.setdefault(term.surface, tid)
    suggestions = []
    for a, b in pairs:
        ta, tb = by_surface.get(a), by_surface.get(b)
        if ta and tb and ta != tb:
            suggestions.append({"term_a": ta, "term_b": tb, "link_type": "quasi"})
    return suggestions
