"""Per-user validation statuses, visibility schemes, and versioned commits.

Visibility rules:

* ``open`` — everyone sees every record.
* ``blind`` — a viewer sees their own record; for other users only the
  fact that a record exists, until the viewer has committed their own
  status on that term, after which all records become visible.
* ``double_blind`` — a viewer sees only their own record; the reconciler
  sees everything.

Consensus/controversy aggregates are computed over all records but stay
anonymous (term-level sets only), so they leak no individual labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import InvariantViolation, UnknownTerm, UnknownUser, WorkbenchError
from .model import STATUS_LABELS, Project, ValidationRecord, now_iso

CONSENSUS_MODES = ("consensus_valid", "consensus_invalid", "controversy")


def add_user(project: Project, user: str, actor: str = "admin") -> None:
    if not user:
        raise InvariantViolation("user id must be non-empty")
    if user in project.users:
        return
    project.commit(actor, "user_added", {"user": user})


def _check_status_args(project: Project, user: str, term_id: str, label: str) -> None:
    if user not in project.users:
        raise UnknownUser(f"no user {user!r} in project")
    if term_id not in project.terms:
        raise UnknownTerm(f"no term {term_id!r}")
    if label not in STATUS_LABELS:
        raise InvariantViolation(
            f"label must be one of {', '.join(STATUS_LABELS)}, got {label!r}"
        )


def set_status(
    project: Project, user: str, term_id: str, label: str, comment: str = "",
) -> int:
    """Upsert the (user, term) record; history stays in the journal."""
    _check_status_args(project, user, term_id, label)
    return project.commit(
        user,
        "statuses_set",
        {
            "records": [
                {
                    "user": user,
                    "term_id": term_id,
                    "label": label,
                    "comment": comment,
                    "timestamp": now_iso(),
                }
            ]
        },
    )


def set_statuses(project: Project, user: str, updates: list[dict]) -> int:
    """Bulk upsert as a single journal event (grouped validation)."""
    if not updates:
        raise InvariantViolation("empty status batch")
    ts = now_iso()
    records = []
    for u in updates:
        _check_status_args(project, user, u["term_id"], u["label"])
        records.append(
            {
                "user": user,
                "term_id": u["term_id"],
                "label": u["label"],
                "comment": u.get("comment", ""),
                "timestamp": ts,
            }
        )
    return project.commit(user, "statuses_set", {"records": records})


def visible_full_records(
    project: Project, viewer: Optional[str], term_id: str
) -> list[ValidationRecord]:
    """Records the viewer may see in full; redacted ones are omitted.

    ``viewer=None`` means unrestricted access (local batch use).
    """
    records = sorted(project.validations.get(term_id, {}).values(), key=lambda r: r.user)
    if viewer is None:
        return records
    mode = project.scheme.mode
    if mode == "open":
        return records
    if mode == "double_blind":
        if viewer == project.scheme.reconciler:
            return records
        return [r for r in records if r.user == viewer]
    # blind: own record always; all records once the viewer has committed one
    if any(r.user == viewer for r in records):
        return records
    return [r for r in records if r.user == viewer]


def visible_statuses(
    project: Project, viewer: Optional[str], term_id: str
) -> list[dict]:
    """Scheme-filtered payload: full records plus anonymous placeholders.

    Hidden records appear as ``{"redacted": true}`` only under the blind
    scheme (existence is public there); under double-blind they are absent.
    """
    if term_id not in project.terms:
        raise UnknownTerm(f"no term {term_id!r}")
    full = visible_full_records(project, viewer, term_id)
    payload = [
        {
            "user": r.user,
            "label": r.label,
            "comment": r.comment,
            "timestamp": r.timestamp,
        }
        for r in full
    ]
    if viewer is not None and project.scheme.mode == "blind":
        hidden = len(project.validations.get(term_id, {})) - len(full)
        payload.extend({"redacted": True} for _ in range(hidden))
    return payload


def consensus(project: Project, term_ids, mode: str) -> set[str]:
    """Terms with agreeing (>= 2 validators) or conflicting judgments."""
    if mode not in CONSENSUS_MODES:
        raise InvariantViolation(f"mode must be one of {', '.join(CONSENSUS_MODES)}")
    out = set()
    for tid in term_ids:
        labels = [r.label for r in project.validations.get(tid, {}).values()]
        n_valid = labels.count("valid")
        n_invalid = labels.count("invalid")
        if mode == "consensus_valid":
            ok = len(labels) >= 2 and n_valid == len(labels)
        elif mode == "consensus_invalid":
            ok = len(labels) >= 2 and n_invalid == len(labels)
        else:
            ok = n_valid >= 1 and n_invalid >= 1
        if ok:
            out.add(tid)
    return out


# ----------------------------------------------------------------------
# Optimistic versioned commits


@dataclass
class Command:
    expected_version: int
    actor: str
    op: str
    args: dict = field(default_factory=dict)


@dataclass
class CommitResult:
    ok: bool
    version: int  # new version on success; current version on conflict
    error: Optional[dict] = None
    result: object = None

    @classmethod
    def conflict(cls, current_version: int) -> "CommitResult":
        return cls(ok=False, version=current_version,
                   error={"code": "conflict", "current_version": current_version})


def _ops() -> dict:
    # Imported lazily: variants/ontology import model only, no cycle, but
    # keeping the table in one place documents the command surface.
    from . import model as m
    from . import ontology, variants

    return {
        "add_terms": lambda p, a, args: m.add_terms(p, args["candidates"], actor=a),
        "add_user": lambda p, a, args: add_user(p, args["user"], actor=a),
        "set_status": lambda p, a, args: set_status(
            p, a, args["term_id"], args["label"], args.get("comment", "")
        ),
        "set_statuses": lambda p, a, args: set_statuses(p, a, args["updates"]),
        "merge": lambda p, a, args: variants.merge(
            p, args["canonical_id"], args["duplicate_ids"], actor=a
        ),
        "unmerge": lambda p, a, args: variants.unmerge(p, args["term_id"], actor=a),
        "apply_merge_rules": lambda p, a, args: variants.apply_merge_rules(
            p,
            variants.parse_rules(args["rules_text"])
            if args.get("rules_text")
            else variants.default_rules(),
            actor=a,
        ).to_dict(),
        "create_class": lambda p, a, args: variants.create_class(
            p, args["representative_id"],
            [(m_[0], m_[1]) for m_ in args.get("members", [])], actor=a,
        ),
        "add_member": lambda p, a, args: variants.add_member(
            p, args["class_id"], args["term_id"], args["link_type"], actor=a
        ),
        "remove_member": lambda p, a, args: variants.remove_member(
            p, args["class_id"], args["term_id"], actor=a
        ),
        "set_representative": lambda p, a, args: variants.set_representative(
            p, args["class_id"], args["term_id"], actor=a
        ),
        "dissolve_class": lambda p, a, args: variants.dissolve_class(
            p, args["class_id"], actor=a
        ),
        "promote": lambda p, a, args: ontology.promote(
            p, args["source_id"], args.get("label_override"),
            informal=args.get("informal", False), actor=a,
        ),
        "add_is_a": lambda p, a, args: ontology.add_is_a(
            p, args["child"], args["parent"], actor=a
        ),
        "remove_is_a": lambda p, a, args: ontology.remove_is_a(
            p, args["child"], args["parent"], actor=a
        ),
        "move_subtree": lambda p, a, args: ontology.move_subtree(
            p, args["concept"], args["old_parent"], args["new_parent"], actor=a
        ),
    }


def commit_command(project: Project, command: Command) -> CommitResult:
    """Serialized optimistic commit; Conflict is a result, not an exception.

    The command applies iff ``expected_version`` equals the project version
    at dequeue time.  Domain errors (unknown ids, cycles, ...) propagate as
    exceptions and leave the version unchanged.
    """
    ops = _ops()
    handler = ops.get(command.op)
    if handler is None:
        raise InvariantViolation(f"unknown operation {command.op!r}")
    with project._lock:
        if command.expected_version != project.version:
            return CommitResult.conflict(project.version)
        result = handler(project, command.actor, command.args)
        return CommitResult(ok=True, version=project.version, result=result)
