"""Boolean filter expressions over term fields, relations and statuses.

Grammar (EBNF)::

    expr   := or
    or     := and ("or" and)*
    and    := not ("and" not)*
    not    := "not" not | atom
    atom   := "(" expr ")" | "all" | "visible(" bool ")"
            | field op value
            | "status(" user "," label ")"
            | "subterms(" expr ")"
            | "sharedhead(" id ")" | "sharedexp(" id ")"

with fields surface, lemma, pos, head, expansion, words, occ and operators
``= != ~ >= <= > <``.  String values are double-quoted with backslash
escapes; the ``~`` pattern operator is an (unanchored) regular-expression
substring match.  Precedence: not > and > or.

The default evaluation domain is visible (unmerged) terms; an expression
mentioning ``visible(false)`` is evaluated over all terms instead.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field as dc_field

from . import collab
from .errors import FilterSyntaxError, UnknownTerm
from .model import Project, TermCandidate
from .textutil import tokens

TEXT_FIELDS = ("surface", "lemma", "pos", "head", "expansion")
NUM_FIELDS = ("words", "occ")
FIELDS = TEXT_FIELDS + NUM_FIELDS
OPS = ("=", "!=", "~", ">=", "<=", ">", "<")
SORT_FIELDS = ("surface", "lemma", "occ", "words", "head", "expansion")


# ----------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class All:
    pass


@dataclass(frozen=True)
class Visible:
    value: bool


@dataclass(frozen=True)
class FieldCmp:
    field: str
    op: str
    value: object  # str for text fields, int for numeric fields


@dataclass(frozen=True)
class StatusIs:
    user: str
    label: str


@dataclass(frozen=True)
class SharesHeadWith:
    term_id: str


@dataclass(frozen=True)
class SharesExpansionWith:
    term_id: str


@dataclass(frozen=True)
class SubtermOfMatches:
    expr: object


@dataclass(frozen=True)
class Not:
    expr: object


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


# ----------------------------------------------------------------------
# Lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<op>!=|>=|<=|[=~><(),])
  | (?P<word>[\w.:\-]+)
    """,
    re.VERBOSE,
)


def _lex_filter(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise FilterSyntaxError(
                f"unexpected character {text[pos]!r} at position {pos}", pos
            )
        if m.lastgroup == "string":
            out.append(("string", m.group(0), pos))
        elif m.lastgroup == "op":
            out.append(("op", m.group(0), pos))
        elif m.lastgroup == "word":
            out.append(("word", m.group(0), pos))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


def _unquote(raw: str) -> str:
    body = raw[1:-1]
    return re.sub(r"\\(.)", lambda m: m.group(1), body)


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _lex_filter(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, expected: str):
        kind, value, pos = self.peek()
        got = "end of input" if kind == "end" else repr(value)
        raise FilterSyntaxError(
            f"syntax error at position {pos}: expected {expected}, got {got}",
            pos,
            expected=expected,
        )

    def expect_op(self, op: str):
        kind, value, _ = self.peek()
        if kind == "op" and value == op:
            return self.next()
        self.fail(repr(op))

    def parse(self):
        expr = self.parse_or()
        if self.peek()[0] != "end":
            self.fail("end of input")
        return expr

    def parse_or(self):
        items = [self.parse_and()]
        while self.peek()[:2] == ("word", "or"):
            self.next()
            items.append(self.parse_and())
        flat = []
        for it in items:
            flat.extend(it.items) if isinstance(it, Or) else flat.append(it)
        return flat[0] if len(flat) == 1 else Or(tuple(flat))

    def parse_and(self):
        items = [self.parse_not()]
        while self.peek()[:2] == ("word", "and"):
            self.next()
            items.append(self.parse_not())
        flat = []
        for it in items:
            flat.extend(it.items) if isinstance(it, And) else flat.append(it)
        return flat[0] if len(flat) == 1 else And(tuple(flat))

    def parse_not(self):
        if self.peek()[:2] == ("word", "not"):
            self.next()
            return Not(self.parse_not())
        return self.parse_atom()

    def parse_atom(self):
        kind, value, pos = self.peek()
        if kind == "op" and value == "(":
            self.next()
            expr = self.parse_or()
            self.expect_op(")")
            return expr
        if kind != "word":
            self.fail("an atom")
        if value == "all":
            self.next()
            return All()
        if value == "visible":
            self.next()
            self.expect_op("(")
            b = self.parse_bool()
            self.expect_op(")")
            return Visible(b)
        if value == "status":
            self.next()
            self.expect_op("(")
            user = self.parse_name("a user")
            self.expect_op(",")
            label = self.parse_name("a status label")
            self.expect_op(")")
            return StatusIs(user, label)
        if value == "subterms":
            self.next()
            self.expect_op("(")
            inner = self.parse_or()
            self.expect_op(")")
            return SubtermOfMatches(inner)
        if value in ("sharedhead", "sharedexp"):
            self.next()
            self.expect_op("(")
            tid = self.parse_name("a term id")
            self.expect_op(")")
            return SharesHeadWith(tid) if value == "sharedhead" else SharesExpansionWith(tid)
        if value in FIELDS:
            return self.parse_field_cmp()
        self.fail("a field name, 'all', 'visible', 'status', 'subterms', "
                  "'sharedhead' or 'sharedexp'")

    def parse_bool(self) -> bool:
        kind, value, _ = self.peek()
        if kind == "word" and value in ("true", "false"):
            self.next()
            return value == "true"
        self.fail("'true' or 'false'")

    def parse_name(self, what: str) -> str:
        kind, value, _ = self.peek()
        if kind == "string":
            self.next()
            return _unquote(value)
        if kind == "word":
            self.next()
            return value
        self.fail(what)

    def parse_field_cmp(self):
        _, field, fpos = self.next()
        kind, op, opos = self.peek()
        if kind != "op" or op not in OPS:
            self.fail("a comparison operator")
        self.next()
        if field in NUM_FIELDS:
            if op == "~":
                raise FilterSyntaxError(
                    f"pattern operator '~' not valid for numeric field {field!r}"
                    f" at position {opos}", opos)
            kind, raw, vpos = self.peek()
            if kind == "word" and raw.isdigit():
                self.next()
                return FieldCmp(field, op, int(raw))
            self.fail("an integer")
        else:
            if op in (">", "<", ">=", "<="):
                raise FilterSyntaxError(
                    f"numeric operator {op!r} not valid for text field {field!r}"
                    f" at position {opos}", opos)
            kind, raw, vpos = self.peek()
            if kind == "string":
                self.next()
                return FieldCmp(field, op, _unquote(raw))
            self.fail("a quoted string")


def parse_filter(text: str):
    """Parse filter text; parse-then-print-then-parse is a fixpoint."""
    return _Parser(text).parse()


def to_text(expr) -> str:
    """Canonical rendering, inverse of :func:`parse_filter` up to layout."""
    if isinstance(expr, All):
        return "all"
    if isinstance(expr, Visible):
        return f"visible({'true' if expr.value else 'false'})"
    if isinstance(expr, FieldCmp):
        v = expr.value if isinstance(expr.value, int) else _quote(expr.value)
        return f"{expr.field} {expr.op} {v}"
    if isinstance(expr, StatusIs):
        return f"status({_quote(expr.user)}, {_quote(expr.label)})"
    if isinstance(expr, SharesHeadWith):
        return f"sharedhead({_quote(expr.term_id)})"
    if isinstance(expr, SharesExpansionWith):
        return f"sharedexp({_quote(expr.term_id)})"
    if isinstance(expr, SubtermOfMatches):
        return f"subterms({to_text(expr.expr)})"
    if isinstance(expr, Not):
        inner = to_text(expr.expr)
        if isinstance(expr.expr, (And, Or)):
            inner = f"({inner})"
        return f"not {inner}"
    if isinstance(expr, And):
        parts = []
        for item in expr.items:
            s = to_text(item)
            if isinstance(item, Or):
                s = f"({s})"
            parts.append(s)
        return " and ".join(parts)
    if isinstance(expr, Or):
        return " or ".join(to_text(item) for item in expr.items)
    raise TypeError(f"not a filter node: {expr!r}")


# ----------------------------------------------------------------------
# Evaluation


def _field_value(term: TermCandidate, field: str):
    return {
        "surface": term.surface,
        "lemma": term.lemma,
        "pos": term.pos,
        "head": term.head_lemma,
        "expansion": term.expansion_lemma,
        "words": term.word_count,
        "occ": term.occ_count,
    }[field]


def _cmp(op: str, actual, wanted) -> bool:
    if op == "=":
        return actual == wanted
    if op == "!=":
        return actual != wanted
    if op == "~":
        return re.search(wanted, actual) is not None
    if op == ">=":
        return actual >= wanted
    if op == "<=":
        return actual <= wanted
    if op == ">":
        return actual > wanted
    return actual < wanted


class _Indexes:
    """Per-snapshot lookup structures; cached on the project by version."""

    def __init__(self, project: Project):
        self.token_lists = {tid: tuple(tokens(t.lemma)) for tid, t in project.terms.items()}
        self.by_ngram: dict[tuple, set[str]] = {}
        for tid, toks in self.token_lists.items():
            self.by_ngram.setdefault(toks, set()).add(tid)

    def subterm_ids_of(self, term_id: str) -> set[str]:
        toks = self.token_lists[term_id]
        out: set[str] = set()
        for length in range(1, len(toks)):
            for start in range(len(toks) - length + 1):
                out |= self.by_ngram.get(toks[start : start + length], set())
        # Full-length spans are never looked up, so terms with an identical
        # token stream are correctly excluded (a term is not its own sub-term).
        out.discard(term_id)
        return out


def _indexes(project: Project) -> _Indexes:
    cached = getattr(project, "_filter_indexes", None)
    if cached is not None and cached[0] == project.version:
        return cached[1]
    idx = _Indexes(project)
    project._filter_indexes = (project.version, idx)
    return idx


def _mentions_visible_false(expr) -> bool:
    if isinstance(expr, Visible) and expr.value is False:
        return True
    if isinstance(expr, Not):
        return _mentions_visible_false(expr.expr)
    if isinstance(expr, (And, Or)):
        return any(_mentions_visible_false(i) for i in expr.items)
    if isinstance(expr, SubtermOfMatches):
        return _mentions_visible_false(expr.expr)
    return False


def evaluate(expr, project: Project, viewer: str | None = None) -> set[str]:
    """Set of term ids satisfying ``expr``.

    ``viewer`` scopes status atoms to what that user may see under the
    project's validation scheme; ``None`` means unrestricted (local/batch
    use).  Unsatisfiable filters yield the empty set, never an error.
    """
    result = _eval(expr, project, viewer)
    if not _mentions_visible_false(expr):
        result = {tid for tid in result if project.terms[tid].visible}
    return result


def _eval(expr, project: Project, viewer) -> set[str]:
    domain = set(project.terms)
    if isinstance(expr, All):
        return domain
    if isinstance(expr, Visible):
        return {tid for tid in domain if project.terms[tid].visible == expr.value}
    if isinstance(expr, FieldCmp):
        return {
            tid for tid in domain
            if _cmp(expr.op, _field_value(project.terms[tid], expr.field), expr.value)
        }
    if isinstance(expr, StatusIs):
        out = set()
        for tid in domain:
            for rec in collab.visible_full_records(project, viewer, tid):
                if rec.user == expr.user and rec.label == expr.label:
                    out.add(tid)
                    break
        return out
    if isinstance(expr, SharesHeadWith):
        ref = project.terms.get(expr.term_id)
        if ref is None:
            return set()
        return {tid for tid in domain if project.terms[tid].head_lemma == ref.head_lemma}
    if isinstance(expr, SharesExpansionWith):
        ref = project.terms.get(expr.term_id)
        if ref is None or not ref.expansion_lemma:
            return set()
        return {
            tid for tid in domain
            if project.terms[tid].expansion_lemma == ref.expansion_lemma
        }
    if isinstance(expr, SubtermOfMatches):
        base = _eval(expr.expr, project, viewer)
        idx = _indexes(project)
        out = set(base)
        for tid in base:
            out |= idx.subterm_ids_of(tid)
        return out
    if isinstance(expr, Not):
        return domain - _eval(expr.expr, project, viewer)
    if isinstance(expr, And):
        result = _eval(expr.items[0], project, viewer)
        for item in expr.items[1:]:
            result &= _eval(item, project, viewer)
        return result
    if isinstance(expr, Or):
        result = set()
        for item in expr.items:
            result |= _eval(item, project, viewer)
        return result
    raise TypeError(f"not a filter node: {expr!r}")


# ----------------------------------------------------------------------
# Sorting


def parse_sort_keys(text: str) -> list[tuple[str, str]]:
    """Parse ``field:asc,field:desc`` key lists."""
    keys = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        field, _, direction = part.partition(":")
        direction = direction or "asc"
        if field not in SORT_FIELDS:
            raise FilterSyntaxError(f"unknown sort field {field!r}", 0)
        if direction not in ("asc", "desc"):
            raise FilterSyntaxError(f"bad sort direction {direction!r}", 0)
        keys.append((field, direction))
    if not keys:
        raise FilterSyntaxError("empty sort key list", 0)
    return keys


def sort_terms(
    ids, keys: list[tuple[str, str]], project: Project
) -> list[str]:
    """Stable total order per keys; ties always broken by ascending id.

    Text fields compare by case-sensitive codepoint order, so surfaces
    starting with special characters sort first.
    """
    for tid in ids:
        if tid not in project.terms:
            raise UnknownTerm(f"no term {tid!r}")
    ordered = sorted(ids)
    for field, direction in reversed(keys):
        ordered.sort(
            key=lambda tid: _field_value(project.terms[tid], field),
            reverse=(direction == "desc"),
        )
    return ordered
