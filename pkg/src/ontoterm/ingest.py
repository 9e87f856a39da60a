"""Import of term-extractor output and corpora, plus the occurrence index.

Term lists arrive as delimited files (comma or tab, header row required) or
as the XML adapter layout documented in the README for extractor output.
Corpus text is indexed for literal, token-boundary surface matches only;
extractor occurrence counts stay authoritative.
"""

from __future__ import annotations

import csv
import io
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

from . import model
from .errors import (
    EncodingError,
    InvariantViolation,
    MissingRequiredColumn,
    ParseError,
    UnknownTerm,
)
from .textutil import lex, word_tokens

REQUIRED_COLUMNS = ("surface", "lemma", "pos")
OPTIONAL_COLUMNS = ("head_lemma", "expansion_lemma", "occ_count", "word_count", "doc_refs")

_SENTENCE_RE = re.compile(r"(?<=[.!?])\s+")


@dataclass
class ImportReport:
    accepted: int = 0
    rejected: int = 0
    rejections: list[tuple[int, str]] = field(default_factory=list)
    duplicate_count: int = 0
    term_ids: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "rejected": self.rejected,
            "rejections": [{"line": ln, "reason": r} for ln, r in self.rejections],
            "duplicate_count": self.duplicate_count,
        }


@dataclass
class CorpusDoc:
    doc_id: str
    sections: list[tuple[str, str]]  # (section name, text)


def _decode(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise EncodingError(f"input is not valid UTF-8: {e}") from None


def _default_head_expansion(lemma: str) -> tuple[str, str]:
    # Right-headed default for English noun phrases: head is the last lemma
    # token, expansion the remaining prefix.
    toks = word_tokens(lemma)
    if len(toks) <= 1:
        return lemma, ""
    return toks[-1], " ".join(toks[:-1])


def import_tsv(
    project: model.Project,
    data: bytes,
    column_map: dict[str, str] | None = None,
    actor: str = "import",
) -> ImportReport:
    """Import a delimited term list; malformed rows are recorded, not fatal.

    ``column_map`` maps logical names (surface, lemma, pos, head_lemma,
    expansion_lemma, occ_count) to header names; defaults to the canonical
    header names themselves.  Extra columns are ignored.
    """
    text = _decode(data)
    report = ImportReport()
    if not text.strip():
        return report
    first_line = text.splitlines()[0]
    delimiter = "\t" if "\t" in first_line else ","
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    rows = list(reader)
    header = rows[0]
    colmap = dict(column_map or {})
    for logical in REQUIRED_COLUMNS + OPTIONAL_COLUMNS:
        colmap.setdefault(logical, logical)
    index: dict[str, int] = {}
    for logical in REQUIRED_COLUMNS:
        name = colmap[logical]
        if name not in header:
            raise MissingRequiredColumn(f"required column {name!r} not in header")
        index[logical] = header.index(name)
    for logical in OPTIONAL_COLUMNS:
        name = colmap[logical]
        if name in header:
            index[logical] = header.index(name)

    candidates: list[dict] = []
    candidate_lines: list[int] = []
    seen: dict[tuple[str, str, str], int] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not any(cell.strip() for cell in row):
            continue

        def cell(logical: str) -> str | None:
            i = index.get(logical)
            if i is None or i >= len(row):
                return None
            return row[i]

        surface = (cell("surface") or "").strip()
        lemma = (cell("lemma") or "").strip()
        pos = (cell("pos") or "").strip()
        if not surface or not lemma or not pos:
            report.rejected += 1
            report.rejections.append((lineno, "missing surface, lemma or pos"))
            continue
        occ_raw = cell("occ_count")
        try:
            occ = int(occ_raw) if occ_raw not in (None, "") else 0
        except ValueError:
            report.rejected += 1
            report.rejections.append((lineno, f"bad occ_count {occ_raw!r}"))
            continue
        wc_raw = cell("word_count")
        word_count = len(word_tokens(lemma))
        if wc_raw not in (None, ""):
            try:
                declared = int(wc_raw)
            except ValueError:
                report.rejected += 1
                report.rejections.append((lineno, f"bad word_count {wc_raw!r}"))
                continue
            if declared != word_count:
                report.rejected += 1
                report.rejections.append(
                    (lineno, f"declared word_count {declared} but lemma has {word_count} tokens")
                )
                continue
        head = (cell("head_lemma") or "").strip()
        expansion = (cell("expansion_lemma") or "").strip()
        if not head:
            head, default_exp = _default_head_expansion(lemma)
            if not expansion:
                expansion = default_exp
        triple = (surface, lemma, pos)
        if project.find_triple(*triple) is not None or triple in seen:
            report.rejected += 1
            report.duplicate_count += 1
            report.rejections.append((lineno, f"duplicate term {surface!r}"))
            continue
        seen[triple] = lineno
        candidates.append(
            {
                "surface": surface,
                "lemma": lemma,
                "pos": pos,
                "head_lemma": head,
                "expansion_lemma": expansion,
                "word_count": word_count,
                "occ_count": occ,
            }
        )
        candidate_lines.append(lineno)

    # Validate individually so one bad row cannot abort the batch.
    accepted: list[dict] = []
    for lineno, c in zip(candidate_lines, candidates):
        try:
            model.validate_candidate(
                c["surface"], c["lemma"], c["pos"], c["head_lemma"],
                c["expansion_lemma"], c["word_count"], c["occ_count"],
            )
        except InvariantViolation as e:
            report.rejected += 1
            report.rejections.append((lineno, e.message))
            continue
        accepted.append(c)
    report.term_ids = model.add_terms(project, accepted, actor=actor)
    report.accepted = len(accepted)
    return report


def import_yatea(project: model.Project, data: bytes, actor: str = "import") -> ImportReport:
    """Import extractor output in the XML adapter layout.

    Expected layout (unknown elements are ignored)::

        <termlist>
          <term>
            <lemma>mature avocado tree</lemma>     <!-- required -->
            <surface>mature avocado trees</surface>
            <pos>NP</pos>
            <head>tree</head>
            <expansion>mature avocado</expansion>
            <occurrences count="12"/>
          </term>
        </termlist>

    A term element missing its lemma is rejected with its position; parsing
    continues with the remaining elements.
    """
    text = _decode(data)
    try:
        root = ET.fromstring(text)
    except ET.ParseError as e:
        line, col = e.position
        raise ParseError(f"malformed XML: {e}", line=line) from None
    report = ImportReport()
    candidates = []
    positions = []
    seen: dict[tuple[str, str, str], int] = {}
    for i, el in enumerate(root.iter("term"), start=1):
        lemma_el = el.find("lemma")
        lemma = (lemma_el.text or "").strip() if lemma_el is not None else ""
        if not lemma:
            report.rejected += 1
            report.rejections.append((i, "term element missing lemma"))
            continue
        surface_el = el.find("surface")
        surface = (surface_el.text or "").strip() if surface_el is not None else lemma
        pos_el = el.find("pos")
        pos = (pos_el.text or "").strip() if pos_el is not None else "NP"
        head_el = el.find("head")
        head = (head_el.text or "").strip() if head_el is not None else ""
        exp_el = el.find("expansion")
        expansion = (exp_el.text or "").strip() if exp_el is not None else ""
        occ = 0
        occ_el = el.find("occurrences")
        if occ_el is not None and occ_el.get("count"):
            try:
                occ = int(occ_el.get("count"))
            except ValueError:
                report.rejected += 1
                report.rejections.append((i, f"bad occurrence count {occ_el.get('count')!r}"))
                continue
        word_count = len(word_tokens(lemma))
        if not head:
            head, default_exp = _default_head_expansion(lemma)
            if not expansion:
                expansion = default_exp
        triple = (surface, lemma, pos)
        if project.find_triple(*triple) is not None or triple in seen:
            report.rejected += 1
            report.duplicate_count += 1
            report.rejections.append((i, f"duplicate term {surface!r}"))
            continue
        seen[triple] = i
        c = {
            "surface": surface,
            "lemma": lemma,
            "pos": pos,
            "head_lemma": head,
            "expansion_lemma": expansion,
            "word_count": word_count,
            "occ_count": occ,
        }
        try:
            model.validate_candidate(
                surface, lemma, pos, head, expansion, word_count, occ
            )
        except InvariantViolation as e:
            report.rejected += 1
            report.rejections.append((i, e.message))
            continue
        candidates.append(c)
        positions.append(i)
    report.term_ids = model.add_terms(project, candidates, actor=actor)
    report.accepted = len(candidates)
    return report


def split_sentences(text: str) -> list[str]:
    return [s for s in _SENTENCE_RE.split(text) if s.strip()]


def find_surface_matches(surface: str, sentence: str) -> list[tuple[int, int]]:
    """Token-boundary, case-insensitive matches; returns char offset spans."""
    needle = [t.lower() for t, _, _ in lex(surface)]
    if not needle:
        return []
    toks = lex(sentence)
    lowered = [t.lower() for t, _, _ in toks]
    spans = []
    for i in range(len(toks) - len(needle) + 1):
        if lowered[i : i + len(needle)] == needle:
            spans.append((toks[i][1], toks[i + len(needle) - 1][2]))
    return spans


def index_contexts(
    project: model.Project, corpus: list[CorpusDoc], actor: str = "index"
) -> dict[str, int]:
    """Rebuild the occurrence index from the corpus; returns counts per term.

    Term occ_count is left unchanged: extractor counts are authoritative and
    index counts are reported separately.
    """
    occurrences = []
    counts: dict[str, int] = {}
    visible = list(project.visible_terms().values())
    for doc in corpus:
        for _section, text in doc.sections:
            for sentence in split_sentences(text):
                for term in visible:
                    for start, end in find_surface_matches(term.surface, sentence):
                        occurrences.append(
                            {
                                "term_id": term.id,
                                "doc_id": doc.doc_id,
                                "sentence_text": sentence,
                                "char_start": start,
                                "char_end": end,
                            }
                        )
                        counts[term.id] = counts.get(term.id, 0) + 1
    project.commit(actor, "contexts_indexed", {"occurrences": occurrences})
    return counts


def kwic(project: model.Project, term_id: str, window: int) -> list[tuple[str, str, str]]:
    """Keyword-in-context lines, ``window`` tokens of context per side."""
    if term_id not in project.terms:
        raise UnknownTerm(f"no term {term_id!r}")
    lines = []
    for occ in project.occurrences.get(term_id, []):
        toks = lex(occ.sentence_text)
        first = next(i for i, (_, s, _) in enumerate(toks) if s >= occ.char_start)
        last = max(i for i, (_, _, e) in enumerate(toks) if e <= occ.char_end)
        left = " ".join(t for t, _, _ in toks[max(0, first - window) : first]) if window else ""
        right = " ".join(t for t, _, _ in toks[last + 1 : last + 1 + window]) if window else ""
        lines.append((left, occ.sentence_text[occ.char_start : occ.char_end], right))
    return lines


def read_corpus_files(paths: list[str | Path], section: str = "body") -> list[CorpusDoc]:
    """One plain-text document per file; doc_id is the file stem."""
    docs = []
    for p in paths:
        p = Path(p)
        docs.append(CorpusDoc(doc_id=p.stem, sections=[(section, p.read_text("utf-8"))]))
    return docs


def read_corpus_manifest(path: str | Path) -> list[CorpusDoc]:
    """Manifest lines: ``doc_id<TAB>path<TAB>section``; paths resolve relative
    to the manifest file."""
    path = Path(path)
    by_doc: dict[str, list[tuple[str, str]]] = {}
    for lineno, line in enumerate(path.read_text("utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError(f"manifest line {lineno}: expected 3 tab-separated fields",
                             line=lineno)
        doc_id, rel, section = parts
        text = (path.parent / rel).read_text("utf-8")
        by_doc.setdefault(doc_id, []).append((section, text))
    return [CorpusDoc(doc_id=d, sections=secs) for d, secs in by_doc.items()]
