"""Corpus ingestion: load raw book files, strip boilerplate, extract passages.

Raw e-texts arrive with distribution boilerplate, CRLF line endings, and
hard-wrapped paragraphs. ``load_document`` normalizes all of that into a
stable form the segmenter can rely on:

- Unicode NFC, applied before everything else.
- Boilerplate: everything outside the innermost ``*** START OF`` /
  ``*** END OF`` marker pair is dropped (case-insensitive, marker phrasing
  varies across editions).
- No carriage returns; hard line breaks inside a paragraph become single
  spaces; runs of blank lines collapse to exactly one blank line; no
  leading or trailing whitespace.

Curly quotes and dashes are left as-is: downstream tokenizers handle them,
and folding would desynchronize character offsets.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    EmptyAfterStrip,
    EncodingError,
    ManifestError,
    MarkerNotFound,
    SelectorOutOfRange,
)

_START_MARKER = "*** START OF"
_END_MARKER = "*** END OF"

SELECTOR_MODES = ("char_span", "line_span", "marker_pair")


@dataclass
class TextDocument:
    """One book: normalized text plus provenance metadata."""

    id: str
    title: str
    raw_path: str
    text: str
    char_count: int


@dataclass(frozen=True)
class PassageSelector:
    """Selects one passage of a document.

    ``char_span`` and ``line_span`` use 0-based, end-exclusive integer
    offsets (characters / lines of the normalized text). ``marker_pair``
    takes two marker strings; the passage is the whitespace-trimmed text
    between the unique occurrence of ``start`` and the unique occurrence
    of ``end``.
    """

    mode: str
    start: object
    end: object

    def __post_init__(self):
        if self.mode not in SELECTOR_MODES:
            raise ValueError(f"unknown selector mode {self.mode!r}")


@dataclass
class InstanceSpec:
    """One comparison instance: an authored passage against a source passage."""

    instance_id: int
    candidate_doc: str
    reference_doc: str
    candidate_range: PassageSelector
    reference_range: PassageSelector
    notes: str = ""
    expert_spans: list = field(default_factory=list)  # (side, char_start, char_end)


@dataclass
class DocumentEntry:
    id: str
    title: str
    path: str


@dataclass
class Manifest:
    documents: dict[str, DocumentEntry]
    instances: list[InstanceSpec]


def normalize_text(raw: str) -> str:
    """Apply the full normalization pipeline to raw file content."""
    text = unicodedata.normalize("NFC", raw)
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    lines, had_markers = _strip_boilerplate(text.split("\n"))

    paragraphs: list[str] = []
    current: list[str] = []
    for line in lines:
        stripped = line.strip()
        if stripped:
            current.append(stripped)
        elif current:
            paragraphs.append(" ".join(current))
            current = []
    if current:
        paragraphs.append(" ".join(current))

    normalized = "\n\n".join(paragraphs)
    if had_markers and not normalized:
        raise EmptyAfterStrip("no body text between boilerplate markers")
    return normalized


def _strip_boilerplate(lines: list[str]) -> tuple[list[str], bool]:
    """Drop everything outside the innermost START/END marker pair."""
    starts = [i for i, l in enumerate(lines) if _START_MARKER in l.upper()]
    ends = [i for i, l in enumerate(lines) if _END_MARKER in l.upper()]

    if not starts and not ends:
        return lines, False

    paired_starts = [s for s in starts if any(e > s for e in ends)]
    if paired_starts:
        s = max(paired_starts)
        e = min(e for e in ends if e > s)
        return lines[s + 1:e], True
    if starts:
        return lines[max(starts) + 1:], True
    return lines[:min(ends)], True


def load_document(path: str | Path, id: str, title: str | None = None) -> TextDocument:
    """Load, strip, and normalize one raw text file.

    Raises FileNotFoundError, EncodingError, or EmptyAfterStrip.
    """
    path = Path(path)
    raw_bytes = path.read_bytes()
    try:
        raw = raw_bytes.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EncodingError(f"{path}: not valid UTF-8 ({exc})") from exc
    text = normalize_text(raw)
    return TextDocument(
        id=id,
        title=title if title is not None else id,
        raw_path=str(path),
        text=text,
        char_count=len(text),
    )


def resolve_selector(doc: TextDocument, sel: PassageSelector) -> tuple[int, int]:
    """Resolve a selector to (start, end) character offsets into doc.text."""
    text = doc.text
    if sel.mode == "char_span":
        start, end = int(sel.start), int(sel.end)
        if not (0 <= start < end <= len(text)):
            raise SelectorOutOfRange(
                f"char_span({start}, {end}) outside document of {len(text)} chars"
            )
        return start, end

    if sel.mode == "line_span":
        lines = text.split("\n")
        start, end = int(sel.start), int(sel.end)
        if not (0 <= start < end <= len(lines)):
            raise SelectorOutOfRange(
                f"line_span({start}, {end}) outside document of {len(lines)} lines"
            )
        start_off = sum(len(l) + 1 for l in lines[:start])
        end_off = start_off + len("\n".join(lines[start:end]))
        return start_off, end_off

    # marker_pair
    start_at = _find_unique(text, str(sel.start))
    end_at = _find_unique(text, str(sel.end))
    span_start = start_at + len(str(sel.start))
    if end_at < span_start:
        raise SelectorOutOfRange(
            f"end marker {sel.end!r} precedes start marker {sel.start!r}"
        )
    while span_start < end_at and text[span_start].isspace():
        span_start += 1
    span_end = end_at
    while span_end > span_start and text[span_end - 1].isspace():
        span_end -= 1
    if span_start >= span_end:
        raise SelectorOutOfRange(
            f"empty passage between markers {sel.start!r} and {sel.end!r}"
        )
    return span_start, span_end


def _find_unique(text: str, marker: str) -> int:
    count = text.count(marker)
    if count != 1:
        raise MarkerNotFound(marker, count)
    return text.index(marker)


def extract_passage(doc: TextDocument, sel: PassageSelector) -> str:
    """Extract the selected passage; always a contiguous substring of doc.text."""
    start, end = resolve_selector(doc, sel)
    return doc.text[start:end]


def _parse_selector(obj: dict) -> PassageSelector:
    try:
        return PassageSelector(mode=obj["mode"], start=obj["start"], end=obj["end"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"bad range object {obj!r}: {exc}") from exc


def load_manifest(path: str | Path) -> Manifest:
    """Load a run manifest; document paths are resolved against the manifest's directory."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ManifestError(f"{path}: {exc}") from exc

    documents: dict[str, DocumentEntry] = {}
    for entry in data.get("documents", []):
        try:
            doc = DocumentEntry(
                id=entry["id"],
                title=entry.get("title", entry["id"]),
                path=str(path.parent / entry["path"]),
            )
        except (KeyError, TypeError) as exc:
            raise ManifestError(f"bad document entry {entry!r}: {exc}") from exc
        if doc.id in documents:
            raise ManifestError(f"duplicate document id {doc.id!r}")
        documents[doc.id] = doc

    instances: list[InstanceSpec] = []
    for entry in data.get("instances", []):
        try:
            spec = InstanceSpec(
                instance_id=int(entry["instance_id"]),
                candidate_doc=entry["candidate_doc"],
                reference_doc=entry["reference_doc"],
                candidate_range=_parse_selector(entry["candidate_range"]),
                reference_range=_parse_selector(entry["reference_range"]),
                notes=entry.get("notes", ""),
                expert_spans=[
                    (s["side"], int(s["char_start"]), int(s["char_end"]))
                    for s in entry.get("expert_spans", [])
                ],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"bad instance entry {entry!r}: {exc}") from exc
        if spec.candidate_doc == spec.reference_doc:
            raise ManifestError(
                f"instance {spec.instance_id}: candidate and reference must differ"
            )
        for doc_id in (spec.candidate_doc, spec.reference_doc):
            if doc_id not in documents:
                raise ManifestError(
                    f"instance {spec.instance_id}: unknown document {doc_id!r}"
                )
        instances.append(spec)

    return Manifest(documents=documents, instances=instances)
