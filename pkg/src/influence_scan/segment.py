"""Passage segmentation: sentences and word n-gram chunks.

Word tokens are maximal runs of non-whitespace characters, punctuation
attached. The sentence splitter is rule-based and deterministic: it breaks
after ``.``, ``!`` or ``?`` (plus any closing quote/bracket) when the next
non-space character starts a new sentence, with a fixed abbreviation list
suppressing false breaks. N-gram chunks partition the token stream
(non-overlapping, the default) or slide with stride 1 (overlapping).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

LEVELS = ("sentence", "ngram")

_TOKEN_RE = re.compile(r"\S+")

# Terminator cluster plus any closing quotes/brackets that belong to the sentence.
_TERMINATOR_RE = re.compile(r"([.!?]+)([\"'\)\]’”]*)")

_OPENERS = set("\"'([‘“")

# Titles and scholarly shorthands that end in a period mid-sentence.
_ABBREVIATIONS = {
    "Mr.", "Mrs.", "Dr.", "St.", "Capt.", "Col.", "Gen.", "Lieut.", "Rev.",
    "Prof.", "Hon.", "Messrs.", "Jr.", "Sr.", "Esq.",
    "vol.", "Vol.", "pp.", "viz.", "cf.", "i.e.", "e.g.",
}

# Initials such as "C." or "C.S." never end a sentence.
_INITIAL_RE = re.compile(r"^(?:[A-Z]\.)+$")


@dataclass
class Segment:
    """One comparison unit of a passage.

    ``char_start``/``char_end`` index into the passage string, so
    ``passage[char_start:char_end] == text`` always holds.
    """

    index: int
    level: str
    char_start: int
    char_end: int
    text: str
    word_tokens: list[str] = field(default_factory=list)


@dataclass
class SegmentationConfig:
    level: str = "ngram"
    n: int = 5
    overlap: bool = False
    keep_remainder: bool = True

    def __post_init__(self):
        if self.level not in LEVELS:
            raise ValueError(f"unknown level {self.level!r}")
        if self.level == "ngram" and self.n < 2:
            raise ValueError(f"ngram size must be >= 2, got {self.n}")


def word_tokenize(text: str) -> list[tuple[str, tuple[int, int]]]:
    """Split text into whitespace-delimited tokens with character spans."""
    return [(m.group(), (m.start(), m.end())) for m in _TOKEN_RE.finditer(text)]


def _is_abbreviation(text: str, period_at: int) -> bool:
    """True if the period at ``period_at`` ends an abbreviation or initial."""
    start = period_at
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    word = text[start:period_at + 1].lstrip("\"'([‘“")
    return word in _ABBREVIATIONS or bool(_INITIAL_RE.match(word))


def _sentence_breaks(text: str) -> list[int]:
    breaks = []
    for m in _TERMINATOR_RE.finditer(text):
        cluster = m.group(1)
        after = m.end()
        j = after
        while j < len(text) and text[j].isspace():
            j += 1
        if j < len(text):
            if j == after:
                continue  # terminator glued to the next character (e.g. "3.5")
            nxt = text[j]
            if not (nxt.isupper() or nxt.isdigit() or nxt in _OPENERS):
                continue
        if cluster == "." and _is_abbreviation(text, m.start()):
            continue
        breaks.append(after)
    return breaks


def split_sentences(text: str) -> list[Segment]:
    """Split a normalized passage into sentence segments."""
    segments: list[Segment] = []
    cursor = 0
    for brk in _sentence_breaks(text) + [len(text)]:
        seg = _trimmed_segment(text, cursor, brk, len(segments))
        if seg is not None:
            segments.append(seg)
        cursor = brk
    return segments


def _trimmed_segment(text: str, start: int, end: int, index: int) -> Segment | None:
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    if start >= end:
        return None
    chunk = text[start:end]
    return Segment(
        index=index,
        level="sentence",
        char_start=start,
        char_end=end,
        text=chunk,
        word_tokens=[t for t, _ in word_tokenize(chunk)],
    )


def split_ngrams(text: str, cfg: SegmentationConfig) -> list[Segment]:
    """Split a passage into word n-gram segments per the config."""
    if cfg.level != "ngram":
        raise ValueError("split_ngrams requires an ngram-level config")
    tokens = word_tokenize(text)
    n = cfg.n

    if cfg.overlap:
        groups = [tokens[i:i + n] for i in range(max(0, len(tokens) - n + 1))]
    else:
        groups = [tokens[i:i + n] for i in range(0, len(tokens), n)]
        if groups and len(groups[-1]) < n and not cfg.keep_remainder:
            groups.pop()

    segments = []
    for idx, group in enumerate(groups):
        start = group[0][1][0]
        end = group[-1][1][1]
        segments.append(Segment(
            index=idx,
            level="ngram",
            char_start=start,
            char_end=end,
            text=text[start:end],
            word_tokens=[t for t, _ in group],
        ))
    return segments


def segment_passage(text: str, cfg: SegmentationConfig) -> list[Segment]:
    """Segment a passage at the level named by the config."""
    if cfg.level == "sentence":
        return split_sentences(text)
    return split_ngrams(text, cfg)


def segments_to_jsonl(segments: list[Segment]) -> str:
    """Serialize segments as JSON Lines, one record per segment."""
    lines = []
    for seg in segments:
        lines.append(json.dumps({
            "index": seg.index,
            "level": seg.level,
            "char_start": seg.char_start,
            "char_end": seg.char_end,
            "text": seg.text,
            "tokens": seg.word_tokens,
        }, ensure_ascii=False))
    return "\n".join(lines) + ("\n" if lines else "")


def segments_from_jsonl(content: str) -> list[Segment]:
    segments = []
    for line in content.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        segments.append(Segment(
            index=rec["index"],
            level=rec["level"],
            char_start=rec["char_start"],
            char_end=rec["char_end"],
            text=rec["text"],
            word_tokens=list(rec["tokens"]),
        ))
    return segments
