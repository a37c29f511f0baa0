"""The two interchange formats this tool speaks.

Input: segment JSONL files as written by `influence-scan segment`, one
object per line with keys {index, level, char_start, char_end, text,
tokens}, living in the analyzer's output layout
``<out>/<instance_id>/<level>/segments_<side>.jsonl``. The instance id
and side are carried by the path, the level by both path and record.

Output: EMBX version 1, little-endian throughout.

    header: "EMBX" | version u32 | dim u32 | segment_count u64
            | backend_name (u16 length + UTF-8)
            | model_id (u16 length + UTF-8) | layer i32
    record: instance_id u32 | side u8 | level u8 | index u32
            | token_count u32 | tokens (u16 length + UTF-8 each)
            | float32 row-major token_count x dim matrix

Sides encode as candidate=0, reference=1; levels as sentence=0, ngram=1.
"""

import json
import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SegmentFileError

MAGIC = b"EMBX"
VERSION = 1
BACKEND_NAME = "transformer"

SIDE_CODE = {"candidate": 0, "reference": 1}
LEVEL_CODE = {"sentence": 0, "ngram": 1}

_PATH_RE = re.compile(
    r"(?P<instance>\d+)[/\\](?P<level>sentence|ngram)[/\\]"
    r"segments_(?P<side>candidate|reference)\.jsonl\Z")


@dataclass(frozen=True)
class SegmentKey:
    """Identity of one segment within a run."""

    instance_id: int
    side: str
    level: str
    index: int

    def __str__(self) -> str:
        return (f"instance {self.instance_id}, side {self.side}, "
                f"level {self.level}, index {self.index}")


@dataclass
class SegmentText:
    key: SegmentKey
    text: str


def read_segment_file(path: str | Path) -> list[SegmentText]:
    """Parse one segment JSONL file, deriving identity from its path."""
    path = Path(path)
    match = _PATH_RE.search(path.as_posix())
    if match is None:
        raise SegmentFileError(
            f"{path}: expected a path ending in "
            f"<instance_id>/<level>/segments_<side>.jsonl")
    instance_id = int(match.group("instance"))
    level = match.group("level")
    side = match.group("side")

    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise SegmentFileError(f"{path}: {exc}") from exc

    out = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            index = int(record["index"])
            record_level = record["level"]
            text = record["text"]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise SegmentFileError(f"{path}:{lineno}: bad record: {exc}") from exc
        if record_level != level:
            raise SegmentFileError(
                f"{path}:{lineno}: record level {record_level!r} does not "
                f"match path level {level!r}")
        out.append(SegmentText(
            key=SegmentKey(instance_id=instance_id, side=side, level=level,
                           index=index),
            text=text,
        ))
    if not out:
        raise SegmentFileError(f"{path}: no segment records")
    return out


def write_embx(path: str | Path, model_id: str, layer: int, dim: int,
               records: list[tuple[SegmentKey, list[str], np.ndarray]]) -> None:
    """Write records to an EMBX file; byte-deterministic for identical input."""
    parts = []
    for key, tokens, matrix in records:
        matrix = np.ascontiguousarray(matrix, dtype=np.float32)
        if matrix.shape != (len(tokens), dim):
            raise SegmentFileError(
                f"{key}: matrix shape {matrix.shape} does not match "
                f"{len(tokens)} tokens x dim {dim}")
        rec = [struct.pack("<IBBII", key.instance_id, SIDE_CODE[key.side],
                           LEVEL_CODE[key.level], key.index, len(tokens))]
        for tok in tokens:
            raw = tok.encode("utf-8")
            rec.append(struct.pack("<H", len(raw)))
            rec.append(raw)
        rec.append(matrix.tobytes())
        parts.append(b"".join(rec))

    backend = BACKEND_NAME.encode("utf-8")
    model = model_id.encode("utf-8")
    head = (
        MAGIC
        + struct.pack("<IIQ", VERSION, dim, len(records))
        + struct.pack("<H", len(backend)) + backend
        + struct.pack("<H", len(model)) + model
        + struct.pack("<i", layer)
    )
    Path(path).write_bytes(head + b"".join(parts))
