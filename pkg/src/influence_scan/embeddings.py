"""Token-embedding storage and the built-in hash embedder.

EMBX file layout (little-endian, unsigned unless noted):

    header:  magic "EMBX" | version u32 (=1) | dim u32 | segment_count u64
             | backend_name u16 length + UTF-8 | model_id u16 length + UTF-8
             | layer i32 (-1 if not applicable)
    record:  instance_id u32 | side u8 (0=candidate, 1=reference)
             | level u8 (0=sentence, 1=ngram) | index u32 | token_count u32
             | token_count x (u16 length + UTF-8)
             | matrix: token_count x dim float32, row-major

Rows are stored pre-normalized (unit L2 norm) so a scorer's plain inner
product is cosine similarity. float32 little-endian row-major keeps the
format bit-exact across writers in any language.

The hash backend stands in for a transformer encoder in tests: each word
token is embedded from counts of its boundary-marked character trigrams,
bucketed by FNV-1a 64. Morphologically similar words share buckets, which
exercises the soft-match code paths without any model.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    CorruptRecord,
    DimMismatch,
    EmptySegment,
    NormViolation,
    VersionMismatch,
)
from .segment import Segment

MAGIC = b"EMBX"
VERSION = 1
NORM_TOLERANCE = 1e-4

SIDES = ("candidate", "reference")
_SIDE_CODE = {"candidate": 0, "reference": 1}
_SIDE_NAME = {v: k for k, v in _SIDE_CODE.items()}
_LEVEL_CODE = {"sentence": 0, "ngram": 1}
_LEVEL_NAME = {v: k for k, v in _LEVEL_CODE.items()}

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class SegmentRef:
    """Identity of one embedded segment within a run."""

    instance_id: int
    side: str
    level: str
    index: int


@dataclass
class EmbeddedSegment:
    """A segment's tokens plus its token-embedding matrix.

    ``tokens`` are the embedder's own vocabulary: subwords for a
    transformer backend, whitespace words for the hash backend.
    ``matrix`` is token_count x dim float32 with unit-norm rows.
    """

    ref: SegmentRef
    tokens: list[str]
    matrix: np.ndarray

    @property
    def token_count(self) -> int:
        return len(self.tokens)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])


@dataclass
class EmbeddingStoreHeader:
    backend_name: str
    model_id: str
    layer: int
    dim: int
    segment_count: int = 0
    version: int = VERSION


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _U64
    return h


def _hash_row(token: str, dim: int) -> np.ndarray:
    marked = "^" + token + "$"
    counts = np.zeros(dim, dtype=np.float64)
    for i in range(len(marked) - 2):
        bucket = fnv1a64(marked[i:i + 3].encode("utf-8")) % dim
        counts[bucket] += 1.0
    return (counts / np.linalg.norm(counts)).astype(np.float32)


def hash_embed(
    segment: Segment,
    dim: int = 64,
    instance_id: int = 0,
    side: str = "candidate",
) -> EmbeddedSegment:
    """Embed a segment's word tokens with the deterministic hash backend."""
    if not segment.word_tokens:
        raise EmptySegment(f"segment {segment.index} has no word tokens")
    matrix = np.vstack([_hash_row(tok, dim) for tok in segment.word_tokens])
    return EmbeddedSegment(
        ref=SegmentRef(instance_id=instance_id, side=side,
                       level=segment.level, index=segment.index),
        tokens=list(segment.word_tokens),
        matrix=matrix,
    )


def write_store(header: EmbeddingStoreHeader, segments, path: str | Path) -> None:
    """Write segments to an EMBX file; byte-deterministic for identical input."""
    segments = list(segments)
    parts = []
    for seg in segments:
        matrix = np.ascontiguousarray(seg.matrix, dtype=np.float32)
        if matrix.ndim != 2 or matrix.shape[1] != header.dim:
            raise DimMismatch(
                f"segment {seg.ref}: matrix shape {matrix.shape} does not match dim {header.dim}"
            )
        if matrix.shape[0] != len(seg.tokens):
            raise CorruptRecord(
                f"segment {seg.ref}: {len(seg.tokens)} tokens but {matrix.shape[0]} rows"
            )
        rec = [struct.pack(
            "<IBBII",
            seg.ref.instance_id,
            _SIDE_CODE[seg.ref.side],
            _LEVEL_CODE[seg.ref.level],
            seg.ref.index,
            len(seg.tokens),
        )]
        for tok in seg.tokens:
            raw = tok.encode("utf-8")
            rec.append(struct.pack("<H", len(raw)))
            rec.append(raw)
        rec.append(matrix.tobytes())
        parts.append(b"".join(rec))

    backend = header.backend_name.encode("utf-8")
    model = header.model_id.encode("utf-8")
    head = (
        MAGIC
        + struct.pack("<IIQ", header.version, header.dim, len(segments))
        + struct.pack("<H", len(backend)) + backend
        + struct.pack("<H", len(model)) + model
        + struct.pack("<i", header.layer)
    )
    Path(path).write_bytes(head + b"".join(parts))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.data):
            raise CorruptRecord(
                f"expected {count} bytes at offset {self.pos}, "
                f"only {len(self.data) - self.pos} remain"
            )
        out = self.data[self.pos:self.pos + count]
        self.pos += count
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


class EmbeddingStore:
    """Read-only handle over a parsed EMBX file.

    Row norms are verified lazily, on first lookup of each segment.
    """

    def __init__(self, header: EmbeddingStoreHeader, segments: dict):
        self.header = header
        self._segments = segments
        self._checked: set[SegmentRef] = set()

    def __len__(self) -> int:
        return len(self._segments)

    def __contains__(self, ref: SegmentRef) -> bool:
        return ref in self._segments

    def refs(self) -> list[SegmentRef]:
        return list(self._segments.keys())

    def get(self, ref: SegmentRef) -> EmbeddedSegment:
        if ref not in self._segments:
            raise KeyError(ref)
        seg = self._segments[ref]
        if ref not in self._checked:
            norms = np.linalg.norm(seg.matrix.astype(np.float64), axis=1)
            if np.any(np.abs(norms - 1.0) > NORM_TOLERANCE):
                worst = float(np.max(np.abs(norms - 1.0)))
                raise NormViolation(
                    f"segment {ref}: row norm off unit by {worst:.2e}"
                )
            self._checked.add(ref)
        return seg


def open_store(path: str | Path) -> EmbeddingStore:
    """Parse an EMBX file into a lookup-by-ref store handle."""
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise BadMagic(f"{path}: expected magic {MAGIC!r}, got {data[:4]!r}")
    r = _Reader(data)
    r.pos = 4
    version, dim, segment_count = r.unpack("<IIQ")
    if version != VERSION:
        raise VersionMismatch(f"{path}: version {version}, supported {VERSION}")
    if dim == 0:
        raise CorruptRecord(f"{path}: dim must be positive")
    (backend_len,) = r.unpack("<H")
    backend_name = r.take(backend_len).decode("utf-8")
    (model_len,) = r.unpack("<H")
    model_id = r.take(model_len).decode("utf-8")
    (layer,) = r.unpack("<i")

    segments: dict[SegmentRef, EmbeddedSegment] = {}
    for _ in range(segment_count):
        instance_id, side_code, level_code, index, token_count = r.unpack("<IBBII")
        if side_code not in _SIDE_NAME or level_code not in _LEVEL_NAME:
            raise CorruptRecord(
                f"{path}: bad side/level codes ({side_code}, {level_code})"
            )
        tokens = []
        for _ in range(token_count):
            (tok_len,) = r.unpack("<H")
            try:
                tokens.append(r.take(tok_len).decode("utf-8"))
            except UnicodeDecodeError as exc:
                raise CorruptRecord(f"{path}: undecodable token bytes") from exc
        matrix = np.frombuffer(
            r.take(token_count * dim * 4), dtype="<f4"
        ).reshape(token_count, dim)
        ref = SegmentRef(
            instance_id=instance_id,
            side=_SIDE_NAME[side_code],
            level=_LEVEL_NAME[level_code],
            index=index,
        )
        if ref in segments:
            raise CorruptRecord(f"{path}: duplicate segment {ref}")
        segments[ref] = EmbeddedSegment(ref=ref, tokens=tokens, matrix=matrix)

    if r.pos != len(data):
        raise CorruptRecord(
            f"{path}: {len(data) - r.pos} trailing bytes after last record"
        )
    header = EmbeddingStoreHeader(
        backend_name=backend_name,
        model_id=model_id,
        layer=layer,
        dim=dim,
        segment_count=segment_count,
        version=version,
    )
    return EmbeddingStore(header, segments)
