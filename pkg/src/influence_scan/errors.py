"""Exception types shared across the toolkit."""

from __future__ import annotations


class InfluenceScanError(Exception):
    """Base class for all toolkit errors."""


# --- corpus ingestion ---

class EncodingError(InfluenceScanError):
    """Input file is not valid UTF-8."""


class EmptyAfterStrip(InfluenceScanError):
    """Document had no body text between its boilerplate markers."""


class SelectorOutOfRange(InfluenceScanError):
    """Passage selector does not resolve to a non-empty span of the document."""


class MarkerNotFound(InfluenceScanError):
    """Marker string is absent, or ambiguous (more than one occurrence)."""

    def __init__(self, marker: str, count: int):
        self.marker = marker
        self.count = count
        reason = "ambiguous" if count > 1 else "absent"
        super().__init__(f"marker {marker!r} is {reason} ({count} occurrences)")


class ManifestError(InfluenceScanError):
    """Manifest file is malformed or violates an instance invariant."""


# --- embedding store ---

class BadMagic(InfluenceScanError):
    """File does not start with the EMBX magic bytes."""


class VersionMismatch(InfluenceScanError):
    """EMBX file version is not supported."""


class CorruptRecord(InfluenceScanError):
    """Length fields of an EMBX record are inconsistent with the file contents."""


class NormViolation(InfluenceScanError):
    """A stored embedding row is not unit-norm within tolerance."""


# --- scoring ---

class DimMismatch(InfluenceScanError):
    """Two embedding matrices do not share the same dimensionality."""


class EmptySegment(InfluenceScanError):
    """A segment with no tokens was passed where at least one is required."""


# --- pipeline ---

class MissingEmbeddings(InfluenceScanError):
    """An embedding store does not cover every segment of the run.

    ``missing`` lists (instance_id, side, level, index) tuples.
    """

    def __init__(self, missing: list):
        self.missing = list(missing)
        preview = ", ".join(str(m) for m in self.missing[:5])
        more = "" if len(self.missing) <= 5 else f" (+{len(self.missing) - 5} more)"
        super().__init__(f"embeddings missing for {len(self.missing)} segment(s): {preview}{more}")
