"""All-pairs scoring, ranking, and structural diagnostics for one instance.

``compare_all`` scores every candidate x reference segment pair. Internally
the per-pair computation is blocked into a single token-by-token cosine
product followed by segment-wise max/mean reductions, which is orders of
magnitude faster than a pair loop and produces the same triples. The
execution path is fixed and deterministic: identical inputs yield identical
grids, byte for byte.

Heatmap orientation note: grids are stored with candidate segments as rows
and reference segments as columns; rendered heatmaps put candidates on the
x-axis, so a generically attractive candidate segment shows up as a
vertical streak (axis name ``candidate_column``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddedSegment
from .errors import DimMismatch, EmptySegment
from .score import IdfWeights, ScoreTriple

METRICS = ("p", "r", "f1")


@dataclass
class SimilarityMatrix:
    """Dense grid of score triples for all segment pairs of one instance."""

    instance_id: int
    level: str
    cand_count: int
    ref_count: int
    p: np.ndarray
    r: np.ndarray
    f1: np.ndarray
    cand_token_counts: list[int]
    ref_token_counts: list[int]

    def grid(self, metric: str) -> np.ndarray:
        if metric not in METRICS:
            raise ValueError(f"unknown metric {metric!r}")
        return getattr(self, metric)

    def triple(self, cand_index: int, ref_index: int) -> ScoreTriple:
        return ScoreTriple(
            p=float(self.p[cand_index, ref_index]),
            r=float(self.r[cand_index, ref_index]),
            f1=float(self.f1[cand_index, ref_index]),
        )


@dataclass(frozen=True)
class RankedPair:
    cand_index: int
    ref_index: int
    triple: ScoreTriple
    metric_used: str
    flags: frozenset = frozenset()


@dataclass(frozen=True)
class StreakDiagnostic:
    axis: str  # "candidate_column" | "reference_row"
    index: int
    mean_score: float
    threshold_used: float


def _validate_segments(segments, what: str) -> int:
    if not segments:
        raise EmptySegment(f"no {what} segments")
    dim = segments[0].dim
    for i, seg in enumerate(segments):
        if seg.token_count == 0:
            raise EmptySegment(f"{what} segment {i} has no tokens")
        if seg.dim != dim:
            raise DimMismatch(f"{what} segment {i}: dim {seg.dim} != {dim}")
    return dim


def _block_means(values: np.ndarray, starts: np.ndarray, counts: np.ndarray,
                 weights: np.ndarray | None, axis: int) -> np.ndarray:
    """Mean (or IDF-weighted mean) of ``values`` over token blocks along ``axis``."""
    plain = np.add.reduceat(values, starts, axis=axis)
    shape = [1, 1]
    shape[axis] = len(counts)
    plain = plain / counts.reshape(shape)
    if weights is None:
        return plain
    weighted = np.add.reduceat(values * _along(weights, axis), starts, axis=axis)
    totals = np.add.reduceat(weights, starts)
    # Blocks whose weights sum to zero fall back to the plain mean.
    safe = np.where(totals > 0, totals, 1.0).reshape(shape)
    return np.where(totals.reshape(shape) > 0, weighted / safe, plain)


def _along(vec: np.ndarray, axis: int) -> np.ndarray:
    return vec[:, None] if axis == 0 else vec[None, :]


def compare_all(
    cand_segments: list[EmbeddedSegment],
    ref_segments: list[EmbeddedSegment],
    idf: IdfWeights | None = None,
) -> SimilarityMatrix:
    """Score every candidate x reference pair into a SimilarityMatrix."""
    cand_dim = _validate_segments(cand_segments, "candidate")
    ref_dim = _validate_segments(ref_segments, "reference")
    if cand_dim != ref_dim:
        raise DimMismatch(f"candidate dim {cand_dim} != reference dim {ref_dim}")

    cand_counts = np.array([s.token_count for s in cand_segments])
    ref_counts = np.array([s.token_count for s in ref_segments])
    cand_starts = np.concatenate(([0], np.cumsum(cand_counts)[:-1]))
    ref_starts = np.concatenate(([0], np.cumsum(ref_counts)[:-1]))

    cand_all = np.vstack([s.matrix for s in cand_segments]).astype(np.float64)
    ref_all = np.vstack([s.matrix for s in ref_segments]).astype(np.float64)
    sim = cand_all @ ref_all.T  # total cand tokens x total ref tokens

    if idf is not None:
        cand_w = np.concatenate([idf.for_tokens(s.tokens) for s in cand_segments])
        ref_w = np.concatenate([idf.for_tokens(s.tokens) for s in ref_segments])
    else:
        cand_w = ref_w = None

    # p[i, j]: mean over candidate i's tokens of their best match within reference j.
    row_best = np.maximum.reduceat(sim, ref_starts, axis=1)
    p = _block_means(row_best, cand_starts, cand_counts, cand_w, axis=0)

    # r[i, j]: mean over reference j's tokens of their best match within candidate i.
    col_best = np.maximum.reduceat(sim, cand_starts, axis=0)
    r = _block_means(col_best, ref_starts, ref_counts, ref_w, axis=1)

    pr = p + r
    f1 = np.where(pr > 0, 2.0 * p * r / np.where(pr > 0, pr, 1.0), 0.0)

    first = cand_segments[0].ref
    return SimilarityMatrix(
        instance_id=first.instance_id,
        level=first.level,
        cand_count=len(cand_segments),
        ref_count=len(ref_segments),
        p=p,
        r=r,
        f1=f1,
        cand_token_counts=[int(c) for c in cand_counts],
        ref_token_counts=[int(c) for c in ref_counts],
    )


def top_pairs(
    m: SimilarityMatrix,
    k: int,
    metric: str = "p",
    min_tokens: int = 6,
    streaks: list[StreakDiagnostic] | None = None,
) -> list[RankedPair]:
    """Rank pairs by the chosen metric, descending; ties break by indices.

    Short segments are flagged but never removed; n-gram grids are exempt
    from the short flag (every chunk is n tokens by construction).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    values = m.grid(metric)
    # Stable sort over the row-major flattening makes the tie-break exactly
    # (cand_index, ref_index) ascending.
    order = np.argsort(-values.ravel(), kind="stable")[:min(k, values.size)]

    streak_cands = {s.index for s in (streaks or []) if s.axis == "candidate_column"}
    streak_refs = {s.index for s in (streaks or []) if s.axis == "reference_row"}

    pairs = []
    for flat in order:
        i, j = divmod(int(flat), m.ref_count)
        flags = set()
        if m.level != "ngram":
            if m.cand_token_counts[i] < min_tokens:
                flags.add("short_candidate")
            if m.ref_token_counts[j] < min_tokens:
                flags.add("short_reference")
        if i in streak_cands or j in streak_refs:
            flags.add("streak_member")
        pairs.append(RankedPair(
            cand_index=i,
            ref_index=j,
            triple=m.triple(i, j),
            metric_used=metric,
            flags=frozenset(flags),
        ))
    return pairs


def detect_streaks(
    m: SimilarityMatrix,
    metric: str = "p",
    quantile: float = 0.90,
) -> list[StreakDiagnostic]:
    """Flag candidate columns / reference rows with uniformly elevated scores.

    A line is a streak when its mean strictly exceeds the given quantile of
    all per-line means on its axis; quantile thresholding is shift-invariant,
    so the flagged set transfers across score regimes.
    """
    if m.cand_count < 2 or m.ref_count < 2:
        raise ValueError("streak detection needs a grid of at least 2x2")
    values = m.grid(metric)
    diagnostics = []
    for axis_name, means in (
        ("candidate_column", values.mean(axis=1)),
        ("reference_row", values.mean(axis=0)),
    ):
        threshold = float(np.quantile(means, quantile))
        for idx in np.nonzero(means > threshold)[0]:
            diagnostics.append(StreakDiagnostic(
                axis=axis_name,
                index=int(idx),
                mean_score=float(means[idx]),
                threshold_used=threshold,
            ))
    return diagnostics


def diagonal_alignment(m: SimilarityMatrix, metric: str = "p", window: int = 3) -> float:
    """Fraction of candidate rows whose best reference lies near the diagonal.

    Row i is aligned when its argmax column j satisfies
    |j - round(i * ref_count / cand_count)| <= window.
    """
    if m.cand_count < 2 or m.ref_count < 2:
        raise ValueError("diagonal alignment needs a grid of at least 2x2")
    values = m.grid(metric)
    best = values.argmax(axis=1)
    expected = np.rint(np.arange(m.cand_count) * (m.ref_count / m.cand_count))
    hits = np.abs(best - expected) <= window
    return float(hits.sum() / m.cand_count)


def matrix_to_csv(m: SimilarityMatrix, metric: str) -> str:
    """Grid CSV for one metric: row = candidate index, column = reference index."""
    values = m.grid(metric)
    lines = [",".join(f"{v:.6f}" for v in row) for row in values]
    return "\n".join(lines) + "\n"


def build_bundle(
    m: SimilarityMatrix,
    metric: str,
    streaks: list[StreakDiagnostic],
    alignment: float,
    ranked: list[RankedPair] | None = None,
) -> dict:
    """JSON-ready bundle of the grid plus its diagnostics."""
    flagged = [
        {"cand_index": p.cand_index, "ref_index": p.ref_index,
         "flags": sorted(p.flags)}
        for p in (ranked or []) if p.flags
    ]
    return {
        "instance_id": m.instance_id,
        "level": m.level,
        "metric": metric,
        "shape": [m.cand_count, m.ref_count],
        "values": {name: m.grid(name).tolist() for name in METRICS},
        "flags": flagged,
        "streaks": [
            {"axis": s.axis, "index": s.index, "mean_score": s.mean_score,
             "threshold_used": s.threshold_used}
            for s in streaks
        ],
        "diagonal_alignment": alignment,
        "cand_token_counts": m.cand_token_counts,
        "ref_token_counts": m.ref_token_counts,
    }


def bundle_to_json(bundle: dict) -> str:
    return json.dumps(bundle, sort_keys=True, indent=2) + "\n"


def matrix_from_bundle(bundle: dict) -> SimilarityMatrix:
    shape = bundle["shape"]
    return SimilarityMatrix(
        instance_id=bundle["instance_id"],
        level=bundle["level"],
        cand_count=shape[0],
        ref_count=shape[1],
        p=np.array(bundle["values"]["p"], dtype=np.float64),
        r=np.array(bundle["values"]["r"], dtype=np.float64),
        f1=np.array(bundle["values"]["f1"], dtype=np.float64),
        cand_token_counts=list(bundle["cand_token_counts"]),
        ref_token_counts=list(bundle["ref_token_counts"]),
    )


def streaks_from_bundle(bundle: dict) -> list[StreakDiagnostic]:
    return [
        StreakDiagnostic(axis=s["axis"], index=s["index"],
                         mean_score=s["mean_score"],
                         threshold_used=s["threshold_used"])
        for s in bundle["streaks"]
    ]
