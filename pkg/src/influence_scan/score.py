"""Greedy embedding-matching similarity between two segments.

Each candidate token is matched to its most similar reference token in
cosine space and vice versa: precision is the mean of row maxima of the
cosine matrix, recall the mean of column maxima, F1 their harmonic mean.
With IDF weights the means become weighted means (candidate-token weights
for precision, reference-token weights for recall). Scores are raw; no
baseline rescaling is applied.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddedSegment
from .errors import DimMismatch, EmptySegment


@dataclass(frozen=True)
class ScoreTriple:
    p: float
    r: float
    f1: float

    @staticmethod
    def from_pr(p: float, r: float) -> "ScoreTriple":
        return ScoreTriple(p=p, r=r, f1=f1_score(p, r))


def f1_score(p: float, r: float) -> float:
    return 2.0 * p * r / (p + r) if p + r > 0 else 0.0


@dataclass
class IdfWeights:
    """Token -> weight mapping; unseen tokens fall back to default_weight."""

    weights: dict[str, float]
    default_weight: float

    def __post_init__(self):
        if self.default_weight == 0 and not any(self.weights.values()):
            raise ValueError("IdfWeights needs at least one nonzero weight")

    def weight(self, token: str) -> float:
        return self.weights.get(token, self.default_weight)

    def for_tokens(self, tokens: list[str]) -> np.ndarray:
        return np.array([self.weight(t) for t in tokens], dtype=np.float64)


def compute_idf(reference_segments) -> IdfWeights:
    """Smoothed IDF over reference segments: ln((N+1)/(df+1)), default ln(N+1)."""
    segments = list(reference_segments)
    if not segments:
        raise EmptySegment("compute_idf requires at least one segment")
    n = len(segments)
    df = Counter()
    for seg in segments:
        df.update(set(seg.tokens))
    weights = {tok: math.log((n + 1) / (count + 1)) for tok, count in df.items()}
    return IdfWeights(weights=weights, default_weight=math.log(n + 1))


def cosine_matrix(cand: EmbeddedSegment, ref: EmbeddedSegment) -> np.ndarray:
    """Cosine similarity of every candidate row against every reference row.

    Rows are stored pre-normalized, so this is a plain inner product;
    computed in float64 for stable downstream means.
    """
    if cand.dim != ref.dim:
        raise DimMismatch(f"candidate dim {cand.dim} != reference dim {ref.dim}")
    return cand.matrix.astype(np.float64) @ ref.matrix.astype(np.float64).T


def _weighted_mean(values: np.ndarray, weights: np.ndarray | None) -> float:
    # Zero total weight (all-ubiquitous tokens) falls back to the plain mean.
    if weights is not None:
        total = float(weights.sum())
        if total > 0:
            return float((values * weights).sum() / total)
    return float(np.mean(values))


def bertscore(
    cand: EmbeddedSegment,
    ref: EmbeddedSegment,
    idf: IdfWeights | None = None,
) -> ScoreTriple:
    """Score one (candidate, reference) segment pair.

    Orientation is fixed: the candidate is the authored segment, the
    reference the source segment, so a high p with low r reads as "most
    of the candidate is reflected in a reference that says much more".
    """
    if cand.token_count == 0:
        raise EmptySegment("candidate segment has no tokens")
    if ref.token_count == 0:
        raise EmptySegment("reference segment has no tokens")
    sim = cosine_matrix(cand, ref)
    p = _weighted_mean(sim.max(axis=1), idf.for_tokens(cand.tokens) if idf else None)
    r = _weighted_mean(sim.max(axis=0), idf.for_tokens(ref.tokens) if idf else None)
    return ScoreTriple(p=p, r=r, f1=f1_score(p, r))
