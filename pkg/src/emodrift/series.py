"""Similarity time series, OLS trend, cohesiveness, and pattern labels.

A token pair's similarity trajectory across per-slice models distinguishes
directed drift from seasonal swings that revert and from scatter without a
trend. Cohesiveness (tightness of a token's nearest-neighbor set) helps
separate genuine drift from ambiguity-driven instability. Neighbor overlap
between two models is the comparison baseline: |NN_k(M_i) & NN_k(M_j)| / k.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .drift import unit_rows
from .ingest import SliceKey
from .trainer import EmbeddingModel


@dataclass
class SimilaritySeries:
    pair: tuple[str, str]
    points: list[tuple[SliceKey, float]]  # ordered by period; absent slices are gaps

    def month_indices(self) -> np.ndarray:
        """Months since the first point; gaps keep their true calendar spacing."""
        base = self.points[0][0].month_index()
        return np.array([k.month_index() - base for k, _ in self.points], dtype=np.float64)

    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.points], dtype=np.float64)


@dataclass
class TrendFit:
    slope: float  # similarity units per month
    intercept: float
    r_squared: float
    n: int


class PatternClass(Enum):
    STABLE = "stable"
    MONOTONE_DRIFT = "monotone_drift"
    REVERTING_DRIFT = "reverting_drift"
    SCATTERED = "scattered"


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity undefined for a zero vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def similarity_series(models: list[EmbeddingModel], a: str, b: str) -> SimilaritySeries:
    """One (slice, cos(a, b)) point per model, in period order.

    Callers pass only the models that survived the sanity gate; rejected
    slices simply leave gaps.
    """
    if not models:
        raise ValueError("need at least one model")
    pts = []
    for m in sorted(models, key=lambda m: (m.slice.month_index(), m.slice.platform.value) if m.slice else (0, "")):
        sim = 1.0 if a == b else cosine_similarity(m.vector(a), m.vector(b))
        pts.append((m.slice, sim))
    return SimilaritySeries(pair=(a, b), points=pts)


def linear_trend(series: SimilaritySeries) -> TrendFit:
    """Closed-form OLS of similarity on month index."""
    if len(series.points) < 2:
        raise ValueError("need at least 2 points for a trend fit")
    t = series.month_indices()
    y = series.values()
    if float(t.max()) == float(t.min()):
        raise ValueError("all points share one time stamp")
    if float(y.max()) == float(y.min()):
        # constant series: slope is exactly 0, r^2 is 0 by convention
        return TrendFit(slope=0.0, intercept=float(y[0]), r_squared=0.0, n=len(y))
    tb = t.mean()
    yb = y.mean()
    sxy = float(np.sum((t - tb) * (y - yb)))
    sxx = float(np.sum((t - tb) ** 2))
    slope = sxy / sxx
    intercept = float(yb - slope * tb)
    ss_res = float(np.sum((y - (intercept + slope * t)) ** 2))
    ss_tot = float(np.sum((y - yb) ** 2))
    r2 = 1.0 - ss_res / ss_tot
    return TrendFit(slope=slope, intercept=intercept, r_squared=min(max(r2, 0.0), 1.0), n=len(y))


def _knn_ids(model: EmbeddingModel, token: str, k: int) -> np.ndarray:
    if k <= 0:
        raise ValueError("k must be positive")
    if k >= len(model.tokens):
        raise ValueError(f"k={k} too large for vocabulary of {len(model.tokens)}")
    tid = model.index.get(token)
    if tid is None:
        raise KeyError(f"token not in model vocabulary: {token!r}")
    unit = unit_rows(model)
    dist = 1.0 - unit @ unit[tid]
    dist[tid] = np.inf
    order = np.argsort(dist, kind="stable")  # ties resolved by token id
    return order[:k]


def cohesiveness(model: EmbeddingModel, token: str, k: int = 10) -> dict:
    """Tightness of the token's k-nearest-neighbor set.

    Returns mean cosine distance from the token to its k neighbors, the mean
    over the k(k-1)/2 neighbor pairs (absent when k = 1), and the distance to
    the neighbor centroid.
    """
    ids = _knn_ids(model, token, k)
    unit = unit_rows(model)
    tid = model.index[token]
    knn_mean = float(np.mean(1.0 - unit[ids] @ unit[tid]))

    if k == 1:
        pairwise_mean = None
    else:
        sub = unit[ids]
        sims = sub @ sub.T
        iu = np.triu_indices(k, 1)
        pairwise_mean = float(np.mean(1.0 - sims[iu]))

    centroid = model.vectors[ids].mean(axis=0)
    nc = float(np.linalg.norm(centroid))
    if nc == 0.0:
        centroid_dist = float("nan")
    else:
        centroid_dist = 1.0 - float(np.dot(unit[tid], centroid / nc))
    return {
        "centroid_dist": centroid_dist,
        "knn_mean_dist": knn_mean,
        "knn_pairwise_mean_dist": pairwise_mean,
    }


def neighbor_overlap(mi: EmbeddingModel, mj: EmbeddingModel, token: str, k: int = 10) -> float:
    """|NN_k(M_i, token) & NN_k(M_j, token)| / k, comparing by token surface."""
    ids_i = {mi.tokens[t] for t in _knn_ids(mi, token, k)}
    ids_j = {mj.tokens[t] for t in _knn_ids(mj, token, k)}
    return len(ids_i & ids_j) / k


def classify_pattern(
    series: SimilaritySeries,
    fit: TrendFit,
    epsilon: float = 0.05,
    slope_threshold: float = 0.01,
    r2_floor: float = 0.5,
) -> PatternClass:
    """Label the trajectory shape; thresholds are configuration, not estimates.

    Reverting: departs from the first value by more than epsilon but ends
    within epsilon of it (seasonal swings, one-off events). Monotone: clear
    fitted slope with enough of the variance explained. Scattered: no slope
    to speak of but large residuals. Stable otherwise.
    """
    if len(series.points) < 4:
        raise ValueError("need at least 4 points to classify a pattern")
    y = series.values()
    t = series.month_indices()
    deviation = np.abs(y - y[0])
    if float(deviation.max()) > epsilon and abs(float(y[-1]) - float(y[0])) <= epsilon:
        return PatternClass.REVERTING_DRIFT
    if abs(fit.slope) > slope_threshold and fit.r_squared >= r2_floor:
        return PatternClass.MONOTONE_DRIFT
    resid = y - (fit.intercept + fit.slope * t)
    if abs(fit.slope) <= slope_threshold and float(np.sqrt(np.mean(resid**2))) > epsilon:
        return PatternClass.SCATTERED
    return PatternClass.STABLE
