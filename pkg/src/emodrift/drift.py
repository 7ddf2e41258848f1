"""Pairwise-distance drift statistics between two per-slice embedding models.

For one model, D holds all pairwise token distances (1 - cosine similarity by
default). For two models the baseline shift is |D_i - D_j| elementwise; its
mean mu and population standard deviation sigma are taken over the strict
upper triangle (each unordered pair once, diagonal excluded). A pair is
flagged as drifted when its shift deviates from mu by more than beta * sigma,
and a flagged pair is attributed to whichever member participates in more
flagged pairs (ties attribute to both).

Everything here is built from within-model distances only, so the statistics
are invariant under any orthogonal transformation of either model's vectors
and no cross-slice alignment is needed. Large vocabularies are processed in
row blocks without materializing the dense matrices; the blocked path returns
exactly the same flagged pairs and attributions as the dense one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .ingest import SliceKey
from .shapiro import DegenerateSampleError, shapiro_wilk
from .trainer import EmbeddingModel

DENSE_LIMIT = 2048  # largest |V| for which full matrices are materialized
_BLOCK_ROWS = 512


class Attribution(Enum):
    K = "k"
    L = "l"
    BOTH = "both"


@dataclass
class DistanceMatrix:
    slice: SliceKey | None
    values: np.ndarray  # (|V|, |V|), symmetric, zero diagonal for cosine distance
    tokens: list[str]
    metric: str = "cosine"


@dataclass
class ShiftMatrix:
    from_slice: SliceKey | None
    to_slice: SliceKey | None
    values: np.ndarray  # elementwise |D_i - D_j|
    mu: float
    sigma: float
    tokens: list[str]


@dataclass
class DriftIndicator:
    beta: float
    values: np.ndarray  # (|V|, |V|) uint8, symmetric, zero diagonal
    degenerate_sigma: bool = False
    conforming: bool = True


def unit_rows(model: EmbeddingModel) -> np.ndarray:
    """Rows scaled to unit norm; zero vectors are an error naming the token."""
    norms = np.linalg.norm(model.vectors, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"zero vector for token {model.tokens[zero[0]]!r}")
    return model.vectors / norms[:, None]


def pairwise_distances(model: EmbeddingModel, metric: str = "cosine") -> DistanceMatrix:
    """D[k, l] = 1 - cos(v_k, v_l), or raw similarity with metric="similarity".

    The drift indicator is identical under either convention because the
    baseline shift takes absolute differences.
    """
    if metric not in ("cosine", "similarity"):
        raise ValueError(f"unknown metric {metric!r}")
    unit = unit_rows(model)
    sims = unit @ unit.T
    np.clip(sims, -1.0, 1.0, out=sims)
    values = (1.0 - sims) if metric == "cosine" else sims
    values = (values + values.T) / 2.0
    np.fill_diagonal(values, 0.0 if metric == "cosine" else 1.0)
    return DistanceMatrix(slice=model.slice, values=values, tokens=list(model.tokens), metric=metric)


def baseline_shift(di: DistanceMatrix, dj: DistanceMatrix) -> ShiftMatrix:
    """Elementwise |D_i - D_j| with mu, sigma over the strict upper triangle."""
    if di.values.shape != dj.values.shape:
        raise ValueError(
            f"distance matrix shapes differ: {di.values.shape} vs {dj.values.shape}"
        )
    values = np.abs(di.values - dj.values)
    iu = np.triu_indices(values.shape[0], k=1)
    upper = values[iu]
    if upper.size == 0:
        raise ValueError("need at least two tokens for a baseline shift")
    mu = float(np.mean(upper))
    sigma = float(np.sqrt(np.mean((upper - mu) ** 2)))
    return ShiftMatrix(
        from_slice=di.slice, to_slice=dj.slice, values=values,
        mu=mu, sigma=sigma, tokens=list(di.tokens),
    )


def normality_check(shift: ShiftMatrix, max_n: int = 5000, seed: int = 0) -> dict:
    """Shapiro-Wilk W and p on a seeded subsample of the upper-triangle shifts."""
    iu = np.triu_indices(shift.values.shape[0], k=1)
    sample = shift.values[iu]
    if sample.size < 3:
        raise ValueError("need at least 3 pair shifts for the normality check")
    if sample.size > max_n:
        rng = np.random.default_rng(seed)
        sample = sample[rng.choice(sample.size, size=max_n, replace=False)]
    w, p = shapiro_wilk(sample)
    return {"W": w, "p": p, "sample_n": int(sample.size)}


def drift_indicator(
    shift: ShiftMatrix, beta: float = 2.0, allow_nonconforming: bool = False
) -> DriftIndicator:
    """Binary pair-drift matrix: 1 iff |shift - mu| > beta * sigma."""
    conforming = beta >= 2.0
    if not conforming and not allow_nonconforming:
        raise ValueError(f"beta must be >= 2 (got {beta}); pass allow_nonconforming to override")
    if shift.sigma == 0.0:
        # |shift - mu| > 0 can only fire on an exact-zero sigma with unequal
        # values, which sigma = 0 rules out; every entry is 0 by definition
        warnings.warn("degenerate sigma = 0: drift indicator is identically zero")
        values = np.zeros_like(shift.values, dtype=np.uint8)
        return DriftIndicator(beta=beta, values=values, degenerate_sigma=True, conforming=conforming)
    values = (np.abs(shift.values - shift.mu) > beta * shift.sigma).astype(np.uint8)
    np.fill_diagonal(values, 0)
    return DriftIndicator(beta=beta, values=values, conforming=conforming)


def attribute_shift(k: int, l: int, delta: DriftIndicator) -> Attribution:
    """Which member of a flagged pair drifted: the one flagged against more tokens."""
    if not delta.values[k, l]:
        raise ValueError(f"pair ({k}, {l}) is not flagged in the drift indicator")
    row_k = int(delta.values[k].sum())
    row_l = int(delta.values[l].sum())
    if row_k > row_l:
        return Attribution.K
    if row_k < row_l:
        return Attribution.L
    return Attribution.BOTH


@dataclass
class TokenEvidence:
    evidence: int = 0  # pairs attributing to this token
    wins: int = 0  # sole attributions
    ties: int = 0  # attributions shared with the partner

    @property
    def label(self) -> str:
        if self.ties == 0:
            return "sole"
        if self.wins == 0:
            return "tied"
        return "mixed"


def _evidence_from_pairs(
    flagged: list[tuple[int, int]], row_sums: np.ndarray
) -> dict[int, TokenEvidence]:
    out: dict[int, TokenEvidence] = {}

    def bump(t: int, tie: bool):
        ev = out.setdefault(t, TokenEvidence())
        ev.evidence += 1
        if tie:
            ev.ties += 1
        else:
            ev.wins += 1

    for i, j in flagged:
        ri, rj = row_sums[i], row_sums[j]
        if ri > rj:
            bump(i, False)
        elif ri < rj:
            bump(j, False)
        else:
            bump(i, True)
            bump(j, True)
    return out


def drifted_tokens(delta: DriftIndicator) -> dict[int, TokenEvidence]:
    """Apply the attribution rule to every flagged pair; order-independent."""
    iu, ju = np.nonzero(np.triu(delta.values, k=1))
    row_sums = delta.values.sum(axis=1).astype(np.int64)
    return _evidence_from_pairs(list(zip(iu.tolist(), ju.tolist())), row_sums)


# ---------------------------------------------------------------------------
# Model-to-model comparison. Small vocabularies go through the dense
# operations above; large ones stream row blocks and produce identical
# flagged pairs, mu, sigma and attributions.
# ---------------------------------------------------------------------------


@dataclass
class DriftComparison:
    from_slice: SliceKey | None
    to_slice: SliceKey | None
    tokens: list[str]
    beta: float
    metric: str
    mu: float
    sigma: float
    shapiro: dict | None
    flagged: list[tuple[int, int, float]]  # (k, l, shift), k < l
    evidence: dict[int, TokenEvidence]
    degenerate_sigma: bool = False
    conforming: bool = True
    warnings: list[str] = field(default_factory=list)

    def report(self) -> dict:
        flagged = sorted(self.flagged, key=lambda t: (-t[2], t[0], t[1]))
        drifted = sorted(self.evidence.items(), key=lambda kv: (-kv[1].evidence, kv[0]))
        return {
            "from_slice": str(self.from_slice) if self.from_slice else None,
            "to_slice": str(self.to_slice) if self.to_slice else None,
            "beta": self.beta,
            "metric": self.metric,
            "conforming_beta": self.conforming,
            "mu": self.mu,
            "sigma": self.sigma,
            "shapiro": self.shapiro,
            "n_tokens": len(self.tokens),
            "n_flagged_pairs": len(flagged),
            "flagged_pairs": [
                {"a": self.tokens[k], "b": self.tokens[l], "shift": s}
                for k, l, s in flagged
            ],
            "drifted_tokens": [
                {
                    "token": self.tokens[t],
                    "evidence": ev.evidence,
                    "attribution": ev.label,
                }
                for t, ev in drifted
            ],
            "warnings": self.warnings,
        }

    def drifted_surfaces(self) -> set[str]:
        return {self.tokens[t] for t in self.evidence}


def _check_compatible(mi: EmbeddingModel, mj: EmbeddingModel) -> None:
    if mi.tokens != mj.tokens:
        raise ValueError("models do not share a vocabulary")
    if mi.vectors.shape != mj.vectors.shape:
        raise ValueError(
            f"model shapes differ: {mi.vectors.shape} vs {mj.vectors.shape}"
        )


def compare_models(
    mi: EmbeddingModel,
    mj: EmbeddingModel,
    beta: float = 2.0,
    metric: str = "cosine",
    max_shapiro_n: int = 5000,
    seed: int = 0,
    allow_nonconforming: bool = False,
    dense_limit: int = DENSE_LIMIT,
) -> DriftComparison:
    _check_compatible(mi, mj)
    if len(mi.tokens) <= dense_limit:
        return _compare_dense(mi, mj, beta, metric, max_shapiro_n, seed, allow_nonconforming)
    return _compare_blocked(mi, mj, beta, metric, max_shapiro_n, seed, allow_nonconforming)


def _compare_dense(mi, mj, beta, metric, max_shapiro_n, seed, allow_nonconforming):
    di = pairwise_distances(mi, metric)
    dj = pairwise_distances(mj, metric)
    shift = baseline_shift(di, dj)
    notes: list[str] = []
    try:
        shapiro = normality_check(shift, max_n=max_shapiro_n, seed=seed)
    except (DegenerateSampleError, ValueError) as exc:
        shapiro = None
        notes.append(f"normality check unavailable: {exc}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        delta = drift_indicator(shift, beta, allow_nonconforming)
    if delta.degenerate_sigma:
        notes.append("degenerate sigma = 0: no pair can be flagged")
    iu, ju = np.nonzero(np.triu(delta.values, k=1))
    flagged = [(int(i), int(j), float(shift.values[i, j])) for i, j in zip(iu, ju)]
    evidence = drifted_tokens(delta)
    return DriftComparison(
        from_slice=mi.slice, to_slice=mj.slice, tokens=list(mi.tokens),
        beta=beta, metric=metric, mu=shift.mu, sigma=shift.sigma,
        shapiro=shapiro, flagged=flagged, evidence=evidence,
        degenerate_sigma=delta.degenerate_sigma, conforming=delta.conforming,
        warnings=notes,
    )


def _pair_shift_block(ui, uj, metric, r0, r1):
    """|D_i - D_j| for rows [r0, r1); similarity and distance give the same value."""
    del metric  # |(1 - s_i) - (1 - s_j)| == |s_i - s_j|
    si = ui[r0:r1] @ ui.T
    sj = uj[r0:r1] @ uj.T
    np.clip(si, -1.0, 1.0, out=si)
    np.clip(sj, -1.0, 1.0, out=sj)
    return np.abs(sj - si)


def _compare_blocked(mi, mj, beta, metric, max_shapiro_n, seed, allow_nonconforming):
    conforming = beta >= 2.0
    if not conforming and not allow_nonconforming:
        raise ValueError(f"beta must be >= 2 (got {beta}); pass allow_nonconforming to override")
    ui = unit_rows(mi)
    uj = unit_rows(mj)
    n = ui.shape[0]
    n_pairs = n * (n - 1) // 2

    total = 0.0
    total_sq = 0.0
    for r0 in range(0, n, _BLOCK_ROWS):
        r1 = min(r0 + _BLOCK_ROWS, n)
        block = _pair_shift_block(ui, uj, metric, r0, r1)
        cols = np.arange(n)[None, :]
        rows = np.arange(r0, r1)[:, None]
        upper = block[cols > rows]
        total += float(upper.sum())
        total_sq += float(np.square(upper).sum())
    mu = total / n_pairs
    sigma = math.sqrt(max(total_sq / n_pairs - mu * mu, 0.0))

    notes: list[str] = []
    shapiro = None
    if sigma == 0.0:
        warnings.warn("degenerate sigma = 0: drift indicator is identically zero")
        notes.append("degenerate sigma = 0: no pair can be flagged")
        notes.append("normality check unavailable: degenerate sample: all values identical")
        return DriftComparison(
            from_slice=mi.slice, to_slice=mj.slice, tokens=list(mi.tokens),
            beta=beta, metric=metric, mu=mu, sigma=sigma, shapiro=None,
            flagged=[], evidence={}, degenerate_sigma=True, conforming=conforming,
            warnings=notes,
        )

    # subsample for the normality check without materializing the triangle
    m = min(max_shapiro_n, n_pairs)
    rng = np.random.default_rng(seed)
    flat = rng.choice(n_pairs, size=m, replace=False) if n_pairs > m else np.arange(n_pairs)
    rows_idx, cols_idx = _flat_to_pair(np.sort(flat), n)
    sampled = np.abs(
        np.einsum("ij,ij->i", ui[rows_idx], ui[cols_idx])
        - np.einsum("ij,ij->i", uj[rows_idx], uj[cols_idx])
    )
    try:
        w, p = shapiro_wilk(sampled)
        shapiro = {"W": w, "p": p, "sample_n": int(sampled.size)}
    except (DegenerateSampleError, ValueError) as exc:
        notes.append(f"normality check unavailable: {exc}")

    threshold = beta * sigma
    flagged: list[tuple[int, int, float]] = []
    row_sums = np.zeros(n, dtype=np.int64)
    for r0 in range(0, n, _BLOCK_ROWS):
        r1 = min(r0 + _BLOCK_ROWS, n)
        block = _pair_shift_block(ui, uj, metric, r0, r1)
        hits_r, hits_c = np.nonzero(np.abs(block - mu) > threshold)
        for br, c in zip(hits_r.tolist(), hits_c.tolist()):
            r = r0 + br
            if c > r:
                flagged.append((r, c, float(block[br, c])))
                row_sums[r] += 1
                row_sums[c] += 1
    evidence = _evidence_from_pairs([(i, j) for i, j, _ in flagged], row_sums)
    return DriftComparison(
        from_slice=mi.slice, to_slice=mj.slice, tokens=list(mi.tokens),
        beta=beta, metric=metric, mu=mu, sigma=sigma, shapiro=shapiro,
        flagged=flagged, evidence=evidence, conforming=conforming, warnings=notes,
    )


def _flat_to_pair(flat: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map flat strict-upper-triangle indices (row-major) to (row, col)."""
    # row i starts at offset i*n - i*(i+1)/2 - i... solved via the triangular root
    f = flat.astype(np.float64)
    i = np.floor((2 * n - 1 - np.sqrt((2 * n - 1) ** 2 - 8 * f)) / 2).astype(np.int64)
    # guard against floating error at block boundaries
    offs = lambda k: k * n - (k * (k + 1)) // 2
    while True:
        too_low = offs(i + 1) <= flat
        too_high = offs(i) > flat
        if not (too_low.any() or too_high.any()):
            break
        i = i + too_low.astype(np.int64) - too_high.astype(np.int64)
    j = flat - offs(i) + i + 1
    return i, j.astype(np.int64)
