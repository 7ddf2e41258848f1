"""Analogy sanity suite gating each trained model.

An item (a, b, c, expected) asks for the token nearest to vec(c) - vec(a) +
vec(b); e.g. man : woman :: king : queen, or the emoji counterpart
woman : girl :: crown : princess. Small per-slice models that fail the gate
are flagged REJECTED and excluded from downstream time series.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .trainer import EmbeddingModel


@dataclass(frozen=True)
class AnalogyItem:
    a: str
    b: str
    c: str
    expected: str
    category: str = "word"

    def __post_init__(self):
        if len({self.a, self.b, self.c, self.expected}) != 4:
            raise ValueError(f"analogy surfaces must be distinct: {self}")

    def surfaces(self) -> tuple[str, str, str, str]:
        return self.a, self.b, self.c, self.expected


def load_suite(path: str | Path) -> list[AnalogyItem]:
    """One item per line: "a b c expected category"; # starts a comment."""
    items = []
    with open(path, encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) not in (4, 5):
                raise ValueError(f"{path}:{ln}: expected 4 or 5 fields, got {len(fields)}")
            items.append(AnalogyItem(*fields))
    return items


def analogy(
    model: EmbeddingModel,
    a: str,
    b: str,
    c: str,
    top_k: int = 10,
    exclude_inputs: bool = True,
) -> list[tuple[str, float]]:
    """Top-k tokens by cosine similarity to vec(c) - vec(a) + vec(b).

    The inputs a, b, c are excluded from the ranking (the expected token
    never is); rankings are invariant to any positive rescaling of the model.
    """
    query = model.vector(c) - model.vector(a) + model.vector(b)
    qn = float(np.linalg.norm(query))
    if qn == 0.0:
        raise ValueError("analogy query vector is zero")
    norms = np.linalg.norm(model.vectors, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"zero vector for token {model.tokens[zero[0]]!r}")
    scores = (model.vectors @ query) / (norms * qn)
    excluded = {model.index[t] for t in (a, b, c)} if exclude_inputs else set()
    order = [i for i in np.argsort(-scores, kind="stable") if i not in excluded]
    return [(model.tokens[i], float(scores[i])) for i in order[:top_k]]


@dataclass
class SuiteReport:
    scored: int
    skipped: int
    hits_at_1: int
    hits_at_k: int
    top_k: int
    gate: float
    verdict: str  # ACCEPTED | REJECTED | UNTESTED

    def as_dict(self) -> dict:
        return {
            "scored": self.scored,
            "skipped": self.skipped,
            "hits_at_1": self.hits_at_1,
            "hits_at_k": self.hits_at_k,
            "top_k": self.top_k,
            "gate": self.gate,
            "verdict": self.verdict,
        }


def run_suite(
    model: EmbeddingModel,
    items: list[AnalogyItem],
    top_k: int = 10,
    gate: float = 0.3,
) -> SuiteReport:
    """Score every item whose four surfaces are all in the vocabulary.

    Items with any out-of-vocabulary surface count as skipped, never as
    failures; a model with nothing scorable is UNTESTED rather than rejected.
    """
    if not items:
        raise ValueError("empty analogy suite")
    scored = skipped = hits1 = hitsk = 0
    for item in items:
        if any(s not in model.index for s in item.surfaces()):
            skipped += 1
            continue
        scored += 1
        ranked = [t for t, _ in analogy(model, item.a, item.b, item.c, top_k=top_k)]
        if ranked and ranked[0] == item.expected:
            hits1 += 1
        if item.expected in ranked:
            hitsk += 1
    if scored == 0:
        verdict = "UNTESTED"
    elif hitsk / scored < gate:
        verdict = "REJECTED"
    else:
        verdict = "ACCEPTED"
    return SuiteReport(
        scored=scored, skipped=skipped, hits_at_1=hits1, hits_at_k=hitsk,
        top_k=top_k, gate=gate, verdict=verdict,
    )
