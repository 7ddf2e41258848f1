"""Synthetic time-sliced corpora with planted semantic drifts.

Each document samples a topic and then tokens from that topic's pool; a
drifting token's pool membership moves from one topic to another at its
change month (abruptly, linearly over a ramp, or alternating with a seasonal
period). Generation is deterministic given the seed, with per-slice seeds
derived as (seed, slice index). Slice files use the ingest output format, so
the main pipeline consumes them unchanged, and the ground-truth manifest
makes detector scoring exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .ingest import Platform, SliceKey


class DriftStyle(Enum):
    ABRUPT = "abrupt"
    GRADUAL = "gradual"
    SEASONAL = "seasonal"


@dataclass(frozen=True)
class DriftSpec:
    token: str
    topic_before: int
    topic_after: int
    change_month: int  # 0-based month offset inside the grid
    style: DriftStyle = DriftStyle.ABRUPT
    ramp_months: int = 3  # Gradual only
    period_months: int = 12  # Seasonal only

    def mix(self, month: int) -> float:
        """Fraction of this token's occurrences moved to topic_after."""
        if month < self.change_month:
            return 0.0
        if self.style is DriftStyle.ABRUPT:
            return 1.0
        if self.style is DriftStyle.GRADUAL:
            return min(1.0, (month - self.change_month + 1) / max(self.ramp_months, 1))
        phase = (month - self.change_month) % self.period_months
        return 1.0 if phase < self.period_months / 2 else 0.0


@dataclass
class GeneratorConfig:
    n_topics: int = 20
    tokens_per_topic: int = 25
    n_slices: int = 12
    docs_per_slice: int = 50_000
    doc_len_min: int = 8
    doc_len_max: int = 16
    zipf_exponent: float = 1.0  # within-pool frequency skew; 0 = uniform
    emoji_per_topic: int = 1  # trailing pool surfaces become emoji
    seed: int = 7
    start: tuple[int, int] = (2016, 5)
    platform: Platform = Platform.OTHER

    def __post_init__(self):
        if self.n_topics < 2 or self.tokens_per_topic < 1:
            raise ValueError("need at least 2 topics with non-empty pools")
        if self.n_slices < 1 or self.docs_per_slice < 1:
            raise ValueError("slice and document counts must be positive")
        if not 1 <= self.doc_len_min <= self.doc_len_max:
            raise ValueError("bad document length range")

    def pools(self) -> list[list[str]]:
        out = []
        for t in range(self.n_topics):
            pool = [f"w{t:02d}_{i:02d}" for i in range(self.tokens_per_topic)]
            for e in range(min(self.emoji_per_topic, self.tokens_per_topic)):
                pool[-(e + 1)] = chr(0x1F400 + t * 4 + e)
            out.append(pool)
        return out

    def slice_keys(self) -> list[SliceKey]:
        base = self.start[0] * 12 + self.start[1] - 1
        keys = []
        for m in range(self.n_slices):
            year, month0 = divmod(base + m, 12)
            keys.append(SliceKey(year, month0 + 1, self.platform))
        return keys

    def as_dict(self) -> dict:
        return {
            "n_topics": self.n_topics,
            "tokens_per_topic": self.tokens_per_topic,
            "n_slices": self.n_slices,
            "docs_per_slice": self.docs_per_slice,
            "doc_len_min": self.doc_len_min,
            "doc_len_max": self.doc_len_max,
            "zipf_exponent": self.zipf_exponent,
            "emoji_per_topic": self.emoji_per_topic,
            "seed": self.seed,
            "start": list(self.start),
            "platform": self.platform.value,
        }


def _base_weights(config: GeneratorConfig) -> np.ndarray:
    ranks = np.arange(1, config.tokens_per_topic + 1, dtype=np.float64)
    return np.power(ranks, -config.zipf_exponent)


def _validate_drifts(config: GeneratorConfig, drifts: list[DriftSpec]) -> None:
    pools = config.pools()
    for d in drifts:
        if d.topic_before == d.topic_after:
            raise ValueError(f"drift for {d.token!r} names identical topics")
        for t in (d.topic_before, d.topic_after):
            if not 0 <= t < config.n_topics:
                raise ValueError(f"drift for {d.token!r} names unknown topic {t}")
        if d.token not in pools[d.topic_before] and d.token not in pools[d.topic_after]:
            raise ValueError(f"drift token {d.token!r} absent from both named topics")
        if not 0 <= d.change_month < config.n_slices:
            raise ValueError(f"change month {d.change_month} outside the grid")


def generate(
    config: GeneratorConfig, drifts: list[DriftSpec], out_dir: str | Path
) -> dict:
    """Write one corpus file per slice plus the ground-truth manifest."""
    _validate_drifts(config, drifts)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    pools = config.pools()
    surfaces = [s for pool in pools for s in pool]
    surface_id = {s: i for i, s in enumerate(surfaces)}
    pool_ids = [np.array([surface_id[s] for s in pool]) for pool in pools]
    base_w = _base_weights(config)
    keys = config.slice_keys()

    by_token: dict[str, DriftSpec] = {d.token: d for d in drifts}
    if len(by_token) != len(drifts):
        raise ValueError("multiple drift specs for one token")

    counts = {}
    for m, key in enumerate(keys):
        rng = np.random.default_rng([config.seed, m])

        # per-topic sampling tables for this month, with drift mixing applied
        ids_m: list[np.ndarray] = []
        probs_m: list[np.ndarray] = []
        for t in range(config.n_topics):
            ids = pool_ids[t].copy()
            w = base_w[: ids.size].copy()
            for d in drifts:
                alpha = d.mix(m)
                if d.token not in surface_id:
                    continue
                tok = surface_id[d.token]
                if t == d.topic_before and tok in ids:
                    w[ids == tok] *= 1.0 - alpha
                if t == d.topic_after and alpha > 0.0 and tok not in ids:
                    src = pools[d.topic_before].index(d.token)
                    ids = np.append(ids, tok)
                    w = np.append(w, base_w[src] * alpha)
            keep = w > 0.0
            ids_m.append(ids[keep])
            probs_m.append(w[keep] / w[keep].sum())

        doc_topics = rng.integers(0, config.n_topics, size=config.docs_per_slice)
        doc_lens = rng.integers(
            config.doc_len_min, config.doc_len_max + 1, size=config.docs_per_slice
        )
        docs: list[np.ndarray | None] = [None] * config.docs_per_slice
        for t in range(config.n_topics):
            members = np.flatnonzero(doc_topics == t)
            if members.size == 0:
                continue
            lens = doc_lens[members]
            draw = rng.choice(ids_m[t], size=int(lens.sum()), p=probs_m[t])
            offsets = np.concatenate([[0], np.cumsum(lens)])
            for di, doc_idx in enumerate(members):
                docs[doc_idx] = draw[offsets[di] : offsets[di + 1]]

        path = out_dir / f"{key}.txt"
        n_tokens = 0
        with open(path, "w", encoding="utf-8") as fh:
            for doc in docs:
                assert doc is not None
                n_tokens += doc.size
                fh.write(" ".join(surfaces[i] for i in doc) + "\n")
        counts[str(key)] = {"documents": config.docs_per_slice, "tokens": int(n_tokens)}

    manifest = {
        "config": config.as_dict(),
        "slices": counts,
        "drifts": [
            {
                "token": d.token,
                "topic_before": d.topic_before,
                "topic_after": d.topic_after,
                "change_month": d.change_month,
                "change_period": f"{keys[d.change_month].year:04d}-{keys[d.change_month].month:02d}",
                "style": d.style.value,
                "ramp_months": d.ramp_months,
                "period_months": d.period_months,
            }
            for d in drifts
        ],
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def score(reports: list[dict], manifest: dict) -> dict:
    """Precision/recall of reported drifted tokens against the planted truth.

    A planted token counts as recovered when it appears in the drifted-token
    list of any report whose (from, to) slices span its change period;
    precision is measured over all reported tokens across the given reports.
    """
    known_slices = set(manifest["slices"])
    spans: list[tuple[int, int, set[str]]] = []
    reported_all: set[str] = set()
    for rep in reports:
        frm, to = rep["from_slice"], rep["to_slice"]
        if frm not in known_slices or to not in known_slices:
            raise ValueError(f"report slices ({frm}, {to}) not in the manifest grid")
        i = SliceKey.parse(frm).month_index()
        j = SliceKey.parse(to).month_index()
        if i > j:
            i, j = j, i
        tokens = {d["token"] for d in rep["drifted_tokens"]}
        spans.append((i, j, tokens))
        reported_all |= tokens

    planted = {d["token"]: d for d in manifest["drifts"]}
    recovered: set[str] = set()
    for token, d in planted.items():
        y, mo = (int(x) for x in d["change_period"].split("-"))
        change = y * 12 + mo - 1
        for i, j, tokens in spans:
            if i < change <= j and token in tokens:
                recovered.add(token)
                break

    tp = len(reported_all & set(planted))
    recall = len(recovered) / len(planted) if planted else 1.0
    precision = tp / len(reported_all) if reported_all else 1.0
    per_style: dict[str, dict] = {}
    for d in planted.values():
        s = per_style.setdefault(d["style"], {"planted": 0, "recovered": 0})
        s["planted"] += 1
        s["recovered"] += int(d["token"] in recovered)
    for s in per_style.values():
        s["recall"] = s["recovered"] / s["planted"]
    return {
        "precision": precision,
        "recall": recall,
        "planted": sorted(planted),
        "recovered": sorted(recovered),
        "false_positives": sorted(reported_all - set(planted)),
        "per_style": per_style,
    }


@dataclass
class Benchmark:
    """The default planted-drift benchmark: 5 abrupt drifts at month 6 of 12.

    The training hyperparameters and the indicator threshold are calibrated
    so adjacent same-distribution months produce almost no flagged pairs
    while a pool switch is unmistakable; beta = 4 is stricter than the
    conforming minimum of 2.
    """

    config: GeneratorConfig = field(default_factory=GeneratorConfig)
    beta: float = 4.0

    def drifts(self) -> list[DriftSpec]:
        pools = self.config.pools()
        specs = []
        for i in range(5):
            before = 2 * i
            after = 2 * i + 1
            # alternate word and emoji drift tokens
            token = pools[before][0] if i % 2 == 0 else pools[before][-1]
            specs.append(
                DriftSpec(
                    token=token,
                    topic_before=before,
                    topic_after=after,
                    change_month=6,
                    style=DriftStyle.ABRUPT,
                )
            )
        return specs

    def hyperparams(self):
        from .trainer import Hyperparams

        return Hyperparams(
            dim=40, window=10, negatives=5, epochs=6,
            alpha=0.05, subsample=0.0, min_count=5, seed=1,
        )


def run_benchmark(
    workdir: str | Path,
    benchmark: Benchmark | None = None,
    drifts: list[DriftSpec] | None = None,
    hp=None,
    beta: float | None = None,
    workers: int = 1,
) -> dict:
    """Generate, train every slice, run the drift detector, score the result.

    Comparisons are the adjacent-month pairs spanning each planted change;
    returns {"score", "comparisons", ...} ready for JSON serialization.
    """
    from .drift import compare_models
    from .trainer import train_skipgram
    from .vocab import build_vocab

    benchmark = benchmark if benchmark is not None else Benchmark()
    config = benchmark.config
    drifts = drifts if drifts is not None else benchmark.drifts()
    hp = hp if hp is not None else benchmark.hyperparams()
    beta = beta if beta is not None else benchmark.beta

    workdir = Path(workdir)
    corpus_dir = workdir / "corpus"
    manifest = generate(config, drifts, corpus_dir)
    keys = config.slice_keys()
    slices = {str(k): corpus_dir / f"{k}.txt" for k in keys}
    vocab = build_vocab(slices, min_count=hp.min_count)

    models = {}
    for label, path in slices.items():
        models[label] = train_skipgram(
            path, vocab, hp, slice_key=SliceKey.parse(label), workers=workers
        )

    change_months = sorted({d.change_month for d in drifts if d.change_month >= 1})
    if not change_months:
        change_months = [len(keys) - 1] if len(keys) > 1 else []
    reports = []
    for c in change_months:
        cmp = compare_models(models[str(keys[c - 1])], models[str(keys[c])], beta=beta)
        reports.append(cmp.report())

    return {
        "score": score(reports, manifest),
        "comparisons": reports,
        "beta": beta,
        "generator": config.as_dict(),
        "hyperparams": hp.as_dict(),
        "drifts": manifest["drifts"],
    }
