"""Per-slice skip-gram embedding training.

The objective per (center c, context o) pair with negatives n_1..n_k drawn
from the unigram^(3/4) distribution is

    -log sigma(v_c . u_o) - sum_k log sigma(-v_c . u_nk)

optimized by SGD with a linearly decaying learning rate. With a fixed seed
and a single worker the run is bit-reproducible; with several workers the
weights are updated hogwild-style and results are reproducible only in
distribution.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from ._sgns_kernel import derive_seed, sgns_epoch
from .ingest import SliceKey
from .vocab import SharedVocabulary


@dataclass(frozen=True)
class Hyperparams:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    alpha: float = 0.025
    subsample: float = 1e-4
    min_count: int = 5
    seed: int = 1

    def as_dict(self) -> dict:
        return {
            "dim": self.dim,
            "window": self.window,
            "negatives": self.negatives,
            "epochs": self.epochs,
            "alpha": self.alpha,
            "subsample": self.subsample,
            "min_count": self.min_count,
            "seed": self.seed,
        }


@dataclass
class EmbeddingModel:
    slice: SliceKey | None
    dim: int
    tokens: list[str]
    vectors: np.ndarray  # (|V|, dim), rows in vocabulary id order
    hyperparams: Hyperparams | None = None
    epoch_losses: list[float] = field(default_factory=list)
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def vector(self, surface: str) -> np.ndarray:
        try:
            return self.vectors[self.index[surface]]
        except KeyError:
            raise KeyError(f"token not in model vocabulary: {surface!r}") from None


def encode_corpus(
    corpus: str | Path | Iterable[list[str]], vocab: SharedVocabulary
) -> tuple[np.ndarray, np.ndarray]:
    """Map a corpus to (ids, sentence offsets); -1 marks out-of-vocab tokens."""
    if isinstance(corpus, (str, Path)):
        with open(corpus, encoding="utf-8") as fh:
            sentences = [line.split() for line in fh]
    else:
        sentences = [list(s) for s in corpus]
    index = vocab.index
    ids: list[int] = []
    offsets = [0]
    for sent in sentences:
        if not sent:
            continue
        ids.extend(index.get(t, -1) for t in sent)
        offsets.append(len(ids))
    return np.asarray(ids, dtype=np.int32), np.asarray(offsets, dtype=np.int64)


def _noise_cdf(counts: np.ndarray) -> np.ndarray:
    weights = np.power(counts.astype(np.float64), 0.75)
    total = weights.sum()
    if total <= 0:
        weights = np.ones_like(weights)
        total = weights.sum()
    cdf = np.cumsum(weights / total)
    cdf[-1] = 1.0 + np.finfo(np.float64).eps  # guard the top binary-search bound
    return cdf


def _keep_prob(counts: np.ndarray, subsample: float) -> np.ndarray:
    keep = np.ones(counts.shape[0], dtype=np.float64)
    if subsample <= 0:
        return keep
    total = counts.sum()
    threshold = subsample * total
    frequent = counts > threshold
    ratio = counts[frequent] / threshold
    keep[frequent] = (np.sqrt(ratio) + 1.0) / ratio
    return keep


def train_skipgram(
    corpus: str | Path | Iterable[list[str]],
    vocab: SharedVocabulary,
    hp: Hyperparams = Hyperparams(),
    slice_key: SliceKey | None = None,
    workers: int = 1,
) -> EmbeddingModel:
    """Train one embedding model on one slice corpus."""
    ids, offsets = encode_corpus(corpus, vocab)
    in_vocab = int((ids >= 0).sum())
    if in_vocab < 2:
        raise ValueError(f"corpus has {in_vocab} in-vocabulary tokens; need at least 2")

    counts = np.bincount(ids[ids >= 0], minlength=len(vocab)).astype(np.int64)
    noise_cdf = _noise_cdf(counts)
    keep_prob = _keep_prob(counts, hp.subsample)

    rng = np.random.default_rng(hp.seed)
    dim = hp.dim
    w_center = (rng.random((len(vocab), dim), dtype=np.float64) - 0.5) / dim
    w_context = np.zeros((len(vocab), dim), dtype=np.float64)

    n_sent = offsets.shape[0] - 1
    total_words = float(hp.epochs) * in_vocab
    epoch_losses: list[float] = []
    words_done = 0.0

    for epoch in range(hp.epochs):
        if workers <= 1:
            loss, pairs, words_done, _ = sgns_epoch(
                ids, offsets, 0, n_sent, w_center, w_context, noise_cdf, keep_prob,
                hp.window, hp.negatives, hp.alpha, 1e-4, total_words, words_done,
                derive_seed(hp.seed, epoch),
            )
            epoch_losses.append(loss / max(pairs, 1))
        else:
            bounds = np.linspace(0, n_sent, workers + 1).astype(np.int64)
            results = [None] * workers
            base_done = words_done

            def run(w):
                # each thread scales its local progress as if it were global
                res = sgns_epoch(
                    ids, offsets, int(bounds[w]), int(bounds[w + 1]),
                    w_center, w_context, noise_cdf, keep_prob,
                    hp.window, hp.negatives, hp.alpha, 1e-4,
                    total_words / workers, base_done / workers,
                    derive_seed(hp.seed, epoch, w + 1),
                )
                results[w] = res

            threads = [threading.Thread(target=run, args=(w,)) for w in range(workers)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            loss = sum(r[0] for r in results)
            pairs = sum(r[1] for r in results)
            words_done = base_done + sum(r[2] - base_done / workers for r in results)
            epoch_losses.append(loss / max(pairs, 1))

    if not np.isfinite(w_center).all():
        raise FloatingPointError("training produced non-finite vectors")
    return EmbeddingModel(
        slice=slice_key,
        dim=dim,
        tokens=list(vocab.tokens),
        vectors=w_center,
        hyperparams=hp,
        epoch_losses=epoch_losses,
    )


# ---------------------------------------------------------------------------
# Reference objective for one (center, context, negatives) triple. Kept in
# plain numpy so the kernel's analytic gradients can be checked against
# finite differences of this function.
# ---------------------------------------------------------------------------


def _log_sigmoid(x: float) -> float:
    if x >= 0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


def sgns_pair_loss(v_c: np.ndarray, u_o: np.ndarray, u_negs: np.ndarray) -> float:
    loss = -_log_sigmoid(float(np.dot(v_c, u_o)))
    for u_n in u_negs:
        loss -= _log_sigmoid(-float(np.dot(v_c, u_n)))
    return loss


def sgns_pair_grads(
    v_c: np.ndarray, u_o: np.ndarray, u_negs: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradients of sgns_pair_loss w.r.t. (v_c, u_o, each u_n)."""
    sig_pos = 1.0 / (1.0 + math.exp(-float(np.dot(v_c, u_o))))
    g_c = (sig_pos - 1.0) * u_o
    g_o = (sig_pos - 1.0) * v_c
    g_negs = np.empty_like(u_negs)
    for i, u_n in enumerate(u_negs):
        sig = 1.0 / (1.0 + math.exp(-float(np.dot(v_c, u_n))))
        g_c = g_c + sig * u_n
        g_negs[i] = sig * v_c
    return g_c, g_o, g_negs


# ---------------------------------------------------------------------------
# Model file format: first line "<vocab_size> <dim>", then one line per token,
# "<surface> <f1> ... <fdim>" with space separators. Token surfaces are
# whitespace-free by the tokenizer invariant; floats are written with repr()
# so save/load round-trips exactly.
# ---------------------------------------------------------------------------


def save_model(model: EmbeddingModel, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(model.tokens)} {model.dim}\n")
        for token, row in zip(model.tokens, model.vectors):
            fh.write(token + " " + " ".join(repr(float(x)) for x in row) + "\n")


def load_model(path: str | Path, slice_key: SliceKey | None = None) -> EmbeddingModel:
    path = Path(path)
    if slice_key is None:
        try:
            slice_key = SliceKey.parse(path.stem)
        except (ValueError, KeyError):
            slice_key = None
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: malformed header {header!r}")
        try:
            size, dim = int(header[0]), int(header[1])
        except ValueError:
            raise ValueError(f"{path}: malformed header {header!r}") from None
        tokens: list[str] = []
        rows = np.empty((size, dim), dtype=np.float64)
        for i in range(size):
            line = fh.readline()
            if not line:
                raise ValueError(f"{path}: expected {size} rows, found {i}")
            fields = line.split()
            if len(fields) != dim + 1:
                raise ValueError(
                    f"{path}: row {i} has {len(fields) - 1} values, expected {dim}"
                )
            tokens.append(fields[0])
            rows[i] = [float(x) for x in fields[1:]]
        if fh.readline().strip():
            raise ValueError(f"{path}: trailing data after {size} rows")
    if not np.isfinite(rows).all():
        raise ValueError(f"{path}: model contains non-finite values")
    return EmbeddingModel(slice=slice_key, dim=dim, tokens=tokens, vectors=rows)
