"""Skip-gram with negative sampling, seedable and optionally bit-reproducible.

The training loop follows the reference word2vec recipe: frequent-word
subsampling, a dynamic window drawn uniformly from ``1..window``, negatives
drawn from the unigram distribution raised to 0.75, input vectors initialised
uniformly in ``[-0.5/dim, 0.5/dim)``, output vectors at zero, and a learning
rate decaying linearly towards ``initial_lr * min_lr_fraction``.

In deterministic mode all updates run sequentially on a single random
stream, so identical ``(corpus, config)`` gives bit-identical vectors.
Parallel mode runs lock-free (hogwild) over sentence chunks and is not
reproducible.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit, prange

from .embedding_io import EmbeddingSpace, Vocabulary
from .errors import DataError, TrainingError, VocabularyError
from .sampling import Corpus

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 300
    window: int = 5
    min_count: int = 5
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    min_lr_fraction: float = 1e-4
    subsample_threshold: float = 1e-3
    ns_exponent: float = 0.75
    seed: int = 1
    deterministic: bool = True
    export: str = "input"  # "input" or "average" (mean of input and output vectors)

    def __post_init__(self):
        for name in ("dim", "window", "negatives", "epochs", "min_count"):
            if getattr(self, name) < 1:
                raise DataError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.initial_lr > 0:
            raise DataError(f"initial_lr must be > 0, got {self.initial_lr}")
        if self.subsample_threshold < 0:
            raise DataError("subsample_threshold must be >= 0")
        if self.export not in ("input", "average"):
            raise DataError(f"export must be 'input' or 'average', got {self.export!r}")

    @property
    def mode(self) -> str:
        return "deterministic" if self.deterministic else "parallel"


@dataclass
class TrainResult:
    space: EmbeddingSpace
    epoch_losses: list[float] = field(default_factory=list)
    epoch_pairs: list[int] = field(default_factory=list)
    output_vectors: np.ndarray | None = None


def build_vocab(corpus: Corpus, min_count: int = 5) -> Vocabulary:
    """Tokens with count >= ``min_count``; ids by descending count, then token."""
    if len(corpus) == 0:
        raise VocabularyError("empty corpus")
    counts = corpus.token_counts()
    kept = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
    if not kept:
        raise VocabularyError(f"no token occurs at least {min_count} times")
    return Vocabulary(tuple(kept), {t: counts[t] for t in kept})


# --- numeric core ---------------------------------------------------------


def sgns_loss_and_grad(center: np.ndarray, targets: np.ndarray, labels: np.ndarray):
    """Loss and gradients of one skip-gram example.

    ``center`` is the input vector, ``targets`` stacks output vectors (the
    true context first, then negatives), ``labels`` is 1 for the context and
    0 for negatives. Loss is ``sum_j softplus(-s_j * f_j)`` with
    ``f_j = center . targets[j]`` and ``s_j = 2*label_j - 1``.
    """
    f = targets @ center
    sig = 1.0 / (1.0 + np.exp(-f))
    sign = 2.0 * labels - 1.0
    loss = float(np.sum(np.logaddexp(0.0, -sign * f)))
    coef = sig - labels
    return loss, coef @ targets, np.outer(coef, center)


@njit(cache=True)
def _next(state):
    state[0] = state[0] * np.uint64(25214903917) + np.uint64(11)
    return state[0]


@njit(cache=True)
def _uniform(state):
    return (_next(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def _softplus(x):
    if x > 0.0:
        return x + np.log1p(np.exp(-x))
    return np.log1p(np.exp(x))


@njit(cache=True)
def _sgd_step(w_in, w_out, center, targets, labels, n_targets, lr, neu1e):
    """One SGD step on ``w_in[center]`` and ``w_out[targets[:n_targets]]``; returns the pre-step loss."""
    dim = w_in.shape[1]
    for d in range(dim):
        neu1e[d] = 0.0
    loss = 0.0
    for j in range(n_targets):
        t = targets[j]
        f = 0.0
        for d in range(dim):
            f += w_in[center, d] * w_out[t, d]
        if f >= 0.0:
            sig = 1.0 / (1.0 + np.exp(-f))
        else:
            e = np.exp(f)
            sig = e / (1.0 + e)
        if labels[j] > 0.5:
            loss += _softplus(-f)
        else:
            loss += _softplus(f)
        g = (labels[j] - sig) * lr
        for d in range(dim):
            neu1e[d] += g * w_out[t, d]
        for d in range(dim):
            w_out[t, d] += g * w_in[center, d]
    for d in range(dim):
        w_in[center, d] += neu1e[d]
    return loss


@njit(cache=True)
def _run_sentences(tokens, offsets, s_begin, s_end, w_in, w_out, cum, keep, window, negatives,
                   lr0, lr_floor, words_before, words_scale, total_words, state, buf, targets, labels, neu1e):
    vocab_size = w_out.shape[0]
    loss = 0.0
    pairs = 0
    seen = 0
    for s in range(s_begin, s_end):
        length = 0
        for p in range(offsets[s], offsets[s + 1]):
            w = tokens[p]
            seen += 1
            if keep[w] < 1.0 and _uniform(state) >= keep[w]:
                continue
            buf[length] = w
            length += 1
        progress = (words_before + seen * words_scale) / (total_words + 1.0)
        lr = lr0 * max(1.0 - progress, lr_floor)
        for pos in range(length):
            span = window - np.int64(_next(state) % np.uint64(window))
            center = buf[pos]
            lo = max(0, pos - span)
            hi = min(length, pos + span + 1)
            for c in range(lo, hi):
                if c == pos:
                    continue
                ctx = buf[c]
                targets[0] = ctx
                labels[0] = 1.0
                n = 1
                for _ in range(negatives):
                    neg = np.searchsorted(cum, _uniform(state), side="right")
                    if neg >= vocab_size:
                        neg = vocab_size - 1
                    if neg == ctx:
                        continue
                    targets[n] = neg
                    labels[n] = 0.0
                    n += 1
                loss += _sgd_step(w_in, w_out, center, targets, labels, n, lr, neu1e)
                pairs += 1
    return loss, pairs, seen


@njit(cache=True)
def _epoch_sequential(tokens, offsets, w_in, w_out, cum, keep, window, negatives,
                      lr0, lr_floor, words_before, total_words, state, max_len):
    buf = np.empty(max_len, dtype=np.int32)
    targets = np.empty(negatives + 1, dtype=np.int64)
    labels = np.empty(negatives + 1, dtype=np.float64)
    neu1e = np.empty(w_in.shape[1], dtype=np.float64)
    return _run_sentences(tokens, offsets, 0, offsets.shape[0] - 1, w_in, w_out, cum, keep, window,
                          negatives, lr0, lr_floor, words_before, 1.0, total_words, state, buf,
                          targets, labels, neu1e)


@njit(cache=True, parallel=True)
def _epoch_parallel(tokens, offsets, w_in, w_out, cum, keep, window, negatives,
                    lr0, lr_floor, words_before, total_words, states, chunk_bounds, max_len):
    n_chunks = chunk_bounds.shape[0] - 1
    losses = np.zeros(n_chunks)
    pair_counts = np.zeros(n_chunks, dtype=np.int64)
    seen_counts = np.zeros(n_chunks, dtype=np.int64)
    for c in prange(n_chunks):
        buf = np.empty(max_len, dtype=np.int32)
        targets = np.empty(negatives + 1, dtype=np.int64)
        labels = np.empty(negatives + 1, dtype=np.float64)
        neu1e = np.empty(w_in.shape[1], dtype=np.float64)
        loss, pairs, seen = _run_sentences(tokens, offsets, chunk_bounds[c], chunk_bounds[c + 1], w_in, w_out,
                                           cum, keep, window, negatives, lr0, lr_floor, words_before,
                                           float(n_chunks), total_words, states[c:c + 1], buf, targets,
                                           labels, neu1e)
        losses[c] = loss
        pair_counts[c] = pairs
        seen_counts[c] = seen
    return losses.sum(), pair_counts.sum(), seen_counts.sum()


# --- driver ---------------------------------------------------------------


def _encode(corpus: Corpus, vocab: Vocabulary):
    index = vocab.index
    ids = []
    offsets = [0]
    for sent in corpus.sentences:
        ids.extend(index[t] for t in sent if t in index)
        offsets.append(len(ids))
    return np.asarray(ids, dtype=np.int32), np.asarray(offsets, dtype=np.int64)


def _keep_probs(vocab: Vocabulary, threshold: float, train_words: int) -> np.ndarray:
    counts = np.array([vocab.counts[w] for w in vocab.words], dtype=np.float64)
    if threshold <= 0:
        return np.ones_like(counts)
    st = threshold * train_words
    return np.minimum(1.0, (np.sqrt(counts / st) + 1.0) * st / counts)


def _noise_cdf(vocab: Vocabulary, exponent: float) -> np.ndarray:
    weights = np.array([vocab.counts[w] for w in vocab.words], dtype=np.float64) ** exponent
    cum = np.cumsum(weights / weights.sum())
    cum[-1] = 1.0
    return cum


def _seed_state(seed: int, stream: int = 0) -> int:
    ss = np.random.SeedSequence(seed & _MASK64, spawn_key=(stream,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def space_label(corpus: Corpus, config: TrainConfig) -> str:
    return (
        f"sgns corpus={corpus.label} seed={config.seed} mode={config.mode} dim={config.dim} "
        f"window={config.window} min_count={config.min_count} negatives={config.negatives} "
        f"epochs={config.epochs}"
    )


def train_model(corpus: Corpus, config: TrainConfig, vocab: Vocabulary | None = None) -> TrainResult:
    """Train SGNS on ``corpus`` and return the space plus per-epoch mean losses."""
    vocab = build_vocab(corpus, config.min_count) if vocab is None else vocab
    tokens, offsets = _encode(corpus, vocab)
    lengths = np.diff(offsets)
    if not np.any(lengths >= 2):
        raise TrainingError("corpus too small: no sentence has two in-vocabulary tokens")
    train_words = int(tokens.size)
    total_words = float(train_words) * config.epochs
    keep = _keep_probs(vocab, config.subsample_threshold, train_words)
    cum = _noise_cdf(vocab, config.ns_exponent)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed & _MASK64))
    V, D = len(vocab), config.dim
    w_in = (rng.random((V, D)) - 0.5) / D
    w_out = np.zeros((V, D))
    max_len = int(lengths.max())
    lr_floor = config.min_lr_fraction
    result = TrainResult(space=None)  # type: ignore[arg-type]
    words_before = 0.0

    if config.deterministic:
        state = np.array([_seed_state(config.seed)], dtype=np.uint64)
    else:
        n_chunks = max(1, min(len(lengths), 64))
        chunk_bounds = np.linspace(0, len(lengths), n_chunks + 1).astype(np.int64)
        states = np.array([_seed_state(config.seed, c + 1) for c in range(n_chunks)], dtype=np.uint64)

    for epoch in range(config.epochs):
        if config.deterministic:
            loss, pairs, seen = _epoch_sequential(tokens, offsets, w_in, w_out, cum, keep, config.window,
                                                  config.negatives, config.initial_lr, lr_floor,
                                                  words_before, total_words, state, max_len)
        else:
            loss, pairs, seen = _epoch_parallel(tokens, offsets, w_in, w_out, cum, keep, config.window,
                                                config.negatives, config.initial_lr, lr_floor,
                                                words_before, total_words, states, chunk_bounds, max_len)
        words_before += seen
        mean_loss = loss / pairs if pairs else float("nan")
        result.epoch_losses.append(mean_loss)
        result.epoch_pairs.append(int(pairs))
        logger.debug("epoch %d: %d pairs, mean loss %.5f", epoch + 1, pairs, mean_loss)

    matrix = w_in if config.export == "input" else 0.5 * (w_in + w_out)
    result.space = EmbeddingSpace(vocab, matrix, space_label(corpus, config))
    result.output_vectors = w_out
    return result


def train(corpus: Corpus, config: TrainConfig) -> EmbeddingSpace:
    return train_model(corpus, config).space


def config_dict(config: TrainConfig) -> dict:
    return asdict(config)
