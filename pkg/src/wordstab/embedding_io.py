"""Vocabularies, embedding spaces, and the word2vec / GloVe text formats.

Both formats are plain UTF-8 text, one ``token v1 ... vD`` line per word.
word2vec files may open with a ``V D`` header line; GloVe files never do.
Tokens are split on ASCII space only, so a non-breaking space stays inside
its token.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmbeddingFormatError, VocabularyError

NORMALIZED_TAG = "normalized"


@dataclass(frozen=True)
class Vocabulary:
    """Ordered set of unique tokens with dense ids ``0..V-1``."""

    words: tuple[str, ...]
    counts: Mapping[str, int] | None = None
    index: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        words = tuple(self.words)
        object.__setattr__(self, "words", words)
        index = {}
        for i, w in enumerate(words):
            if w in index:
                raise VocabularyError(f"duplicate token {w!r} in vocabulary")
            index[w] = i
        object.__setattr__(self, "index", index)
        if self.counts is not None:
            object.__setattr__(self, "counts", dict(self.counts))

    @classmethod
    def sorted_from(cls, tokens: Iterable[str], counts: Mapping[str, int] | None = None) -> "Vocabulary":
        """Vocabulary in lexicographic order (code point order == UTF-8 byte order)."""
        return cls(tuple(sorted(set(tokens))), counts)

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word) -> bool:
        return word in self.index

    def __iter__(self):
        return iter(self.words)

    def id(self, word: str) -> int:
        try:
            return self.index[word]
        except KeyError:
            raise VocabularyError(f"word {word!r} not in vocabulary") from None


@dataclass(frozen=True)
class EmbeddingSpace:
    """One trained model: a vocabulary plus a ``V x D`` float64 matrix.

    The matrix is stored read-only so a space can be shared between workers.
    """

    vocab: Vocabulary
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64, copy=True)
        if m.ndim != 2:
            raise EmbeddingFormatError(f"matrix must be 2-D, got shape {m.shape}")
        if m.shape[0] != len(self.vocab):
            raise EmbeddingFormatError(
                f"matrix has {m.shape[0]} rows but vocabulary has {len(self.vocab)} words"
            )
        if not np.all(np.isfinite(m)):
            bad = [self.vocab.words[i] for i in np.flatnonzero(~np.isfinite(m).all(axis=1))]
            raise EmbeddingFormatError(f"non-finite values for tokens {bad[:10]}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return len(self.vocab)

    def vector(self, word: str) -> np.ndarray:
        return self.matrix[self.vocab.id(word)]

    def rows_for(self, vocab: Vocabulary) -> np.ndarray:
        """Row indices of ``vocab``'s words in this space, in ``vocab`` order."""
        missing = [w for w in vocab.words if w not in self.vocab.index]
        if missing:
            raise VocabularyError(
                f"{len(missing)} restricted words missing from space {self.label!r}, e.g. {missing[:5]}"
            )
        return np.fromiter((self.vocab.index[w] for w in vocab.words), dtype=np.int64, count=len(vocab))

    def subset(self, vocab: Vocabulary) -> "EmbeddingSpace":
        return EmbeddingSpace(vocab, self.matrix[self.rows_for(vocab)], self.label)


def _split_tokens(line: str) -> list[str]:
    # ASCII space only; runs of spaces and a trailing space (word2vec C output) are tolerated
    return [p for p in line.split(" ") if p]


def _read_vectors(path, allow_header: bool) -> EmbeddingSpace:
    path = os.fspath(path)
    words: list[str] = []
    rows: list[list[float]] = []
    seen: dict[str, int] = {}
    header = None
    dim = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            parts = _split_tokens(line)
            if not parts:
                continue
            if lineno == 1 and allow_header and len(parts) == 2 and all(p.isdigit() for p in parts):
                header = (int(parts[0]), int(parts[1]))
                continue
            token, values = parts[0], parts[1:]
            if not values:
                raise EmbeddingFormatError(f"token {token!r} has no vector values", path, lineno)
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise EmbeddingFormatError(
                    f"dimension mismatch: expected {dim} values, got {len(values)}", path, lineno
                )
            try:
                vec = [float(v) for v in values]
            except ValueError as exc:
                raise EmbeddingFormatError(f"unparseable value ({exc})", path, lineno) from None
            if not all(math.isfinite(v) for v in vec):
                raise EmbeddingFormatError(f"non-finite value for token {token!r}", path, lineno)
            if token in seen:
                raise EmbeddingFormatError(
                    f"duplicate token {token!r} (first seen on line {seen[token]})", path, lineno
                )
            seen[token] = lineno
            words.append(token)
            rows.append(vec)
    if not rows:
        raise EmbeddingFormatError("no vectors", path)
    if header is not None:
        if header[1] != dim:
            raise EmbeddingFormatError(f"header declares D={header[1]} but vectors have D={dim}", path, 1)
        if header[0] != len(rows):
            raise EmbeddingFormatError(f"header declares V={header[0]} but file has {len(rows)} vectors", path, 1)
    label = os.path.basename(path)
    return EmbeddingSpace(Vocabulary(tuple(words)), np.asarray(rows, dtype=np.float64), label)


def load_word2vec_text(path) -> EmbeddingSpace:
    """Load a word2vec text file; the ``V D`` header is optional and validated if present."""
    return _read_vectors(path, allow_header=True)


def load_glove_text(path) -> EmbeddingSpace:
    """Load a headerless GloVe text file."""
    return _read_vectors(path, allow_header=False)


def save_text(space: EmbeddingSpace, path, header: bool = True) -> None:
    """Write ``space`` in word2vec (``header=True``) or GloVe text format.

    Values carry 9 significant digits, enough for a 1e-6 round trip.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(f"{len(space)} {space.dim}\n")
        for word, row in zip(space.vocab.words, space.matrix):
            fh.write(word)
            fh.write(" ")
            fh.write(" ".join(f"{v:.9g}" for v in row))
            fh.write("\n")


def save_word2vec_text(space: EmbeddingSpace, path) -> None:
    save_text(space, path, header=True)


def save_glove_text(space: EmbeddingSpace, path) -> None:
    save_text(space, path, header=False)


def load_embeddings(path, fmt: str = "auto") -> EmbeddingSpace:
    """Dispatch on ``fmt`` in {"auto", "word2vec", "glove"}; "auto" accepts an optional header."""
    if fmt == "glove":
        return load_glove_text(path)
    if fmt in ("word2vec", "auto"):
        return load_word2vec_text(path)
    raise ValueError(f"unknown embedding format {fmt!r}")


def row_norms(matrix: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("ij,ij->i", matrix, matrix))


def normalize_rows(space: EmbeddingSpace) -> EmbeddingSpace:
    """Scale every row to unit L2 norm. All-zero rows are an error."""
    norms = row_norms(space.matrix)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        bad = [space.vocab.words[i] for i in zero]
        raise VocabularyError(f"cannot normalize all-zero rows for tokens {bad}")
    label = space.label
    if not label.endswith(NORMALIZED_TAG):
        label = f"{label} [{NORMALIZED_TAG}]" if label else NORMALIZED_TAG
    return EmbeddingSpace(space.vocab, space.matrix / norms[:, None], label)


def common_vocabulary(spaces: Sequence[EmbeddingSpace | Vocabulary]) -> Vocabulary:
    """Words present in every input, in lexicographic order."""
    if len(spaces) < 2:
        raise VocabularyError("common_vocabulary needs at least two spaces")
    vocabs = [s.vocab if isinstance(s, EmbeddingSpace) else s for s in spaces]
    shared = set(vocabs[0].words)
    for v in vocabs[1:]:
        shared.intersection_update(v.words)
    if not shared:
        raise VocabularyError("embedding spaces share no words")
    return Vocabulary.sorted_from(shared)


def read_word_list(path) -> Vocabulary:
    """One token per line; blank lines ignored; result sorted."""
    with open(path, encoding="utf-8") as fh:
        words = {line.strip("\r\n ") for line in fh}
    words.discard("")
    if not words:
        raise VocabularyError(f"{path}: empty word list")
    return Vocabulary.sorted_from(words)
