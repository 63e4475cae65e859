"""Exact top-k cosine neighbours.

Neighbour ids always refer to positions in the *restriction* vocabulary, so
lists computed in different spaces over the same restriction are directly
comparable. Ties are broken by ascending id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .embedding_io import EmbeddingSpace, Vocabulary, normalize_rows
from .errors import DataError, VocabularyError

DEFAULT_K = 10
_BLOCK = 512


@dataclass(frozen=True)
class NeighborList:
    query: int
    neighbors: tuple[tuple[int, float], ...]

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.neighbors)

    @property
    def similarities(self) -> tuple[float, ...]:
        return tuple(s for _, s in self.neighbors)

    def __len__(self) -> int:
        return len(self.neighbors)


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DataError(f"cosine of vectors with different shapes {u.shape} and {v.shape}")
    nu = math.sqrt(float(u @ u))
    nv = math.sqrt(float(v @ v))
    if nu == 0.0 or nv == 0.0:
        raise DataError("cosine undefined for a zero vector")
    return min(1.0, max(-1.0, float(u @ v) / (nu * nv)))


def _unit_matrix(space: EmbeddingSpace, restrict: Vocabulary) -> np.ndarray:
    # raises on zero rows, naming the tokens
    return normalize_rows(space.subset(restrict)).matrix


def _resolve_query(query, restrict: Vocabulary) -> int:
    if isinstance(query, (int, np.integer)):
        q = int(query)
        if not 0 <= q < len(restrict):
            raise VocabularyError(f"query id {q} outside restricted vocabulary of size {len(restrict)}")
        return q
    if query not in restrict:
        raise VocabularyError(f"query {query!r} not in restricted vocabulary")
    return restrict.index[query]


def top_k_arrays(
    space: EmbeddingSpace,
    queries: Sequence[int | str] | None = None,
    k: int = DEFAULT_K,
    restrict: Vocabulary | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Array form of :func:`batch_top_k`.

    Returns ``(ids, sims)`` of shape ``(len(queries), min(k, R-1))``.
    ``queries=None`` means every word of ``restrict``.
    """
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    restrict = space.vocab if restrict is None else restrict
    R = len(restrict)
    if R < 2:
        raise VocabularyError("restricted vocabulary must contain at least 2 words")
    if queries is None:
        qids = np.arange(R, dtype=np.int64)
    else:
        qids = np.fromiter((_resolve_query(q, restrict) for q in queries), dtype=np.int64, count=len(queries))
    kk = min(k, R - 1)
    unit = _unit_matrix(space, restrict)
    out_ids = np.empty((len(qids), kk), dtype=np.int64)
    out_sims = np.empty((len(qids), kk), dtype=np.float64)
    for start in range(0, len(qids), _BLOCK):
        block = qids[start:start + _BLOCK]
        sims = unit[block] @ unit.T
        np.clip(sims, -1.0, 1.0, out=sims)
        sims[np.arange(len(block)), block] = -np.inf
        # kth largest per row; everything >= it is a candidate, ties included
        kth = np.partition(sims, R - kk, axis=1)[:, R - kk]
        for r in range(len(block)):
            row = sims[r]
            cand = np.flatnonzero(row >= kth[r])
            order = np.lexsort((cand, -row[cand]))[:kk]
            out_ids[start + r] = cand[order]
            out_sims[start + r] = row[cand[order]]
    return out_ids, out_sims


def top_k(
    space: EmbeddingSpace,
    query: int | str,
    k: int = DEFAULT_K,
    restrict: Vocabulary | None = None,
) -> NeighborList:
    """Exact ``k`` nearest neighbours of ``query`` by cosine within ``restrict``."""
    return batch_top_k(space, [query], k, restrict)[0]


def batch_top_k(
    space: EmbeddingSpace,
    queries: Iterable[int | str],
    k: int = DEFAULT_K,
    restrict: Vocabulary | None = None,
) -> list[NeighborList]:
    """Exact neighbour lists for several queries, in query order.

    Neighbour ids and order match :func:`top_k`; similarities can differ from
    a single-query call in the last bit because BLAS sums blocks differently.
    """
    queries = list(queries)
    restrict = space.vocab if restrict is None else restrict
    qids = []
    for pos, q in enumerate(queries):
        try:
            qids.append(_resolve_query(q, restrict))
        except VocabularyError as exc:
            raise VocabularyError(f"query #{pos} ({q!r}): {exc}") from None
    ids, sims = top_k_arrays(space, qids, k, restrict)
    return [
        NeighborList(q, tuple(zip(map(int, i), map(float, s))))
        for q, i, s in zip(qids, ids, sims)
    ]


def write_neighbors_tsv(path, lists: Iterable[NeighborList], vocab: Vocabulary) -> None:
    """TSV ``query, rank, neighbor, similarity`` with a header row; rank starts at 1."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("query\trank\tneighbor\tsimilarity\n")
        for nl in lists:
            q = vocab.words[nl.query]
            for rank, (nid, sim) in enumerate(nl.neighbors, start=1):
                fh.write(f"{q}\t{rank}\t{vocab.words[nid]}\t{sim:.9g}\n")
