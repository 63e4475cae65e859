"""Nearest-neighbour stability of words across sets of embedding spaces.

The stability of a word is the percent overlap of its top-k neighbour sets,
averaged over pairs of spaces. When both sides are the same set of spaces,
self-pairs are skipped and each unordered pair counts once; otherwise every
(x, y) in X x Y counts. All values are percents in [0, 100].
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .embedding_io import EmbeddingSpace, Vocabulary, common_vocabulary
from .errors import DataError
from .knn import DEFAULT_K, NeighborList, top_k, top_k_arrays

BUCKET_WIDTH = 5.0


def pair_overlap(a: NeighborList, b: NeighborList) -> float:
    """Percent of shared neighbour ids between two lists for the same query."""
    if a.query != b.query:
        raise DataError(f"neighbour lists are for different queries ({a.query} vs {b.query})")
    if len(a) != len(b):
        raise DataError(f"neighbour lists have different lengths ({len(a)} vs {len(b)})")
    if len(a) == 0:
        raise DataError("empty neighbour lists")
    return 100.0 * len(set(a.ids) & set(b.ids)) / len(a)


def _same_set(X: Sequence, Y: Sequence | None) -> bool:
    if Y is None or Y is X:
        return True
    return len(X) == len(Y) and all(x is y for x, y in zip(X, Y))


def space_pairs(X: Sequence[EmbeddingSpace], Y: Sequence[EmbeddingSpace] | None) -> list[tuple[int, int]]:
    """Index pairs into ``X + Y`` (or into ``X`` alone when ``Y`` is the same set)."""
    if not X or (Y is not None and not Y):
        raise DataError("stability needs non-empty sets of embedding spaces")
    if _same_set(X, Y):
        if len(X) < 2:
            raise DataError("stability within a single set needs at least two spaces")
        return list(itertools.combinations(range(len(X)), 2))
    return [(i, len(X) + j) for i in range(len(X)) for j in range(len(Y))]


def _all_spaces(X, Y):
    return list(X) if _same_set(X, Y) else list(X) + list(Y)


def word_stability(
    X: Sequence[EmbeddingSpace],
    Y: Sequence[EmbeddingSpace] | None,
    word: str,
    k: int = DEFAULT_K,
    restrict: Vocabulary | None = None,
) -> float:
    """Average pairwise neighbour overlap for ``word``. ``Y=None`` means ``Y is X``."""
    pairs = space_pairs(X, Y)
    spaces = _all_spaces(X, Y)
    if restrict is None:
        restrict = common_vocabulary(spaces) if len(spaces) > 1 else spaces[0].vocab
    lists = [top_k(s, word, k, restrict) for s in spaces]
    return math.fsum(pair_overlap(lists[i], lists[j]) for i, j in pairs) / len(pairs)


def bucketize(values: Sequence[float], width: float = BUCKET_WIDTH) -> list[float]:
    """Percent of ``values`` per bucket.

    Bucket 0 is ``[0, width]``; bucket i >= 1 is ``(i*width, (i+1)*width]``.
    """
    n_bins = round(100.0 / width)
    if n_bins * width != 100.0:
        raise DataError(f"bucket width {width} does not divide 100")
    counts = [0] * n_bins
    for v in values:
        if not (0.0 <= v <= 100.0):
            raise DataError(f"stability value {v} outside [0, 100]")
        counts[max(0, math.ceil(v / width) - 1)] += 1
    n = len(values)
    return [100.0 * c / n if n else 0.0 for c in counts]


@dataclass
class StabilityReport:
    per_word: dict[str, float]
    average: float
    buckets: list[float]
    config: dict = field(default_factory=dict)

    @property
    def average_fraction(self) -> float:
        return self.average / 100.0

    def to_dict(self) -> dict:
        return {
            "per_word": self.per_word,
            "average": self.average,
            "buckets": self.buckets,
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "StabilityReport":
        return cls(dict(d["per_word"]), float(d["average"]), list(d["buckets"]), dict(d.get("config", {})))

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True, ensure_ascii=False)
            fh.write("\n")

    @classmethod
    def read_json(cls, path) -> "StabilityReport":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def write_tsv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("word\tstability\n")
            for w in sorted(self.per_word):
                fh.write(f"{w}\t{self.per_word[w]:.6f}\n")

    def write_bucket_csv(self, path) -> None:
        width = self.config.get("bucket_width", BUCKET_WIDTH)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("bucket_upper,percent\n")
            for i, pct in enumerate(self.buckets):
                fh.write(f"{(i + 1) * width:g},{pct:.6f}\n")


def _overlap_counts(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.empty(len(a), dtype=np.int64)
    step = 4096
    for s in range(0, len(a), step):
        out[s:s + step] = (a[s:s + step, :, None] == b[s:s + step, None, :]).sum(axis=(1, 2))
    return out


def language_stability(
    X: Sequence[EmbeddingSpace],
    Y: Sequence[EmbeddingSpace] | None = None,
    restrict: Vocabulary | None = None,
    k: int = DEFAULT_K,
    bucket_width: float = BUCKET_WIDTH,
    vocab_filter: str = "",
    words: Sequence[str] | None = None,
) -> StabilityReport:
    """Stability of every word in ``restrict`` plus its average and 5%-bucket histogram.

    ``words`` limits which words are scored; their neighbours are still
    searched in all of ``restrict``. Neighbour lists are computed once per
    space and reused across pairs.
    """
    pairs = space_pairs(X, Y)
    spaces = _all_spaces(X, Y)
    if restrict is None:
        restrict = common_vocabulary(spaces)
        vocab_filter = vocab_filter or "common vocabulary of all spaces"
    if len(restrict) == 0:
        raise DataError("empty restriction vocabulary")
    if words is not None:
        missing = [w for w in words if w not in restrict]
        if missing:
            raise DataError(f"{len(missing)} words not in the restriction vocabulary, e.g. {missing[0]!r}")
        words = sorted(set(words))
        if not words:
            raise DataError("empty word list")
    queries = list(restrict.words) if words is None else words
    neighbor_ids = [top_k_arrays(s, None if words is None else words, k, restrict)[0] for s in spaces]
    kk = neighbor_ids[0].shape[1]
    denom = kk * len(pairs)
    shared = np.zeros(len(queries), dtype=np.int64)
    for i, j in pairs:
        shared += _overlap_counts(neighbor_ids[i], neighbor_ids[j])
    per_word = {w: 100.0 * int(c) / denom for w, c in zip(queries, shared)}
    values = list(per_word.values())
    config = {
        "k": k,
        "bucket_width": bucket_width,
        "spaces_x": [s.label for s in X],
        "spaces_y": None if _same_set(X, Y) else [s.label for s in Y],
        "n_pairs": len(pairs),
        "n_words": len(queries),
        "n_candidates": len(restrict),
        "vocab_filter": vocab_filter,
    }
    return StabilityReport(
        per_word=per_word,
        average=math.fsum(values) / len(values),
        buckets=bucketize(values, bucket_width),
        config=config,
    )


def select_best_variant(reports: Mapping[str, StabilityReport]) -> str:
    """Label with the highest average stability; ties go to the smallest label."""
    if not reports:
        raise DataError("no variants to choose from")
    return min(reports, key=lambda label: (-reports[label].average, label))
