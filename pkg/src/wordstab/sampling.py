"""Corpus downsampling: pairwise-disjoint samples, or samples sharing an exact core.

Sentence identity is the sentence's position in the source corpus, so
duplicate sentence texts stay distinct.
"""

from __future__ import annotations

import json
import math
import os
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .embedding_io import Vocabulary
from .errors import DataError, SamplingError, VocabularyError


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[tuple[str, ...], ...]
    label: str = ""
    # source-corpus position of each sentence; None for an original corpus
    positions: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(tuple(s) for s in self.sentences))
        if self.positions is not None:
            object.__setattr__(self, "positions", tuple(int(p) for p in self.positions))
            if len(self.positions) != len(self.sentences):
                raise DataError("positions and sentences differ in length")

    def __len__(self) -> int:
        return len(self.sentences)

    @property
    def identities(self) -> tuple[int, ...]:
        return self.positions if self.positions is not None else tuple(range(len(self.sentences)))

    def token_counts(self) -> Counter:
        c = Counter()
        for s in self.sentences:
            c.update(s)
        return c

    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)


def read_corpus(path, label: str | None = None) -> Corpus:
    """One sentence per line, tokens separated by ASCII spaces. Blank lines become empty sentences
    so that positions keep matching line numbers."""
    sentences = []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            sentences.append(tuple(t for t in line.rstrip("\r\n").split(" ") if t))
    if not sentences:
        raise DataError(f"{path}: empty corpus")
    return Corpus(tuple(sentences), label if label is not None else os.path.basename(os.fspath(path)))


def write_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in corpus.sentences:
            fh.write(" ".join(s))
            fh.write("\n")


@dataclass(frozen=True)
class SamplePlan:
    k: int
    n: int
    overlap_target: float | None = None
    seed: int = 0

    @property
    def core_size(self) -> int:
        if not self.overlap_target:
            return 0
        # round half up, independent of banker's rounding
        return int(math.floor(self.overlap_target * self.n + 0.5))

    @property
    def required(self) -> int:
        c = self.core_size
        return c + self.k * (self.n - c)

    def check(self, available: int) -> None:
        if self.k < 1 or self.n < 1:
            raise SamplingError(f"need k >= 1 and n >= 1 (got k={self.k}, n={self.n})")
        if self.overlap_target is not None and not 0.0 <= self.overlap_target <= 1.0:
            raise SamplingError(f"overlap target {self.overlap_target} outside [0, 1]")
        if self.required > available:
            raise SamplingError(
                f"infeasible plan: requires {self.required} sentences, corpus has {available}"
            )


def _draw(corpus: Corpus, plan: SamplePlan) -> list[Corpus]:
    plan.check(len(corpus))
    rng = np.random.default_rng(plan.seed)
    perm = rng.permutation(len(corpus))
    c = plan.core_size
    core = perm[:c]
    block = plan.n - c
    source_ids = corpus.identities
    samples = []
    for i in range(plan.k):
        unique = perm[c + i * block: c + (i + 1) * block]
        members = np.concatenate([core, unique])
        rng.shuffle(members)
        samples.append(
            Corpus(
                tuple(corpus.sentences[m] for m in members),
                f"{corpus.label}.sample{i}",
                tuple(source_ids[m] for m in members),
            )
        )
    return samples


def downsample_disjoint(corpus: Corpus, k: int, n: int, seed: int) -> list[Corpus]:
    """``k`` pairwise-disjoint samples of ``n`` sentences, uniform without replacement."""
    return _draw(corpus, SamplePlan(k, n, None, seed))


def downsample_with_overlap(corpus: Corpus, k: int, n: int, overlap_target: float, seed: int) -> list[Corpus]:
    """``k`` samples of ``n`` sentences; every pair shares exactly the same core of
    ``round(overlap_target * n)`` sentences. ``overlap_target=0`` is identical to
    :func:`downsample_disjoint` with the same seed."""
    return _draw(corpus, SamplePlan(k, n, overlap_target, seed))


def measured_overlap(samples: Sequence[Corpus]) -> np.ndarray:
    """Pairwise fraction of shared sentence identities; diagonal is 1."""
    if not samples:
        raise DataError("no samples")
    n = len(samples[0])
    if any(len(s) != n for s in samples):
        raise DataError("samples have unequal sizes: " + ", ".join(str(len(s)) for s in samples))
    ids = [set(s.identities) for s in samples]
    k = len(samples)
    out = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            out[i, j] = out[j, i] = len(ids[i] & ids[j]) / n
    return out


def shared_vocabulary(samples: Sequence[Corpus], min_count: int = 5, rule: str = "per-sample") -> Vocabulary:
    """Tokens frequent enough in the samples.

    ``rule="per-sample"``: count >= ``min_count`` inside every sample.
    ``rule="total"``: present in every sample and total count > ``min_count``.
    Returned counts are totals over all samples.
    """
    if not samples:
        raise DataError("no samples")
    counts = [s.token_counts() for s in samples]
    total = Counter()
    for c in counts:
        total.update(c)
    if rule == "per-sample":
        keep = {t for t, n in counts[0].items() if n >= min_count}
        for c in counts[1:]:
            keep = {t for t in keep if c.get(t, 0) >= min_count}
    elif rule == "total":
        keep = {t for t, n in total.items() if n > min_count and all(t in c for c in counts)}
    else:
        raise ValueError(f"unknown rule {rule!r}")
    if not keep:
        raise VocabularyError(f"no token passes min_count={min_count} ({rule}) across {len(samples)} samples")
    return Vocabulary.sorted_from(keep, {t: total[t] for t in keep})


def write_samples(samples: Sequence[Corpus], out_dir, label: str, plan: SamplePlan, extra: dict | None = None) -> dict:
    """Write ``<label>.sample<i>.txt`` files and ``<label>.manifest.json``; returns the manifest."""
    os.makedirs(out_dir, exist_ok=True)
    files = []
    for i, s in enumerate(samples):
        name = f"{label}.sample{i}.txt"
        write_corpus(s, os.path.join(out_dir, name))
        files.append(name)
    overlap = measured_overlap(samples)
    manifest = {
        "plan": asdict(plan),
        "core_size": plan.core_size,
        "seed": plan.seed,
        "files": files,
        "measured_overlap": overlap.round(12).tolist(),
        **(extra or {}),
    }
    with open(os.path.join(out_dir, f"{label}.manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
