import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synthetic import numbered_corpus
from wordstab.errors import DataError, SamplingError, VocabularyError
from wordstab.sampling import (
    Corpus,
    SamplePlan,
    downsample_disjoint,
    downsample_with_overlap,
    measured_overlap,
    read_corpus,
    shared_vocabulary,
    write_corpus,
    write_samples,
)


def test_two_samples_partition_corpus():
    c = numbered_corpus(10)
    a, b = downsample_disjoint(c, 2, 5, seed=1)
    assert len(a) == len(b) == 5
    assert sorted(a.identities + b.identities) == list(range(10))


def test_same_seed_same_samples():
    c = numbered_corpus(200)
    first = downsample_with_overlap(c, 3, 40, 0.25, seed=9)
    second = downsample_with_overlap(c, 3, 40, 0.25, seed=9)
    assert [s.sentences for s in first] == [s.sentences for s in second]
    other = downsample_with_overlap(c, 3, 40, 0.25, seed=10)
    assert [s.identities for s in first] != [s.identities for s in other]


def test_large_plans_feasibility():
    SamplePlan(5, 100_000).check(5_269_686)
    plan = SamplePlan(5, 500_000, 0.6)
    assert plan.core_size == 300_000
    assert plan.required == 300_000 + 5 * 200_000 == 1_300_000
    plan.check(1_300_000)
    with pytest.raises(SamplingError, match="requires 1300000"):
        plan.check(1_299_999)


def test_infeasible_plans_rejected():
    c = numbered_corpus(9)
    with pytest.raises(SamplingError, match="corpus has 9"):
        downsample_disjoint(c, 2, 5, seed=0)
    with pytest.raises(SamplingError):
        downsample_with_overlap(numbered_corpus(100), 2, 10, 1.5, seed=0)
    with pytest.raises(SamplingError):
        downsample_disjoint(c, 0, 5, seed=0)


def test_half_overlap_example():
    samples = downsample_with_overlap(numbered_corpus(100), 2, 10, 0.5, seed=4)
    np.testing.assert_array_equal(measured_overlap(samples), [[1.0, 0.5], [0.5, 1.0]])


def test_overlap_zero_equals_disjoint():
    c = numbered_corpus(300)
    a = downsample_with_overlap(c, 4, 50, 0.0, seed=21)
    b = downsample_disjoint(c, 4, 50, seed=21)
    assert [s.identities for s in a] == [s.identities for s in b]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**63 - 1), st.integers(2, 5), st.integers(1, 60), st.floats(0.0, 1.0))
def test_overlap_exact_within_one_over_n(seed, k, n, target):
    plan = SamplePlan(k, n, target, seed)
    c = numbered_corpus(plan.required + 3)
    samples = downsample_with_overlap(c, k, n, target, seed)
    m = measured_overlap(samples)
    off = m[~np.eye(k, dtype=bool)]
    assert np.all(np.abs(off - target) <= 1.0 / n + 1e-12)
    assert all(len(s) == n for s in samples)
    assert all(len(set(s.identities)) == n for s in samples)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**63 - 1), st.integers(1, 6), st.integers(1, 30))
def test_disjoint_samples_share_nothing(seed, k, n):
    samples = downsample_disjoint(numbered_corpus(k * n + 5), k, n, seed)
    m = measured_overlap(samples)
    assert np.all(m[~np.eye(k, dtype=bool)] == 0)


def test_sentence_identity_is_position():
    c = Corpus((("same",),) * 6, "dup")
    a, b = downsample_disjoint(c, 2, 3, seed=0)
    assert measured_overlap([a, b])[0, 1] == 0.0


def test_measured_overlap_identical_and_errors():
    c = numbered_corpus(10)
    (s,) = downsample_disjoint(c, 1, 4, seed=0)
    np.testing.assert_array_equal(measured_overlap([s, s, s]), np.ones((3, 3)))
    (t,) = downsample_disjoint(c, 1, 5, seed=0)
    with pytest.raises(DataError, match="unequal"):
        measured_overlap([s, t])


def test_inclusion_frequency_is_uniform():
    c = numbered_corpus(100)
    hits = np.zeros(100)
    for seed in range(1000):
        (s,) = downsample_disjoint(c, 1, 50, seed)
        hits[list(s.identities)] += 1
    freq = hits / 1000
    assert np.all(np.abs(freq - 0.5) <= 0.05)


def corpus_of(counts, label="s"):
    sents = []
    for tok, n in counts.items():
        sents.extend([(tok,)] * n)
    return Corpus(tuple(sents), label)


def test_shared_vocabulary_boundaries():
    a = corpus_of({"five": 5, "four": 5, "rare": 1})
    b = corpus_of({"five": 5, "four": 4, "rare": 9})
    v = shared_vocabulary([a, b])
    assert v.words == ("five",)
    assert v.counts["five"] == 10
    assert shared_vocabulary([a]).words == ("five", "four")


def test_shared_vocabulary_total_rule():
    a = corpus_of({"x": 3, "y": 2, "z": 9})
    b = corpus_of({"x": 3, "y": 3})
    v = shared_vocabulary([a, b], rule="total")
    assert v.words == ("x",)  # total 6 > 5; y totals 5; z missing from b
    with pytest.raises(VocabularyError):
        shared_vocabulary([a, b], min_count=50)
    with pytest.raises(ValueError):
        shared_vocabulary([a], rule="other")


def test_corpus_files_round_trip(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("a b\n\nc  d\r\n", encoding="utf-8")
    c = read_corpus(p)
    assert c.sentences == (("a", "b"), (), ("c", "d"))
    write_corpus(c, tmp_path / "o.txt")
    assert read_corpus(tmp_path / "o.txt").sentences == c.sentences


def test_write_samples_manifest(tmp_path):
    c = numbered_corpus(100)
    plan = SamplePlan(3, 10, 0.3, seed=5)
    samples = downsample_with_overlap(c, 3, 10, 0.3, 5)
    write_samples(samples, tmp_path, "c", plan)
    man = json.loads((tmp_path / "c.manifest.json").read_text())
    assert man["files"] == ["c.sample0.txt", "c.sample1.txt", "c.sample2.txt"]
    assert man["measured_overlap"][0][1] == pytest.approx(0.3)
    assert man["seed"] == 5
    assert len((tmp_path / "c.sample1.txt").read_text().splitlines()) == 10
