"""End-to-end stability pipelines.

Three methods are supported:

``multi-seed-train``
    one corpus, several training seeds (the small-corpus method); several
    corpora are treated as variants of one language and the most stable is
    reported as the winner.
``multi-downsample-train``
    disjoint downsamples of one corpus, one space trained per sample.
``multi-downsample-ingest``
    externally trained spaces (e.g. GloVe), optionally restricted to the
    words frequent enough in the matching corpus samples.
"""

from __future__ import annotations

import contextlib
import os
from dataclasses import asdict, dataclass, field, replace

from .embedding_io import Vocabulary, common_vocabulary, load_embeddings
from .errors import DataError
from .knn import DEFAULT_K
from .sampling import SamplePlan, downsample_disjoint, read_corpus, shared_vocabulary
from .sgns import TrainConfig, train
from .stability import BUCKET_WIDTH, StabilityReport, language_stability, select_best_variant

METHODS = ("multi-seed-train", "multi-downsample-train", "multi-downsample-ingest")


class PipelineError(DataError):
    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


@contextlib.contextmanager
def stage(name: str):
    try:
        yield
    except PipelineError:
        raise
    except (DataError, OSError) as exc:
        raise PipelineError(name, str(exc)) from exc


@dataclass
class PipelineConfig:
    method: str
    corpora: list[str] = field(default_factory=list)
    seeds: list[int] = field(default_factory=lambda: [1, 2, 3, 4, 5])
    k: int = DEFAULT_K
    bucket_width: float = BUCKET_WIDTH
    plan: SamplePlan | None = None
    train: TrainConfig = field(default_factory=TrainConfig)
    embeddings: list[str] = field(default_factory=list)
    embedding_format: str = "auto"
    samples: list[str] = field(default_factory=list)
    vocab_rule: str = "per-sample"

    def validate(self) -> None:
        if self.method not in METHODS:
            raise PipelineError("config", f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.method == "multi-seed-train":
            if not self.corpora:
                raise PipelineError("config", "multi-seed-train needs at least one corpus")
            if len(self.seeds) < 2:
                raise PipelineError("config", "multi-seed-train needs at least two seeds")
        elif self.method == "multi-downsample-train":
            if len(self.corpora) != 1 or self.plan is None:
                raise PipelineError("config", "multi-downsample-train needs exactly one corpus and a sample plan")
            if self.plan.k < 2:
                raise PipelineError("config", "multi-downsample-train needs k >= 2 samples")
        else:
            if len(self.embeddings) < 2:
                raise PipelineError("config", "multi-downsample-ingest needs at least two embedding files")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PipelineResult:
    reports: dict[str, StabilityReport]
    best: str | None = None


def _label(path: str) -> str:
    base = os.path.basename(path)
    return base.rsplit(".", 1)[0] if "." in base else base


def _intersect(a: Vocabulary, b: Vocabulary) -> Vocabulary:
    words = set(a.words) & set(b.words)
    if not words:
        raise DataError("no word survives both the frequency filter and the embedding vocabularies")
    return Vocabulary.sorted_from(words)


def _multi_seed(cfg: PipelineConfig, path: str) -> StabilityReport:
    with stage("load"):
        corpus = read_corpus(path)
    with stage("vocabulary"):
        restrict = shared_vocabulary([corpus], cfg.train.min_count)
    spaces = []
    for s in cfg.seeds:
        with stage(f"train seed={s}"):
            spaces.append(train(corpus, replace(cfg.train, seed=s)))
    with stage("stability"):
        report = language_stability(spaces, None, restrict, cfg.k, cfg.bucket_width,
                                    f"count >= {cfg.train.min_count} in corpus")
    report.config.update(method=cfg.method, corpus=path, seeds=list(cfg.seeds), train=asdict(cfg.train))
    return report


def _multi_downsample_train(cfg: PipelineConfig) -> StabilityReport:
    path = cfg.corpora[0]
    with stage("load"):
        corpus = read_corpus(path)
    with stage("downsample"):
        samples = downsample_disjoint(corpus, cfg.plan.k, cfg.plan.n, cfg.plan.seed)
    with stage("vocabulary"):
        shared = shared_vocabulary(samples, cfg.train.min_count, cfg.vocab_rule)
    spaces = []
    for i, sample in enumerate(samples):
        with stage(f"train sample={i}"):
            spaces.append(train(sample, cfg.train))
    with stage("stability"):
        restrict = _intersect(shared, common_vocabulary(spaces))
        report = language_stability(spaces, None, restrict, cfg.k, cfg.bucket_width,
                                    f"shared vocabulary ({cfg.vocab_rule}, min_count={cfg.train.min_count})")
    report.config.update(method=cfg.method, corpus=path, plan=asdict(cfg.plan), train=asdict(cfg.train))
    return report


def _multi_downsample_ingest(cfg: PipelineConfig) -> StabilityReport:
    with stage("load"):
        spaces = [load_embeddings(p, cfg.embedding_format) for p in cfg.embeddings]
        samples = [read_corpus(p) for p in cfg.samples]
    with stage("vocabulary"):
        restrict = common_vocabulary(spaces)
        desc = "common vocabulary of all spaces"
        if samples:
            restrict = _intersect(restrict, shared_vocabulary(samples, cfg.train.min_count, cfg.vocab_rule))
            desc += f" and shared sample vocabulary ({cfg.vocab_rule}, min_count={cfg.train.min_count})"
    with stage("stability"):
        report = language_stability(spaces, None, restrict, cfg.k, cfg.bucket_width, desc)
    report.config.update(method=cfg.method, embeddings=list(cfg.embeddings), samples=list(cfg.samples))
    return report


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    cfg.validate()
    if cfg.method == "multi-seed-train":
        reports = {}
        for path in cfg.corpora:
            label = _label(path)
            if label in reports:
                raise PipelineError("config", f"duplicate corpus label {label!r}")
            reports[label] = _multi_seed(cfg, path)
        best = select_best_variant(reports) if len(reports) > 1 else None
        return PipelineResult(reports, best)
    if cfg.method == "multi-downsample-train":
        return PipelineResult({_label(cfg.corpora[0]): _multi_downsample_train(cfg)})
    label = _label(cfg.embeddings[0]) if len(cfg.embeddings) else "ingest"
    return PipelineResult({label: _multi_downsample_ingest(cfg)})


def write_report(report: StabilityReport, out_dir: str, name: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = [
        os.path.join(out_dir, f"{name}.stability.json"),
        os.path.join(out_dir, f"{name}.stability.tsv"),
        os.path.join(out_dir, f"{name}.buckets.csv"),
    ]
    report.write_json(paths[0])
    report.write_tsv(paths[1])
    report.write_bucket_csv(paths[2])
    return paths


def write_averages(path: str, averages: dict[str, float]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("language\taverage\n")
        for lang in sorted(averages):
            fh.write(f"{lang}\t{averages[lang]:.6f}\n")


def read_averages(paths) -> dict[str, float]:
    """Per-language averages from one or more ``language<TAB>average`` TSVs.

    A language listed in several files gets the mean of its values.
    """
    values: dict[str, list[float]] = {}
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\r\n").split("\t")
            if header[:2] != ["language", "average"]:
                raise DataError(f"{path}:1: expected header 'language<TAB>average'")
            for lineno, line in enumerate(fh, start=2):
                line = line.rstrip("\r\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) < 2:
                    raise DataError(f"{path}:{lineno}: expected 2 fields")
                try:
                    v = float(parts[1])
                except ValueError:
                    raise DataError(f"{path}:{lineno}: bad average {parts[1]!r}") from None
                values.setdefault(parts[0], []).append(v)
    return {lang: sum(v) / len(v) for lang, v in values.items()}
