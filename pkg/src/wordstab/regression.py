"""Ridge regression on binary typology features, with bootstrap standard errors.

The ridge solve centres ``y`` and every column of ``X``, solves
``(Xc'Xc + lam I) w = Xc'yc`` and recovers an unpenalised intercept from the
means. Bootstrap resamples draw rows (languages) with replacement; resample
``i`` uses its own RNG stream derived from ``(seed, i)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError, RegressionError

DEFAULT_LAMBDA = 1.0


@dataclass
class RidgeModel:
    weights: np.ndarray
    intercept: float
    lam: float
    columns: list[str] = field(default_factory=list)
    # (feature id, value) per column when the model came from WALS features
    keys: list[tuple[str, str]] | None = None

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return self.intercept + X @ self.weights

    def to_dict(self) -> dict:
        return {
            "columns": list(self.columns),
            "keys": [list(k) for k in self.keys] if self.keys is not None else None,
            "weights": [float(w) for w in self.weights],
            "intercept": float(self.intercept),
            "lambda": float(self.lam),
        }

    @classmethod
    def from_dict(cls, d) -> "RidgeModel":
        keys = [tuple(k) for k in d["keys"]] if d.get("keys") is not None else None
        return cls(np.asarray(d["weights"], dtype=np.float64), float(d["intercept"]), float(d["lambda"]),
                   list(d["columns"]), keys)

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, ensure_ascii=False)
            fh.write("\n")

    @classmethod
    def read_json(cls, path) -> "RidgeModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _as_arrays(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"X must be 2-D, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise DataError(f"X has {X.shape[0]} rows but y has shape {y.shape}")
    return X, y


def fit_ridge(X, y, lam: float = DEFAULT_LAMBDA, columns: Sequence[str] | None = None) -> RidgeModel:
    X, y = _as_arrays(X, y)
    if lam < 0:
        raise DataError(f"ridge penalty must be >= 0, got {lam}")
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    A = Xc.T @ Xc
    A[np.diag_indices_from(A)] += lam
    b = Xc.T @ (y - y_mean)
    if lam == 0 and np.linalg.matrix_rank(A) < A.shape[0]:
        raise RegressionError("normal equations are singular at lambda=0; use lambda > 0")
    try:
        w = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        raise RegressionError("normal equations are singular; use a larger lambda") from None
    cols = list(columns) if columns is not None else [f"x{j}" for j in range(X.shape[1])]
    return RidgeModel(w, float(y_mean - x_mean @ w), float(lam), cols)


def r_squared(model: RidgeModel, X, y) -> float:
    """``1 - SS_res / SS_tot``; 0 for the mean predictor, negative when worse."""
    X, y = _as_arrays(X, y)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise RegressionError("R^2 undefined for constant y")
    ss_res = float(np.sum((y - model.predict(X)) ** 2))
    return 1.0 - ss_res / ss_tot


@dataclass
class BootstrapRidgeResult:
    columns: list[str]
    weight_mean: np.ndarray
    weight_stderr: np.ndarray
    r2_mean: float
    r2_stderr: float
    n: int
    skipped: int = 0
    mode: str = "rows"
    lam: float = DEFAULT_LAMBDA
    seed: int = 0

    def write_tsv(self, path, z: float = 2.0) -> None:
        sig = {c for c, _, _ in significant_weights(self, z)}
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("column\tweight_mean\tstderr\tsignificant\n")
            for c, m, s in zip(self.columns, self.weight_mean, self.weight_stderr):
                fh.write(f"{c}\t{m:.6f}\t{s:.6f}\t{'yes' if c in sig else 'no'}\n")

    def summary(self) -> dict:
        return {
            "r2_mean": self.r2_mean,
            "r2_stderr": self.r2_stderr,
            "n_resamples": self.n,
            "skipped": self.skipped,
            "mode": self.mode,
            "lambda": self.lam,
            "seed": self.seed,
        }


def _resample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def bootstrap_fit(
    X,
    y,
    lam: float = DEFAULT_LAMBDA,
    n: int = 1000,
    seed: int = 0,
    columns: Sequence[str] | None = None,
    mode: str = "rows",
) -> BootstrapRidgeResult:
    """Bootstrap ridge fits.

    ``mode="rows"`` resamples observations. ``mode="columns"`` resamples
    feature columns instead; a column's statistics then use only the
    resamples that drew it. R^2 is measured on each resample's own data.
    Resamples with constant ``y`` are skipped; more than 10% skipped is an error.
    """
    X, y = _as_arrays(X, y)
    if n < 2:
        raise DataError(f"bootstrap needs n >= 2, got {n}")
    if mode not in ("rows", "columns"):
        raise DataError(f"unknown bootstrap mode {mode!r}")
    rows, p = X.shape
    weights = np.full((n, p), np.nan)
    r2 = np.full(n, np.nan)
    skipped = 0
    for i in range(n):
        rng = _resample_rng(seed, i)
        if mode == "rows":
            idx = rng.integers(0, rows, size=rows)
            Xi, yi, cols = X[idx], y[idx], np.arange(p)
        else:
            cols = np.unique(rng.integers(0, p, size=p))
            Xi, yi = X[:, cols], y
        if np.ptp(yi) == 0.0:
            skipped += 1
            continue
        model = fit_ridge(Xi, yi, lam)
        weights[i, cols] = model.weights
        r2[i] = r_squared(model, Xi, yi)
    if skipped > 0.1 * n:
        raise RegressionError(f"{skipped} of {n} bootstrap resamples had constant y")
    ok = ~np.isnan(r2)
    counts = np.sum(~np.isnan(weights), axis=0)
    if np.any(counts < 2):
        raise RegressionError("some columns were fitted in fewer than 2 resamples; increase n")
    cols = list(columns) if columns is not None else [f"x{j}" for j in range(p)]
    return BootstrapRidgeResult(
        columns=cols,
        weight_mean=np.nanmean(weights, axis=0),
        weight_stderr=np.nanstd(weights, axis=0, ddof=1),
        r2_mean=float(np.mean(r2[ok])),
        r2_stderr=float(np.std(r2[ok], ddof=1)),
        n=n,
        skipped=skipped,
        mode=mode,
        lam=float(lam),
        seed=seed,
    )


def significant_weights(result: BootstrapRidgeResult, z: float = 2.0) -> list[tuple[str, float, float]]:
    """Columns with ``|mean| >= z * stderr`` and a nonzero mean, by ascending mean."""
    out = [
        (c, float(m), float(s))
        for c, m, s in zip(result.columns, result.weight_mean, result.weight_stderr)
        if abs(m) > 0 and abs(m) >= z * s
    ]
    return sorted(out, key=lambda t: (t[1], t[0]))


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    da = a - a.mean()
    db = b - b.mean()
    denom = math.sqrt(float(da @ da) * float(db @ db))
    if denom == 0.0:
        raise RegressionError("Pearson correlation undefined for a zero-variance vector")
    return max(-1.0, min(1.0, float(da @ db) / denom))


def correlate_weights(a, b, shared: Sequence[int] | None = None, permutations: int = 10_000, seed: int = 0):
    """Pearson ``r`` of two weight vectors over ``shared`` positions and a two-sided
    permutation p-value ``(1 + #{|r_perm| >= |r|}) / (M + 1)``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if shared is not None:
        a, b = a[list(shared)], b[list(shared)]
    if a.shape != b.shape:
        raise DataError("weight vectors have different lengths")
    if a.size < 3:
        raise DataError(f"need at least 3 shared columns, got {a.size}")
    r = pearson(a, b)
    rng = np.random.default_rng(seed)
    da = (a - a.mean()) / np.linalg.norm(a - a.mean())
    db = (b - b.mean()) / np.linalg.norm(b - b.mean())
    hits = 0
    step = 1000
    for s in range(0, permutations, step):
        m = min(step, permutations - s)
        perm = rng.permuted(np.tile(db, (m, 1)), axis=1)
        hits += int(np.sum(np.abs(perm @ da) >= abs(r) - 1e-12))
    return r, (1 + hits) / (permutations + 1)


@dataclass
class Explanation:
    prediction: float
    contributions: list[tuple[str, float]]  # (column, weight), active columns with |w| >= threshold


def explain(model: RidgeModel, row, weight_threshold: float = 0.3) -> Explanation:
    """Prediction for one language plus the large weights of its active columns."""
    row = np.asarray(row, dtype=np.float64)
    if row.shape != model.weights.shape:
        raise DataError(f"row has {row.size} entries, model has {model.weights.size} columns")
    prediction = float(model.predict(row[None, :])[0])
    contrib = [
        (c, float(w))
        for c, w, x in zip(model.columns, model.weights, row)
        if x != 0 and abs(w) >= weight_threshold
    ]
    return Explanation(prediction, contrib)


def write_explain_tsv(path, model: RidgeModel, explanations: dict[str, Explanation],
                      truth: dict[str, float] | None = None) -> None:
    """Feature-by-language weight table; ``-`` where a column is inactive or small,
    then ``Predicted value`` and ``Ground truth: average stability`` rows."""
    langs = list(explanations)
    shown = {lang: dict(e.contributions) for lang, e in explanations.items()}
    rows = [c for c in model.columns if any(c in shown[lang] for lang in langs)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("WALS Attribute\t" + "\t".join(langs) + "\n")
        for c in rows:
            cells = [f"{shown[lang][c]:.2f}" if c in shown[lang] else "-" for lang in langs]
            fh.write(c + "\t" + "\t".join(cells) + "\n")
        fh.write("Predicted value\t" + "\t".join(f"{explanations[lang].prediction:.2f}" for lang in langs) + "\n")
        if truth is not None:
            cells = [f"{truth[lang]:.2f}" if lang in truth else "-" for lang in langs]
            fh.write("Ground truth: average stability\t" + "\t".join(cells) + "\n")
