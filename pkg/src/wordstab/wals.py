"""WALS typology features: loading, coverage filtering, one-hot encoding with Unknown.

The canonical input is a long-format CSV ``language,feature,value`` with an
optional ``feature_name`` column. :func:`convert_wals_export` turns the
official WALS downloads (CLDF directory or the wide ``language.csv``) into it.
"""

from __future__ import annotations

import csv
import math
import os
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError

UNKNOWN = "Unknown"

MORPHOLOGY_FEATURES = {
    "20A": "Fusion",
    "21A": "Exponence",
    "59A": "Possessive Classification",
}


@dataclass
class WalsDatabase:
    languages: list[str]
    features: dict[str, tuple[str, frozenset]]  # id -> (name, value set)
    values: dict[tuple[str, str], str] = field(default_factory=dict)

    def value(self, language: str, feature: str) -> str | None:
        return self.values.get((language, feature))

    def feature_name(self, feature: str) -> str:
        return self.features[feature][0]


def load_wals_csv(path) -> WalsDatabase:
    """Read ``language,feature,value[,feature_name]`` rows.

    Consistent duplicate rows collapse; conflicting ones raise with the line number.
    """
    languages: dict[str, None] = {}
    names: dict[str, str] = {}
    value_sets: dict[str, set] = {}
    values: dict[tuple[str, str], str] = {}
    first_line: dict[tuple[str, str], int] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty WALS file") from None
        if header[:3] != ["language", "feature", "value"]:
            raise DataError(f"{path}:1: expected header 'language,feature,value', got {','.join(header)!r}")
        has_name = len(header) > 3 and header[3] == "feature_name"
        width = 4 if has_name else 3
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise DataError(f"{path}:{line}: expected {width} fields, got {len(row)}")
            lang, feat, val = (c.strip() for c in row[:3])
            if not lang or not feat or not val:
                raise DataError(f"{path}:{line}: empty language, feature or value")
            key = (lang, feat)
            if key in values and values[key] != val:
                raise DataError(
                    f"{path}:{line}: conflicting values for {lang}/{feat}: "
                    f"{values[key]!r} (line {first_line[key]}) vs {val!r}"
                )
            if key not in values:
                values[key] = val
                first_line[key] = line
            languages.setdefault(lang)
            value_sets.setdefault(feat, set()).add(val)
            if has_name and row[3].strip():
                names.setdefault(feat, row[3].strip())
    features = {
        f: (names.get(f) or MORPHOLOGY_FEATURES.get(f, f), frozenset(vs))
        for f, vs in sorted(value_sets.items())
    }
    return WalsDatabase(list(languages), features, values)


def write_wals_csv(db: WalsDatabase, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["language", "feature", "value", "feature_name"])
        for (lang, feat), val in sorted(db.values.items()):
            w.writerow([lang, feat, val, db.feature_name(feat)])


def coverage_filter(db: WalsDatabase, languages: Sequence[str], min_coverage: float) -> list[str]:
    """Features with a value for at least ``ceil(min_coverage * len(languages))`` of
    ``languages`` (and always at least one)."""
    if not 0.0 <= min_coverage <= 1.0:
        raise DataError(f"min_coverage must be in [0, 1], got {min_coverage}")
    # round first so 0.1 * 30 does not ceil to 4
    need = max(1, math.ceil(round(min_coverage * len(languages), 9)))
    out = []
    for feat in sorted(db.features):
        covered = sum(1 for lang in languages if (lang, feat) in db.values)
        if covered >= need:
            out.append(feat)
    return out


@dataclass
class BinaryFeatureMatrix:
    languages: list[str]
    columns: list[tuple[str, str]]  # (feature id, value); value may be UNKNOWN
    names: list[str]  # "Feature name: Value"
    matrix: np.ndarray  # uint8, languages x columns

    def row(self, language: str) -> np.ndarray:
        return self.matrix[self.languages.index(language)]

    def write_tsv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("language\t" + "\t".join(self.names) + "\n")
            for lang, row in zip(self.languages, self.matrix):
                fh.write(lang + "\t" + "\t".join(str(int(v)) for v in row) + "\n")


def column_name(db: WalsDatabase, feature: str, value: str) -> str:
    return f"{db.feature_name(feature)}: {value}"


def binarize(db: WalsDatabase, languages: Sequence[str], features: Sequence[str]) -> BinaryFeatureMatrix:
    """One column per observed (feature, value) among ``languages`` plus one Unknown
    column per feature; columns ordered by feature id, then value, Unknown last."""
    if not features:
        raise DataError("binarize needs at least one feature")
    columns: list[tuple[str, str]] = []
    for feat in sorted(features):
        if feat not in db.features:
            raise DataError(f"unknown WALS feature {feat!r}")
        observed = sorted({db.values[(lang, feat)] for lang in languages if (lang, feat) in db.values})
        columns.extend((feat, v) for v in observed)
        columns.append((feat, UNKNOWN))
    return encode_rows(db, languages, columns)


def encode_rows(db: WalsDatabase, languages: Sequence[str], columns: Sequence[tuple[str, str]]) -> BinaryFeatureMatrix:
    """Encode ``languages`` against a fixed column set (e.g. a trained model's).

    A value with no column of its own leaves the whole feature group at zero.
    """
    col_index = {c: i for i, c in enumerate(columns)}
    feats = list(dict.fromkeys(f for f, _ in columns))
    m = np.zeros((len(languages), len(columns)), dtype=np.uint8)
    for r, lang in enumerate(languages):
        for feat in feats:
            val = db.values.get((lang, feat), UNKNOWN)
            j = col_index.get((feat, val))
            if j is not None:
                m[r, j] = 1
    names = [
        f"{db.feature_name(f) if f in db.features else MORPHOLOGY_FEATURES.get(f, f)}: {v}"
        for f, v in columns
    ]
    return BinaryFeatureMatrix(list(languages), list(columns), names, m)


def _match_feature(db: WalsDatabase, fid: str, name: str) -> str | None:
    if fid in db.features:
        return fid
    for f, (fname, _) in db.features.items():
        if fname.lower() == name.lower() or f.lower() == name.lower():
            return f
    return None


def morphology_subset(db: WalsDatabase) -> list[str]:
    """Ids of the Fusion (20A), Exponence (21A) and Possessive Classification (59A) features."""
    out = []
    for fid, name in MORPHOLOGY_FEATURES.items():
        f = _match_feature(db, fid, name)
        if f is None:
            raise DataError(f"WALS feature {fid} ({name}) missing from database")
        out.append(f)
    return out


# --- official WALS exports -------------------------------------------------

_WIDE_COLUMN = re.compile(r"^(\d+[A-Z])\s+(.+)$")
_CODED_VALUE = re.compile(r"^\d+\s+(.+)$")


def _read_dicts(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def convert_wals_export(source, language_key: str = "iso") -> WalsDatabase:
    """Build a database from an official WALS download.

    ``source`` is either a CLDF directory (``values.csv``, ``codes.csv``,
    ``parameters.csv``, ``languages.csv``) or the wide ``language.csv`` whose
    feature columns look like ``"20A Fusion of Selected Inflectional Formatives"``.
    ``language_key`` selects the language identifier: ``"iso"`` (ISO 639-3 when
    available) or ``"wals"`` (WALS code).
    """
    if os.path.isdir(source):
        return _from_cldf(source, language_key)
    return _from_wide(source, language_key)


def _from_cldf(directory, language_key: str) -> WalsDatabase:
    params = {p["ID"]: p["Name"] for p in _read_dicts(os.path.join(directory, "parameters.csv"))}
    codes = {c["ID"]: c["Name"] for c in _read_dicts(os.path.join(directory, "codes.csv"))}
    lang_ids = {}
    lang_path = os.path.join(directory, "languages.csv")
    if os.path.exists(lang_path):
        for lang in _read_dicts(lang_path):
            iso = lang.get("ISO639P3code") or ""
            lang_ids[lang["ID"]] = iso if language_key == "iso" and iso else lang["ID"]
    rows = []
    for v in _read_dicts(os.path.join(directory, "values.csv")):
        fid = v["Parameter_ID"]
        value = codes.get(v.get("Code_ID", ""), "") or v["Value"]
        rows.append((lang_ids.get(v["Language_ID"], v["Language_ID"]), fid, value, params.get(fid, fid)))
    return _db_from_rows(rows)


def _from_wide(path, language_key: str) -> WalsDatabase:
    rows = []
    for rec in _read_dicts(path):
        code = rec.get("wals_code") or rec.get("wals code") or ""
        iso = rec.get("iso_code") or ""
        lang = iso if language_key == "iso" and iso else code
        if not lang:
            continue
        for col, raw in rec.items():
            m = _WIDE_COLUMN.match(col or "")
            if not m or not raw or not raw.strip():
                continue
            vm = _CODED_VALUE.match(raw.strip())
            rows.append((lang, m.group(1), vm.group(1) if vm else raw.strip(), m.group(2)))
    return _db_from_rows(rows)


def _db_from_rows(rows: Iterable[tuple[str, str, str, str]]) -> WalsDatabase:
    languages: dict[str, None] = {}
    names: dict[str, str] = {}
    sets: dict[str, set] = {}
    values: dict[tuple[str, str], str] = {}
    for lang, fid, val, name in rows:
        # several WALS doculects can share one ISO code; the first value wins
        values.setdefault((lang, fid), val)
        languages.setdefault(lang)
        names.setdefault(fid, MORPHOLOGY_FEATURES.get(fid, name))
        sets.setdefault(fid, set()).add(values[(lang, fid)])
    features = {f: (names[f], frozenset(sets[f])) for f in sorted(sets)}
    return WalsDatabase(list(languages), features, values)


def feature_groups(columns: Sequence[tuple[str, str]]) -> Mapping[str, list[int]]:
    groups: dict[str, list[int]] = {}
    for i, (f, _) in enumerate(columns):
        groups.setdefault(f, []).append(i)
    return groups
