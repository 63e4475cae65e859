import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synthetic import wals_fixture
from wordstab.errors import DataError
from wordstab.wals import (
    UNKNOWN,
    WalsDatabase,
    binarize,
    convert_wals_export,
    coverage_filter,
    encode_rows,
    feature_groups,
    load_wals_csv,
    morphology_subset,
    write_wals_csv,
)


def csv_file(tmp_path, text, name="w.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_load_three_rows(tmp_path):
    db = load_wals_csv(csv_file(tmp_path, "language,feature,value\nen,13A,No tones\nen,1A,Average\nde,13A,No tones\n"))
    assert db.languages == ["en", "de"]
    assert db.value("en", "1A") == "Average"
    assert db.value("de", "1A") is None
    assert db.features["13A"][1] == frozenset({"No tones"})


def test_consistent_duplicates_collapse(tmp_path):
    db = load_wals_csv(csv_file(tmp_path, "language,feature,value\nen,1A,x\nen,1A,x\n"))
    assert db.values == {("en", "1A"): "x"}


def test_conflicting_duplicate_reports_lines(tmp_path):
    with pytest.raises(DataError, match=":3:.*line 2"):
        load_wals_csv(csv_file(tmp_path, "language,feature,value\nen,1A,x\nen,1A,y\n"))


def test_malformed_rows(tmp_path):
    with pytest.raises(DataError, match=":3:"):
        load_wals_csv(csv_file(tmp_path, "language,feature,value\nen,1A,x\nen,1A\n"))
    with pytest.raises(DataError, match="header"):
        load_wals_csv(csv_file(tmp_path, "lang,feat,val\n"))
    with pytest.raises(DataError, match="empty"):
        load_wals_csv(csv_file(tmp_path, ""))


def test_feature_names_and_round_trip(tmp_path):
    db = load_wals_csv(csv_file(tmp_path, "language,feature,value,feature_name\nen,20A,Concatenative,\nen,1A,x,Consonant Inventories\n"))
    assert db.feature_name("20A") == "Fusion"
    assert db.feature_name("1A") == "Consonant Inventories"
    write_wals_csv(db, tmp_path / "out.csv")
    back = load_wals_csv(tmp_path / "out.csv")
    assert back.values == db.values and back.features == db.features


def test_coverage_seven_of_twenty_six():
    langs = [f"l{i}" for i in range(26)]
    values = {(f"l{i}", "A"): "v" for i in range(7)}
    values.update({(f"l{i}", "B"): "v" for i in range(6)})
    db = WalsDatabase(langs, {"A": ("A", frozenset({"v"})), "B": ("B", frozenset({"v"}))}, values)
    assert coverage_filter(db, langs, 0.25) == ["A"]


def test_coverage_extremes():
    db = wals_fixture(10, 5, 3, unknown_rate=0.3, seed=1)
    langs = db.languages
    some = [f for f in db.features if any((l, f) in db.values for l in langs)]
    full = [f for f in db.features if all((l, f) in db.values for l in langs)]
    assert coverage_filter(db, langs, 0.0) == sorted(some)
    assert coverage_filter(db, langs, 1.0) == sorted(full)
    with pytest.raises(DataError):
        coverage_filter(db, langs, 1.5)


def test_coverage_rounding_is_not_fooled_by_float_error():
    langs = [f"l{i}" for i in range(30)]
    values = {(f"l{i}", "A"): "v" for i in range(3)}
    db = WalsDatabase(langs, {"A": ("A", frozenset({"v"}))}, values)
    assert coverage_filter(db, langs, 0.1) == ["A"]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.floats(0, 1), st.floats(0, 1))
def test_coverage_monotone(seed, a, b):
    db = wals_fixture(20, 8, 3, unknown_rate=0.5, seed=seed)
    lo, hi = sorted((a, b))
    assert set(coverage_filter(db, db.languages, hi)) <= set(coverage_filter(db, db.languages, lo))


def test_binarize_examples():
    db = WalsDatabase(["en", "de", "xx"], {"13A": ("Tone", frozenset({"No tones"}))},
                      {("en", "13A"): "No tones", ("de", "13A"): "No tones"})
    m = binarize(db, ["en"], ["13A"])
    assert m.columns == [("13A", "No tones"), ("13A", UNKNOWN)]
    assert m.names == ["Tone: No tones", "Tone: Unknown"]
    assert m.row("en").tolist() == [1, 0]
    m = binarize(db, ["en", "de", "xx"], ["13A"])
    assert m.row("xx").tolist() == [0, 1]
    assert m.row("en").tolist() == m.row("de").tolist()
    with pytest.raises(DataError):
        binarize(db, ["en"], [])
    with pytest.raises(DataError):
        binarize(db, ["en"], ["99Z"])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 6), st.integers(1, 5), st.floats(0, 1))
def test_one_hot_per_feature_group(seed, n_feat, n_val, unknown_rate):
    db = wals_fixture(15, n_feat, n_val, unknown_rate, seed)
    m = binarize(db, db.languages, list(db.features))
    for feat, idx in feature_groups(m.columns).items():
        np.testing.assert_array_equal(m.matrix[:, idx].sum(axis=1), 1)
        assert m.columns[idx[-1]] == (feat, UNKNOWN)
    # deterministic column order
    assert m.columns == binarize(db, db.languages, sorted(db.features, reverse=True)).columns


def test_encode_rows_with_unseen_value():
    db = WalsDatabase(["a", "b"], {"1A": ("F", frozenset({"x", "y"}))}, {("a", "1A"): "x", ("b", "1A"): "y"})
    m = encode_rows(db, ["a", "b", "c"], [("1A", "x"), ("1A", UNKNOWN)])
    assert m.matrix.tolist() == [[1, 0], [0, 0], [0, 1]]


def morph_db(include_59=True):
    feats = {"20A": ("Fusion", frozenset({"Exclusively isolating", "Exclusively concatenative"})),
             "21A": ("Exponence", frozenset({"Monoexponential case"})),
             "1A": ("Consonant Inventories", frozenset({"Average"}))}
    values = {("en", "20A"): "Exclusively concatenative", ("vi", "20A"): "Exclusively isolating",
              ("en", "21A"): "Monoexponential case", ("en", "1A"): "Average"}
    if include_59:
        feats["59A"] = ("Possessive Classification", frozenset({"No possessive classification"}))
        values[("en", "59A")] = "No possessive classification"
    return WalsDatabase(["en", "vi"], feats, values)


def test_morphology_subset():
    db = morph_db()
    assert morphology_subset(db) == ["20A", "21A", "59A"]
    m = binarize(db, db.languages, morphology_subset(db))
    assert "Fusion: Exclusively isolating" in m.names
    with pytest.raises(DataError, match="59A"):
        morphology_subset(morph_db(include_59=False))


def test_matrix_tsv(tmp_path):
    db = morph_db()
    m = binarize(db, db.languages, ["20A"])
    m.write_tsv(tmp_path / "m.tsv")
    lines = (tmp_path / "m.tsv").read_text().splitlines()
    assert lines[0] == "language\tFusion: Exclusively concatenative\tFusion: Exclusively isolating\tFusion: Unknown"
    assert lines[2] == "vi\t0\t1\t0"


def test_convert_cldf(tmp_path):
    d = tmp_path / "cldf"
    d.mkdir()
    (d / "parameters.csv").write_text("ID,Name\n20A,Fusion of Selected Inflectional Formatives\n1A,Consonant Inventories\n")
    (d / "codes.csv").write_text("ID,Parameter_ID,Name\n20A-1,20A,Exclusively concatenative\n1A-3,1A,Average\n")
    (d / "languages.csv").write_text("ID,Name,ISO639P3code\neng,English,eng\nger,German,deu\nxyz,Other,\n")
    (d / "values.csv").write_text(
        "ID,Language_ID,Parameter_ID,Value,Code_ID\n1,eng,20A,1,20A-1\n2,ger,1A,3,1A-3\n3,xyz,1A,3,1A-3\n"
    )
    db = convert_wals_export(d)
    assert db.languages == ["eng", "deu", "xyz"]
    assert db.value("eng", "20A") == "Exclusively concatenative"
    assert db.feature_name("20A") == "Fusion"
    assert db.feature_name("1A") == "Consonant Inventories"
    assert convert_wals_export(d, language_key="wals").languages == ["eng", "ger", "xyz"]


def test_convert_wide(tmp_path):
    p = tmp_path / "language.csv"
    p.write_text(
        "wals_code,iso_code,Name,1A Consonant Inventories,20A Fusion of Selected Inflectional Formatives\n"
        "eng,eng,English,3 Average,1 Exclusively concatenative\n"
        "ger,deu,German,3 Average,\n"
    )
    db = convert_wals_export(p)
    assert db.languages == ["eng", "deu"]
    assert db.value("deu", "1A") == "Average"
    assert db.value("deu", "20A") is None
    assert db.feature_name("20A") == "Fusion"
