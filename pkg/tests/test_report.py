import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_dataset
from hedonic_gam.analysis import (
    CorrelationMatrix,
    FactorContribution,
    redundancy_report,
)
from hedonic_gam.gam import fit_gam
from hedonic_gam.inference import TermTest
from hedonic_gam.report import (
    Table,
    contribution_table,
    correlation_pairs_table,
    correlation_table,
    format_corr,
    format_delta,
    format_p,
    format_r2,
    partial_effects_table,
    redundancy_table,
    significance_table,
)


def test_number_formats():
    assert format_p(0.104) == "0.104"
    assert format_p(0.0005) == "***"
    assert format_p(0.001) == "0.001"
    assert format_p(float("nan")) == "NA"
    assert format_r2(0.7614) == "0.761"
    assert format_delta(0.043) == "0.043"
    assert format_delta(0.0002) == "***"
    assert format_delta(-0.0004) == "***"
    assert format_delta(-0.0123) == "-0.012"
    assert format_corr(0.8349) == "0.83"
    assert format_corr(-0.001) == "0.00"
    assert format_corr(1.0) == "1.00"


@given(st.floats(0.001, 1.0))
def test_p_format_is_three_decimals(p):
    s = format_p(p)
    assert len(s.split(".")[1]) == 3 and abs(float(s) - p) <= 0.0005 + 1e-12


def three_tables():
    tests = {
        "GLM": [TermTest("Lot", 1.6, 1, 97, 0.104, "t"), TermTest("SqFt", 9.0, 1, 97, 1e-9, "t")],
        "GAM": [TermTest("Lot", 7.0, 2.9, 90, 0.0005), TermTest("SqFt", 30.0, 3.1, 90, 0.0, reliable=False)],
    }
    return significance_table(["Lot", "SqFt"], tests, {"GLM": 0.694, "GAM": 0.7614})


def test_significance_table_layout():
    t = three_tables()
    assert t.columns == ("Factor", "GLM", "GAM")
    assert t.rows == (("Lot", "0.104", "***"), ("SqFt", "***", "***"), ("Adj. R²", "0.694", "0.761"))
    assert any("SqFt" in n for n in t.notes)
    md = t.to_markdown()
    assert md.splitlines()[2].startswith("| Factor ")
    assert "| Adj. R² | 0.694 | 0.761 |" in md


def test_formats_agree_cell_for_cell():
    t = three_tables()
    rows = list(csv.reader(io.StringIO(t.render("csv"))))
    assert tuple(rows[0]) == t.columns and [tuple(r) for r in rows[1:]] == list(t.rows)
    doc = json.loads(t.render("json"))
    assert doc["rows"] == [list(r) for r in t.rows]
    with pytest.raises(ValueError):
        t.render("xlsx")
    with pytest.raises(ValueError):
        Table("x", "x", ("a", "b"), (("1",),))


def test_contribution_table():
    cs = [FactorContribution("SqFt", 0.761, 0.718), FactorContribution("Long", 0.761, 0.74),
          FactorContribution("Water", 0.761, 0.7608, esg=True)]
    t = contribution_table(cs)
    assert t.rows[0] == ("1", "SqFt", "0.043", "")
    assert t.rows[2] == ("3", "Water", "***", "yes")
    assert "0.761" in t.notes[-1]


def test_correlation_tables():
    r = np.array([[1.0, 0.83, 0.05], [0.83, 1.0, -0.46], [0.05, -0.46, 1.0]])
    c = CorrelationMatrix(("SqFt", "Baths", "Access"), r)
    t = correlation_table(c)
    assert t.rows == (("SqFt", "1.00", "", ""), ("Baths", "0.83", "1.00", ""), ("Access", "0.05", "-0.46", "1.00"))
    pairs = {(a, b): (v, s) for a, b, v, s in correlation_pairs_table(c).rows}
    assert pairs["Baths", "SqFt"] == ("0.83", "very_strong")
    assert pairs["Access", "Baths"] == ("-0.46", "moderate")
    assert pairs["SqFt", "SqFt"] == ("1.00", "very_strong")
    assert len(pairs) == 6
    red = redundancy_table(redundancy_report(None, c))
    assert red.rows == (("SqFt", "Baths", "0.83", "very_strong", "drop_one", "", ""),
                        ("Baths", "Access", "-0.46", "moderate", "review_combination", "", ""))


def test_rendering_is_deterministic():
    assert three_tables().to_markdown() == three_tables().to_markdown()


def test_partial_effects_table(rng):
    X = np.column_stack([rng.normal(2000, 300, 200), rng.integers(0, 2, 200)])
    ds = make_dataset(X, 1e-4 * X[:, 0] + 0.1 * X[:, 1] + rng.normal(0, 0.05, 200),
                      names=["SqFt", "Water"], binary={"Water"})
    m = fit_gam(ds)
    t = partial_effects_table(m, grid_points=11)
    sq = [r for r in t.rows if r[0] == "SqFt"]
    assert len(sq) == 11
    z, raw = float(sq[0][1]), float(sq[0][2])
    assert raw == pytest.approx(ds.norm.mean["SqFt"] + ds.norm.sd["SqFt"] * z, rel=1e-12)
    water = [r for r in t.rows if r[0] == "Water"]
    assert [w[1] for w in water] == ["0.0", "1.0"]
