"""CSV ingestion, typed columns, design encoding and summaries."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from balancelab.data import (
    AnalysisSpec,
    ParseOptions,
    categorical_column,
    encode_design,
    export_csv,
    from_columns,
    head_rows,
    load_csv,
    numeric_column,
    summarize,
    take_rows,
)
from balancelab.errors import (
    CsvParseError,
    DegenerateColumnError,
    EmptyDataError,
    MultiGroupError,
    SchemaError,
    SpecValidationError,
)


class TestLoadCsv:
    def test_minimal_typed_parse(self):
        data = load_csv("a,b\n1,x\n2,y")
        assert data.n_rows == 2
        assert data.column("a").kind == "numeric"
        assert data.column("b").kind == "categorical"

    def test_single_bad_cell_makes_column_categorical(self):
        data = load_csv("a\n1\n2\noops\n3")
        assert data.column("a").kind == "categorical"

    def test_missing_values_empty_and_na(self):
        data = load_csv("a,b\n1,\n,x\nNA,y")
        a = data.column("a")
        assert a.kind == "numeric"
        np.testing.assert_array_equal(np.isnan(a.values), [False, True, True])
        b = data.column("b")
        assert b.is_missing()[0]

    def test_headerless_with_generated_names(self):
        data = load_csv("1,2\n3,4", ParseOptions(header=False))
        assert data.n_rows == 2
        assert len(data.columns) == 2
        # generated names are distinct and stable
        names = [c.name for c in data.columns]
        assert len(set(names)) == 2

    def test_separators_and_quotes(self):
        data = load_csv("a;b\n1;2", ParseOptions(separator="semicolon"))
        assert data.column("b").values[0] == 2.0
        data = load_csv("a\tb\n1\t2", ParseOptions(separator="tab"))
        assert data.column("b").values[0] == 2.0
        data = load_csv("a,b\n'1,5',2", ParseOptions(quote="single"))
        assert data.column("a").kind == "categorical"
        assert data.column("a").values[0] == "1,5"

    def test_ragged_row_raises_with_row_number(self):
        with pytest.raises(CsvParseError) as exc:
            load_csv("a,b\n1,2\n3")
        assert exc.value.row == 3

    def test_empty_input_raises(self):
        with pytest.raises(EmptyDataError):
            load_csv("")

    def test_duplicate_header_raises(self):
        with pytest.raises(SchemaError):
            load_csv("a,a\n1,2")

    def test_invalid_parse_options(self):
        with pytest.raises(ValueError):
            ParseOptions(separator="pipe")
        with pytest.raises(ValueError):
            ParseOptions(quote="backtick")


class TestExportCsv:
    def test_round_trip_preserves_values(self):
        data = load_csv("a,b,c\n1,x,0.25\n2,y,\n3,x,1.5")
        out = export_csv(data)
        again = load_csv(out)
        assert again.n_rows == 3
        np.testing.assert_array_equal(again.column("a").values, [1.0, 2.0, 3.0])
        assert again.column("b").values[2] == "x"
        assert np.isnan(again.column("c").values[1])

    def test_extra_columns_appended_in_order(self):
        data = load_csv("a\n1\n2")
        out = export_csv(data, extra_columns=[("w1", np.array([0.5, 1.5])),
                                              ("w2", np.array([1.0, 2.0]))])
        header = out.decode().splitlines()[0]
        assert header == "a,w1,w2"

    def test_tab_separator(self):
        data = load_csv("a,b\n1,2")
        out = export_csv(data, ParseOptions(separator="tab"))
        assert out.decode().splitlines()[0] == "a\tb"


class TestTakeRows:
    def test_subset_and_order(self):
        data = load_csv("a,b\n1,x\n2,y\n3,z")
        sub = take_rows(data, [2, 0])
        assert sub.n_rows == 2
        np.testing.assert_array_equal(sub.column("a").values, [3.0, 1.0])
        assert sub.column("b").values[0] == "z"
        # level set preserved even when some levels vanish from the subset
        assert set(data.column("b").levels) >= set(sub.column("b").levels)


def _spec(**kw):
    base = dict(
        treatment_var="t", control_label="0", treatment_label="1",
        outcome_var="y", numeric_confounders=("x1", "x2"),
        categorical_confounders=(), estimand="ATT")
    base.update(kw)
    return AnalysisSpec(**base)


def _dataset(t=(0, 1, 0, 1), x1=(1.0, 2.0, 3.0, 4.0),
             x2=(0.5, 0.25, 0.75, 1.0), y=(1.0, 2.0, 3.0, 4.0), extra=None):
    cols = [
        numeric_column("t", np.array(t, dtype=float)),
        numeric_column("x1", np.array(x1, dtype=float)),
        numeric_column("x2", np.array(x2, dtype=float)),
        numeric_column("y", np.array(y, dtype=float)),
    ]
    if extra is not None:
        cols.append(extra)
    return from_columns(cols)


class TestSpecValidation:
    def test_unknown_columns_reported_per_field(self):
        with pytest.raises(SpecValidationError) as exc:
            _spec(treatment_var="nope").validate(_dataset())
        fields = [f for f, _ in exc.value.errors]
        assert "treatment_var" in fields

    def test_label_must_be_present(self):
        with pytest.raises(SpecValidationError) as exc:
            _spec(treatment_label="7").validate(_dataset())
        assert any("label '7'" in m for _, m in exc.value.errors)

    def test_role_overlap_rejected(self):
        with pytest.raises(SpecValidationError) as exc:
            _spec(outcome_var="x1").validate(_dataset())
        assert any("more than one role" in m for _, m in exc.value.errors)

    def test_minimum_confounder_counts(self):
        with pytest.raises(SpecValidationError) as exc:
            _spec(numeric_confounders=("x1",)).validate(_dataset())
        assert any("at least 2 confounders" in m for _, m in exc.value.errors)
        with pytest.raises(SpecValidationError) as exc:
            _spec(numeric_confounders=()).validate(_dataset())
        assert any("at least 1 numeric" in m for _, m in exc.value.errors)

    def test_bad_estimand(self):
        with pytest.raises(SpecValidationError) as exc:
            _spec(estimand="ATZ").validate(_dataset())
        assert any(f == "estimand" for f, _ in exc.value.errors)

    def test_valid_spec_passes(self):
        _spec().validate(_dataset())


class TestEncodeDesign:
    def test_three_level_dummies_and_names(self):
        cat = categorical_column("mhtrt_0_categorical",
                                 ["0", "1", "2", "1", "0", "2"])
        data = _dataset(t=(0, 1, 0, 1, 0, 1), x1=(1, 2, 3, 4, 5, 6),
                        x2=(1, 0, 1, 0, 1, 0), y=(0, 1, 0, 1, 0, 1),
                        extra=cat)
        spec = _spec(categorical_confounders=(("mhtrt_0_categorical", "0"),))
        dm = encode_design(data, spec)
        assert "mhtrt_0_categorical.1" in dm.column_names
        assert "mhtrt_0_categorical.2" in dm.column_names
        assert "mhtrt_0_categorical.0" not in dm.column_names
        j1 = dm.column_names.index("mhtrt_0_categorical.1")
        np.testing.assert_array_equal(dm.X[:, j1], [0, 1, 0, 1, 0, 0])

    def test_complete_case_filtering_counts_drops(self):
        data = load_csv("t,x1,x2,y\n0,1,2,3\n1,,2,3\n0,1,2,\n1,4,5,6")
        dm = encode_design(data, _spec())
        assert dm.n == 2
        assert dm.dropped_count == 2
        np.testing.assert_array_equal(dm.row_ids, [0, 3])

    def test_multi_group_treatment_rejected(self):
        data = _dataset(t=(0, 1, 2, 1))
        with pytest.raises(MultiGroupError):
            encode_design(data, _spec())

    def test_degenerate_categorical_after_drops(self):
        # the second level exists only on a row that is dropped
        raw = "t,x1,x2,y,g\n0,1,1,1,a\n1,2,2,2,a\n0,3,3,3,a\n1,,4,4,b\n0,5,5,5,a\n1,6,6,6,a"
        data = load_csv(raw)
        spec = _spec(categorical_confounders=(("g", "a"),))
        with pytest.raises(DegenerateColumnError):
            encode_design(data, spec)

    def test_atc_flips_labels(self):
        data = _dataset()
        dm = encode_design(data, _spec(estimand="ATC"))
        assert dm.flipped
        assert dm.effective_estimand == "ATT"
        assert dm.estimand == "ATC"
        # control rows of the original coding are the treated rows here
        np.testing.assert_array_equal(dm.T, [1, 0, 1, 0])

    def test_numeric_label_matching(self):
        # labels are strings; values are floats parsed from text
        data = load_csv("t,x1,x2,y\n0.0,1,2,3\n1.0,4,5,6\n0.0,7,8,9\n1.0,1,2,3")
        dm = encode_design(data, _spec())
        assert dm.n == 4
        assert dm.T.sum() == 2

    @given(st.data())
    @settings(max_examples=40, deadline=None)
    def test_dummy_block_completeness(self, draw):
        # k-level categorical -> k-1 dummy columns; rows reconstruct losslessly
        k = draw.draw(st.integers(2, 5))
        n = draw.draw(st.integers(2 * k, 40))
        labels = [f"L{j}" for j in range(k)]
        assignment = draw.draw(st.lists(st.integers(0, k - 1),
                                        min_size=n, max_size=n)
                               .filter(lambda v: len(set(v)) == k))
        t = [i % 2 for i in range(n)]
        cat = categorical_column("g", [labels[j] for j in assignment])
        data = _dataset(t=t, x1=list(range(n)), x2=[v * 0.5 for v in range(n)],
                        y=list(range(n)), extra=cat)
        ref = labels[draw.draw(st.integers(0, k - 1))]
        spec = _spec(categorical_confounders=(("g", ref),))
        dm = encode_design(data, spec)
        block = [j for j, name in enumerate(dm.column_names)
                 if name.startswith("g.")]
        assert len(block) == k - 1
        B = dm.X[:, block]
        assert set(np.unique(B)) <= {0.0, 1.0}
        assert np.all(B.sum(axis=1) <= 1.0)
        # reconstruct: all-zero rows are the reference level
        names = [dm.column_names[j].split(".", 1)[1] for j in block]
        for i in range(n):
            hot = np.flatnonzero(B[i])
            got = ref if hot.size == 0 else names[hot[0]]
            assert got == labels[assignment[i]]


class TestSummaries:
    def test_numeric_stats(self):
        data = load_csv("a\n1\n2\n3\n4")
        s = summarize(data)
        st_ = s["numeric"]["a"]
        assert st_["mean"] == pytest.approx(2.5)
        assert st_["sd"] == pytest.approx(np.std([1, 2, 3, 4], ddof=1))
        assert st_["median"] == pytest.approx(2.5)
        assert st_["min"] == 1.0 and st_["max"] == 4.0

    def test_categorical_counts(self):
        data = load_csv("b\nx\ny\nx")
        s = summarize(data)
        assert s["categorical"]["b"]["x"] == 2
        assert s["categorical"]["b"]["y"] == 1

    def test_grouped_summaries(self):
        data = load_csv("g,a\n0,1\n0,3\n1,5\n1,7")
        s = summarize(data, group_by="g")
        assert s["group_by"] == "g"
        groups = s["groups"]
        assert groups["0"]["numeric"]["a"]["mean"] == pytest.approx(2.0)
        assert groups["1"]["numeric"]["a"]["mean"] == pytest.approx(6.0)

    def test_head_rows(self):
        data = load_csv("a,b\n1,x\n2,y\n3,z\n4,w")
        rows = head_rows(data, 2)
        assert rows == [["1", "x"], ["2", "y"]]
