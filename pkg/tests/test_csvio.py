"""CSV dialect and manifest tests: exact formatting, round-trips, determinism."""

import json
import math

import pytest
from numpy.testing import assert_allclose

from advreg.csvio import (
    MANIFEST_NAME,
    file_sha256,
    format_cell,
    read_table,
    render_table,
    write_manifest,
    write_table,
)


class TestFormatCell:
    def test_scalar_types(self):
        assert format_cell(None) == ""
        assert format_cell(True) == "true"
        assert format_cell(False) == "false"
        assert format_cell(3) == "3"
        assert format_cell(0.1) == "0.1"
        assert format_cell(1e-17) == "1e-17"
        assert format_cell("label(x)") == "label(x)"

    def test_nan_is_empty_and_inf_survives(self):
        assert format_cell(float("nan")) == ""
        assert format_cell(math.inf) == "inf"
        assert format_cell(-math.inf) == "-inf"

    def test_repr_round_trip(self):
        for value in (0.1 + 0.2, 1 / 3, 2.0**-52, 1.7976931348623157e308):
            assert float(format_cell(value)) == value

    def test_rejects_unknown_types(self):
        with pytest.raises(TypeError):
            format_cell([1, 2])


class TestRenderTable:
    def test_metadata_then_header_then_rows(self):
        text = render_table(
            ["a", "b"],
            [{"a": 1, "b": 2.5}, {"a": 3, "b": None}],
            metadata={"seed": 7, "tag": "x"},
        )
        assert text.splitlines() == ["# seed 7", '# tag "x"', "a,b", "1,2.5", "3,"]

    def test_quotes_commas_in_cells(self):
        text = render_table(["name"], [{"name": "advtrain(delta=0.1, p=inf)"}])
        assert text.splitlines()[1] == '"advtrain(delta=0.1, p=inf)"'

    def test_missing_column_raises(self):
        with pytest.raises(ValueError, match="missing columns"):
            render_table(["a", "b"], [{"a": 1}])

    def test_duplicate_or_empty_columns_raise(self):
        with pytest.raises(ValueError):
            render_table(["a", "a"], [])
        with pytest.raises(ValueError):
            render_table([], [])

    def test_metadata_json_is_compact_and_sorted(self):
        text = render_table(["a"], [], metadata={"cfg": {"b": 1, "a": [1, 2]}})
        assert text.splitlines()[0] == '# cfg {"a":[1,2],"b":1}'


class TestRoundTrip:
    def test_write_read_parse(self, tmp_path):
        path = tmp_path / "t.csv"
        rows = [
            {"x": 0.5, "y": float("nan"), "label": "a,b"},
            {"x": 1.0 / 3.0, "y": -2.0, "label": "plain"},
        ]
        write_table(path, ["x", "y", "label"], rows, metadata={"config": {"n": 3}})
        parsed = read_table(path)
        assert parsed.metadata == {"config": {"n": 3}}
        assert parsed.column_names == ["x", "y", "label"]
        assert parsed.n_rows == 2
        assert_allclose(parsed.numeric("x"), [0.5, 1.0 / 3.0], rtol=0)
        y = parsed.numeric("y")
        assert math.isnan(y[0]) and y[1] == -2.0
        assert parsed.columns["label"] == ["a,b", "plain"]
        assert list(parsed.rows()) == [
            {"x": "0.5", "y": "", "label": "a,b"},
            {"x": repr(1.0 / 3.0), "y": "-2.0", "label": "plain"},
        ]

    def test_lf_line_endings_and_utf8(self, tmp_path):
        path = tmp_path / "t.csv"
        write_table(path, ["s"], [{"s": "µ"}], metadata={"note": "café"})
        raw = path.read_bytes()
        assert b"\r" not in raw
        parsed = read_table(path)
        assert parsed.metadata == {"note": "café"}
        assert parsed.columns["s"] == ["µ"]

    def test_rewrite_is_byte_identical(self, tmp_path):
        rows = [{"v": 0.1 * k} for k in range(20)]
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        write_table(first, ["v"], rows, metadata={"seed": 3})
        write_table(second, ["v"], rows, metadata={"seed": 3})
        assert file_sha256(first) == file_sha256(second)

    def test_malformed_inputs_raise_with_positions(self, tmp_path):
        bad_meta = tmp_path / "m.csv"
        bad_meta.write_text("# broken not-json{\nx\n1\n", encoding="utf-8")
        with pytest.raises(ValueError, match="metadata line 1"):
            read_table(bad_meta)
        no_header = tmp_path / "h.csv"
        no_header.write_text("# only 1\n", encoding="utf-8")
        with pytest.raises(ValueError, match="header"):
            read_table(no_header)
        ragged = tmp_path / "r.csv"
        ragged.write_text("a,b\n1\n", encoding="utf-8")
        with pytest.raises(ValueError, match="row 2"):
            read_table(ragged)


class TestManifest:
    def test_hashes_and_extra(self, tmp_path):
        write_table(tmp_path / "one.csv", ["a"], [{"a": 1}])
        write_table(tmp_path / "two.csv", ["a"], [{"a": 2}])
        write_manifest(tmp_path, ["one.csv", "two.csv"], extra={"figure": "t"})
        manifest = json.loads((tmp_path / MANIFEST_NAME).read_text())
        assert manifest["figure"] == "t"
        for name in ("one.csv", "two.csv"):
            entry = manifest["files"][name]
            assert entry["sha256"] == file_sha256(tmp_path / name)
            assert entry["bytes"] == (tmp_path / name).stat().st_size

    def test_extra_cannot_shadow_files(self, tmp_path):
        write_table(tmp_path / "one.csv", ["a"], [{"a": 1}])
        with pytest.raises(ValueError):
            write_manifest(tmp_path, ["one.csv"], extra={"files": {}})

    def test_manifest_is_deterministic(self, tmp_path):
        write_table(tmp_path / "one.csv", ["a"], [{"a": 1}])
        write_manifest(tmp_path, ["one.csv"])
        first = (tmp_path / MANIFEST_NAME).read_bytes()
        write_manifest(tmp_path, ["one.csv"])
        assert (tmp_path / MANIFEST_NAME).read_bytes() == first
