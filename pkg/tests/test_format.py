"""Tests for map specs and result serialization."""

import json

import numpy as np
import pytest

from mcp_server_polar_arcs.core.errors import MapSpecError, NonUnimodularError
from mcp_server_polar_arcs.core.format import (
    TRACE_COLUMNS,
    dumps_json,
    format_float,
    parse_map_spec,
    resolve_output_format,
    trace_csv,
    write_csv,
)
from mcp_server_polar_arcs.core.torus_dynamics import model_fJ
from mcp_server_polar_arcs.core.unimodular import UnimodularMatrix


class TestMapSpec:
    def test_f0(self, f0, assert_same_map):
        assert_same_map(parse_map_spec("f0"), f0)
        assert_same_map(parse_map_spec(" F0 "), f0)

    def test_fJ(self, assert_same_map):
        assert_same_map(parse_map_spec("fJ:2,1,1,1"), model_fJ(UnimodularMatrix(2, 1, 1, 1)))

    def test_arc_slice(self, f0, assert_same_map):
        assert_same_map(parse_map_spec("arc:twist@0"), f0)
        assert parse_map_spec("arc:h1@0.75").name.startswith("eta1")

    @pytest.mark.parametrize("spec", ["", "g0", "fJ:1,0", "fJ:a,b,c,d", "arc:h1", "arc:h1@1.5", "arc:h1@x"])
    def test_malformed(self, spec):
        with pytest.raises(MapSpecError):
            parse_map_spec(spec)

    def test_unknown_arc(self):
        with pytest.raises(MapSpecError):
            parse_map_spec("arc:nope@0.5")

    def test_non_unimodular(self):
        with pytest.raises(NonUnimodularError):
            parse_map_spec("fJ:2,0,0,2")


class TestOutput:
    def test_resolve_format(self):
        assert resolve_output_format() == "json"
        assert resolve_output_format(None, "out.csv") == "csv"
        assert resolve_output_format("JSON", "out.csv") == "json"
        assert resolve_output_format(None, "out.txt") == "json"
        with pytest.raises(MapSpecError):
            resolve_output_format("yaml")

    def test_full_precision_floats(self):
        assert format_float(0.1) == "0.10000000000000001"
        assert format_float(np.float64(1.0 / 3.0)) == "0.33333333333333331"
        assert format_float(True) == "true"
        assert format_float(3) == "3"

    def test_write_csv(self):
        text = write_csv([[1, 0.5, "sink"]], ("index", "x", "kind"), ["note: a"])
        assert text.splitlines() == ["# note: a", "index,x,kind", "1,0.5,sink"]

    def test_trace_csv(self):
        points = np.array([[0.25, 0.75], [0.25, 1.25]])
        lines = trace_csv(points, [0, 1], {"saddle": [0.25, 0.75]}).splitlines()
        assert lines[0] == "# homotopy_type: 0,1"
        assert lines[1] == "# saddle: [0.25, 0.75]"
        assert lines[2] == ",".join(TRACE_COLUMNS)
        assert lines[4] == "1,0.25,1.25,0.25,0.25"

    def test_json_converts_numpy(self):
        payload = {"a": np.array([1.0, 2.0]), "b": np.int64(3), "c": np.bool_(True), "d": complex(1.0, 2.0)}
        assert json.loads(dumps_json(payload)) == {"a": [1.0, 2.0], "b": 3, "c": True, "d": [1.0, 2.0]}
