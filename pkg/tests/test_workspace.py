import json

import pytest

from triolex.utils.config import DEFAULTS
from triolex.utils.errors import SchemaError, UnknownObjectError
from triolex.utils.serialize import dumps
from triolex.utils.workspace import (
    EXIT_INVALID,
    EXIT_OK,
    WorkspaceFile,
    analyze_workspace,
    cmd_analyze,
    cmd_validate,
    validate_workspace,
)


@pytest.fixture
def ws(workspace_path):
    return WorkspaceFile.load(workspace_path)


def write_workspace(tmp_path, **collections):
    data = {"schema": "triolex/1", "algebra": {"n_vars": 2, "m_P": 2}, **collections}
    path = tmp_path / "ws.json"
    path.write_text(json.dumps(data))
    return path


class TestLoading:
    def test_collections(self, ws):
        assert list(ws.derivations) == ["d1", "e", "rot"]
        assert set(ws.connections) == {"curved", "flat"}
        assert ws.diffops["lap"][1] == 2
        assert ws.morphisms["quarter_turn"][1] == ws.algebra

    def test_canonical_form_reloads(self, ws):
        data = ws.to_dict()
        again = WorkspaceFile.from_dict(json.loads(dumps(data)))
        assert again.to_dict() == data
        assert again.derivations == ws.derivations
        assert again.connections == ws.connections
        assert again.biderivations == ws.biderivations
        assert again.diffops == ws.diffops
        assert "target" not in data["morphisms"]["quarter_turn"]

    @pytest.mark.parametrize("data, message", [
        ({"schema": "triolex/0", "algebra": {"n_vars": 1, "m_P": 1}}, "expected schema"),
        ({"schema": "triolex/1"}, "no algebra header"),
        ({"schema": "triolex/1", "algebra": {"n_vars": 1, "m_P": 1}, "plots": {}}, "unknown workspace keys: plots"),
        ({"schema": "triolex/1", "algebra": {"n_vars": 1, "m_P": 1}, "derivations": []}, "must map names"),
        ({"schema": "triolex/1", "algebra": {"n_vars": 1, "m_P": 1},
          "derivations": {"bad": {"degree": 0, "X_A": [1, 2]}}}, "derivations/bad"),
        ({"schema": "triolex/1", "algebra": {"n_vars": 1, "m_P": 1},
          "diffops": {"bad": {"degree": 0, "order": "2", "D_A": []}}}, "order must be an integer"),
    ])
    def test_schema_errors(self, data, message):
        with pytest.raises(SchemaError, match=message):
            WorkspaceFile.from_dict(data)

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(SchemaError, match="cannot read"):
            WorkspaceFile.load(tmp_path / "missing.json")
        (tmp_path / "broken.json").write_text("{")
        with pytest.raises(SchemaError, match="malformed JSON"):
            WorkspaceFile.load(tmp_path / "broken.json")

    def test_lookup(self, ws):
        assert ws.lookup("connections", "flat") is ws.connections["flat"]
        with pytest.raises(UnknownObjectError, match="no connection named 'warped'"):
            ws.lookup("connections", "warped")
        assert ws.find("lap", "derivations", "diffops")[0] == "diffops"
        with pytest.raises(UnknownObjectError, match="no diffop or derivation named 'x'"):
            ws.find("x", "diffops", "derivations")


class TestValidate:
    def test_fixture_is_valid(self, workspace_path, default_config):
        code, report = cmd_validate(workspace_path, default_config)
        assert code == EXIT_OK
        assert report["valid"] is True
        assert list(report["objects"])[0] == "algebra"
        assert set(report["objects"]) >= {
            "derivations/rot", "connections/curved", "biderivations/lift", "diffops/lap",
            "modules/self", "morphisms/quarter_turn", "gauges/swap",
        }
        assert report["objects"]["morphisms/quarter_turn"]["classification"] == "isometry"
        assert all(entry["valid"] for entry in report["objects"].values())

    def test_output_is_byte_stable(self, workspace_path, default_config):
        first = dumps(cmd_validate(workspace_path, default_config)[1])
        second = dumps(cmd_validate(workspace_path, default_config)[1])
        assert first == second

    def test_first_failure_is_reported(self, tmp_path, default_config):
        path = write_workspace(
            tmp_path,
            connections={"ok": {}, "bad": {"Gamma": [[[1, 0], [0, 1]], [[1, 0], [0, 1]]]}},
            gauges={"singular": {"rhoP": [["x1", 0], [0, 1]], "rhoQ": [[1]]}},
        )
        code, report = cmd_validate(path, default_config)
        assert code == EXIT_INVALID
        assert report["witness"] == "connections/bad"
        assert report["objects"]["connections/bad"]["witness"] == [1, 1, 1, 1]
        assert report["objects"]["connections/ok"]["valid"] is True
        assert report["objects"]["gauges/singular"]["valid"] is False

    def test_errors_inside_checks_become_failures(self, tmp_path, default_config):
        path = write_workspace(tmp_path, diffops={"lap": {
            "degree": 0, "order": 0, "D_A": [{"dexp": [2, 0], "coeff": 1}],
        }})
        ws = WorkspaceFile.load(path)
        report = validate_workspace(ws, default_config)
        assert not report.valid
        assert report.details["objects"]["diffops/lap"]["witness"] is None


class TestAnalyze:
    def test_curvature(self, ws, default_config):
        report = analyze_workspace(ws, "curvature", "curved", 3, default_config)
        assert report.valid
        assert report.details["flat"] is False
        assert report.details["components"] == [
            {"module": "P", "i": 1, "j": 2, "matrix": [["0", "-1"], ["1", "0"]]},
        ]

    def test_flat_check_exit_code(self, workspace_path, default_config):
        code, report = cmd_analyze(workspace_path, "flat-check", "curved", None, default_config)
        assert code == EXIT_INVALID
        assert report["command"] == "flat-check"
        assert report["target"] == "curved"
        code, _ = cmd_analyze(workspace_path, "flat-check", "flat", None, default_config)
        assert code == EXIT_OK

    def test_poisson_check(self, ws, default_config):
        report = analyze_workspace(ws, "poisson-check", "lift", 3, default_config)
        assert report.valid

    def test_symbol_of_laplacian(self, ws, default_config):
        report = analyze_workspace(ws, "symbol", "lap", 3, default_config)
        assert report.details["order"] == 2
        assert set(report.details["values"]) == {"x1", "x2"}
        assert report.details["values"]["x1"]["X_A"] == [[{"exp": [0, 0], "num": -2, "den": 1}], []]

    def test_symbol_of_derivations(self, ws, default_config):
        report = analyze_workspace(ws, "symbol", "rot", 3, default_config)
        assert report.details["degree"] == 0
        report = analyze_workspace(ws, "symbol", "e", 3, default_config)
        assert report.details["degree"] == 1

    def test_atiyah(self, ws, default_config):
        report = analyze_workspace(ws, "atiyah", "lap", 3, default_config)
        assert report.valid
        assert report.details["reassembles"] is True
        assert report.details["kernel_P"] == [[[], []], [[], []]]
        with_connection = analyze_workspace(ws, "atiyah", "lap@curved", 3, default_config)
        assert with_connection.details["reassembles"] is True
        with pytest.raises(UnknownObjectError):
            analyze_workspace(ws, "atiyah", "lap@warped", 3, default_config)

    def test_h0(self, workspace_path, default_config):
        code, report = cmd_analyze(workspace_path, "h0", "flat", 0, default_config)
        assert code == EXIT_OK
        assert report["dmax"] == 0
        assert report["dimension"] == 2
        _, report = cmd_analyze(workspace_path, "h0", "flat", None, default_config)
        assert report["dmax"] == DEFAULTS["dmax"]

    def test_bracket(self, ws, default_config):
        report = analyze_workspace(ws, "bracket", "d1, rot", 3, default_config)
        assert report.valid
        assert report.details["degree"] == 0
        with pytest.raises(UnknownObjectError):
            analyze_workspace(ws, "bracket", "d1", 3, default_config)

    def test_gauge(self, ws, default_config):
        report = analyze_workspace(ws, "gauge", "swap", 3, default_config)
        assert report.valid
        assert {"algebra", "determinant", "stabilizer"} <= set(report.details)

    def test_determinant_respects_cap(self, ws):
        report = analyze_workspace(ws, "gauge", "swap", 3, dict(DEFAULTS, determinant_rank_cap=1))
        assert "determinant" not in report.details

    def test_unknown_command(self, ws, default_config):
        with pytest.raises(UnknownObjectError):
            analyze_workspace(ws, "holonomy", "flat", 3, default_config)
