"""CLI, config validation, artifact emission, determinism, planted failures."""

import json
import os

import pytest

from pshlab.cli import main
from pshlab.config import ConfigError, load_config, validate_config
from pshlab.verify import verify_suite


def write(path, text):
    path.write_text(text)
    return str(path)


FLOW_TOML = """
kind = "flow"
seed = 7
output = "{out}"

[field]
expression = "z1*cj(z1)"
dimension = 1
domain_radius = 4.0

[flow]
x0 = [[3.0, 0.0]]
"""


class TestParseCheck:
    def test_ok(self, capsys):
        assert main(["parse-check", "z1*cj(z1) + z2*cj(z2)", "--dim", "2"]) == 0
        assert "cj(z1)" in capsys.readouterr().out

    def test_syntax_error(self, capsys):
        assert main(["parse-check", "z1 + ", "--dim", "1"]) == 1
        assert "position 5" in capsys.readouterr().err

    def test_dimension_error(self, capsys):
        assert main(["parse-check", "z3", "--dim", "2"]) == 1
        assert "exceeds dimension" in capsys.readouterr().err


class TestRunFlow:
    def test_artifacts_and_exit(self, tmp_path, capsys):
        out = tmp_path / "out"
        cfg = write(tmp_path / "flow.toml", FLOW_TOML.format(out=out))
        assert main(["run", cfg]) == 0
        names = set(os.listdir(out))
        assert {"report.txt", "summary.csv", "trajectory.jsonl",
                "flow_u.svg", "flow_grad.svg"} <= names
        lines = (out / "trajectory.jsonl").read_text().splitlines()
        assert json.loads(lines[0])["point"] == [[3.0, 0.0]]
        assert "summary" in json.loads(lines[-1])
        report = (out / "report.txt").read_text()
        assert "summary: PASS" in report
        assert "config sha256" in report

    def test_multiple_starts(self, tmp_path):
        out = tmp_path / "out"
        cfg = write(tmp_path / "flow.toml", FLOW_TOML.format(out=out).replace(
            "x0 = [[3.0, 0.0]]", "x0 = [[[3.0, 0.0]], [[1.0, 0.5]]]"))
        assert main(["run", cfg]) == 0
        names = set(os.listdir(out))
        assert {"trajectory.jsonl", "trajectory_1.jsonl"} <= names

    def test_missing_x0_named_in_error(self, tmp_path, capsys):
        bad = FLOW_TOML.replace("x0 = [[3.0, 0.0]]", "")
        cfg = write(tmp_path / "bad.toml", bad.format(out=tmp_path / "o"))
        assert main(["run", cfg]) == 2
        assert "flow.x0" in capsys.readouterr().err

    def test_unknown_kind(self, tmp_path, capsys):
        cfg = write(tmp_path / "bad.toml",
                    FLOW_TOML.format(out=tmp_path / "o").replace(
                        'kind = "flow"', 'kind = "meditate"'))
        assert main(["run", cfg]) == 2
        assert "unknown experiment kind" in capsys.readouterr().err

    def test_seed_mandatory(self, tmp_path, capsys):
        cfg = write(tmp_path / "bad.toml",
                    FLOW_TOML.format(out=tmp_path / "o").replace("seed = 7\n", ""))
        assert main(["run", cfg]) == 2
        assert "seed" in capsys.readouterr().err


class TestCheckPsh:
    def test_planted_harmonic_fails_with_witness(self, tmp_path, capsys):
        cfg = write(tmp_path / "psh.toml", f"""
kind = "check-psh"
seed = 1
output = "{tmp_path / 'out'}"

[field]
expression = "0.5*z1^2 + 0.5*cj(z1)^2"
dimension = 1

[check_psh]
epsilon = 0.1
""")
        assert main(["run", cfg]) == 1
        out = capsys.readouterr().out
        assert "FAIL" in out
        assert "witness" in out

    def test_round_passes(self, tmp_path):
        cfg = write(tmp_path / "psh.toml", f"""
kind = "check-psh"
seed = 1
output = "{tmp_path / 'out'}"

[field]
expression = "z1*cj(z1) + z2*cj(z2)"
dimension = 2

[check_psh]
epsilon = 0.5
""")
        assert main(["run", cfg]) == 0


class TestOtherKinds:
    def _run(self, tmp_path, raw):
        from pshlab.runner import run
        raw.setdefault("output", str(tmp_path / "out"))
        report = run(validate_config(raw, source_text="inline"))
        return report, tmp_path / "out"

    def test_degree_kind(self, tmp_path):
        report, out = self._run(tmp_path, {
            "kind": "degree", "seed": 3,
            "field": {"expression": "z1*cj(z1) + z2*cj(z2)", "dimension": 2,
                      "domain_radius": 2.5},
            "degree": {"levels": [1.0]}})
        assert report.passed
        names = set(os.listdir(out))
        assert {"degrees.csv", "levelset_b1.0.csv", "levelset_b1.0.svg"} <= names
        assert "1" in (out / "degrees.csv").read_text()

    def test_fibers_kind(self, tmp_path):
        report, out = self._run(tmp_path, {
            "kind": "fibers", "seed": 3,
            "field": {"expression": "z1*cj(z1) + z2*cj(z2)", "dimension": 2},
            "fibers": {"targets": [[[2.0, 0.0], [0.0, 2.0]]], "starts": 16}})
        assert report.passed
        assert "fibers.csv" in os.listdir(out)

    def test_average_kind(self, tmp_path):
        report, out = self._run(tmp_path, {
            "kind": "average", "seed": 2,
            "field": {"expression": "0.5*z1 + 0.5*cj(z1)", "dimension": 1},
            "action": {"kind": "circle", "weights": [1]}})
        assert report.passed
        assert (out / "averaged.txt").read_text().strip() == "0.0"

    def test_orbit_dim_kind(self, tmp_path):
        report, out = self._run(tmp_path, {
            "kind": "orbit-dim", "seed": 4,
            "action": {"kind": "su2"}})
        assert report.passed
        assert "orbit_dims.csv" in os.listdir(out)

    def test_confine_kind(self, tmp_path):
        report, out = self._run(tmp_path, {
            "kind": "confine", "seed": 5,
            "field": {"expression": "z1*cj(z1) + z2*cj(z2)", "dimension": 2},
            "action": {"kind": "su2"},
            "confine": {"starts": 16}})
        assert report.passed
        assert "confine.csv" in os.listdir(out)

    def test_runtime_error_captured(self, tmp_path):
        # a field that is not circle-invariant: the degree pipeline rejects it
        # and the runner converts the failure into a failing report row
        report, out = self._run(tmp_path, {
            "kind": "degree", "seed": 3,
            "field": {"expression": "0.5*z1 + 0.5*cj(z1) + z2*cj(z2)",
                      "dimension": 2},
            "degree": {"levels": [1.0]}})
        assert not report.passed
        assert "runtime-error" in report.results[0].name
        assert "summary.csv" in os.listdir(out)


class TestConfigValidation:
    def test_field_path_in_errors(self):
        with pytest.raises(ConfigError, match="field.expression"):
            validate_config({"kind": "flow", "seed": 1, "field": {"dimension": 1},
                             "flow": {"x0": [[1.0, 0.0]]}})
        with pytest.raises(ConfigError, match=r"flow.x0\[0\]"):
            validate_config({"kind": "flow", "seed": 1,
                             "field": {"expression": "z1", "dimension": 1},
                             "flow": {"x0": [[1.0]]}})

    def test_toml_error_reported(self, tmp_path):
        cfg = write(tmp_path / "broken.toml", "kind = [unclosed")
        with pytest.raises(ConfigError, match="TOML"):
            load_config(cfg)


class TestVerifySuite:
    def test_empty_corpus_is_vacuous_failure(self):
        results = verify_suite(fields={})
        assert len(results) == 1
        assert not results[0].passed
        assert "vacuous" in results[0].name
        assert "zero checks" in results[0].detail

    def test_exit_code_contract(self, tmp_path):
        # exit 0 iff every pass flag true: the vacuous empty corpus cannot be
        # reached via CLI, but a failing check-psh run must exit nonzero and a
        # passing flow run zero (covered above); here: verify exits 0
        rc = main(["verify", "--seed", "3", "--out", str(tmp_path / "v")])
        assert rc == 0
        names = set(os.listdir(tmp_path / "v"))
        assert {"report.txt", "summary.csv", "checks.jsonl"} <= names
