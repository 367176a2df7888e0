"""Tests for CLI commands (cli.py)."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Callable
from unittest.mock import patch

import pytest
from click.testing import CliRunner

from cohn_localization.cli import EXIT_DOMAIN_ERROR, EXIT_PARSE_ERROR, cli


# =============================================================================
# Fixtures
# =============================================================================


@pytest.fixture
def write_doc(tmp_path: Path, make_doc) -> Callable[..., str]:
    """Write a document into tmp_path and return its path."""
    counter = iter(range(1000))

    def _write(kind: str, value, **kwargs) -> str:
        path = tmp_path / f"doc{next(counter)}.json"
        path.write_text(make_doc(kind, value, **kwargs))
        return str(path)

    return _write


@pytest.fixture(autouse=True)
def _home(isolated_home: Path) -> Path:
    return isolated_home


# =============================================================================
# Success Paths
# =============================================================================


class TestComputingCommands:
    """Results go to stdout as JSON with exit code 0."""

    def test_homology(self, cli_runner: CliRunner, write_doc):
        path = write_doc("complex", {"lo": 0, "diffs": [[["2"]]]})
        result = cli_runner.invoke(cli, ["complex", "homology", "--in", path])

        assert result.exit_code == 0
        assert json.loads(result.output) == {"H": [
            {"deg": 0, "free": 0, "torsion": [2]},
            {"deg": 1, "free": 0, "torsion": []},
        ]}

    def test_reads_stdin_when_no_input_given(self, cli_runner: CliRunner, make_doc):
        text = make_doc("triple", {"f": [["1"]], "s": [["2"]], "g": [["1"]]}, sigma={"central": ["2"]})
        result = cli_runner.invoke(cli, ["localize", "eval"], input=text)

        assert result.exit_code == 0
        assert json.loads(result.output) == {"fraction": "1/2"}

    def test_out_file(self, cli_runner: CliRunner, write_doc, tmp_path: Path):
        path = write_doc("form", {"matrix": [["2"]]})
        out = tmp_path / "result.json"
        result = cli_runner.invoke(cli, ["ltheory", "boundary", "--in", path, "--out", str(out)])

        assert result.exit_code == 0
        assert result.output == ""
        assert json.loads(out.read_text()) == {"module": [2], "pairing": [["1/2"]]}

    def test_repeated_inputs(self, cli_runner: CliRunner, write_doc):
        a = write_doc("fraction", "1/2", sigma={"central": ["2"]})
        b = write_doc("fraction", "1/4", sigma={"central": ["2"]})
        result = cli_runner.invoke(cli, ["localize", "add", "--in", a, "--in", b])

        assert result.exit_code == 0
        assert json.loads(result.output) == {"fraction": "3/4"}

    def test_sigma_file_supplies_missing_header(self, cli_runner: CliRunner, write_doc, tmp_path: Path):
        sigma = tmp_path / "sigma.json"
        sigma.write_text(json.dumps({"central": "nonzero"}))
        path = write_doc("form", {"matrix": [["2"]]})
        result = cli_runner.invoke(cli, ["ltheory", "poincare", "--in", path, "--sigma", str(sigma)])

        assert result.exit_code == 0
        assert json.loads(result.output) == {"poincare": True}

    def test_ring_file_and_flatness(self, cli_runner: CliRunner, tmp_path: Path):
        ring = tmp_path / "ring.json"
        ring.write_text(json.dumps({"kind": "Z"}))
        sigma = tmp_path / "sigma.json"
        sigma.write_text(json.dumps({"central": ["2"]}))
        result = cli_runner.invoke(cli, ["complex", "flatness", "--ring", str(ring), "--sigma", str(sigma)])

        assert result.exit_code == 0
        data = json.loads(result.output)
        assert data["ring"] == "Z[1/2]"
        assert data["flat"] is True

    def test_qgroup_options(self, cli_runner: CliRunner, write_doc):
        path = write_doc("complex", {"lo": 0, "ranks": [1], "diffs": []})
        result = cli_runner.invoke(
            cli, ["ltheory", "qgroup", "--in", path, "--n", "0", "--eps=-1", "--side", "quadratic"]
        )

        assert result.exit_code == 0
        assert json.loads(result.output)["description"] == "Z/2"

    def test_validate_exits_zero_on_bad_complex(self, cli_runner: CliRunner, write_doc):
        path = write_doc("complex", {"lo": 0, "diffs": [[["1"]], [["1"]]]})
        result = cli_runner.invoke(cli, ["complex", "validate", "--in", path])

        assert result.exit_code == 0
        assert json.loads(result.output)["message"] == "d2-nonzero at degree 1"

    def test_commands_lists_everything(self, cli_runner: CliRunner):
        result = cli_runner.invoke(cli, ["commands"])

        assert result.exit_code == 0
        names = [entry["command"] for entry in json.loads(result.output)["commands"]]
        assert "lift toda" in names
        assert "ltheory extension" in names


# =============================================================================
# Error Paths
# =============================================================================


class TestErrors:
    """Errors are JSON payloads with exit code 1 (domain) or 2 (input)."""

    def test_d_squared_is_a_parse_error(self, cli_runner: CliRunner, write_doc):
        path = write_doc("complex", {"lo": 0, "diffs": [[["1"]], [["1"]]]})
        result = cli_runner.invoke(cli, ["complex", "homology", "--in", path])

        assert result.exit_code == EXIT_PARSE_ERROR
        assert json.loads(result.output) == {"kind": "semantic", "message": "d2-nonzero at degree 1"}

    def test_malformed_json(self, cli_runner: CliRunner, tmp_path: Path):
        path = tmp_path / "broken.json"
        path.write_text('{"version": "1",\n  "ring": ')
        result = cli_runner.invoke(cli, ["complex", "homology", "--in", str(path)])

        assert result.exit_code == EXIT_PARSE_ERROR
        data = json.loads(result.output)
        assert data["kind"] == "syntax"
        assert data["message"].startswith("line 2")

    def test_domain_error(self, cli_runner: CliRunner, write_doc):
        path = write_doc("form", {"matrix": [["1", "1"], ["1", "1"]]})
        result = cli_runner.invoke(cli, ["ltheory", "boundary", "--in", path])

        assert result.exit_code == EXIT_DOMAIN_ERROR
        assert json.loads(result.output)["kind"] == "not-poincare"

    def test_tool_error(self, cli_runner: CliRunner, write_doc):
        path = write_doc("matrix", [["1"]])
        result = cli_runner.invoke(cli, ["complex", "homology", "--in", path])

        assert result.exit_code == EXIT_DOMAIN_ERROR
        assert json.loads(result.output)["kind"] == "tool"

    def test_witt_bound_from_environment(self, cli_runner: CliRunner, write_doc, monkeypatch: pytest.MonkeyPatch):
        monkeypatch.setenv("COHN_LOCALIZATION_WITT_BOUND", "2")
        path = write_doc("linking_form", {"s": [["2", "0"], ["0", "2"]], "pairing": [["0", "1/2"], ["1/2", "0"]]})
        result = cli_runner.invoke(cli, ["ltheory", "witt", "--in", path])

        assert result.exit_code == EXIT_DOMAIN_ERROR
        assert json.loads(result.output)["kind"] == "witt-bound-exceeded"

    def test_error_written_to_out_file(self, cli_runner: CliRunner, write_doc, tmp_path: Path):
        path = write_doc("matrix", [["1"]])
        out = tmp_path / "error.json"
        result = cli_runner.invoke(cli, ["complex", "homology", "--in", path, "--out", str(out)])

        assert result.exit_code == EXIT_DOMAIN_ERROR
        assert json.loads(out.read_text())["kind"] == "tool"

    def test_missing_input_file(self, cli_runner: CliRunner, tmp_path: Path):
        result = cli_runner.invoke(cli, ["complex", "homology", "--in", str(tmp_path / "absent.json")])

        assert result.exit_code == 2
        assert "does not exist" in result.output


# =============================================================================
# serve Command
# =============================================================================


class TestServe:
    """Tests for the 'serve' command."""

    def test_serve_calls_run(self, cli_runner: CliRunner):
        """serve command calls server.run()."""
        with patch("cohn_localization.server.run") as mock_run:
            result = cli_runner.invoke(cli, ["serve"], catch_exceptions=False)

        assert result.exit_code == 0
        mock_run.assert_called_once()


# =============================================================================
# Example Corpus
# =============================================================================

CORPUS = Path(__file__).resolve().parent.parent / "docs" / "corpus"


def _command_for(path: Path) -> list[str]:
    return path.stem.split("-", 1)


@pytest.mark.integration
class TestCorpus:
    """Every example document runs, and runs the same way twice."""

    @pytest.mark.parametrize("path", sorted(CORPUS.glob("*.json")), ids=lambda p: p.stem)
    def test_example_is_deterministic(self, cli_runner: CliRunner, path: Path):
        args = [*_command_for(path), "--in", str(path)]
        first = cli_runner.invoke(cli, args)
        second = cli_runner.invoke(cli, args)

        assert first.exit_code == 0, first.output
        assert first.output == second.output
        json.loads(first.output)

    @pytest.mark.parametrize("path", sorted((CORPUS / "malformed").glob("*.json")), ids=lambda p: p.stem)
    def test_malformed_example_exits_two(self, cli_runner: CliRunner, path: Path):
        result = cli_runner.invoke(cli, ["complex", "homology", "--in", str(path)])

        assert result.exit_code == EXIT_PARSE_ERROR
        assert json.loads(result.output)["kind"] in ("syntax", "semantic")
