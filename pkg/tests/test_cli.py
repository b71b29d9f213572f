from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import pytest

from holderconvex.cli import main

SCHEMA = json.loads((Path(__file__).resolve().parents[1] / "docs" / "report.schema.json").read_text())
SMALL = ["--N", "4", "--alpha", "1/2", "--relaxed"]


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


class TestEval:
    def test_g_at_zero(self, capsys):
        assert _run(capsys, "eval", "--target", "g", "--x", "0", "--N", "128", "--alpha", "1/2") == (0, "0\n")

    def test_f_at_one(self, capsys):
        assert _run(capsys, "eval", "--target", "f", "--x", "1") == (0, "0.5 ± 1e-12\n")

    def test_phi0_small(self, capsys):
        assert _run(capsys, "eval", "--target", "phi0", "--x", "1/32", *SMALL) == (0, "1/8\n")

    def test_strict_rejects_small_N(self, capsys):
        assert _run(capsys, "eval", "--target", "g", "--x", "0", "--N", "4")[0] == 2

    def test_decimal_alpha_rejected(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["eval", "--target", "g", "--x", "0", "--alpha", "0.5"])
        assert e.value.code == 2

    def test_precision_unreachable(self, capsys):
        code, _ = _run(capsys, "eval", "--target", "f", "--x", "1/3", "--eps", "1e-40", *SMALL)
        assert code == 3


class TestSample:
    def test_two_points(self, capsys):
        code, out = _run(capsys, "sample", "--m", "2")
        lines = out.splitlines()
        assert code == 0 and lines[0] == "x,g,g_err,f,f_err" and len(lines) == 3
        assert lines[1].split(",")[:4] == ["0", "0", "0", "0"]
        x, g, _, f, _ = lines[2].split(",")
        assert (x, g) == ("1", "1") and float(f) == pytest.approx(0.5, abs=1e-9)

    def test_x_increasing(self, capsys):
        _, out = _run(capsys, "sample", "--m", "6", *SMALL)
        xs = [line.split(",")[0] for line in out.splitlines()[1:]]
        assert xs == ["0", "1/5", "2/5", "3/5", "4/5", "1"]


class TestVerify:
    def test_unknown_suite(self, capsys):
        assert _run(capsys, "verify", "--suite", "nope")[0] == 2

    def test_gapsum_quick(self, capsys):
        code, out = _run(capsys, "verify", "--suite", "gapsum", "--quick")
        rep = json.loads(out)
        assert code == 0 and rep["passed"] and rep["strict"] is True
        assert all(c["status"] == "pass" for c in rep["checks"])


COMMANDS = [
    ["eval", "--target", "g", "--x", "1/3", "--format", "json"],
    ["sample", "--m", "3", "--format", "json", *SMALL],
    ["boxcount", "--k-max", "4", "--format", "json", *SMALL],
    ["holder", "--pairs", "50", "--format", "json", *SMALL],
    ["convex-subset", "--m", "40", "--k-min", "2", "--k-max", "4", "--format", "json"],
    ["integrate", "--b", "1/2", "--format", "json", *SMALL],
    ["verify", "--suite", "gapsum", "--quick"],
]


class TestJson:
    @pytest.mark.parametrize("argv", COMMANDS, ids=lambda a: a[0])
    def test_schema_and_determinism(self, capsys, argv):
        _, first = _run(capsys, *argv)
        _, second = _run(capsys, *argv)
        assert first == second
        rep = json.loads(first)
        jsonschema.validate(rep, SCHEMA)
        assert rep["command"] == argv[0] and rep["config"]["seed"] == 0

    def test_relaxed_stamp(self, capsys):
        _, out = _run(capsys, "eval", "--target", "g", "--x", "0", "--format", "json", *SMALL)
        assert json.loads(out)["strict"] is False


class TestOutputFile:
    def test_writes_file(self, tmp_path, capsys):
        path = tmp_path / "s.csv"
        assert _run(capsys, "sample", "--m", "3", "--out", str(path), *SMALL) == (0, "")
        assert path.read_text().startswith("x,g,g_err,f,f_err\n")

    def test_failure_leaves_no_file(self, tmp_path, capsys):
        path = tmp_path / "s.csv"
        code, _ = _run(capsys, "sample", "--m", "3", "--eps", "1e-40", "--out", str(path), *SMALL)
        assert code == 3 and not path.exists() and list(tmp_path.iterdir()) == []
