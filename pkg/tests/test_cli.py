import csv
import io
import json

import pytest

from ratnear import cli as cli_mod
from ratnear.cli import run


def invoke(capsys, *args):
    code = run(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def body(text: str) -> str:
    return "\n".join(line for line in text.splitlines() if not line.startswith("# timestamp="))


def header(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition("=")
            out[k] = v
    return out


def table(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO("\n".join(l for l in text.splitlines() if not l.startswith("#")))))


class TestCount:
    def test_hand_case(self, capsys):
        code, out, _ = invoke(capsys, "count", "--f", "x^2", "--J", "0:0.5", "--Q", "1", "--delta", "0.5")
        assert code == 0
        assert header(out)["result.n"] == "1"
        assert table(out) == [{"q": "1", "p1": "0", "p2": "0"}]

    def test_header_has_full_config(self, capsys):
        _, out, _ = invoke(capsys, "count", "--Q", "5", "--delta", "1/3")
        h = header(out)
        for key in ("Q", "delta", "J", "c", "f", "mode", "fmt", "output", "keep", "command", "version", "timestamp"):
            assert key in h, key
        assert h["delta"] == "1/3" and h["command"] == "count"

    def test_json_summary(self, capsys):
        code, out, _ = invoke(capsys, "count", "--Q", "50", "--format", "json", "--output", "summary")
        doc = json.loads(out)
        assert code == 0 and doc["result"]["n"] > 0 and "rows" not in doc
        assert doc["config"]["Q"] == "50"

    def test_rows_sorted(self, capsys):
        _, out, _ = invoke(capsys, "count", "--Q", "30", "--delta", "1/4")
        rows = [(int(r["q"]), int(r["p1"]), int(r["p2"])) for r in table(out)]
        assert rows == sorted(rows)

    def test_float_mode(self, capsys):
        code, out, _ = invoke(capsys, "count", "--f", "sin(x)+x^2", "--Q", "30", "--output", "summary")
        h = header(out)
        assert code == 0 and "result.boundary_hits" in h and h["mode"] == "float"

    def test_determinism(self, capsys):
        args = ("count", "--f", "x^3/3 + x/2", "--Q", "60", "--delta", "0.3", "--c", "0.1")
        _, a, _ = invoke(capsys, *args)
        _, b, _ = invoke(capsys, *args)
        assert body(a) == body(b)


class TestOtherCommands:
    def test_constants(self, capsys):
        code, out, _ = invoke(capsys, "constants", "--c1", "1", "--c2", "1")
        assert code == 0 and "E_hat=23328" in out.replace(".0", "")

    def test_constants_km(self, capsys):
        code, out, _ = invoke(capsys, "constants", "--J", "0:1", "--L", "0.5", "--delta", "0.1",
                              "--K", "0.1", "--T", "10", "--format", "json")
        assert code == 0
        assert json.loads(out)["result"]["km.bound"] == pytest.approx(75230.0, rel=1e-4)

    def test_verify_json(self, capsys):
        code, out, _ = invoke(capsys, "verify", "--f", "x^2", "--Q", "800", "--delta", "0.25", "--J", "0:1",
                              "--format", "json")
        doc = json.loads(out)
        assert code == 0
        assert doc["result"]["n"] == 90333
        assert doc["result"]["oracle"].startswith("skipped")
        assert doc["result"]["thm1.status"] == "vacuous"

    def test_verify_oracle_runs(self, capsys):
        code, out, _ = invoke(capsys, "verify", "--Q", "60", "--delta", "1/2", "--format", "json")
        assert code == 0 and json.loads(out)["result"]["oracle"] == "match"

    def test_measure(self, capsys):
        code, out, _ = invoke(capsys, "measure", "--J", "0:0.5", "--Q", "1", "--delta", "0.5", "--rho", "0.1")
        assert code == 0 and "0.1" in header(out).get("result.measure", "")

    def test_bg(self, capsys):
        code, out, _ = invoke(capsys, "bg", "--delta", "1", "--K", "0.5", "--T", "2", "--grid", "100")
        assert code == 0 and float(header(out)["result.fraction"]) == 1.0

    def test_good(self, capsys):
        code, out, _ = invoke(capsys, "good", "--f", "x", "--J", "-1:1", "--C", "4", "--alpha", "1", "--balls", "10")
        assert code == 0 and header(out)["result.violations"] == "0"
        assert len(table(out)) == 30

    def test_mollify(self, capsys):
        code, out, _ = invoke(capsys, "mollify", "--f", "x^2", "--J", "0:1", "--eps", "0.01", "--grid", "21")
        assert code == 0 and len(table(out)) == 21

    def test_pathological(self, capsys):
        code, out, _ = invoke(capsys, "pathological", "--N", "50", "--pairs", "200", "--format", "json")
        assert code == 0 and json.loads(out)["result"]

    def test_attach(self, capsys):
        code, out, _ = invoke(capsys, "attach", "--J", "0:1/2", "--Q", "100", "--delta", "1/2", "--grid", "40",
                              "--constants", "relaxed:c0=0.1,C1=50")
        h = header(out)
        assert code == 0 and h["result.constants"] == "relaxed"
        assert len(table(out)) == 40


class TestExitCodes:
    @pytest.mark.parametrize("args", [
        ("count", "--Q", "0.5"),
        ("count", "--f", "x^"),
        ("count", "--f", "foo(x)"),
        ("count", "--J", "1:0"),
        ("count", "--bogus", "1"),
        ("count", "--f", "sin(x)", "--mode", "exact"),
        ("attach", "--constants", "relaxed:c1=3"),
        ("constants", "--c1", "2", "--c2", "1"),
    ])
    def test_validation(self, capsys, args):
        code, _, err = invoke(capsys, *args)
        assert code == 1, err
        assert err.strip()

    def test_validation_names_key(self, capsys):
        _, _, err = invoke(capsys, "count", "--Q", "0.5")
        assert "Q" in err and ">= 1" in err

    def test_guard(self, capsys):
        code, _, err = invoke(capsys, "attach", "--Q", "10", "--delta", "1e-9", "--grid", "2",
                              "--constants", "relaxed:c0=0.001")
        assert code == 2 and "guard" in err

    def test_internal(self, capsys, monkeypatch):
        monkeypatch.setattr(cli_mod, "brute_force_oracle", lambda curve, params: [])
        code, _, err = invoke(capsys, "verify", "--Q", "20")
        assert code == 3 and "AssertionError" in err


class TestConfig:
    def test_file_then_flags(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# hand case\nf = x^2\nJ = 0:0.5\nQ = 7\ndelta = 0.5\nformat = json\n")
        _, out, _ = invoke(capsys, "--config", str(cfg), "count", "--output", "summary")
        doc = json.loads(out)
        assert doc["config"]["Q"] == "7"
        _, out, _ = invoke(capsys, "--config", str(cfg), "count", "--Q", "1", "--output", "summary")
        doc = json.loads(out)
        assert doc["config"]["Q"] == "1" and doc["result"]["n"] == 1

    def test_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("colour = red\n")
        code, _, err = invoke(capsys, "--config", str(cfg), "count")
        assert code == 1 and "colour" in err

    def test_malformed_line(self, capsys, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("Q 7\n")
        assert invoke(capsys, "--config", str(cfg), "count")[0] == 1
