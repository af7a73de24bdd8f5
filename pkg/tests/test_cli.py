import json

import pytest

from qca_lab.cli import main, parse_cells, render


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out else None), err


@pytest.fixture
def xor_file(rules_dir):
    return str(rules_dir / "xor.json")


class TestAnalyze:
    def test_xor(self, capsys, xor_file):
        code, rep, _ = run(capsys, "analyze", xor_file)
        res = rep["result"]
        assert code == 0
        assert res["injective_finite"] and not res["reversible"] and res["open"]
        assert not res["quantization_uniformly_local"] and res["quantization_everywhere_local"]
        assert rep["command"] == "analyze" and rep["rule"] == "xor" and "version" in rep

    def test_identity_all_true(self, capsys, rules_dir):
        code, rep, _ = run(capsys, "analyze", str(rules_dir / "identity.json"), "--oracle")
        flags = ("injective_finite", "reversible", "left_closing", "right_closing", "open",
                 "quantization_uniformly_local", "quantization_everywhere_local", "oracle_agreement")
        assert code == 0 and all(rep["result"][f] for f in flags)

    def test_oracle_on_non_open(self, capsys, rules_dir):
        code, rep, _ = run(capsys, "analyze", str(rules_dir / "elementary-86.json"), "--oracle")
        assert rep["result"]["oracle_agreement"] and not rep["result"]["open"]

    def test_malformed(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"alphabet": ["0", "1"], "quiescent": "0", "neighborhood": [0], "table": {"0": "1", "1": "1"}}')
        code, rep, err = run(capsys, "analyze", str(bad))
        assert code == 2 and rep is None and "QuiescenceViolation" in err

    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "analyze", "/nonexistent/rule.json")
        assert code == 2 and err

    def test_builtin_name(self, capsys):
        code, rep, _ = run(capsys, "analyze", "and")
        assert code == 0 and not rep["result"]["injective_finite"]

    def test_graph_cap(self, capsys, monkeypatch, rules_dir):
        monkeypatch.setenv("QCA_MAX_VERTICES", "4")
        code, _, err = run(capsys, "analyze", str(rules_dir / "elementary-30.json"))
        assert code == 3 and "GraphTooLarge" in err


class TestGraph:
    def test_dot(self, capsys, tmp_path, xor_file):
        dot = tmp_path / "xor.dot"
        code, rep, _ = run(capsys, "graph", xor_file, "--dot", str(dot))
        assert code == 0
        assert rep["result"]["vertices"] == 4 and rep["result"]["edges"] == 8 and rep["result"]["sccs"] == 2
        first = dot.read_bytes()
        run(capsys, "graph", xor_file, "--dot", str(dot))
        assert dot.read_bytes() == first

    def test_identity(self, capsys, tmp_path, rules_dir):
        dot = tmp_path / "id.dot"
        run(capsys, "graph", str(rules_dir / "identity.json"), "--dot", str(dot))
        text = dot.read_text()
        assert text.count("->") == 4


class TestStep:
    def test_worked_block(self, capsys, xor_file):
        code, rep, _ = run(capsys, "step", xor_file, "0|111111111111")
        assert code == 0 and rep["result"]["final"] == "-1|1000000000001"

    def test_zero_steps(self, capsys, xor_file):
        _, rep, _ = run(capsys, "step", xor_file, "3|0110", "--steps", "0")
        assert rep["result"]["orbit"] == ["4|11"]

    def test_bad_literal(self, capsys, xor_file):
        code, _, _ = run(capsys, "step", xor_file, "nonsense")
        assert code == 2

    def test_quantum(self, capsys, tmp_path, xor_file):
        state = tmp_path / "s.json"
        state.write_text(json.dumps([{"config": "0|", "re": 0.5 ** 0.5, "im": 0},
                                     {"config": "0|111111111111", "re": 0.5 ** 0.5, "im": 0}]))
        code, rep, _ = run(capsys, "step", xor_file, "--quantum", str(state))
        assert code == 0
        assert [e["config"] for e in rep["result"]["state"]] == ["0|", "-1|1000000000001"]
        assert rep["result"]["state"][0]["re"] == 0.707106781187

    def test_adjoint(self, capsys, tmp_path, xor_file):
        state = tmp_path / "s.json"
        state.write_text(json.dumps([{"config": "-1|1000000000001", "re": 1, "im": 0}]))
        code, rep, _ = run(capsys, "step", xor_file, "--quantum", str(state), "--adjoint")
        assert code == 0 and rep["result"]["state"] == [{"config": "0|111111111111", "im": 0.0, "re": 1.0}]

    def test_adjoint_annihilates(self, capsys, tmp_path, xor_file):
        state = tmp_path / "s.json"
        state.write_text(json.dumps([{"config": "0|1", "re": 1, "im": 0}]))
        code, _, err = run(capsys, "step", xor_file, "--quantum", str(state), "--adjoint")
        assert code == 4 and "ZeroVector" in err


class TestLocality:
    def test_identity(self, capsys):
        code, rep, _ = run(capsys, "locality", "identity", "--region", "0", "--neighborhood", "0")
        assert code == 0 and rep["result"]["verdict"] == "verified"

    def test_shift(self, capsys, rules_dir):
        code, rep, _ = run(capsys, "locality", str(rules_dir / "shift.json"), "--region", "0", "--neighborhood", "1")
        assert rep["result"]["verdict"] == "verified"

    def test_xor_too_small(self, capsys, xor_file):
        code, rep, _ = run(capsys, "locality", xor_file, "--region", "0,1", "--neighborhood", "0")
        assert code == 0 and rep["result"]["verdict"] == "violated" and rep["result"]["violation"]

    def test_cap(self, capsys, monkeypatch, xor_file):
        monkeypatch.setenv("QCA_MAX_WINDOW", "64")
        code, _, err = run(capsys, "locality", xor_file, "--region", "0", "--neighborhood=-2..2")
        assert code == 3


class TestFalsifyAndSignal:
    def test_falsify_xor(self, capsys, xor_file):
        code, rep, _ = run(capsys, "falsify", xor_file, "--radius", "3")
        res = rep["result"]
        assert code == 0
        assert res["evolved_trace_distance"] == 1.0 and res["reduction_residual"] == 0.0
        assert res["x"] == "0|" and res["A"] == [-1, 7]

    def test_falsify_identity(self, capsys):
        code, _, err = run(capsys, "falsify", "identity")
        assert code == 5 and "RuleReversible" in err

    def test_signal_auto(self, capsys, xor_file):
        code, rep, _ = run(capsys, "signal", xor_file, "--auto")
        res = rep["result"]
        assert code == 0 and res["success_probability"] == 1.0
        assert res["alice_region"] == [-1, 1]

    def test_signal_explicit(self, capsys, xor_file):
        code, rep, _ = run(capsys, "signal", xor_file, "--x", "0|", "--y", "0|111111111111",
                           "--bob", "5", "--alice", "40,41")
        assert code == 0 and rep["result"]["success_probability"] == 0.5

    def test_signal_bob_equal(self, capsys, xor_file):
        code, _, _ = run(capsys, "signal", xor_file, "--x", "0|", "--y", "0|11", "--bob", "9", "--alice", "0")
        assert code == 2

    def test_signal_incomplete(self, capsys, xor_file):
        code, _, err = run(capsys, "signal", xor_file, "--x", "0|")
        assert code == 2 and "missing" in err


def test_deterministic_output(capsys, xor_file):
    main(["signal", xor_file, "--auto"])
    first = capsys.readouterr().out
    main(["signal", xor_file, "--auto"])
    assert capsys.readouterr().out == first


def test_float_formatting():
    assert render({"b": 0.1 + 0.2, "a": [2 / 3]}) == '{\n  "a": [\n    0.666666666667\n  ],\n  "b": 0.3\n}\n'


def test_parse_cells():
    assert parse_cells("-1..1,4") == [-1, 0, 1, 4]
    assert parse_cells("3,3") == [3]


def test_argument_errors():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate", "xor"])
    assert exc.value.code == 2
