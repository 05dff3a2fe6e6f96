import json

import numpy as np
import pytest

from kansynth.cli import EXIT_IO, EXIT_OK, EXIT_TOLERANCE, EXIT_VALIDATION, main
from kansynth.edges import A0
from kansynth.serialize import load_network

MLP = '{"activation": "tanh", "units": [{"w": [1, 2], "b": 0.3, "c": -1}, {"w": [-0.5, 1], "b": 0, "c": 2}]}'


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def square_file(tmp_path, capsys):
    path = tmp_path / "sq.json"
    assert run(capsys, "synth", "square", "--sigma", "0,1,0,1", "--out", path)[0] == EXIT_OK
    return path


class TestSynth:
    def test_writes_network(self, square_file):
        net, meta = load_network(square_file)
        assert meta["builder"] == "square"
        assert net([3.0])[0] == pytest.approx(9.0, abs=1e-12)

    def test_stdout(self, capsys):
        code, out, _ = run(capsys, "synth", "dyadic-affine", "--q", "3/2", "--b", "-1/4")
        assert code == EXIT_OK
        assert json.loads(out)["metadata"]["q"] == "3/2^1"

    @pytest.mark.parametrize(
        "args",
        [["dyadic-mlp", "--mlp", MLP.replace("0.3", "0.25")], ["mlp-shallow", "--mlp", MLP], ["mlp-two-hidden", "--mlp", MLP],
         ["fd-quadratic", "--sigma", "0,1,0,1", "--h", "0.5"], ["multiply", "--sigma", "0,0,1"],
         ["polynomial", "--sigma", "0,1,0,1", "--poly", "[[[1,1],1],[[0,0],\"1/2\"]]", "--dyadic"]],
    )
    def test_builders(self, tmp_path, capsys, args):
        path = tmp_path / "n.json"
        assert run(capsys, "synth", *args, "--out", path)[0] == EXIT_OK
        load_network(path)

    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"q": "5/4", "b": "1"}')
        path = tmp_path / "n.json"
        assert run(capsys, "synth", "dyadic-affine", "--config", cfg, "--out", path)[0] == EXIT_OK
        assert load_network(path)[0]([2.0])[0] == 3.5

    def test_inline_config(self, tmp_path, capsys):
        path = tmp_path / "n.json"
        assert run(capsys, "synth", "dyadic-affine", "--config", '{"q": "-3"}', "--out", path)[0] == EXIT_OK
        assert load_network(path)[0]([2.0])[0] == -6.0

    def test_unknown_config_key(self, capsys):
        assert run(capsys, "synth", "dyadic-affine", "--config", '{"zzz": 1}')[0] == EXIT_VALIDATION

    def test_gadget_size(self, capsys):
        code, _, err = run(capsys, "synth", "dyadic-affine", "--q", "5000")
        assert code == EXIT_VALIDATION and "fan-out" in err

    def test_missing_parameters(self, capsys):
        assert run(capsys, "synth", "square")[0] == EXIT_VALIDATION
        assert run(capsys, "synth", "mlp-shallow")[0] == EXIT_VALIDATION

    def test_named_sigma_rejected_for_square(self, capsys):
        assert run(capsys, "synth", "square", "--sigma", "tanh")[0] == EXIT_VALIDATION


class TestEval:
    def test_values(self, square_file, capsys, tmp_path):
        code, out, _ = run(capsys, "eval", square_file, "--points", "[[1], [2], [-3]]")
        assert code == EXIT_OK
        np.testing.assert_allclose(json.loads(out), [[1.0], [4.0], [9.0]], atol=1e-12)
        pts = tmp_path / "pts.json"
        pts.write_text("[0.5, 1.5]")
        out_file = tmp_path / "vals.json"
        assert run(capsys, "eval", square_file, "--points", f"@{pts}", "--out", out_file)[0] == EXIT_OK
        np.testing.assert_allclose(json.loads(out_file.read_text()), [[0.25], [2.25]], atol=1e-12)

    def test_wrong_dimension(self, square_file, capsys):
        assert run(capsys, "eval", square_file, "--points", "[[1, 2]]")[0] == EXIT_VALIDATION

    def test_missing_file(self, tmp_path, capsys):
        assert run(capsys, "eval", tmp_path / "none.json", "--points", "[1]")[0] == EXIT_IO

    def test_malformed_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{oops")
        assert run(capsys, "eval", bad, "--points", "[1]")[0] == EXIT_IO

    def test_schema_violation(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"format_version": 1, "input_width": 1, "layers": [{"width": 1, "edges": [{"kind": "?"}]}]}')
        code, _, err = run(capsys, "eval", bad, "--points", "[1]")
        assert code == EXIT_VALIDATION and "/layers/0/edges/0/kind" in err


class TestVerify:
    def test_pass(self, square_file, capsys):
        code, out, _ = run(capsys, "verify", square_file, "--oracle", "square", "--lo", -10, "--hi", 10)
        report = json.loads(out)
        assert code == EXIT_OK and report["pass"] and report["points"] == 101

    def test_tolerance_exceeded(self, square_file, capsys):
        code, out, _ = run(capsys, "verify", square_file, "--oracle", "square", "--tolerance", 1e-30, "--lo", 3)
        assert code == EXIT_TOLERANCE and not json.loads(out)["pass"]

    def test_wrong_oracle_exceeds(self, square_file, capsys):
        assert run(capsys, "verify", square_file, "--oracle", "polynomial:[[[1],1]]")[0] == EXIT_TOLERANCE

    def test_environment_tolerance(self, square_file, capsys, monkeypatch):
        monkeypatch.setenv("KANSYNTH_TOLERANCE", "1e-30")
        assert run(capsys, "verify", square_file, "--oracle", "square", "--lo", 3)[0] == EXIT_TOLERANCE
        monkeypatch.setenv("KANSYNTH_TOLERANCE", "abc")
        assert run(capsys, "verify", square_file, "--oracle", "square")[0] == EXIT_VALIDATION

    def test_product_and_mlp_oracles(self, tmp_path, capsys):
        mul = tmp_path / "mul.json"
        run(capsys, "synth", "multiply", "--sigma", "0,1,0,1", "--out", mul)
        assert run(capsys, "verify", mul, "--oracle", "product", "--lo", -5, "--hi", 5, "--grid", 21)[0] == EXIT_OK
        mlp = tmp_path / "mlp.json"
        run(capsys, "synth", "mlp-shallow", "--mlp", MLP, "--out", mlp)
        assert run(capsys, "verify", mlp, "--oracle", f"mlp:{MLP}")[0] == EXIT_OK

    def test_unknown_oracle(self, square_file, capsys):
        assert run(capsys, "verify", square_file, "--oracle", "cube")[0] == EXIT_VALIDATION


class TestApprox:
    def test_report_and_network(self, tmp_path, capsys):
        prefix = tmp_path / "run"
        code, _, _ = run(capsys, "approx", "--target", "sin_cos", "--dim", 2, "--units", 30, "--seed", 1,
                         "--r", 20, "--grid", 21, "--out", prefix)
        assert code == EXIT_OK
        report = json.loads((tmp_path / "run.report.json").read_text())
        assert report["grid"] == 21 and report["seed"] == 1 and report["dyadic_scale"] == 20
        net, meta = load_network(tmp_path / "run.network.json")
        assert meta["builder"] == "approx/two_hidden" and net.input_width == 2

    def test_dyadic_mode_audit(self, tmp_path, capsys):
        prefix = tmp_path / "run"
        run(capsys, "approx", "--target", "square", "--units", 5, "--sigma", "silu", "--mode", "dyadic_A0",
            "--r", 10, "--out", prefix)
        code, out, _ = run(capsys, "audit", tmp_path / "run.network.json", "--family", "A0")
        assert code == EXIT_OK and json.loads(out)["contained"]

    def test_missing_target(self, capsys):
        assert run(capsys, "approx")[0] == EXIT_VALIDATION


class TestAudit:
    def test_a0_contained(self, tmp_path, capsys):
        path = tmp_path / "d.json"
        run(capsys, "synth", "dyadic-affine", "--q", "-7/2^3", "--b", "3", "--out", path)
        code, out, _ = run(capsys, "audit", path, "--family", "A0")
        report = json.loads(out)
        assert code == EXIT_OK and report["violations"] == []
        assert {tuple(p) for p in report["affine_dictionary"]} <= A0

    def test_violation(self, square_file, capsys):
        code, out, _ = run(capsys, "audit", square_file, "--family", "A0")
        assert code == EXIT_VALIDATION and json.loads(out)["violations"]

    def test_declared_family(self, square_file, capsys):
        assert run(capsys, "audit", square_file, "--family", "A0+declared")[0] == EXIT_OK

    def test_listing_only(self, square_file, capsys):
        code, out, _ = run(capsys, "audit", square_file)
        assert code == EXIT_OK and json.loads(out)["non_affine"]

    def test_unknown_family(self, square_file, capsys):
        assert run(capsys, "audit", square_file, "--family", "B9")[0] == EXIT_VALIDATION


def test_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == EXIT_VALIDATION
