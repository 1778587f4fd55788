import json
import math

import pytest

from ncfisher.cli import run


def run_json(capsys, argv):
    code = run(argv)
    captured = capsys.readouterr()
    report = json.loads(captured.out)
    return code, report


def test_bound_command(capsys):
    code, report = run_json(
        capsys, ["bound", "--alpha", "0.5", "--delta", "0.1"]
    )
    assert code == 0
    assert report["outputs"]["value"] == 25.0
    assert report["command"] == "bound"
    assert "model_digest" in report


def test_moment_alternating_word(capsys):
    code, report = run_json(capsys, ["moment", "--word", "X:0 X:1 X:0 X:1"])
    assert code == 0
    out = report["outputs"]
    lam = math.log(2)
    eta1 = complex(math.cos(lam), math.sin(lam) / 3)
    expected = eta1**2 + abs(eta1) ** 2
    assert out["value"]["re"] == pytest.approx(expected.real, abs=1e-10)
    assert out["value"]["im"] == pytest.approx(expected.imag, abs=1e-10)
    assert out["partition_count"] == 2
    assert out["oracle_diff"] < 1e-10


def test_moment_accepts_partner_letters(capsys):
    code, report = run_json(capsys, ["moment", "--word", "Y:0 X:0 X:0 Y:1"])
    assert code == 0
    assert report["outputs"]["oracle_diff"] < 1e-10


def test_brownian_rejects_partner_letters(capsys):
    assert run(["brownian", "--word", "Y:0 Y:0"]) == 2


def test_bad_word_token(capsys):
    assert run(["moment", "--word", "Q:0"]) == 2
    assert run(["moment", "--word", "X0"]) == 2


def test_conjugate_default_model(capsys):
    code, report = run_json(
        capsys, ["conjugate", "--grid", "-1,0,1", "--degree", "3"]
    )
    assert code == 0
    out = report["outputs"]
    coeff = {entry["word"]: entry for entry in out["coefficients"]}
    assert coeff["Xg:0"]["re"] == pytest.approx(1.0, abs=1e-8)
    assert out["residual"] < 1e-8
    assert out["phi_star"] == pytest.approx(1.0, abs=1e-8)
    assert out["self_adjoint_defect"] < 1e-8


def test_conjugate_rational_grid(capsys):
    code, report = run_json(
        capsys,
        ["conjugate", "--grid", "-1,-1/2,0,1/2,1", "--degree", "2",
         "--time", "1/2"],
    )
    assert code == 0
    assert report["outputs"]["target_time"] == "1/2"


def test_check_kms(capsys):
    code, report = run_json(capsys, ["check-kms", "--tol", "1e-11"])
    assert code == 0
    gens = report["outputs"]["generators"]
    assert gens[0]["detailed_balance_ok"] is True
    assert report["outputs"]["max_deviation"] < 1e-12


def test_fisher_default(capsys):
    code, report = run_json(capsys, ["fisher"])
    assert code == 0
    assert report["outputs"]["phi_star_total"] == pytest.approx(1.0, abs=1e-8)


def test_cramer_rao_command(capsys):
    code, report = run_json(capsys, ["cramer-rao"])
    assert code == 0
    out = report["outputs"]
    assert out["normalized"] is True
    assert out["lhs"] == pytest.approx(1.0, abs=1e-7)
    assert report["passed"] is True


def test_chi_star_command(capsys):
    code, report = run_json(
        capsys,
        ["chi-star", "--eps", "0,0.5,1", "--tail-cutoff", "2",
         "--grid", "0", "--degree", "1"],
    )
    assert code == 0
    value = report["outputs"]["value"]
    exact = 0.5 * (math.log(3.0) - 2.0)
    assert value == pytest.approx(exact, abs=0.05)


def test_verify_commands_quick(capsys):
    code, report = run_json(
        capsys, ["verify-lemma2", "--count", "10", "--degree", "3"]
    )
    assert code == 0 and report["passed"] is True
    assert report["outputs"]["max_residual"] < 1e-9

    code, report = run_json(
        capsys, ["verify-core", "--count", "10", "--x-degree", "3"]
    )
    assert code == 0 and report["passed"] is True


def test_covariance_command(capsys):
    code, report = run_json(capsys, ["covariance", "--shift", "1/2"])
    assert code == 0
    assert report["outputs"]["residual"] < 1e-8


def test_brownian_command(capsys):
    code, report = run_json(capsys, ["brownian", "--word", "X:0 X:0"])
    assert code == 0
    coeffs = report["outputs"]["coefficients"]
    assert coeffs["0"]["re"] == pytest.approx(1.0, abs=1e-12)
    assert coeffs["1"]["re"] == pytest.approx(1.0, abs=1e-12)
    assert coeffs["1/2"]["re"] == 0.0


def test_model_file_roundtrip(tmp_path, capsys):
    config = {
        "generators": [
            {"name": "q", "mode": "half",
             "atoms": [{"x": "ln2/(2pi)", "w": 2 / 3}]}
        ],
        "tolerance": 1e-9,
    }
    path = tmp_path / "model.json"
    path.write_text(json.dumps(config))
    code, report = run_json(
        capsys, ["moment", "--model", str(path), "--word", "Xq:0 Xq:1"]
    )
    assert code == 0
    lam = math.log(2)
    assert report["outputs"]["value"]["re"] == pytest.approx(
        math.cos(lam), abs=1e-12
    )


def test_unbalanced_model_file_is_config_error(tmp_path):
    config = {
        "generators": [
            {"name": "q", "mode": "full",
             "atoms": [{"x": 0.25, "w": 1.0}, {"x": -0.25, "w": 1.0}]}
        ]
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(config))
    assert run(["moment", "--model", str(path), "--word", "Xq:0"]) == 2


def test_missing_model_file(capsys):
    assert run(["moment", "--model", "/nonexistent.json", "--word", "X:0"]) == 2


def test_reports_deterministic_modulo_wall_time(capsys):
    def snap():
        code, report = run_json(
            capsys, ["moment", "--word", "X:0 X:1/2 X:0 X:1/2", "--seed", "7"]
        )
        assert code == 0
        report.pop("wall_time_s")
        return json.dumps(report, sort_keys=True)

    assert snap() == snap()
