import json

import pytest

from kfbd.handlers import commands
from kfbd.main import EXIT_INPUT, EXIT_OK, EXIT_PROPERTY_FAILED, main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_square_divergence_equals_mmd(capsys, sample_files):
    code, out, _ = run(capsys, "divergence", "--p", str(sample_files["p"]), "--q", str(sample_files["q"]),
                       "--generator", "square")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["value"] == payload["mmd_sq"]
    assert payload["profile"] == "square"


def test_divergence_reports_sandwich(capsys, sample_files):
    code, out, _ = run(capsys, "divergence", "--p", str(sample_files["p"]), "--q", str(sample_files["json"]),
                       "--generator", "exp_centered", "--kernel", "laplace:0.5")
    payload = json.loads(out)
    assert code == EXIT_OK
    assert payload["kernel"] == "laplace"
    assert payload["lower"] - 1e-10 <= payload["value"] <= payload["upper"] + 1e-10


def test_operator_divergence(capsys, sample_files):
    code, out, _ = run(capsys, "divergence", "--p", str(sample_files["p"]), "--q", str(sample_files["q"]),
                       "--operator", "entropy")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["operator"] == "kernel_entropy"
    assert payload["value"] >= 0


def test_missing_sample_file(capsys, sample_files, tmp_path):
    missing = tmp_path / "absent.csv"
    code, out, err = run(capsys, "divergence", "--p", str(missing), "--q", str(sample_files["q"]))
    assert code == EXIT_INPUT
    assert str(missing) in err
    assert out == ""


def test_bad_kernel_spec(capsys, sample_files):
    code, _, err = run(capsys, "divergence", "--p", str(sample_files["p"]), "--q", str(sample_files["q"]),
                       "--kernel", "cosine:1")
    assert code == EXIT_INPUT
    assert "cosine" in err


def test_table2_csv(capsys):
    code, out, _ = run(capsys, "table2")
    lines = out.strip().splitlines()
    assert code == EXIT_OK
    assert lines[0].startswith("profile,R,lambda_perp,lambda_par")
    assert len(lines) == 7


def test_table2_json(capsys):
    code, out, _ = run(capsys, "table2", "--json", "--R", "2")
    payload = json.loads(out)
    assert code == EXIT_OK
    assert payload["R"] == 2.0
    assert all(row["agree"] for row in payload["rows"])


def test_verify_is_byte_identical(capsys, tmp_path):
    outputs = []
    for name in ("first.json", "second.json"):
        target = tmp_path / name
        code, _, _ = run(capsys, "verify", "--suite", "sandwich", "--trials", "10", "--seed", "3", "--out", str(target))
        assert code == EXIT_OK
        outputs.append(target.read_bytes())
    assert outputs[0] == outputs[1]
    assert json.loads(outputs[0])["passed"] is True


def test_verify_findim_accepts_comma_dims(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "findim", "--dims", "2,3", "--trials", "5", "--seed", "1")
    payload = json.loads(out)
    assert code == EXIT_OK
    assert any("m=3" in p["name"] for p in payload["properties"])


def test_fit(capsys, sample_files):
    code, out, _ = run(capsys, "fit", "--data", str(sample_files["p"]), "--model-sample-size", "100",
                       "--theta0", "0.5")
    payload = json.loads(out)
    assert code == EXIT_OK
    assert abs(payload["theta_hat"][0] - 0.5) < 1.0
    assert payload["sane"] is True


def test_audit_bound_needs_audit_section(capsys):
    code, _, err = run(capsys, "audit-bound")
    assert code == EXIT_INPUT
    assert "audit" in err


def test_audit_bound_rejects_vacuous_profile(capsys, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "generator": {"profile": "power", "p": 3},
        "audit": {"model_sample_size": 100, "reference_sample_size": 100, "n_grid": [10]},
    }), encoding="utf-8")
    code, _, err = run(capsys, "audit-bound", "--config", str(config))
    assert code == EXIT_INPUT
    assert "vacuous" in err


def test_sandwich_scan_rows(capsys):
    code, out, _ = run(capsys, "sandwich-scan", "--generator", "power:3", "--trials", "4")
    lines = out.strip().splitlines()
    assert code == EXIT_OK
    assert lines[0] == "profile,trial,value,lower,upper,ok"
    assert len(lines) == 5


def test_config_file_with_unknown_key(capsys, tmp_path, sample_files):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"seeds": 1}), encoding="utf-8")
    code, _, _ = run(capsys, "divergence", "--config", str(config),
                     "--p", str(sample_files["p"]), "--q", str(sample_files["q"]))
    assert code == EXIT_INPUT


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as excinfo:
        main(["transmogrify"])
    assert excinfo.value.code == 2


def test_unexpected_error_maps_to_exit_one(capsys, monkeypatch):
    def broken(args):
        raise RuntimeError("tile buffer exhausted")

    monkeypatch.setattr(commands, "cmd_table2", broken)
    code, out, err = run(capsys, "table2")
    assert code == EXIT_PROPERTY_FAILED
    assert "tile buffer exhausted" in err
    assert out == ""
