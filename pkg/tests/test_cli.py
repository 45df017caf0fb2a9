import json
import os

import pytest

from loopvertex.cli import (
    COMMANDS,
    SCHEMA_VERSION,
    _parse_n_list,
    build_parser,
    config_from_args,
    main,
    run,
)


def run_cli(argv, tmp_path, monkeypatch):
    monkeypatch.setenv("LOOPVERTEX_OUTDIR", str(tmp_path))
    return main(argv)


def load_json(tmp_path, command):
    with open(os.path.join(str(tmp_path), f"{command}.json")) as f:
        return json.load(f)


def test_parse_n_list():
    assert _parse_n_list("1..4") == (1, 2, 3, 4)
    assert _parse_n_list("2,5,7") == (2, 5, 7)
    assert _parse_n_list("") == ()


def test_parser_covers_all_commands():
    parser = build_parser()
    for name in COMMANDS:
        args = parser.parse_args([name])
        assert args.command == name


def test_help_and_bad_command_exit_codes():
    assert main(["--help"]) == 0
    assert main(["no-such-command"]) == 2


def test_config_errors_exit_2(tmp_path, monkeypatch):
    # pacman sector violation
    code = run_cli(
        ["fc-eval", "--lambda-modulus", "0.1", "--lambda-arg", "3.1"],
        tmp_path, monkeypatch,
    )
    assert code == 2
    assert run_cli(["fc-eval", "--p", "1"], tmp_path, monkeypatch) == 2
    assert run_cli(["fc-eval", "--beta", "3"], tmp_path, monkeypatch) == 2


def test_fc_eval_json_document(tmp_path, monkeypatch):
    code = run_cli(
        ["fc-eval", "--p", "2", "--z-re", "0.1", "--seed", "4"],
        tmp_path, monkeypatch,
    )
    assert code == 0
    doc = load_json(tmp_path, "fc-eval")
    assert doc["schema_version"] == SCHEMA_VERSION
    assert "convention_ledger" in doc
    assert "covariance_beta2" in doc["convention_ledger"]
    assert doc["inputs"]["p"] == 2
    assert doc["inputs"]["seed"] == 4
    assert "results" in doc and "checks" in doc
    assert all(doc["checks"].values())


def test_seed_reproducibility_byte_identical(tmp_path, monkeypatch):
    argv = [
        "z-identity", "--N", "2", "--lambda-modulus", "0.05",
        "--mc-samples", "2000", "--seed", "9",
    ]
    assert run_cli(argv, tmp_path, monkeypatch) == 0
    first = open(os.path.join(str(tmp_path), "z-identity.json"), "rb").read()
    assert run_cli(argv, tmp_path, monkeypatch) == 0
    second = open(os.path.join(str(tmp_path), "z-identity.json"), "rb").read()
    assert first == second


def test_z_identity_quadrature_and_mc(tmp_path, monkeypatch):
    code = run_cli(
        ["z-identity", "--N", "2", "--lambda-modulus", "0.08"],
        tmp_path, monkeypatch,
    )
    assert code == 0
    doc = load_json(tmp_path, "z-identity")
    assert all(doc["checks"].values())
    code = run_cli(
        ["z-identity", "--N", "5", "--lambda-modulus", "0.05",
         "--mc-samples", "20000"],
        tmp_path, monkeypatch,
    )
    assert code == 0


def test_jacobian_check_requires_real_positive_coupling(tmp_path, monkeypatch):
    code = run_cli(
        ["jacobian-check", "--lambda-modulus", "0.1", "--lambda-arg", "0.5"],
        tmp_path, monkeypatch,
    )
    assert code == 2
    code = run_cli(
        ["jacobian-check", "--lambda-modulus", "1.0"], tmp_path, monkeypatch
    )
    assert code == 0


def test_single_vertex_output(tmp_path, monkeypatch):
    code = run_cli(
        ["single-vertex", "--N", "2", "--lambda-modulus", "0.005"],
        tmp_path, monkeypatch,
    )
    assert code == 0
    doc = load_json(tmp_path, "single-vertex")
    amp = doc["results"]["amplitude"]
    assert amp["re"] == pytest.approx(-0.0027815360, abs=1e-7)


def test_output_flag_overrides_env(tmp_path, monkeypatch):
    out = tmp_path / "sub"
    monkeypatch.setenv("LOOPVERTEX_OUTDIR", str(tmp_path))
    code = main(["fc-eval", "--z-re", "0.05", "--output", str(out)])
    assert code == 0
    assert (out / "fc-eval.json").exists()
    assert not (tmp_path / "fc-eval.json").exists()


def test_pacman_scan_csv(tmp_path, monkeypatch):
    code = run_cli(
        ["pacman-scan", "--N-list", "1..3", "--lambda-modulus", "0.05",
         "--lambda-arg", "0.7"],
        tmp_path, monkeypatch,
    )
    assert code == 0
    csv_path = os.path.join(str(tmp_path), "pacman-scan.csv")
    assert os.path.exists(csv_path)
    with open(csv_path) as f:
        header = f.readline().strip().split(",")
    assert any(col.endswith("_re") for col in header)
    assert any(col.endswith("_im") for col in header)


def test_run_config_direct(tmp_path, monkeypatch):
    monkeypatch.setenv("LOOPVERTEX_OUTDIR", str(tmp_path))
    cfg = config_from_args(["free-energy", "--N", "1", "--lambda-modulus", "0.1"])
    assert cfg.command == "free-energy"
    assert cfg.coupling().lam == pytest.approx(0.1)
    assert run(cfg) == 0
    assert (tmp_path / "free-energy.json").exists()
