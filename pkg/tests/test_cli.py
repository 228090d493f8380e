import json
import math

import numpy as np
import pytest

import qcclab.channels as ch
import qcclab.operators as op
from qcclab import cli


@pytest.fixture
def replacer_file(tmp_path):
    path = tmp_path / "replacer.json"
    ch.save_channel(path, ch.replacer(np.eye(2) / 2, 2))
    return str(path)


@pytest.fixture
def id2_file(tmp_path):
    path = tmp_path / "id2.json"
    ch.save_channel(path, ch.identity_channel(2))
    return str(path)


@pytest.fixture
def measure_file(tmp_path):
    path = tmp_path / "mz.json"
    ch.save_channel(path, ch.measurement_channel(ch.computational_povm(2)))
    return str(path)


def run(args, capsys):
    code = cli.main(args)
    return code, capsys.readouterr().out


def test_solve_ns_replacer(replacer_file, capsys):
    code, out = run(["solve", "ns", "--channel", replacer_file, "--M", "4"],
                    capsys)
    assert code == 0
    rec = json.loads(out)
    assert abs(rec["value"] - 0.25) < 1e-6


def test_solve_mc_identity_single_message(id2_file, capsys):
    code, out = run(["solve", "mc", "--channel", id2_file, "--M", "1"], capsys)
    assert code == 0
    assert abs(json.loads(out)["value"] - 1.0) < 1e-6


def test_solve_dh_orthogonal_pair(tmp_path, capsys):
    rho = tmp_path / "rho.json"
    sigma = tmp_path / "sigma.json"
    op.save_matrix(rho, np.diag([1.0, 0.0]))
    op.save_matrix(sigma, np.eye(2) / 2)
    code, out = run(["solve", "dh", "--rho", str(rho), "--sigma", str(sigma),
                     "--eps", "0.0"], capsys)
    assert code == 0
    assert abs(json.loads(out)["value"] - math.log(2)) < 1e-6


def test_solve_missing_channel_is_input_error(capsys):
    code, _ = run(["solve", "ns", "--channel", "/nonexistent.json"], capsys)
    assert code == 2


def test_bad_subcommand_is_input_error(capsys):
    assert cli.main(["frobnicate"]) == 2


def test_solve_writes_json_record(replacer_file, tmp_path, capsys):
    out_path = tmp_path / "rec.json"
    code, _ = run(["solve", "ns", "--channel", replacer_file, "--M", "2",
                   "--out", str(out_path)], capsys)
    assert code == 0
    rec = json.loads(out_path.read_text())
    assert rec["M"] == 2


def test_reports_byte_identical_for_same_seed(measure_file, tmp_path, capsys):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    for path in (a, b):
        code, _ = run(["round", "mult", "--channel", measure_file, "--M", "4",
                       "--samples", "5", "--seed", "7", "--out", str(path)],
                      capsys)
        assert code == 0
    assert a.read_bytes() == b.read_bytes()


def test_round_sequential_csv(measure_file, tmp_path, capsys):
    csv_path = tmp_path / "rep.csv"
    code, out = run(["round", "qc", "--channel", measure_file, "--M", "4",
                     "--M-prime", "2", "--csv", str(csv_path)], capsys)
    assert code == 0
    rec = json.loads(out)
    assert rec["protocol"] == "sequential"
    assert len(csv_path.read_text().strip().splitlines()) == 2


def test_round_hn(measure_file, capsys):
    code, out = run(["round", "hn", "--channel", measure_file, "--M", "8",
                     "--M-prime", "2", "--c", "1.0"], capsys)
    assert code == 0
    rec = json.loads(out)
    assert rec["average_error"] <= rec["bound"] + 1e-8


def test_verify_small_corpus(capsys):
    code, out = run(["verify", "--random-channels", "0", "--M-list", "2"],
                    capsys)
    assert code == 0
    rec = json.loads(out)
    assert rec["summary"]["failed"] == 0
    assert rec["summary"]["total"] > 0


def test_exponent_replacer(replacer_file, capsys):
    code, out = run(["exponent", "--channel", replacer_file,
                     "--rates", "0.0,0.5", "--alphas", "0.5,1.0,2.0"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    header = lines[0].split(",")
    first = dict(zip(header, lines[1].split(",")))
    assert abs(float(first["exponent"])) < 1e-9


def test_chernoff_command(measure_file, capsys):
    code, out = run(["chernoff", "--channel", measure_file, "--M", "4",
                     "--delta", "1.0", "--trials", "200", "--seed", "3"],
                    capsys)
    assert code == 0
    assert json.loads(out)["pass"] is True


def test_env_seed_and_tol(monkeypatch, replacer_file, capsys):
    monkeypatch.setenv("QCC_SEED", "42")
    monkeypatch.setenv("QCC_TOL", "1e-6")
    code, out = run(["solve", "ns", "--channel", replacer_file, "--M", "2"],
                    capsys)
    assert code == 0
    assert json.loads(out)["tolerance"] == 1e-6


def test_negative_rate_is_input_error(replacer_file, capsys):
    code, _ = run(["exponent", "--channel", replacer_file, "--rates", "-1.0"],
                  capsys)
    assert code == 2
