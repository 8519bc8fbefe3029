import json
import math

import numpy as np
import pytest

from corrwit import config
from corrwit.cli import main
from corrwit.data_structures import DensityMatrix, StateClass, TwoFermionSchmidt
from corrwit.serialization import dumps, matrix_to_pairs
from corrwit.witness import schmidt_vector

SLATER_FLAGS = ["--class", "slater", "--d", "4", "--L", "2"]
HALF = repr(1 / math.sqrt(2))


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def _state_file(tmp_path, rho: np.ndarray, cls=None, name="rho.json"):
    path = tmp_path / name
    path.write_text(dumps({
        'class': cls.to_dict() if cls else None,
        'dim': rho.shape[0],
        'rho': matrix_to_pairs(rho),
    }))
    return str(path)


def test_params_slater(capsys):
    code, out = run(capsys, "params", *SLATER_FLAGS)
    assert code == 0
    report = json.loads(out)
    assert report['N'] == 6
    assert report['X_analytic'] == pytest.approx(1 / 21)
    assert report['X_numeric'] == pytest.approx(1 / 21, rel=1e-9)
    assert report['P_cr'] == pytest.approx(10 / 11)
    assert report['trace_A'] == pytest.approx(1.0)
    assert report['dim_sym2'] == 21


def test_params_bosonic_reports_printed_row(capsys):
    code, out = run(capsys, "params", "--class", "bosonic", "--d", "2", "--L", "2")
    assert code == 0
    report = json.loads(out)
    assert report['X_analytic'] == pytest.approx(1 / 6)
    assert report['printed_one_minus_X'] == pytest.approx(1 / 6)
    assert report['variant'] == "symmetrized"


def test_params_gaussian_trivial(capsys):
    code, out = run(capsys, "params", "--class", "gaussian", "--d", "3")
    assert code == 0
    assert "trivial" in json.loads(out)['note']


def test_params_over_memory_cap(capsys):
    code, out = run(capsys, "params", "--class", "gaussian", "--d", "4", "--max-bytes", "1024")
    assert code == 0
    report = json.loads(out)
    assert 'X_numeric' not in report
    assert "skipped" in report['warning']


def test_parse_errors(capsys):
    assert main(["params", "--class", "slater"]) == 2
    assert main(["params", *SLATER_FLAGS, "--format", "csv"]) == 2
    assert main(["params", "--class", "slater", "--d", "2", "--L", "3"]) == 3
    with pytest.raises(SystemExit) as exc:
        main(["params"])
    assert exc.value.code == 2


def test_witness_maximally_mixed(capsys, tmp_path):
    path = _state_file(tmp_path, np.eye(6) / 6, StateClass.slater(4, 2))
    code, out = run(capsys, "witness", "--state", path)
    assert code == 0
    report = json.loads(out)
    assert report['f'] == pytest.approx(-7 / 18, abs=1e-12)
    assert report['verdict'] == "undetected"


def test_witness_verdict_is_not_exit_code(capsys, tmp_path):
    psi = schmidt_vector(TwoFermionSchmidt(4, (1 / math.sqrt(2), 1 / math.sqrt(2))))
    path = _state_file(tmp_path, np.outer(psi, psi.conj()))
    code, out = run(capsys, "witness", "--state", path, *SLATER_FLAGS)
    assert code == 0
    assert json.loads(out)['verdict'] == "correlated"


def test_witness_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert main(["witness", "--state", str(bad), *SLATER_FLAGS]) == 2
    assert main(["witness", "--state", str(tmp_path / "missing.json"), *SLATER_FLAGS]) == 2
    not_psd = _state_file(tmp_path, np.diag([1.5, -0.5]), name="neg.json")
    assert main(["witness", "--state", not_psd, "--class", "separable", "--d", "2", "--L", "1"]) == 3
    small = _state_file(tmp_path, np.eye(4) / 4, name="small.json")
    assert main(["witness", "--state", small, *SLATER_FLAGS]) == 3
    assert main(["witness", "--state", small]) == 2


def test_fraction_csv_is_deterministic(capsys):
    argv = ["fraction", *SLATER_FLAGS, "--pure", "-n", "60", "--seed", "7", "--format", "csv"]
    code, first = run(capsys, *argv)
    assert code == 0
    _, threaded = run(capsys, *argv, "--threads", "3")
    assert first == threaded
    lines = first.splitlines()
    assert lines[0] == f"# {config.CSV_SCHEMA}"
    assert lines[1] == ",".join(config.CSV_COLUMNS)
    assert lines[2].startswith("slater,4,2,1,")


def test_fraction_sweep_json(capsys):
    code, out = run(capsys, "fraction", *SLATER_FLAGS, "--depolarized-sweep", "0,0.5", "-n", "20")
    assert code == 0
    reports = json.loads(out)
    assert len(reports) == 2
    assert reports[0]['purity'] > reports[1]['purity']


def test_fraction_rejects_bad_spectrum(capsys):
    assert main(["fraction", *SLATER_FLAGS, "--spectrum", "0.5,0.5", "-n", "10"]) == 3
    assert main(["fraction", *SLATER_FLAGS, "--spectrum", "0.5,0.6,0,0,0,0", "-n", "10"]) == 3


def test_slater_example_csv(capsys):
    code, out = run(capsys, "slater-example", "--lambdas", f"{HALF},{HALF}",
                    "--p-grid", "0,1", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# ")
    assert lines[1] == "p,lhs,lhs_minus_3,f,f_exact,agree,decisive"
    assert len(lines) == 4
    cells = lines[2].split(",")
    assert float(cells[0]) == 0.0
    assert float(cells[1]) == pytest.approx(4.0)
    assert cells[5] == "True"


def test_slater_example_bad_lambdas(capsys):
    assert main(["slater-example", "--lambdas", "0.6,0.6"]) == 3


def test_out_file(capsys, tmp_path):
    target = tmp_path / "params.json"
    code, out = run(capsys, "params", *SLATER_FLAGS, "--out", str(target))
    assert code == 0
    assert out == ""
    assert json.loads(target.read_text())['N'] == 6


def test_selftest_quick(capsys):
    code, out = run(capsys, "selftest", "--level", "quick")
    report = json.loads(out)
    assert code == 0, report['failures']
    assert report['passed']
    assert report['n_checks'] > 10


def test_selftest_detects_corrupted_projector(capsys):
    code, out = run(capsys, "selftest", "--inject-fault", "corrupt-A")
    assert code == 5
    report = json.loads(out)
    assert any(name.startswith("projector axioms") for name in report['failures'])
