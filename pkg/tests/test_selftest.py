import numpy as np
import pytest

from corrwit import config, selftest
from corrwit.data_structures import StateClass
from corrwit.errors import ParameterError
from corrwit.selftest import run_selftest


def test_quick_level_passes():
    report = run_selftest("quick", seed=3)
    assert report.passed, report.failures
    names = [c.name for c in report.checks]
    assert "purity identity" in names
    assert any(n.startswith("majorana algebra") for n in names)


def test_slater_disagreements_are_reported_not_failed():
    report = run_selftest("quick")
    check = next(c for c in report.checks if c.name.startswith("slater example"))
    assert check.passed
    assert check.detail.startswith("closed form and witness disagree at")


def test_fault_injection():
    report = run_selftest("quick", inject_fault="corrupt-A")
    assert not report.passed
    assert all(name.startswith("projector axioms") for name in report.failures)
    with pytest.raises(ParameterError):
        run_selftest("quick", inject_fault="flip-sign")


def test_unknown_level():
    with pytest.raises(ParameterError):
        run_selftest("exhaustive")


@pytest.mark.slow
def test_full_level_passes():
    report = run_selftest("full", seed=1)
    assert report.passed, report.failures


def test_linear_algebra_failure_becomes_failed_check(monkeypatch):
    def broken(d):
        raise np.linalg.LinAlgError("eigensolver did not converge")

    monkeypatch.setattr(selftest, "majorana_ops", broken)
    report = run_selftest("quick")
    assert not report.passed
    assert all(name.startswith("majorana algebra") for name in report.failures)
    failed = next(c for c in report.checks if not c.passed)
    assert failed.detail.startswith("LinAlgError")
    assert report.to_dict()['failures'] == report.failures


def test_matrix_free_check_uses_explicit_reference():
    runner = selftest._Runner("full", 1, None, config.MAX_DENSE_BYTES)
    result = runner.matrix_free(StateClass.slater(4, 2), 5, 0)
    assert result.passed
    assert "explicit dense A" in result.detail
