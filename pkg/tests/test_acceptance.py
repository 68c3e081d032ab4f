"""Acceptance gate: every release criterion at its stated tolerance.

Each test prints one machine-readable pass/fail line.  The session object
shares expensive artifacts (sweeps, suspensions, large lattice builds)
across criteria, so this file is also the cheapest way to run the whole
gate: ``pytest tests/test_acceptance.py -v -s``.
"""

import pytest

from speclocaliser.verify import VerifySession


@pytest.fixture(scope="module")
def session():
    return VerifySession(seed=0, quick=False)


def _run(session, index):
    result = session.criterion(index)
    print(result.line)
    assert result.passed, result.detail
    return result


def test_criterion_01_strict_circle_pairing(session):
    _run(session, 1)


def test_criterion_02_winding_grid(session):
    _run(session, 2)


def test_criterion_03_graded_index_exactness(session):
    _run(session, 3)


def test_criterion_04_lattice_band_grid(session):
    _run(session, 4)


def test_criterion_05_certificate_soundness(session):
    _run(session, 5)


def test_criterion_06_suspension_flow_consistency(session):
    _run(session, 6)


def test_criterion_07_parameter_and_size_stability(session):
    _run(session, 7)


def test_criterion_08_cutoff_independence(session):
    _run(session, 8)


def test_criterion_09_projection_unitary_roundtrip(session):
    _run(session, 9)


def test_criterion_10_suspension_vs_projection_index(session):
    _run(session, 10)
