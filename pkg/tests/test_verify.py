import numpy as np
import pytest

from chancap.channels import KrausChannel, depolarizing, dephasing, erasure, identity, reset, weyl_group
from chancap.states import BELL_VECTORS, BipartiteState, random_state
from chancap.verify import (
    SLACK_TOL,
    HypothesisError,
    PropertyReport,
    check_dpi,
    check_lemma1,
    check_subadditivity,
    check_superadditivity_I,
    check_superadditivity_II,
    run_all,
)


def test_report_fields():
    r = check_subadditivity(5, 3)
    assert isinstance(r, PropertyReport)
    assert (r.name, r.instances, r.seed) == ("subadditivity", 5, 3)
    assert set(r.to_dict()) == {"name", "instances", "min_slack", "failures", "seed"}


def test_tolerance():
    assert SLACK_TOL == 1e-9


# -- data processing ------------------------------------------------------------------


def test_dpi_identity_channels():
    r = check_dpi(20, 1, local_channels=(identity(2), identity(2)))
    assert r.min_slack == pytest.approx(0.0, abs=1e-12) and r.failures == 0


def test_dpi_trace_out_channels():
    # a reset channel discards its input, so the slack is the original correlation
    r = check_dpi(20, 1, local_channels=(reset(2), reset(2)))
    assert r.failures == 0 and r.min_slack >= 0.0


def test_dpi_random():
    r = check_dpi(200, 4)
    assert r.failures == 0 and r.min_slack >= -1e-9


# -- superadditivity ---------------------------------------------------------------------


def test_superadditivity_I_products():
    r = check_superadditivity_I(30, 1, product=True)
    assert r.failures == 0 and abs(r.min_slack) <= 1e-9


def test_superadditivity_I_identity():
    r = check_superadditivity_I(20, 2, channels=(identity(4), identity(4)))
    assert r.min_slack == pytest.approx(0.0, abs=1e-12)


def test_superadditivity_I_random():
    r = check_superadditivity_I(200, 5)
    assert r.failures == 0 and r.min_slack >= -1e-9


def test_superadditivity_II_identity():
    r = check_superadditivity_II(20, 3, channels=(identity(2), identity(2)))
    assert r.min_slack == pytest.approx(0.0, abs=1e-12)


def test_superadditivity_II_random():
    r = check_superadditivity_II(200, 6)
    assert r.failures == 0 and r.min_slack >= -1e-9


# -- entropy bound for covariant channels -----------------------------------------------


def test_lemma1_maximally_mixed():
    r = check_lemma1(depolarizing(2, 0.3), weyl_group(2), 1, 0, states=[np.eye(2) / 2])
    assert r.min_slack == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("ch", [depolarizing(2, 0.3), erasure(2, 0.25)], ids=["depolarizing", "erasure"])
def test_lemma1_500(ch):
    r = check_lemma1(ch, weyl_group(2), 500, 7)
    assert r.failures == 0 and r.min_slack >= -1e-9


def test_lemma1_refuses_non_covariant():
    g = 0.3
    amp = KrausChannel((np.diag([1.0, np.sqrt(1 - g)]), np.array([[0, np.sqrt(g)], [0, 0]])))
    with pytest.raises(HypothesisError):
        check_lemma1(amp, weyl_group(2), 10, 1)


# -- subadditivity ------------------------------------------------------------------------


def test_subadditivity_product():
    states = [BipartiteState(np.kron(random_state(2, 2, i).mat, random_state(2, 2, 100 + i).mat), 2, 2) for i in range(5)]
    assert check_subadditivity(5, 0, states=states).min_slack == pytest.approx(0.0, abs=1e-12)


def test_subadditivity_bell():
    bell = BipartiteState(np.outer(BELL_VECTORS[0], BELL_VECTORS[0].conj()), 2, 2)
    assert check_subadditivity(1, 0, states=[bell]).min_slack == pytest.approx(2.0, abs=1e-12)


def test_subadditivity_random():
    r = check_subadditivity(500, 8)
    assert r.failures == 0 and r.min_slack >= -1e-9


# -- bookkeeping ----------------------------------------------------------------------------


def test_reports_reproducible():
    assert check_dpi(30, 9) == check_dpi(30, 9)
    assert check_superadditivity_II(30, 9) == check_superadditivity_II(30, 9, workers=3)


def test_rejects_empty_runs():
    with pytest.raises(ValueError):
        check_dpi(0, 1)


def test_run_all_shape():
    reports = run_all(10, 1, dephasing(0.5), weyl_group(2))
    assert [r.name for r in reports] == ["dpi", "superadditivity_I", "superadditivity_II", "lemma1", "subadditivity"]
    assert all(r.passed for r in reports)


def test_failures_counted():
    # slack below -tol counts; a report built by hand exercises the counter
    from chancap.verify import _report

    r = _report("x", [0.0, -2e-9, -5e-10, 1.0], 0)
    assert r.failures == 1 and r.min_slack == -2e-9
