import pytest

from annealed_ising import verify


@pytest.mark.parametrize("check", verify.SUITES["small"], ids=lambda f: getattr(f, "__name__", "check"))
def test_small_suite_checks_pass(check):
    res = check()
    assert res.passed, res.detail


def test_run_suite_unknown():
    with pytest.raises(KeyError):
        verify.run_suite("huge")


def test_composition_oracle_trivial_cases():
    assert verify.composition_gf(2, 0, 0, 0.3, 0.5) == pytest.approx(1 + 0.3 * 0.25)
    assert verify.composition_gf(6, 4, 4, 0.0, 0.5) == 1.0
