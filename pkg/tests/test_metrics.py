import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shapeinv.metrics import (ChiReport, MetricError, chi_fit, chi_input, chi_solution,
                              deviation_profile, solution_grid)
from shapeinv.model_problem import ModelProblem, exact_f

P = ModelProblem()
f_true = lambda E: exact_f(P, E)  # noqa: E731


def test_solution_grid_skips_threshold():
    E = solution_grid()
    assert len(E) == 200 and E[0] == pytest.approx(42 / 200) and E[-1] == 42.0


def test_chi_solution_examples():
    assert chi_solution(f_true, f_true) == 0.0
    assert chi_solution(f_true, lambda E: 1.01 * f_true(E)) == pytest.approx(0.01, rel=1e-12)
    ft = f_true(solution_grid())
    assert chi_solution(ft, 1.01 * ft) == pytest.approx(0.01, rel=1e-12)


def test_zero_denominator_is_named():
    with pytest.raises(MetricError, match="sample 0"):
        chi_solution(f_true, f_true, e_range=(-42 / 200, 42.0 - 42 / 200))
    with pytest.raises(MetricError, match="sample 2"):
        chi_fit(np.array([1.0, 2.0, 0.0]), np.ones(3))


def test_chi_input_and_fit_examples():
    phi = np.linspace(1.0, 2.0, 11)
    assert chi_input(phi, phi) == 0.0 and chi_fit(phi, phi) == 0.0
    assert chi_fit(phi, 1.003 * phi) == pytest.approx(0.003, rel=1e-12)
    # both divide by Phi_appr
    assert chi_input(np.full(4, 2.0), np.full(4, 1.0)) == pytest.approx(1.0)


@given(c=st.floats(1e-6, 1e6), eps=st.floats(-0.5, 0.5))
@settings(max_examples=50, deadline=None)
def test_scale_invariance(c, eps):
    phi = np.linspace(0.5, 3.0, 13)
    model = phi * (1 + eps * np.sin(phi))
    assert chi_fit(c * phi, c * model) == pytest.approx(chi_fit(phi, model), rel=1e-10, abs=1e-15)
    assert chi_input(c * model, c * phi) == pytest.approx(chi_input(model, phi), rel=1e-10, abs=1e-15)
    assert chi_solution(lambda E: c * f_true(E), lambda E: c * (1 + eps) * f_true(E)) == \
        pytest.approx(abs(eps), rel=1e-9, abs=1e-15)


def test_deviation_profile_zero_and_locality():
    prof = deviation_profile(f_true, f_true, 1.0)
    assert len(prof) == 42 and all(v == 0.0 for _, v in prof)
    A, c, w = 1e-3, 17.5, 0.05

    def bumped(E):
        return f_true(E) + A * np.exp(-0.5 * ((E - c) / w) ** 2) / (w * math.sqrt(2 * math.pi))

    prof = deviation_profile(f_true, bumped, 1.0)
    vals = np.array([v for _, v in prof])
    assert prof[17][0] == (17.0, 18.0)
    assert vals[17] == pytest.approx(A, rel=1e-7)
    assert np.max(np.delete(vals, 17)) < 1e-12
    with pytest.raises(ValueError):
        deviation_profile(f_true, f_true, 0.0)


def test_deviation_profile_uneven_last_window():
    prof = deviation_profile(f_true, lambda E: 0.0 * E, 5.0)
    assert prof[-1][0] == (40.0, 42.0)
    total = sum(v for _, v in prof)
    from scipy import integrate
    ref = integrate.quad(f_true, 0, 42, epsabs=1e-14, points=[P.E0 / 7])[0]
    assert total == pytest.approx(ref, rel=1e-10)


def test_report_serialisation(tmp_path):
    r = ChiReport(3e-2, 2.9e-2, 1.6e-2, 200, 100)
    r.to_json(tmp_path / "r.json")
    d = json.loads((tmp_path / "r.json").read_text())
    assert d["chi_solution"] == 1.6e-2 and d["e_range"] == [0.0, 42.0]
    with pytest.raises(ValueError):
        ChiReport(None, -1.0, None, 200, 100)
    with pytest.raises(ValueError):
        ChiReport(None, math.nan, None, 200, 100)
