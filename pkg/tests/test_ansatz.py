import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from shapeinv.ansatz import (ConstraintError, ShapeAnsatz, constrained, count_sign_changes,
                             eliminate_root, eval_f, eval_f_closed, eval_fprime, gamma, moment,
                             normalize_C)
from shapeinv.kernels import DomainError
from shapeinv.model_problem import ModelProblem, exact_f, exact_fprime

from oracles import brute_moment, l1

P = ModelProblem()
E0 = P.E0


def test_exact_parameters_reproduce_derivative(exact_ansatz):
    E = np.geomspace(1e-3, 1e4, 60)
    assert np.allclose(eval_fprime(exact_ansatz, E), exact_fprime(P, E), rtol=1e-12, atol=0)
    assert exact_ansatz.C == pytest.approx(-2.280e-3, rel=1e-3)


def test_root_factor_vanishes():
    a = ShapeAnsatz(1.0, (5.0,), 10.0, 4.0)
    assert eval_fprime(a, 5.0) == 0.0


def test_gamma_vanishes_at_threshold():
    a = ShapeAnsatz(1.0, (5.0,), 10.0, 4.0, gamma_coeffs=(0.7,), E_thr=1.0)
    assert gamma(a, 1.0) == 0.0
    assert math.exp(gamma(a, 1.0 + 1e-12)) == pytest.approx(1.0, abs=1e-12)
    # tail limit is the coefficient sum
    assert gamma(a, 1e12) == pytest.approx(0.7, rel=1e-9)


def test_fprime_domain():
    a = ShapeAnsatz(1.0, (5.0,), 10.0, 4.0, E_thr=2.0)
    with pytest.raises(DomainError):
        eval_fprime(a, 2.0)


def test_constructor_invariants():
    with pytest.raises(ValueError):
        ShapeAnsatz(1.0, (), 10.0, 4.0)
    with pytest.raises(ValueError):
        ShapeAnsatz(1.0, (1.0,), -1.0, 4.0)
    with pytest.raises(ValueError):
        ShapeAnsatz(1.0, (1.0,), 10.0, 1.5)  # beta must exceed N + nu
    with pytest.raises(ValueError):
        ShapeAnsatz(1.0, (math.nan,), 10.0, 4.0)


def test_roundtrip_dict():
    a = ShapeAnsatz(-1.2, (3.0, 7.5), 11.0, 6.5, (0.3, -0.1), 0.5, 0.25)
    assert ShapeAnsatz.from_dict(a.to_dict()) == a
    d = a.to_dict() | {"N": 3}
    with pytest.raises(ValueError):
        ShapeAnsatz.from_dict(d)


def test_eval_f_examples(exact_ansatz):
    assert eval_f(exact_ansatz, 0.0) == 0.0
    assert eval_f(exact_ansatz, E0 / 7) == pytest.approx(1.361e-2, rel=1e-3)
    assert eval_f(exact_ansatz, E0 / 7) == pytest.approx(exact_f(P, E0 / 7), rel=1e-11)
    assert abs(eval_f(exact_ansatz, math.inf)) < 1e-9
    E = np.array([40.0, 0.5, 10.0, 3.0])
    assert np.allclose(eval_f(exact_ansatz, E), exact_f(P, E), rtol=1e-10)


def test_closed_form_f_matches_quadrature():
    a = constrained(13.0, 6.3, N=2, other_roots=(20.0,), S=0.4)
    E = np.linspace(0.0, 80.0, 33)
    assert np.allclose(eval_f_closed(a, E), eval_f(a, E), rtol=1e-9, atol=1e-14)


def test_eliminate_root_model_value():
    a = eliminate_root(ShapeAnsatz(1.0, (1.0,), E0, 5.0))
    assert a.roots[0] == pytest.approx(E0 / 7, rel=1e-13)
    assert a.roots[0] == pytest.approx(2.96018, abs=1e-5)
    b = eliminate_root(ShapeAnsatz(1.0, (1.0,), E0, 4.0))
    assert b.roots[0] == pytest.approx(E0 / 5, rel=1e-13)


@pytest.mark.parametrize("beta", [3.0, 4.0, 5.0, 8.0, 12.0])
def test_eliminate_root_beta_identity(beta):
    Ebar = 17.0
    closed = Ebar * special.beta(1.5, beta - 1.5) / special.beta(0.5, beta - 0.5)
    assert closed == pytest.approx(Ebar / (2 * beta - 3), rel=1e-14)
    a = eliminate_root(ShapeAnsatz(1.0, (1.0,), Ebar, beta))
    assert a.roots[0] == pytest.approx(closed, rel=1e-9)
    # brute-force oracle: ratio of numerically integrated moments
    m0 = integrate.quad(lambda E: E**-0.5 * (1 + E / Ebar) ** -beta, 0, np.inf, epsrel=1e-13)[0]
    m1 = integrate.quad(lambda E: E**0.5 * (1 + E / Ebar) ** -beta, 0, np.inf, epsrel=1e-13)[0]
    assert a.roots[0] == pytest.approx(m1 / m0, rel=1e-9)


def test_eliminate_root_is_idempotent():
    a = eliminate_root(ShapeAnsatz(1.0, (2.0, 30.0), 9.0, 7.0, (0.2,)), 0)
    b = eliminate_root(a, 0)
    assert b.roots[0] == pytest.approx(a.roots[0], rel=1e-10)


ansatz_params = dict(
    Ebar=st.floats(1.0, 80.0),
    extra=st.floats(1.6, 9.0),
    nu=st.sampled_from([0.5, 1.0, 1.5, 0.8]),
    roots=st.lists(st.floats(-5.0, 60.0), min_size=0, max_size=2),
    gam=st.lists(st.floats(-1.5, 1.5), min_size=0, max_size=2),
    E_thr=st.sampled_from([0.0, 2.5]),
)


@given(**ansatz_params)
@settings(max_examples=40, deadline=None)
def test_normalisation_after_elimination(Ebar, extra, nu, roots, gam, E_thr):
    N = len(roots) + 1
    a = ShapeAnsatz(1.0, (E_thr + 1.0, *roots), Ebar, N + nu + extra, tuple(gam), nu, E_thr)
    a = eliminate_root(a)
    m0 = brute_moment(a, 0)
    assert abs(m0) < 1e-8 * l1(a)
    assert abs(moment(a, 0)) < 1e-8 * l1(a)


@given(**ansatz_params, S=st.floats(0.05, 5.0))
@settings(max_examples=40, deadline=None)
def test_sum_rule_after_normalisation(Ebar, extra, nu, roots, gam, E_thr, S):
    N = len(roots) + 1
    a = constrained(Ebar, N + nu + extra, N=N, nu=nu, E_thr=E_thr, other_roots=tuple(roots),
                    gamma_coeffs=tuple(gam), S=S)
    assert abs(-brute_moment(a, 1) - S) < 1e-8 * S


def test_normalize_C_examples():
    shape = ShapeAnsatz(1.0, (E0 / 7,), E0, 5.0)
    a = normalize_C(shape, 0.25)
    assert a.C == pytest.approx(-14 / (math.pi * E0**2.5), rel=1e-12)
    assert -brute_moment(a, 1) == pytest.approx(0.25, rel=1e-10)
    assert normalize_C(shape, 0.0).C == 0.0
    assert normalize_C(shape, 0.5).C == pytest.approx(2 * a.C, rel=1e-15)
    with pytest.raises(ConstraintError):
        normalize_C(ShapeAnsatz(1.0, (3.0,), 10.0, 2.2), 0.25)


def test_moment_divergence_is_rejected():
    with pytest.raises(ConstraintError):
        moment(ShapeAnsatz(1.0, (3.0,), 10.0, 2.2), 1)


def test_moments_match_oracle_with_gamma():
    a = ShapeAnsatz(0.3, (4.0, 25.0), 12.0, 7.5, (0.4, -0.9, 0.2), 0.5, 1.0)
    for p in (0, 1):
        assert moment(a, p) == pytest.approx(brute_moment(a, p), rel=1e-10)


def test_sign_change_counts():
    assert count_sign_changes(ShapeAnsatz(1.0, (3.0,), 10.0, 4.0)) == 1
    assert count_sign_changes(ShapeAnsatz(1.0, (-1.0, 3.0), 10.0, 5.0), (0.0, math.inf)) == 1
    a = eliminate_root(ShapeAnsatz(1.0, (1.0,), E0, 5.0))
    assert count_sign_changes(a) == 1


@pytest.mark.parametrize("a", [
    ShapeAnsatz(-1.0, (E0 / 7,), E0, 5.0),
    ShapeAnsatz(0.4, (3.0, 18.0), 8.0, 9.0, (0.5,)),
])
def test_f_decays_and_tail_exponent(a):
    a = eliminate_root(a)
    E = np.linspace(0.01, 60, 400)
    fmax = np.max(np.abs(eval_f(a, E)))
    assert abs(eval_f(a, 100 * a.Ebar)) < 1e-6 * fmax
    k = a.beta - a.N - a.nu + 1
    limit = a.C * a.Ebar**a.beta * math.exp(sum(a.gamma_coeffs))
    r4, r5 = (eval_fprime(a, x * a.Ebar) * (x * a.Ebar) ** k for x in (1e4, 1e5))
    # leading correction is O(beta Ebar / E), so the window starts at 1e4 Ebar
    assert r4 / r5 == pytest.approx(1.0, abs=2e-3)
    assert r5 / limit == pytest.approx(1.0, abs=1e-3)
