import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from shapeinv.kernels import (DomainError, Family, KernelSpec, kernel_K, kernel_Ktilde,
                              ktilde_shifted, sigma_grid)
from shapeinv.model_problem import ModelProblem, exact_f


def test_lorentz_peak_value():
    spec = KernelSpec.lorentz(10)
    assert kernel_K(spec, 7.0, 7.0) == pytest.approx(1 / (10 * math.pi), rel=1e-14)
    assert kernel_K(spec, 7.0, 7.0) == pytest.approx(3.18310e-2, rel=1e-5)


def test_stieltjes_and_laplace_values():
    assert kernel_K(KernelSpec.stieltjes(-2.0), -2.0, 0.0) == 0.5
    lap = KernelSpec.laplace()
    assert np.all(kernel_K(lap, 0.0, np.array([0.0, 3.0, 1e3])) == 1.0)


def test_ktilde_values():
    lor = KernelSpec.lorentz(10)
    assert kernel_Ktilde(lor, 4.0, 4.0) == 0.0
    assert kernel_Ktilde(lor, 0.0, 1e300) == pytest.approx(-0.5, abs=1e-15)
    st_ = KernelSpec.stieltjes(-2.0)
    assert kernel_Ktilde(st_, -1.0, 0.0) == 0.0  # E - s = 1


def test_domain_errors():
    st_ = KernelSpec.stieltjes(-2.0)
    with pytest.raises(DomainError):
        kernel_K(st_, 1.0, 0.5)
    with pytest.raises(DomainError):
        kernel_K(KernelSpec.lorentz(10), 0.0, -1.0)
    with pytest.raises(DomainError):
        KernelSpec(Family.STIELTJES, (-5.0, 1.0))
    with pytest.raises(DomainError):
        KernelSpec(Family.LORENTZ, (-2.0, 41.4), sigma_I=0.0)
    with pytest.raises(DomainError):
        KernelSpec(Family.LAPLACE, (-0.1, 1.0))
    with pytest.raises(DomainError):
        KernelSpec(Family.LAPLACE, (0.0, math.inf))


def test_sigma_grids():
    assert np.allclose(sigma_grid(KernelSpec.lorentz(10, n_samples=3)), [-2.0, 19.7, 41.4], atol=1e-14)
    assert np.allclose(sigma_grid(KernelSpec.laplace(n_samples=2)), [0.0, 1.9304])
    assert np.allclose(sigma_grid(KernelSpec.stieltjes(-2.0, n_samples=2)), [-43.4, -2.0])
    with pytest.raises(ValueError):
        sigma_grid(KernelSpec.lorentz(10, n_samples=1))


def test_spec_roundtrip():
    for spec in (KernelSpec.lorentz(2.0), KernelSpec.stieltjes(-20.0), KernelSpec.laplace()):
        assert KernelSpec.from_dict(spec.to_dict()) == spec


@given(sR=st.floats(-50, 50), sI=st.floats(0.05, 200))
@settings(max_examples=40, deadline=None)
def test_lorentz_normalisation(sR, sI):
    spec = KernelSpec.lorentz(sI)
    # -Ktilde is a primitive of K; the shifted form has no domain check
    full = ktilde_shifted(spec, sR, -1e300) - ktilde_shifted(spec, sR, 1e300)
    assert full == pytest.approx(1.0, abs=1e-10)
    half = 0.5 + math.atan(sR / sI) / math.pi
    assert ktilde_shifted(spec, sR, 0.0) - ktilde_shifted(spec, sR, 1e300) == pytest.approx(half, abs=1e-12)
    pieces = [0.0, max(sR - 20 * sI, 0.0), max(sR + 20 * sI, 0.0)]
    num = sum(integrate.quad(lambda E: kernel_K(spec, sR, E), a, b, epsabs=1e-14, limit=400)[0]
              for a, b in zip(pieces, pieces[1:]))
    num += integrate.quad(lambda E: kernel_K(spec, sR, E), pieces[-1], np.inf, epsabs=1e-14)[0]
    assert num == pytest.approx(half, abs=1e-8)


@pytest.mark.parametrize("spec, sigma", [
    (KernelSpec.lorentz(10), 12.0),
    (KernelSpec.stieltjes(-2.0), -7.0),
    (KernelSpec.laplace(), 0.6),
])
@pytest.mark.parametrize("E", [0.3, 4.0, 25.0, 80.0])
def test_ktilde_derivative_is_minus_kernel(spec, sigma, E):
    h = 1e-5 * max(E, 1.0)
    for fn in (kernel_Ktilde, ktilde_shifted):
        d = (fn(spec, sigma, E + h) - fn(spec, sigma, E - h)) / (2 * h)
        if spec.family is Family.LAPLACE:
            # the Laplace form is used against z*Phi: d/dE exp(-zE) = -z K
            assert d == pytest.approx(-sigma * kernel_K(spec, sigma, E), rel=1e-6)
        else:
            assert d == pytest.approx(-kernel_K(spec, sigma, E), rel=1e-6)


def test_lorentz_tends_to_delta():
    p = ModelProblem()
    target = exact_f(p, 10.0)
    errs = []
    for sI in (1.0, 0.1, 0.01):
        spec = KernelSpec.lorentz(sI)
        w = min(50 * sI, 9.0)
        g = lambda E: kernel_K(spec, 10.0, E) * exact_f(p, E)  # noqa: E731
        val = (integrate.quad(g, 0, 10 - w, epsabs=1e-14)[0]
               + integrate.quad(g, 10 - w, 10 + w, points=[10.0], limit=800, epsabs=1e-14)[0]
               + integrate.quad(g, 10 + w, np.inf, epsabs=1e-14)[0])
        errs.append(abs(val - target))
    assert errs[0] > errs[1] > errs[2]
