"""Model transforms int Ktilde(sigma, E) f'(E) dE on a sigma grid."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ansatz import ShapeAnsatz, _fprime_unchecked, moment
from .kernels import Family, KernelSpec, kernel_K, ktilde_shifted, sigma_grid
from .quadrature import SemiInfiniteRule, integrate_semi_infinite


@dataclass(frozen=True)
class TransformCurve:
    sigma: np.ndarray
    values: np.ndarray
    family: Family

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if sigma.shape != values.shape:
            raise ValueError("sigma and values differ in length")
        if np.any(np.diff(sigma) <= 0):
            raise ValueError("sigma must be strictly increasing")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "family", Family(self.family))

    def to_csv(self, path, value_name="value"):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sigma", value_name])
            for s, v in zip(self.sigma, self.values):
                w.writerow([f"{s:.17e}", f"{v:.17e}"])


def default_rule(spec: KernelSpec, e_thr: float = 0.0) -> SemiInfiniteRule:
    # narrow Lorentz kernels need more panels across the sigma window
    n_panels = 96
    if spec.family is Family.LORENTZ and spec.sigma_I < 5:
        n_panels = 192
    return SemiInfiniteRule(e_thr=e_thr, scale=spec.energy_scale, n_panels=n_panels)


@lru_cache(maxsize=64)
def _ktilde_matrix(spec: KernelSpec, sigma: tuple, rule: SemiInfiniteRule):
    s = np.asarray(sigma)[:, None]
    return ktilde_shifted(spec, s, rule.nodes[None, :], rule.e_thr) * rule.weights[None, :]


@lru_cache(maxsize=64)
def _kernel_matrix(spec: KernelSpec, sigma: tuple, rule: SemiInfiniteRule):
    s = np.asarray(sigma)[:, None]
    return kernel_K(spec, s, rule.nodes[None, :], rule.e_thr) * rule.weights[None, :]


def ktilde_matrix(spec, sigma, rule=None):
    """Matrix A with (A @ f'(nodes)) = int Ktilde f' dE on ``sigma``."""
    rule = rule or default_rule(spec)
    return _ktilde_matrix(spec, tuple(np.asarray(sigma, dtype=float)), rule), rule


def kernel_matrix(spec, sigma, rule=None):
    """Matrix B with (B @ f(nodes)) = int K f dE on ``sigma``."""
    rule = rule or default_rule(spec)
    return _kernel_matrix(spec, tuple(np.asarray(sigma, dtype=float)), rule), rule


def apply_ktilde(a: ShapeAnsatz, spec: KernelSpec, sigma=None, method="fixed",
                 epsabs=None) -> TransformCurve:
    """int Ktilde(sigma_i, E) f'(E) dE for each grid point.

    For the Laplace family this is int exp(-zE) f'(E) dE, which equals
    z * Phi(z).  ``method="fixed"`` uses the tabulated composite rule (fast,
    used inside fits); ``method="adaptive"`` integrates every point with
    QUADPACK, splitting at the roots and, for the Lorentz kernel, at
    sigma_R +- sigma_I and sigma_R +- 5 sigma_I.
    """
    sigma = sigma_grid(spec) if sigma is None else np.asarray(sigma, dtype=float)
    if method == "fixed":
        rule = default_rule(spec, a.E_thr)
        A, rule = ktilde_matrix(spec, sigma, rule)
        values = A @ _fprime_unchecked(a, rule.nodes)
    elif method == "adaptive":
        values = np.array([_adaptive_point(a, spec, s, epsabs) for s in sigma])
    else:
        raise ValueError(f"unknown method {method!r}")
    return TransformCurve(sigma, values, spec.family)


def _adaptive_point(a, spec, s, epsabs):
    split = [r for r in a.roots if r > a.E_thr]
    if spec.family is Family.LORENTZ:
        w = spec.sigma_I
        split += [s + k * w for k in (-5, -1, 0, 1, 5)]
    if epsabs is None:
        # absolute tolerance tied to the size of f'
        scale = abs(a.C) * a.Ebar ** (a.nu + a.N)
        epsabs = 1e-13 * scale

    def g(E):
        return float(ktilde_shifted(spec, s, E, a.E_thr)) * float(_fprime_unchecked(a, np.float64(E)))

    return integrate_semi_infinite(g, a.E_thr, split, epsabs=epsabs, epsrel=1e-12)


def transform_of(f, spec: KernelSpec, sigma=None, e_thr=0.0, split_points=(),
                 epsrel=1e-12) -> TransformCurve:
    """Adaptive int K(sigma_i, E) f(E) dE for a callable f (the direct route)."""
    sigma = sigma_grid(spec) if sigma is None else np.asarray(sigma, dtype=float)
    out = []
    for s in sigma:
        split = list(split_points)
        if spec.family is Family.LORENTZ:
            split += [s + k * spec.sigma_I for k in (-5, -1, 0, 1, 5)]

        def g(E, s=s):
            return float(kernel_K(spec, s, E, e_thr)) * float(f(E))

        out.append(integrate_semi_infinite(g, e_thr, split, epsabs=0.0, epsrel=epsrel))
    return TransformCurve(sigma, np.array(out), spec.family)


def model_transform(a: ShapeAnsatz, spec: KernelSpec, sigma=None, method="fixed"):
    """(K f)(sigma_i), i.e. the quantity compared with Phi.

    Laplace values are recovered as int exp(-zE) f' dE / z; at z = 0 the
    zeroth moment is meaningless, so the first-moment identity
    Phi(0) = -int (E - E_thr) f' dE is used instead.
    """
    curve = apply_ktilde(a, spec, sigma, method)
    if spec.family is not Family.LAPLACE:
        return curve
    z = curve.sigma
    vals = np.empty_like(curve.values)
    pos = z > 0
    vals[pos] = curve.values[pos] / z[pos]
    if np.any(~pos):
        vals[~pos] = -moment(a, 1) if a.beta > a.N + a.nu + 1 else math.nan
    return TransformCurve(z, vals, spec.family)
