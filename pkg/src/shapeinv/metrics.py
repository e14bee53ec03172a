"""Accuracy measures for inputs, fits and reconstructed solutions."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

#: energy window on which solutions are compared (MeV)
E_RANGE = (0.0, 42.0)
N1 = 200


class MetricError(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class ChiReport:
    chi_input: float | None
    chi_fit: float
    chi_solution: float | None
    n1: int
    n2: int
    e_range: tuple[float, float] = E_RANGE

    def __post_init__(self):
        for name in ("chi_input", "chi_fit", "chi_solution"):
            v = getattr(self, name)
            if v is not None and not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name}={v} is not a finite non-negative number")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["e_range"] = list(self.e_range)
        return d

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def _rms_relative(ref, other, denom, what):
    ref = np.asarray(ref, dtype=float)
    other = np.asarray(other, dtype=float)
    denom = np.asarray(denom, dtype=float)
    zero = np.flatnonzero(denom == 0)
    if zero.size:
        raise MetricError(f"{what}: zero denominator at sample {zero[0]}")
    return float(np.sqrt(np.mean(((ref - other) / denom) ** 2)))


def solution_grid(e_range=E_RANGE, n1=N1) -> np.ndarray:
    """n1 uniform energies in (lo, hi]; the threshold point itself is skipped."""
    lo, hi = e_range
    return lo + (hi - lo) * np.arange(1, n1 + 1) / n1


def chi_solution(f_true, f_appr, e_range=E_RANGE, n1=N1) -> float:
    """RMS of (f_true - f_appr)/f_true; f_* are callables or sampled arrays."""
    E = solution_grid(e_range, n1)
    ft = f_true(E) if callable(f_true) else f_true
    fa = f_appr(E) if callable(f_appr) else f_appr
    return _rms_relative(ft, fa, ft, "chi_solution")


def chi_input(phi_true, phi_appr) -> float:
    """RMS of (Phi - Phi_appr)/Phi_appr over the input grid."""
    return _rms_relative(phi_true, phi_appr, phi_appr, "chi_input")


def chi_fit(phi_appr, model) -> float:
    """RMS of (Phi_appr - K f_appr)/Phi_appr over the input grid."""
    return _rms_relative(phi_appr, model, phi_appr, "chi_fit")


def deviation_profile(f_true, f_appr, delta, e_range=E_RANGE):
    """Integrals of f_true - f_appr over consecutive windows of width ``delta``.

    Returns a list of ((lo, hi), |int_lo^hi (f_true - f_appr) dE|).
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    lo, hi = e_range
    edges = np.arange(lo, hi, delta)
    rights = np.minimum(edges + delta, hi)
    # E = a + (b - a) v^2 keeps the sqrt threshold behaviour smooth
    v, w = np.polynomial.legendre.leggauss(40)
    v = 0.5 * (v + 1.0)
    w = 0.5 * w
    width = (rights - edges)[:, None]
    E = edges[:, None] + width * v**2
    jac = 2.0 * width * v
    diff = np.asarray(f_true(E.ravel()), dtype=float) - np.asarray(f_appr(E.ravel()), dtype=float)
    vals = np.abs((diff.reshape(E.shape) * jac) @ w)
    return [((float(a), float(b)), float(x)) for a, b, x in zip(edges, rights, vals)]
