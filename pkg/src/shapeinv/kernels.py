"""Transform kernels K(sigma, E), their integrated forms and evaluation grids.

Three families are supported:

* Lorentz   K = (sigma_I/pi) / ((sigma_R - E)^2 + sigma_I^2),  sigma = sigma_R
* Stieltjes K = 1 / (E - s),  s < 0
* Laplace   K = exp(-z E),    z >= 0

The integrated kernel Ktilde = -int K dE is what multiplies f'(E) once the
equation has been integrated by parts.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

#: default sigma_R window for the Lorentz inputs (MeV)
LORENTZ_RANGE = (-2.0, 41.4)
#: width of the Stieltjes window, s_min = s_max - STIELTJES_WIDTH (MeV)
STIELTJES_WIDTH = 41.4
#: default upper end of the Laplace window (1/MeV)
LAPLACE_ZMAX = 1.9304
DEFAULT_SAMPLES = 100


class DomainError(ValueError):
    """Raised when a kernel is evaluated outside its domain."""


class Family(str, enum.Enum):
    LORENTZ = "lorentz"
    STIELTJES = "stieltjes"
    LAPLACE = "laplace"


@dataclass(frozen=True)
class KernelSpec:
    """A transform family together with its evaluation window."""

    family: Family
    sigma_range: tuple[float, float]
    sigma_I: float | None = None
    n_samples: int = DEFAULT_SAMPLES

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        lo, hi = (float(v) for v in self.sigma_range)
        object.__setattr__(self, "sigma_range", (lo, hi))
        if lo > hi:
            raise DomainError(f"empty sigma range {self.sigma_range}")
        if self.family is Family.LORENTZ:
            if self.sigma_I is None or not self.sigma_I > 0:
                raise DomainError("Lorentz kernel needs sigma_I > 0")
        elif self.family is Family.STIELTJES:
            if not hi < 0:
                raise DomainError("Stieltjes transform exists for s < 0 only")
        elif self.family is Family.LAPLACE:
            if lo < 0 or not np.isfinite(hi):
                raise DomainError("Laplace range must lie in [0, z_max], z_max finite")

    @classmethod
    def lorentz(cls, sigma_I, sigma_range=LORENTZ_RANGE, n_samples=DEFAULT_SAMPLES):
        return cls(Family.LORENTZ, sigma_range, float(sigma_I), n_samples)

    @classmethod
    def stieltjes(cls, s_max, width=STIELTJES_WIDTH, n_samples=DEFAULT_SAMPLES):
        return cls(Family.STIELTJES, (s_max - width, s_max), None, n_samples)

    @classmethod
    def laplace(cls, z_max=LAPLACE_ZMAX, n_samples=DEFAULT_SAMPLES):
        return cls(Family.LAPLACE, (0.0, z_max), None, n_samples)

    @property
    def energy_scale(self) -> float:
        """Typical energy probed by the window (MeV)."""
        lo, hi = self.sigma_range
        if self.family is Family.LAPLACE:
            # z E ~ 40 marks the end of the informative part of exp(-zE)
            return 40.0 / hi
        return 0.5 * (hi - lo)

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "sigma_range": list(self.sigma_range),
            "sigma_I": self.sigma_I,
            "n_samples": self.n_samples,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(Family(d["family"]), tuple(d["sigma_range"]), d.get("sigma_I"),
                   int(d.get("n_samples", DEFAULT_SAMPLES)))


def _check(spec: KernelSpec, sigma, E, e_thr):
    E = np.asarray(E, dtype=float)
    if np.any(E < e_thr):
        raise DomainError(f"energy below threshold {e_thr}")
    if spec.family is Family.STIELTJES and np.any(E - np.asarray(sigma) <= 0):
        raise DomainError("Stieltjes kernel needs E - s > 0")
    return E


def kernel_K(spec: KernelSpec, sigma, E, e_thr: float = 0.0):
    """Kernel value K(sigma, E); broadcasts over array arguments."""
    E = _check(spec, sigma, E, e_thr)
    sigma = np.asarray(sigma, dtype=float)
    if spec.family is Family.LORENTZ:
        gam = spec.sigma_I
        return (gam / np.pi) / ((sigma - E) ** 2 + gam**2)
    if spec.family is Family.STIELTJES:
        return 1.0 / (E - sigma)
    return np.exp(-sigma * E)


def kernel_Ktilde(spec: KernelSpec, sigma, E, e_thr: float = 0.0):
    """Integrated kernel -int K dE in the printed normalisation.

    For the Laplace family the same exponential is returned; the equation is
    then compared against z * Phi(z) rather than Phi(z).
    """
    E = _check(spec, sigma, E, e_thr)
    sigma = np.asarray(sigma, dtype=float)
    if spec.family is Family.LORENTZ:
        return -np.arctan((E - sigma) / spec.sigma_I) / np.pi
    if spec.family is Family.STIELTJES:
        return -np.log(E - sigma)
    return np.exp(-sigma * E)


def ktilde_shifted(spec: KernelSpec, sigma, E, e_thr: float = 0.0):
    """Ktilde up to a sigma-dependent constant, chosen for numerical stability.

    Constants drop out of int Ktilde f' dE because int f' dE = 0.  The Lorentz
    form decays like sigma_I/(pi E) and the Stieltjes form vanishes at
    threshold, which removes large cancelling contributions.  No domain checks.
    """
    sigma = np.asarray(sigma, dtype=float)
    if spec.family is Family.LORENTZ:
        return np.arctan2(spec.sigma_I, E - sigma) / np.pi
    if spec.family is Family.STIELTJES:
        return -np.log1p((E - e_thr) / (e_thr - sigma))
    return np.exp(-sigma * E)


def sigma_grid(spec: KernelSpec) -> np.ndarray:
    """Uniform grid over the closed sigma window."""
    if spec.n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    lo, hi = spec.sigma_range
    return np.linspace(lo, hi, spec.n_samples)
