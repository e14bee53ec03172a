"""The s-wave free-particle test problem and its approximate inputs.

With Q(r) = exp(-eta r) / sqrt(4 pi) the continuum strength is

    f(E) = 4 / (pi E0 eta^3) * sqrt(E/E0) / (1 + E/E0)^4,   E0 = hbar^2 eta^2 / 2M,

and int f dE = 1 / (4 eta^3).  Transforms of f follow from the driven
equation  -(hbar^2/2M) psi'' - s psi = r exp(-eta r),  psi(0) = 0:

    Lorentz    Phi = (sigma_I/pi) int |psi(r, sigma_R + i sigma_I)|^2 dr
    Stieltjes  Phi = int psi(r, s) r exp(-eta r) dr

Realistic inputs with a systematic error are obtained by solving that
equation in a truncated orthonormal Laguerre basis

    phi_n(r) = [n(n+1)]^(-1/2) b^(-3/2) r L^(2)_(n-1)(r/b) exp(-r/2b).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import eval_genlaguerre, roots_laguerre

from .forward_map import transform_of
from .kernels import Family, KernelSpec, sigma_grid

#: hbar^2 / 2M for the nucleon mass (MeV fm^2); equals E0 at eta = 1/fm
HBAR2_OVER_2M = 20.7212603615
#: length parameter of the Laguerre basis (fm)
BASIS_LENGTH = 0.3


class ProvenanceKind(str, enum.Enum):
    EXACT = "exact"
    GALERKIN = "galerkin"
    NOISY = "noisy"


@dataclass(frozen=True)
class Provenance:
    kind: ProvenanceKind
    N0: int | None = None
    tau: float | None = None
    seed: int | None = None
    parent: "Provenance | None" = None

    def to_dict(self) -> dict:
        d = {"kind": ProvenanceKind(self.kind).value}
        for key in ("N0", "tau", "seed"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        if self.parent is not None:
            d["parent"] = self.parent.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Provenance":
        parent = cls.from_dict(d["parent"]) if d.get("parent") else None
        return cls(ProvenanceKind(d["kind"]), d.get("N0"), d.get("tau"), d.get("seed"), parent)

    def __str__(self):
        kind = ProvenanceKind(self.kind)
        if kind is ProvenanceKind.GALERKIN:
            return f"Galerkin({self.N0})"
        if kind is ProvenanceKind.NOISY:
            return f"Noisy({self.tau}, {self.seed})"
        return "Exact"


@dataclass(frozen=True)
class SampledInput:
    """Phi_appr sampled on a sigma grid, with least-squares weights."""

    kernel: KernelSpec
    sigma: np.ndarray
    phi: np.ndarray
    weights: np.ndarray = None
    provenance: Provenance = field(default_factory=lambda: Provenance(ProvenanceKind.EXACT))

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        if sigma.shape != phi.shape:
            raise ValueError("sigma and phi differ in length")
        if self.weights is None:
            if np.any(phi == 0):
                raise ValueError("relative weights need Phi without zeros")
            weights = 1.0 / phi**2
        else:
            weights = np.asarray(self.weights, dtype=float)
            if weights.shape != phi.shape or np.any(weights <= 0):
                raise ValueError("weights must be positive, one per sample")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "weights", weights)

    @property
    def family(self) -> Family:
        return self.kernel.family

    def __len__(self):
        return len(self.sigma)

    def scaled(self, c: float) -> "SampledInput":
        return SampledInput(self.kernel, self.sigma, c * self.phi, self.weights / c**2,
                            self.provenance)


@dataclass(frozen=True)
class ModelProblem:
    eta: float = 1.0
    hbar2_over_2M: float = HBAR2_OVER_2M

    @property
    def E0(self) -> float:
        return self.hbar2_over_2M * self.eta**2

    @property
    def S(self) -> float:
        return 1.0 / (4.0 * self.eta**3)

    E_thr = 0.0

    def to_dict(self) -> dict:
        return {"eta": self.eta, "hbar2_over_2M": self.hbar2_over_2M, "E0": self.E0,
                "S": self.S, "E_thr": self.E_thr}


def exact_f(p: ModelProblem, E):
    """Exact continuum strength f(E) (1/MeV for eta = 1/fm)."""
    E = np.asarray(E, dtype=float)
    if np.any(E < 0):
        raise ValueError("exact solution is defined for E >= 0")
    x = E / p.E0
    out = 4.0 / (math.pi * p.E0 * p.eta**3) * np.sqrt(x) / (1.0 + x) ** 4
    return out if out.ndim else float(out)


def exact_fprime(p: ModelProblem, E):
    """Analytic derivative of exact_f for E > 0."""
    E = np.asarray(E, dtype=float)
    x = E / p.E0
    pref = 2.0 / (math.pi * p.E0**2 * p.eta**3)
    return pref * (1.0 - 7.0 * x) / (np.sqrt(x) * (1.0 + x) ** 5)


def exact_input(p: ModelProblem, spec: KernelSpec, epsrel: float = 1e-13) -> SampledInput:
    """Phi = K f by adaptive quadrature on the kernel's sigma grid."""
    curve = transform_of(lambda E: exact_f(p, E), spec, epsrel=epsrel,
                         split_points=(p.E0 / 7, p.E0))
    return SampledInput(spec, curve.sigma, curve.values)


def _laguerre_tables(N0, x):
    """x L^(2)_(n-1)(x) and its x-derivative, n = 1..N0, without exp(-x/2)."""
    n = np.arange(1, N0 + 1)
    L = np.array([eval_genlaguerre(k - 1, 2, x) for k in n])
    dL = np.array([-eval_genlaguerre(k - 2, 3, x) if k >= 2 else np.zeros_like(x) for k in n])
    norm = 1.0 / np.sqrt(n * (n + 1.0))
    u = norm[:, None] * x * L
    du = norm[:, None] * (L + x * dL - 0.5 * x * L)
    return u, du


@dataclass(frozen=True)
class GalerkinSystem:
    """Kinetic matrix, overlap and source vector in the truncated basis."""

    N0: int
    b: float
    T: np.ndarray
    overlap: np.ndarray
    g: np.ndarray

    def coefficients(self, s):
        """Solve (T - s I) c = g; complex s allowed."""
        s = complex(s) if np.iscomplexobj(s) or isinstance(s, complex) else float(s)
        return np.linalg.solve(self.T - s * np.eye(self.N0), self.g)


@lru_cache(maxsize=32)
def galerkin_system(p: ModelProblem, N0: int, b: float = BASIS_LENGTH,
                    n_quad: int | None = None) -> GalerkinSystem:
    """Matrix elements by Gauss-Laguerre quadrature in x = r/b.

    Integrands are exp(-x) times polynomials of degree <= 2 N0, so any rule
    with more than N0 + 1 nodes is exact; the default node count is 4 N0 + 8.
    """
    if N0 < 1:
        raise ValueError("N0 must be at least 1")
    nq = n_quad or 4 * N0 + 8
    x, w = roots_laguerre(nq)
    u, du = _laguerre_tables(N0, x)
    overlap = (u * w) @ u.T
    T = p.hbar2_over_2M / b**2 * ((du * w) @ du.T)
    T = 0.5 * (T + T.T)
    # g_n = int phi_n r exp(-eta r) dr; exp(-(1/2 + eta b) x) handled by y = kappa x
    kappa = 0.5 + p.eta * b
    y, wy = roots_laguerre(nq)
    uy, _ = _laguerre_tables(N0, y / kappa)
    g = b**1.5 * ((uy * (y / kappa)) @ wy) / kappa
    return GalerkinSystem(N0, b, T, overlap, g)


def galerkin_input(p: ModelProblem, spec: KernelSpec, N0: int, b: float = BASIS_LENGTH) -> SampledInput:
    """Phi_appr from the truncated-basis solution of the driven equation."""
    if spec.family is Family.LAPLACE:
        raise ValueError("Galerkin inputs exist for the Lorentz and Stieltjes kernels only")
    system = galerkin_system(p, N0, b)
    sigma = sigma_grid(spec)
    phi = np.empty_like(sigma)
    for i, s in enumerate(sigma):
        if spec.family is Family.LORENTZ:
            c = system.coefficients(complex(s, spec.sigma_I))
            phi[i] = spec.sigma_I / math.pi * float(np.sum(np.abs(c) ** 2))
        else:
            c = system.coefficients(s)
            phi[i] = float(c @ system.g)
    return SampledInput(spec, sigma, phi, provenance=Provenance(ProvenanceKind.GALERKIN, N0=N0))


def noisy_input(base: SampledInput, tau: float, seed: int) -> SampledInput:
    """Multiplicative Gaussian noise Phi -> Phi (1 + tau * rho), rho ~ N(0, 1)."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    rng = np.random.default_rng(seed)
    rho = rng.standard_normal(len(base.phi))
    phi = base.phi * (1.0 + tau * rho)
    return SampledInput(base.kernel, base.sigma, phi,
                        provenance=Provenance(ProvenanceKind.NOISY, tau=tau, seed=seed,
                                              parent=base.provenance))
