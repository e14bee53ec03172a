"""The conventional expansion inversion used as the point of comparison.

    f_N(E) = sum_{n=1}^N c_n E^(n-1/2) exp(-alpha E)

The c_n enter linearly and are found by weighted linear least squares for
each alpha on a grid; the truncation N acts as the regularisation parameter.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import metrics
from .forward_map import default_rule, kernel_matrix
from .model_problem import SampledInput

#: alpha grid (1/MeV) used when none is supplied
DEFAULT_ALPHAS = np.geomspace(0.01, 2.0, 40)
#: largest basis size accepted by fit_standard
N_CAP = 16


class RankWarning(UserWarning):
    pass


def basis_fn(n: int, alpha: float, E):
    """E^(n-1/2) exp(-alpha E)."""
    if n < 1:
        raise ValueError("basis index starts at 1")
    E = np.asarray(E, dtype=float)
    if np.any(E < 0):
        raise ValueError("basis functions are defined for E >= 0")
    # log form avoids inf * 0 for large E and small alpha
    with np.errstate(divide="ignore"):
        out = np.exp((n - 0.5) * np.log(E) - alpha * E)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class BasisExpansion:
    N: int
    alpha: float
    coeffs: tuple[float, ...]
    chi_fit: float = math.nan
    objective: float = math.nan
    rank: int | None = None
    cond: float | None = None

    def __post_init__(self):
        if self.N < 1 or not self.alpha > 0:
            raise ValueError("need N >= 1 and alpha > 0")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def __call__(self, E):
        E = np.asarray(E, dtype=float)
        out = np.zeros_like(E)
        for n, c in enumerate(self.coeffs, start=1):
            out = out + c * basis_fn(n, self.alpha, E)
        return out if out.ndim else float(out)


class BasisTransforms:
    """Numerical transforms K phi_n on the input grid, cached per alpha."""

    def __init__(self, data: SampledInput):
        self.data = data
        self.B, self.rule = kernel_matrix(data.kernel, data.sigma, default_rule(data.kernel))
        self._cache = {}

    def columns(self, alpha: float, N: int) -> np.ndarray:
        have = self._cache.get(alpha)
        if have is None or have.shape[1] < N:
            E = self.rule.nodes
            phis = np.stack([basis_fn(n, alpha, E) for n in range(1, max(N, N_CAP) + 1)], axis=1)
            have = self.B @ phis
            self._cache[alpha] = have
        return have[:, :N]


def fit_standard(data: SampledInput, N: int, alpha_grid=None,
                 transforms: BasisTransforms | None = None) -> BasisExpansion:
    """Best (alpha, c) over ``alpha_grid`` for a basis of size N."""
    if not 1 <= N <= N_CAP:
        raise ValueError(f"N must lie in [1, {N_CAP}]")
    alphas = DEFAULT_ALPHAS if alpha_grid is None else np.asarray(alpha_grid, dtype=float)
    transforms = transforms or BasisTransforms(data)
    sw = np.sqrt(data.weights)
    rhs = sw * data.phi
    best = None
    for alpha in alphas:
        A = sw[:, None] * transforms.columns(float(alpha), N)
        # column equilibration before the orthogonal (SVD) solve
        norms = np.linalg.norm(A, axis=0)
        norms[norms == 0] = 1.0
        sol, _, rank, sv = np.linalg.lstsq(A / norms, rhs, rcond=None)
        c = sol / norms
        r = rhs - A @ c
        obj = float(r @ r)
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
        if best is None or obj < best[0]:
            best = (obj, float(alpha), c, int(rank), cond, A)
    obj, alpha, c, rank, cond, A = best
    if rank < N:
        warnings.warn(f"rank-deficient basis fit: rank {rank} < N={N}, condition {cond:.3e}; "
                      "least-norm solution returned", RankWarning, stacklevel=2)
    model = transforms.columns(alpha, N) @ c
    chi = metrics.chi_fit(data.phi, model)
    return BasisExpansion(N, alpha, tuple(c), chi, obj, rank, cond)


@dataclass
class SweepRow:
    N: int
    alpha: float
    chi_fit: float
    chi_solution: float | None
    cond: float


def sweep(data: SampledInput, Ns, alpha_grid=None, f_true=None) -> list[SweepRow]:
    """fit_standard for each N, with chi_solution when the exact f is known."""
    transforms = BasisTransforms(data)
    rows = []
    for N in Ns:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankWarning)
            fe = fit_standard(data, N, alpha_grid, transforms)
        cs = metrics.chi_solution(f_true, fe) if f_true is not None else None
        rows.append(SweepRow(N, fe.alpha, fe.chi_fit, cs, fe.cond))
    return rows
