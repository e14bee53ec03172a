"""Quadrature on [E_thr, inf) for integrands with a (E - E_thr)^(-1/2) endpoint.

Two routes are provided.  ``integrate_semi_infinite`` is adaptive (QUADPACK
via scipy) and is used wherever a single accurate number is wanted.
``SemiInfiniteRule`` is a fixed composite Gauss-Legendre rule whose nodes do
not depend on the integrand, so kernel matrices can be tabulated once and the
forward map reduces to a matrix-vector product inside the fit loops.

Both use E = E_thr + t^2, which turns the threshold singularity into a
smooth factor 2t * (E - E_thr)^(-1/2) = 2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate


class QuadratureError(RuntimeError):
    """Adaptive quadrature hit its subdivision limit."""

    def __init__(self, message, estimate=math.nan, error=math.nan):
        super().__init__(f"{message} (estimate={estimate:.6e}, error bound={error:.2e})")
        self.estimate = estimate
        self.error = error


def _quad(fun, a, b, points, epsabs, epsrel, limit):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        kw = dict(epsabs=epsabs, epsrel=epsrel, limit=limit, full_output=1)
        if points is not None and np.isfinite(b):
            out = integrate.quad(fun, a, b, points=points, **kw)
        else:
            out = integrate.quad(fun, a, b, **kw)
    value, err, info = out[0], out[1], out[2]
    msg = str(out[3]) if len(out) > 3 and out[3] else ""
    if msg:
        # ier != 0; roundoff-limited results are accepted with their bound,
        # a divergence diagnosis never is
        bad = "divergent" in msg or ("roundoff" not in msg
                                     and err > max(epsabs, epsrel * abs(value)) * 100)
        if bad:
            raise QuadratureError(f"quad failed on [{a}, {b}]: {msg.splitlines()[0]}", value, err)
    return value, err


def integrate_semi_infinite(g, singular_at=0.0, split_points=(), epsabs=1e-13,
                            epsrel=1e-12, limit=400, upper=math.inf,
                            return_error=False):
    """Adaptive integral of ``g`` over [singular_at, upper).

    ``split_points`` are energies where the integrand has structure (peaks,
    roots).  They become interval breakpoints after the t-substitution.
    """
    a = float(singular_at)

    def h(t):
        return 2.0 * t * g(a + t * t)

    t_up = math.sqrt(upper - a) if np.isfinite(upper) else math.inf
    cuts = sorted({math.sqrt(p - a) for p in split_points if a < p < upper})
    if not np.isfinite(t_up):
        t_mid = 2.0 * cuts[-1] if cuts else 1.0
        cuts = cuts + [t_mid]
    edges = [0.0] + [c for c in cuts if c < t_up] + [t_up]
    total = 0.0
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        v, e = _quad(h, lo, hi, None, epsabs, epsrel, limit)
        total += v
        err += e
    return (total, err) if return_error else total


@dataclass(frozen=True)
class SemiInfiniteRule:
    """Composite Gauss-Legendre rule for int_{e_thr}^inf g(E) dE.

    The substitution is E = e_thr + t^2 with t = sqrt(scale) * s / (1 - s),
    s in [0, 1).  Panels are uniform in s except the last one, which is
    subdivided geometrically towards s = 1 to follow algebraic tails.
    """

    e_thr: float = 0.0
    scale: float = 20.0
    n_panels: int = 96
    order: int = 20
    tail_levels: int = 14
    tail_ratio: float = 0.25

    @cached_property
    def _nodes_weights(self):
        x, w = np.polynomial.legendre.leggauss(self.order)
        h = 1.0 / self.n_panels
        edges = list(np.linspace(0.0, 1.0 - h, self.n_panels))
        edges += [1.0 - h * self.tail_ratio**k for k in range(1, self.tail_levels + 1)]
        edges = np.asarray(edges)
        lo, hi = edges[:-1], edges[1:]
        s = (0.5 * (hi - lo)[:, None] * x + 0.5 * (hi + lo)[:, None]).ravel()
        ws = (0.5 * (hi - lo)[:, None] * w).ravel()
        root = math.sqrt(self.scale)
        t = root * s / (1.0 - s)
        dt = root / (1.0 - s) ** 2
        E = self.e_thr + t * t
        return E, ws * dt * 2.0 * t

    @property
    def nodes(self) -> np.ndarray:
        return self._nodes_weights[0]

    @property
    def weights(self) -> np.ndarray:
        return self._nodes_weights[1]

    def integrate(self, values) -> float:
        """Apply the rule to integrand values sampled at ``nodes``."""
        return float(np.dot(self.weights, values))
