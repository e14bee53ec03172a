"""Shape-constrained ansatz for the derivative of the solution.

    f'(E) = C * dE^(nu-1) * prod_i (E - E_i) * exp(gamma(E)) / (1 + dE/Ebar)^beta

with dE = E - E_thr and

    gamma(E) = u * sum_k c_k (1 - u)^k,    u = dE / (dE + Ebar),

which vanishes at threshold and tends to sum_k c_k at infinity.  f' changes
sign exactly at the roots E_i, so f has as many extrema as there are roots
above threshold.

Moments  int dE^p f'(E) dE  are needed to enforce f(inf) = f(E_thr) = 0 and
the sum rule int f dE = S.  In the variable u they read

    Ebar^(nu+p) int_0^1 u^(nu-1+p) (1-u)^(beta-nu-N-p-1) P(u) exp(gamma(u)) du

with P(u) = prod_i (Ebar u - r_i (1-u)), a polynomial.  Without gamma this is
a finite sum of Beta functions; with gamma the algebraic end-point weights
are handed to QUADPACK's QAWS routine.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .kernels import DomainError
from .quadrature import integrate_semi_infinite


class ConstraintError(ValueError):
    """A constraint cannot be imposed on the given ansatz."""


@dataclass(frozen=True)
class ShapeAnsatz:
    C: float
    roots: tuple[float, ...]
    Ebar: float
    beta: float
    gamma_coeffs: tuple[float, ...] = ()
    nu: float = 0.5
    E_thr: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "roots", tuple(float(r) for r in np.atleast_1d(self.roots)))
        object.__setattr__(self, "gamma_coeffs", tuple(float(c) for c in self.gamma_coeffs))
        if self.N < 1:
            raise ValueError("ansatz needs at least one extremum")
        if not self.Ebar > 0:
            raise ValueError(f"Ebar must be positive, got {self.Ebar}")
        if not self.nu > 0:
            raise ValueError(f"threshold exponent must be positive, got {self.nu}")
        if not self.beta > self.N + self.nu:
            raise ValueError(f"beta={self.beta} must exceed N + nu = {self.N + self.nu} "
                             "for f(inf) to be finite")
        if not all(math.isfinite(r) for r in self.roots):
            raise ValueError("roots must be finite")

    @property
    def N(self) -> int:
        return len(self.roots)

    @property
    def K_gamma(self) -> int:
        return len(self.gamma_coeffs)

    def replace(self, **changes) -> "ShapeAnsatz":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "C": self.C,
            "roots": list(self.roots),
            "Ebar": self.Ebar,
            "beta": self.beta,
            "gamma_coeffs": list(self.gamma_coeffs),
            "nu": self.nu,
            "E_thr": self.E_thr,
            "N": self.N,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ShapeAnsatz":
        a = cls(C=float(d["C"]), roots=tuple(d["roots"]), Ebar=float(d["Ebar"]),
                beta=float(d["beta"]), gamma_coeffs=tuple(d.get("gamma_coeffs", ())),
                nu=float(d.get("nu", 0.5)), E_thr=float(d.get("E_thr", 0.0)))
        if "N" in d and int(d["N"]) != a.N:
            raise ValueError(f"N={d['N']} does not match {a.N} roots")
        return a


def gamma(a: ShapeAnsatz, E):
    """Next-to-leading correction gamma(E); zero at threshold."""
    u = _u(a, np.asarray(E, dtype=float))
    return _gamma_u(a, u)


def _u(a, E):
    x = E - a.E_thr
    return x / (x + a.Ebar)


def _gamma_u(a, u):
    if not a.gamma_coeffs:
        return np.zeros_like(u)
    # sum_k c_k (1-u)^k by Horner
    acc = np.zeros_like(u)
    for c in reversed(a.gamma_coeffs):
        acc = acc * (1.0 - u) + c
    return u * acc


def eval_fprime(a: ShapeAnsatz, E):
    """Derivative f'(E) of the ansatz; E must lie strictly above threshold."""
    E = np.asarray(E, dtype=float)
    if np.any(E <= a.E_thr):
        raise DomainError(f"f' is evaluated above threshold E_thr={a.E_thr} only")
    return _fprime_unchecked(a, E)


def _fprime_unchecked(a, E):
    x = E - a.E_thr
    poly = np.ones_like(x)
    for r in a.roots:
        poly = poly * (E - r)
    logenv = (a.nu - 1.0) * np.log(x) - a.beta * np.log1p(x / a.Ebar)
    if a.gamma_coeffs:
        logenv = logenv + _gamma_u(a, x / (x + a.Ebar))
    return a.C * poly * np.exp(logenv)


def moment(a: ShapeAnsatz, p: int = 0) -> float:
    """int_{E_thr}^inf (E - E_thr)^p f'(E) dE, closed form when gamma == 0."""
    a_exp = a.nu + p
    b_exp = a.beta - a.nu - a.N - p
    if b_exp <= 0:
        raise ConstraintError(f"moment p={p} diverges: need beta > N + nu + {p}")
    shifted = [r - a.E_thr for r in a.roots]
    if not any(a.gamma_coeffs):
        coeffs = np.poly(shifted)[::-1] if shifted else np.array([1.0])
        k = np.arange(len(coeffs))
        logs = special.betaln(a_exp + k, b_exp + a.N - k) + (a_exp + k) * math.log(a.Ebar)
        return float(a.C * np.sum(coeffs * np.exp(logs)))
    Ebar = a.Ebar

    def smooth(u):
        val = 1.0
        for r in shifted:
            val *= Ebar * u - r * (1.0 - u)
        return val * math.exp(float(_gamma_u(a, np.float64(u))))

    return float(a.C * Ebar**a_exp * _qaws(smooth, a_exp, b_exp))


def _qaws(fun, a_exp, b_exp):
    """int_0^1 u^(a_exp-1) (1-u)^(b_exp-1) fun(u) du with QUADPACK's QAWS."""
    with warnings.catch_warnings():
        # roundoff-limited at the 1e-13 request; the result is still ~1e-14 accurate
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(fun, 0.0, 1.0, weight="alg", wvar=(a_exp - 1.0, b_exp - 1.0),
                                epsabs=0.0, epsrel=1e-13, limit=200)
    return val


def eliminate_root(a: ShapeAnsatz, which: int = 0) -> ShapeAnsatz:
    """Fix roots[which] so that int f' dE = 0, i.e. f(inf) = f(E_thr).

    int f' dE is linear in any single root, so the solution is the ratio of
    the first to the zeroth moment of the ansatz with that root deleted.
    """
    others = tuple(r for i, r in enumerate(a.roots) if i != which)
    # the reduced integrand has N-1 roots; moments up to p=1 need beta > N + nu
    reduced = _Reduced(a, others)
    m0 = reduced.moment(0)
    if m0 == 0.0:
        raise ConstraintError("degenerate integrand: zeroth moment vanishes")
    m1 = reduced.moment(1)
    roots = list(a.roots)
    roots[which] = a.E_thr + m1 / m0
    return a.replace(roots=tuple(roots))


class _Reduced:
    """Root-deleted ansatz, which may have zero roots (not a valid ShapeAnsatz)."""

    def __init__(self, a, roots):
        self.a = a
        self.roots = roots

    def moment(self, p):
        a = self.a
        n = len(self.roots)
        if n >= 1:
            return moment(ShapeAnsatz(1.0, self.roots, a.Ebar, a.beta, a.gamma_coeffs,
                                      a.nu, a.E_thr), p)
        # no roots left: plain Beta / QAWS moment of the envelope
        a_exp = a.nu + p
        b_exp = a.beta - a.nu - p
        if b_exp <= 0:
            raise ConstraintError(f"moment p={p} diverges")
        if not any(a.gamma_coeffs):
            return float(math.exp(special.betaln(a_exp, b_exp) + a_exp * math.log(a.Ebar)))
        val = _qaws(lambda u: math.exp(float(_gamma_u(a, np.float64(u)))), a_exp, b_exp)
        return float(a.Ebar**a_exp * val)


def normalize_C(a: ShapeAnsatz, S: float) -> ShapeAnsatz:
    """Scale C so that int f dE = -int (E - E_thr) f' dE = S."""
    if not a.beta > a.N + a.nu + 1:
        raise ConstraintError(f"sum rule needs beta > N + nu + 1 = {a.N + a.nu + 1}")
    m1 = moment(a.replace(C=1.0), 1)
    if m1 == 0.0:
        raise ConstraintError("first moment vanishes; C cannot be fixed by the sum rule")
    return a.replace(C=-S / m1)


def constrained(Ebar, beta, *, N=1, nu=0.5, E_thr=0.0, other_roots=(), gamma_coeffs=(),
                S=None, root_guess=None) -> ShapeAnsatz:
    """Build an ansatz with roots[0] eliminated and, if S is given, C fixed."""
    if len(other_roots) != N - 1:
        raise ValueError(f"need {N - 1} non-eliminated roots, got {len(other_roots)}")
    first = E_thr + Ebar if root_guess is None else root_guess
    a = ShapeAnsatz(1.0, (first, *other_roots), Ebar, beta, tuple(gamma_coeffs), nu, E_thr)
    a = eliminate_root(a, 0)
    if S is not None:
        a = normalize_C(a, S)
    return a


def eval_f(a: ShapeAnsatz, E):
    """f(E) = int_{E_thr}^E f'(E') dE' for scalar or array E (inf allowed)."""
    E_arr = np.atleast_1d(np.asarray(E, dtype=float))
    if np.any(E_arr < a.E_thr):
        raise DomainError("f is defined above threshold only")
    order = np.argsort(E_arr)
    out = np.empty_like(E_arr)
    acc = 0.0
    prev = a.E_thr
    split = [r for r in a.roots if r > a.E_thr]

    def fp(x):
        return _fprime_unchecked(a, np.float64(x))

    for idx in order:
        e = E_arr[idx]
        if e > prev:
            if prev == a.E_thr:
                acc += integrate_semi_infinite(fp, a.E_thr, split, upper=e,
                                               epsabs=1e-15, epsrel=1e-13)
            elif np.isfinite(e):
                acc += _plain(fp, prev, e, split)
            else:
                acc += _tail(fp, prev)
            prev = e
        out[idx] = acc
    return out if np.ndim(E) else float(out[0])


def _plain(fp, lo, hi, split):
    pts = [r for r in split if lo < r < hi] or None
    return integrate.quad(fp, lo, hi, points=pts, epsabs=1e-15, epsrel=1e-13, limit=200)[0]


def _tail(fp, lo):
    return integrate.quad(fp, lo, np.inf, epsabs=1e-15, epsrel=1e-13, limit=200)[0]


def count_sign_changes(a: ShapeAnsatz, domain=None) -> int:
    """Number of sign changes of f' inside ``domain`` (roots strictly inside)."""
    lo, hi = domain if domain is not None else (a.E_thr, math.inf)
    return sum(1 for r in a.roots if lo < r < hi)


def eval_f_closed(a: ShapeAnsatz, E):
    """f(E) through regularised incomplete Beta functions; gamma must vanish.

    int_0^x t^(c-1) (1 + t/Ebar)^(-beta) dt = Ebar^c B(c, beta - c) I_u(c, beta - c)
    with u = x / (x + Ebar).  Past u = 1/2 the complementary form -int_E^inf f'
    is used, which relies on int f' dE = 0 and avoids cancellation in the tail.
    """
    if any(a.gamma_coeffs):
        raise ValueError("closed form requires gamma == 0")
    E = np.asarray(E, dtype=float)
    x = np.maximum(E - a.E_thr, 0.0)
    u = x / (x + a.Ebar)
    upper = u > 0.5
    coeffs = np.poly([r - a.E_thr for r in a.roots])[::-1]
    total = np.zeros_like(u)
    for k, ck in enumerate(coeffs):
        c = a.nu + k
        logb = special.betaln(c, a.beta - c) + c * math.log(a.Ebar)
        inc = np.where(upper, -special.betaincc(c, a.beta - c, u), special.betainc(c, a.beta - c, u))
        total = total + ck * math.exp(logb) * inc
    out = a.C * total
    return out if out.ndim else float(out)
