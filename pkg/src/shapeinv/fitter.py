"""Constrained weighted least squares for the shape ansatz.

The free parameters are log(Ebar), beta, the non-eliminated roots and the
gamma coefficients.  roots[0] is always fixed by int f' dE = 0 and C either
by the sum rule or, when no sum rule is supplied, by the linear
least-squares optimum for the current shape.

The search is a nested grid over (Ebar, beta) with gamma switched off,
followed by a trust-region least-squares refinement of the best seeds.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize

from . import metrics
from .ansatz import (ConstraintError, ShapeAnsatz, _fprime_unchecked, constrained,
                     count_sign_changes, eval_f_closed)
from .forward_map import default_rule, ktilde_matrix
from .kernels import Family
from .model_problem import SampledInput

_FAIL = 1e3


@dataclass
class ScanConfig:
    N: int = 1
    nu: float = 0.5
    K_gamma: int = 0
    E_thr: float = 0.0
    Ebar_range: tuple[float, float] | None = None
    beta_range: tuple[float, float] | None = None
    points: int = 20
    levels: int = 3
    k: int = 1
    skip_refine: bool = False
    sum_rule_active: bool = True
    sum_rule_value: float | None = 0.25
    other_roots: tuple[float, ...] = ()
    f_cap: float | None = None
    workers: int = 1

    def __post_init__(self):
        self.other_roots = tuple(self.other_roots)
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if len(self.other_roots) != self.N - 1:
            raise ValueError(f"N={self.N} needs {self.N - 1} initial values for the free roots")
        if self.sum_rule_active and self.sum_rule_value is None:
            raise ValueError("active sum rule needs a value")
        if self.points < 2 or self.levels < 0 or self.k < 1:
            raise ValueError("points >= 2, levels >= 0 and k >= 1 are required")
        if self.beta_range is not None and not self.beta_range[0] > self.beta_min:
            raise ValueError(f"beta grid must stay above {self.beta_min}")

    @property
    def beta_min(self) -> float:
        """Smallest admissible beta (exclusive)."""
        return self.N + self.nu + (1.0 if self.sum_rule_active else 0.0)

    @property
    def S(self):
        return self.sum_rule_value if self.sum_rule_active else None

    def grid_bounds(self, data: SampledInput):
        scale = data.kernel.energy_scale
        Eb = self.Ebar_range or (scale / 16.0, 16.0 * scale)
        be = self.beta_range or (self.beta_min + 0.25, 14.0)
        return tuple(map(float, Eb)), tuple(map(float, be))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sum_rule"] = {"active": d.pop("sum_rule_active"), "value": d.pop("sum_rule_value")}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScanConfig":
        d = dict(d)
        sr = d.pop("sum_rule", None)
        if sr is not None:
            d["sum_rule_active"] = bool(sr.get("active", True))
            d["sum_rule_value"] = sr.get("value")
        for key in ("Ebar_range", "beta_range", "other_roots"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        known = cls.__dataclass_fields__
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown scan config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class FitResult:
    ansatz: ShapeAnsatz
    chi_fit: float
    residuals: np.ndarray
    scan_trace: list = field(default_factory=list)
    converged: bool = False
    mode: str = "grid"
    objective: float = math.nan
    n_evaluations: int = 0

    def to_dict(self) -> dict:
        return {
            "ansatz": self.ansatz.to_dict(),
            "chi_fit": self.chi_fit,
            "objective": self.objective,
            "residuals": [float(r) for r in self.residuals],
            "scan_trace": [[list(p), float(v)] for p, v in self.scan_trace],
            "converged": self.converged,
            "mode": self.mode,
            "n_evaluations": self.n_evaluations,
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


class Problem:
    """Objective machinery for one input and one configuration."""

    def __init__(self, data: SampledInput, config: ScanConfig):
        self.data = data
        self.config = config
        spec = data.kernel
        self.A, self.rule = ktilde_matrix(spec, data.sigma, default_rule(spec, config.E_thr))
        self.sqrt_w = np.sqrt(data.weights)
        if spec.family is Family.LAPLACE:
            z = data.sigma
            self.mask = z > 0
            self.scale = np.where(self.mask, 1.0 / np.where(self.mask, z, 1.0), 0.0)
        else:
            self.mask = np.ones(len(data), dtype=bool)
            self.scale = np.ones(len(data))
        self.n_eval = 0

    # parameter vector: log Ebar, beta, free roots, gamma coefficients
    def pack(self, a: ShapeAnsatz) -> np.ndarray:
        return np.array([math.log(a.Ebar), a.beta, *a.roots[1:], *a.gamma_coeffs])

    def build(self, theta) -> ShapeAnsatz:
        cfg = self.config
        n_free = cfg.N - 1
        Ebar = math.exp(theta[0])
        beta = float(theta[1])
        roots = tuple(theta[2:2 + n_free])
        gam = tuple(theta[2 + n_free:])
        a = constrained(Ebar, beta, N=cfg.N, nu=cfg.nu, E_thr=cfg.E_thr, other_roots=roots,
                        gamma_coeffs=gam, S=cfg.S)
        if cfg.S is None:
            m = self.model(a.replace(C=1.0))
            w = self.data.weights * self.mask
            den = float(np.sum(w * m * m))
            if den == 0:
                raise ConstraintError("model vanishes on the input grid")
            a = a.replace(C=float(np.sum(w * self.data.phi * m)) / den)
        return a

    def model(self, a: ShapeAnsatz) -> np.ndarray:
        """(K f)(sigma_i); zero where the Laplace point z = 0 carries no equation."""
        self.n_eval += 1
        return (self.A @ _fprime_unchecked(a, self.rule.nodes)) * self.scale

    def residuals(self, a: ShapeAnsatz) -> np.ndarray:
        m = self.model(a)
        return np.where(self.mask, self.sqrt_w * (self.data.phi - m), 0.0)

    def relative_residuals(self, a: ShapeAnsatz) -> np.ndarray:
        m = self.model(a)
        return np.where(self.mask, (self.data.phi - m) / self.data.phi, 0.0)

    def model_for_metrics(self, a: ShapeAnsatz) -> np.ndarray:
        """Model values with the z = 0 Laplace point pinned to Phi_appr."""
        m = self.model(a)
        return np.where(self.mask, m, self.data.phi)

    def objective(self, a: ShapeAnsatz) -> float:
        r = self.residuals(a)
        return float(r @ r)

    def result(self, a, trace=(), converged=False, mode="grid") -> FitResult:
        model = self.model_for_metrics(a)
        r = self.relative_residuals(a)
        return FitResult(a, metrics.chi_fit(self.data.phi, model), r, list(trace), converged,
                         mode, self.objective(a), self.n_eval)


def objective(a: ShapeAnsatz, data: SampledInput, config: ScanConfig | None = None) -> float:
    """sum_i w_i (Phi_i - (K f)(sigma_i))^2 for a constrained ansatz."""
    config = config or ScanConfig(N=a.N, nu=a.nu, E_thr=a.E_thr,
                                  other_roots=a.roots[1:], sum_rule_active=False)
    return Problem(data, config).objective(a)


def _cell(problem: Problem, Ebar, beta):
    cfg = problem.config
    try:
        theta = [math.log(Ebar), beta, *cfg.other_roots, *([0.0] * cfg.K_gamma)]
        a = problem.build(theta)
        if cfg.f_cap is not None:
            E = metrics.solution_grid()
            if np.max(np.abs(eval_f_closed(a.replace(gamma_coeffs=()), E))) > cfg.f_cap:
                return math.inf, None
        val = problem.objective(a)
    except (ConstraintError, ValueError, FloatingPointError, ZeroDivisionError):
        return math.inf, None
    return (val if math.isfinite(val) else math.inf), a


def grid_scan(data: SampledInput, config: ScanConfig, problem: Problem | None = None,
              max_shifts: int = 25, top_cells: int = 3):
    """Nested log-spaced (Ebar, beta) scan with gamma = 0.

    Each level re-grids the neighbourhood [i-1, i+1] of the best cell with
    the same number of points, which is about ten times finer.  If the best
    cell of a refined grid sits on an edge of its box (and not on the outer
    bounds) the box is first moved, unshrunk, to be centred on that cell; this
    follows the narrow, correlated valleys the objective has in (Ebar, beta).
    Returns the best ``config.k`` grid points as FitResult seeds, best first.
    """
    problem = problem or Problem(data, config)
    (E_min, E_max), (b_min, b_max) = config.grid_bounds(data)
    lE_min, lE_max, lb_min, lb_max = map(math.log, (E_min, E_max, b_min, b_max))
    trace = []
    found = {}
    n = config.points
    # boxes live in log coordinates: (lE_lo, lE_hi, lb_lo, lb_hi)
    box = (lE_min, lE_max, lb_min, lb_max)
    level = 0
    shifts = 0
    while True:
        Eb_axis = np.exp(np.linspace(box[0], box[1], n))
        be_axis = np.exp(np.linspace(box[2], box[3], n))
        cells = [(Eb, be) for Eb in Eb_axis for be in be_axis]
        if config.workers > 1:
            with ThreadPoolExecutor(config.workers) as ex:
                vals = list(ex.map(lambda c: _cell(problem, *c), cells))
        else:
            vals = [_cell(problem, *c) for c in cells]
        for (Eb, be), (v, a) in zip(cells, vals):
            trace.append(((float(Eb), float(be)), v))
            if a is not None:
                found[(float(Eb), float(be))] = (v, a)
        order = sorted((vals[i * n + j][0], Eb, be, i, j)
                       for i, Eb in enumerate(Eb_axis) for j, be in enumerate(be_axis))
        top = [c for c in order[:top_cells] if math.isfinite(c[0])]
        if not top:
            break
        dE = (box[1] - box[0]) / (n - 1)
        db = (box[3] - box[2]) / (n - 1)
        lo_E = min(math.log(c[1]) for c in top) - dE
        hi_E = max(math.log(c[1]) for c in top) + dE
        lo_b = min(math.log(c[2]) for c in top) - db
        hi_b = max(math.log(c[2]) for c in top) + db
        _, _, _, i, j = top[0]
        tol = 1e-12
        edge = ((i == 0 and box[0] > lE_min + tol) or (i == n - 1 and box[1] < lE_max - tol)
                or (j == 0 and box[2] > lb_min + tol) or (j == n - 1 and box[3] < lb_max - tol))
        if level > 0 and edge and shifts < max_shifts:
            shifts += 1
            cE, cb = math.log(Eb_axis[i]), math.log(be_axis[j])
            hE, hb = 0.5 * (box[1] - box[0]), 0.5 * (box[3] - box[2])
            box = _clip_box(cE - hE, cE + hE, cb - hb, cb + hb, lE_min, lE_max, lb_min, lb_max)
            continue
        if level == config.levels:
            break
        level += 1
        box = _clip_box(lo_E, hi_E, lo_b, hi_b, lE_min, lE_max, lb_min, lb_max)
    if not found:
        raise ConstraintError("no admissible grid cell")
    ranked = sorted(found.items(), key=lambda kv: (kv[1][0], kv[0][0], kv[0][1]))
    seeds = []
    for _, (_, a) in ranked[:config.k]:
        seeds.append(problem.result(a, trace, converged=True, mode="grid"))
    return seeds


def _clip_box(e_lo, e_hi, b_lo, b_hi, E_min, E_max, b_min, b_max):
    """Shift a box back inside the outer bounds without changing its size."""
    def fit1(lo, hi, vmin, vmax):
        width = min(hi - lo, vmax - vmin)
        lo = min(max(lo, vmin), vmax - width)
        return lo, lo + width
    return (*fit1(e_lo, e_hi, E_min, E_max), *fit1(b_lo, b_hi, b_min, b_max))


def refine(seed: FitResult, data: SampledInput, config: ScanConfig,
           problem: Problem | None = None, max_nfev: int = 400) -> FitResult:
    """Local least-squares polish of all free parameters from a grid seed."""
    if config.skip_refine:
        return seed
    problem = problem or Problem(data, config)
    a0 = seed.ansatz
    if a0.K_gamma < config.K_gamma:
        a0 = a0.replace(gamma_coeffs=a0.gamma_coeffs + (0.0,) * (config.K_gamma - a0.K_gamma))
    x0 = problem.pack(a0)
    n = len(x0)
    lower = np.full(n, -np.inf)
    upper = np.full(n, np.inf)
    lower[1] = config.beta_min + 1e-9
    upper[1] = 500.0
    x0[1] = max(x0[1], lower[1] + 1e-6)

    def fun(theta):
        try:
            r = problem.residuals(problem.build(theta))
        except (ConstraintError, ValueError, FloatingPointError, ZeroDivisionError):
            return np.full(len(data), _FAIL)
        return r if np.all(np.isfinite(r)) else np.full(len(data), _FAIL)

    with np.errstate(all="ignore"):
        res = optimize.least_squares(fun, x0, jac="3-point", bounds=(lower, upper),
                                     method="trf", diff_step=1e-6, x_scale="jac",
                                     ftol=1e-12, xtol=1e-10, gtol=1e-15, max_nfev=max_nfev)
    try:
        a = problem.build(res.x)
    except (ConstraintError, ValueError):
        return seed
    out = problem.result(a, seed.scan_trace, converged=bool(res.status > 0), mode="refined")
    if not out.objective <= seed.objective:
        seed.mode = "refined"
        seed.converged = bool(res.status > 0)
        return seed
    return out


def fit(data: SampledInput, config: ScanConfig | None = None) -> FitResult:
    """Grid scan followed by refinement of every seed; best result wins."""
    config = config or ScanConfig()
    problem = Problem(data, config)
    seeds = grid_scan(data, config, problem)
    if config.skip_refine:
        best = seeds[0]
        best.mode = "grid-only"
        return best
    results = [refine(s, data, config, problem) for s in seeds]
    best = min(results, key=lambda r: r.objective)
    if count_sign_changes(best.ansatz) != config.N:
        best.converged = False
    return best
