"""Experiment matrices for the free-particle test problem.

Each ``reproduce_*`` function runs one group of inversions and returns a
:class:`Report`: a list of checks (published value, computed value,
acceptance bound, verdict) plus per-run records.  Published numbers are kept
for comparison only; verdicts use the acceptance bounds.
"""

from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baseline, metrics, serialize
from .ansatz import eval_f
from .fitter import FitResult, ScanConfig, fit
from .kernels import KernelSpec
from .model_problem import (ModelProblem, SampledInput, exact_f, exact_input, galerkin_input,
                            noisy_input)

PROBLEM = ModelProblem()
LAPLACE_TAU = 0.05
LAPLACE_SEEDS = 11
LAPLACE_LEVELS = 6


@dataclass
class Check:
    label: str
    quantity: str
    computed: float
    bound: str = ""
    passed: bool | None = None  # None marks an informational row
    published: float | None = None

    @property
    def verdict(self) -> str:
        return {True: "pass", False: "FAIL", None: "info"}[self.passed]


def at_most(label, quantity, value, bound, published=None):
    return Check(label, quantity, value, f"<= {bound:.3g}", bool(value <= bound), published)


def at_least(label, quantity, value, bound, published=None):
    return Check(label, quantity, value, f">= {bound:.3g}", bool(value >= bound), published)


def within(label, quantity, value, lo, hi, published=None):
    return Check(label, quantity, value, f"in [{lo:.3g}, {hi:.3g}]", bool(lo <= value <= hi), published)


def holds(label, statement, flag):
    return Check(label, statement, float(bool(flag)), "true", bool(flag))


def info(label, quantity, value, published=None):
    return Check(label, quantity, value, "", None, published)


@dataclass
class Report:
    name: str
    checks: list[Check] = field(default_factory=list)
    runs: list[dict] = field(default_factory=list)
    converged: bool = True
    files: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    @property
    def ok(self) -> bool:
        return self.passed and self.converged

    def table(self) -> str:
        head = f"{'run':<28} {'quantity':<34} {'published':>10} {'computed':>11} {'bound':>20}  verdict"
        lines = [head, "-" * len(head)]
        for c in self.checks:
            published = f"{c.published:.3g}" if c.published is not None else "-"
            lines.append(f"{c.label:<28} {c.quantity:<34} {published:>10} {c.computed:>11.3e} "
                         f"{c.bound:>20}  {c.verdict}")
        if not self.converged:
            lines.append("note: at least one fit did not converge")
        return "\n".join(lines)

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        path = out / f"{self.name}_comparison.csv"
        out.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["run", "quantity", "published", "computed", "bound", "verdict"])
            for c in self.checks:
                w.writerow([c.label, c.quantity, "" if c.published is None else f"{c.published:.6e}",
                            f"{c.computed:.17e}", c.bound, c.verdict])
        js = serialize.write_json(out / f"{self.name}_report.json", {
            "name": self.name, "passed": self.passed, "converged": self.converged,
            "checks": [vars(c) | {"verdict": c.verdict} for c in self.checks],
            "runs": self.runs,
        })
        return [path, js, *map(Path, self.files)]


@dataclass
class Inversion:
    data: SampledInput
    result: FitResult
    chi: metrics.ChiReport

    @property
    def ansatz(self):
        return self.result.ansatz

    def record(self, label) -> dict:
        a = self.ansatz
        return {"label": label, "provenance": str(self.data.provenance),
                "kernel": self.data.kernel.to_dict(), "chi": self.chi.to_dict(),
                "ansatz": a.to_dict(), "converged": self.result.converged,
                "mode": self.result.mode}


def invert(data: SampledInput, config: ScanConfig | None = None, exact: SampledInput | None = None,
           problem: ModelProblem = PROBLEM) -> Inversion:
    """Fit ``data`` and score the result against the exact solution and input."""
    config = config or ScanConfig(sum_rule_value=problem.S)
    res = fit(data, config)
    chi_sol = metrics.chi_solution(lambda E: exact_f(problem, E), lambda E: eval_f(res.ansatz, E))
    chi_in = metrics.chi_input(exact.phi, data.phi) if exact is not None else None
    report = metrics.ChiReport(chi_in, res.chi_fit, chi_sol, metrics.N1, len(data))
    return Inversion(data, res, report)


def _rel(x, ref):
    return abs(x / ref - 1.0)


# ---------------------------------------------------------------- Lorentz


def reproduce_table1(problem=PROBLEM, Ns=(5, 8, 9, 10), **_) -> Report:
    """Standard inversion of the exact sigma_I = 10 MeV input."""
    published = {5: (8.3e-4, 5.2e-2), 8: (2.3e-5, 1.4e-2), 9: (6.2e-6, 1.3e-2), 10: (4.1e-6, 2.65e-2)}
    data = exact_input(problem, KernelSpec.lorentz(10.0))
    rows = baseline.sweep(data, Ns, f_true=lambda E: exact_f(problem, E))
    rep = Report("table1")
    for r in rows:
        pf, ps = published.get(r.N, (None, None))
        rep.checks.append(info(f"N={r.N} alpha={r.alpha:.4g}", "chi_fit", r.chi_fit, pf))
        rep.checks.append(info(f"N={r.N} alpha={r.alpha:.4g}", "chi_solution", r.chi_solution, ps))
        rep.runs.append(vars(r))
    chis = {r.N: r.chi_solution for r in rows}
    best_N = min(chis, key=chis.get)
    rep.checks.append(within("sweep", "min chi_solution", chis[best_N], 5e-3, 5e-2, 1.3e-2))
    rep.checks.append(holds("sweep", f"argmin N={best_N} < {max(Ns)}", best_N < max(Ns)))
    if 9 in chis and 10 in chis:
        rep.checks.append(holds("sweep", "chi_solution(10) > chi_solution(9)", chis[10] > chis[9]))
    return rep


def reproduce_table2(problem=PROBLEM, workers=1, **_) -> Report:
    """New method, exact Lorentz inputs at three kernel widths."""
    published = {2.0: (1.4e-7, 1.6e-8), 10.0: (1.45e-7, 2.1e-8), 100.0: (7.5e-8, 3.3e-7)}
    rep = Report("table2")
    for sI, (pf, ps) in published.items():
        label = f"sigma_I={sI:g}"
        data = exact_input(problem, KernelSpec.lorentz(sI))
        inv = invert(data, ScanConfig(sum_rule_value=problem.S, workers=workers), problem=problem)
        a = inv.ansatz
        rep.converged &= inv.result.converged
        rep.checks += [
            at_most(label, "chi_fit", inv.chi.chi_fit, 1e-6, pf),
            at_most(label, "chi_solution", inv.chi.chi_solution, 1e-6, ps),
            at_most(label, "rel. error Ebar (vs E0)", _rel(a.Ebar, problem.E0), 1e-3),
            at_most(label, "rel. error beta (vs 5)", _rel(a.beta, 5.0), 1e-3),
            at_most(label, "rel. error E1 (vs E0/7)", _rel(a.roots[0], problem.E0 / 7), 1e-3),
        ]
        rep.runs.append(inv.record(label))
    return rep


def reproduce_table3(problem=PROBLEM, workers=1, **_) -> Report:
    """Truncated-basis Lorentz inputs: standard inversion versus the new method."""
    rep = Report("table3")
    spec = KernelSpec.lorentz(10.0)
    data = galerkin_input(problem, spec, 10)
    published = {2: (8.0e-2, 0.22), 3: (2.6e-2, 0.12), 4: (2.6e-2, 0.13), 5: (1.35e-2, 0.71)}
    rows = baseline.sweep(data, sorted(published), f_true=lambda E: exact_f(problem, E))
    for r in rows:
        pf, ps = published[r.N]
        rep.checks.append(info(f"standard N={r.N}", "chi_fit", r.chi_fit, pf))
        rep.checks.append(info(f"standard N={r.N}", "chi_solution", r.chi_solution, ps))
        rep.runs.append(vars(r))
    rep.checks.append(at_least("standard N=2..5", "best chi_solution",
                               min(r.chi_solution for r in rows), 0.08, 0.12))

    cases = [  # sigma_I, N0, (chi_input, chi_fit, chi_solution) published, solution bound
        (10.0, 10, (3.0e-2, 2.9e-2, 1.65e-2), 5e-2),
        (2.0, 60, (2.6e-2, 2.6e-2, 8.6e-4), 5e-3),
        (100.0, 3, (1.55e-3, 4.8e-5, 7.7e-3), 2e-2),
        (100.0, 10, (9.3e-8, 2.1e-8, 2.1e-6), 1e-4),
    ]
    for sI, N0, (pin, pfit, psol), bound in cases:
        label = f"new sigma_I={sI:g} N0={N0}"
        spec = KernelSpec.lorentz(sI)
        inv = invert(galerkin_input(problem, spec, N0),
                     ScanConfig(sum_rule_value=problem.S, workers=workers),
                     exact_input(problem, spec), problem)
        rep.converged &= inv.result.converged
        if sI == 10.0 and N0 == 10:
            rep.checks.append(within(label, "chi_input", inv.chi.chi_input, 2e-2, 4e-2, pin))
        else:
            rep.checks.append(info(label, "chi_input", inv.chi.chi_input, pin))
        rep.checks.append(info(label, "chi_fit", inv.chi.chi_fit, pfit))
        rep.checks.append(at_most(label, "chi_solution", inv.chi.chi_solution, bound, psol))
        rep.runs.append(inv.record(label))
    return rep


def reproduce_fig1(problem=PROBLEM, out=None, workers=1, **_) -> Report:
    """sigma_I = 100 MeV, N0 = 3: input curve and both solutions as CSV."""
    rep = Report("fig1")
    spec = KernelSpec.lorentz(100.0)
    data = galerkin_input(problem, spec, 3)
    inv = invert(data, ScanConfig(sum_rule_value=problem.S, workers=workers),
                 exact_input(problem, spec), problem)
    rep.converged &= inv.result.converged
    flat = float(data.phi.max() / data.phi.min() - 1.0)
    rep.checks += [
        info("sigma_I=100 N0=3", "chi_input", inv.chi.chi_input, 1.55e-3),
        info("sigma_I=100 N0=3", "chi_fit", inv.chi.chi_fit, 4.8e-5),
        at_most("sigma_I=100 N0=3", "chi_solution", inv.chi.chi_solution, 2e-2, 7.7e-3),
        # the exact transform itself varies by 5.7% over the window, so this is reported only
        info("sigma_I=100 N0=3", "input max/min - 1", flat),
    ]
    rep.runs.append(inv.record("sigma_I=100 N0=3"))
    if out is not None:
        out = Path(out)
        E = np.linspace(0.0, 42.0, 211)
        rep.files += [
            str(serialize.write_csv(out / "fig1_input.csv", ["sigma", "phi_appr"], [data.sigma, data.phi])),
            str(serialize.write_csv(out / "fig1_exact_solution.csv", ["E", "f"], [E, exact_f(problem, E)])),
            str(serialize.write_csv(out / "fig1_approx_solution.csv", ["E", "f_appr"],
                                    [E, eval_f(inv.ansatz, E)])),
        ]
    return rep


# ---------------------------------------------------------------- Stieltjes


def reproduce_stieltjes(problem=PROBLEM, workers=1, **_) -> Report:
    rep = Report("stieltjes")
    cases = [  # s_max, N0, published (chi_input, chi_fit, chi_solution), solution bound
        (-2.0, None, (None, 3.45e-12, 3.9e-11), 1e-8),
        (-2.0, 5, (1.3e-2, 5.5e-3, 0.10), None),
        (-2.0, 7, (2.2e-3, 1.4e-3, 1.5e-2), 5e-2),
        (-2.0, 10, (1.2e-3, 1.4e-4, 1.1e-3), None),
        (-10.0, 10, (1.4e-7, 9.9e-8, 2.2e-6), None),
        (-20.0, 10, (2.3e-9, 1.5e-9, 1.0e-7), 1e-6),
    ]
    for s_max, N0, (pin, pfit, psol), bound in cases:
        spec = KernelSpec.stieltjes(s_max)
        exact = exact_input(problem, spec)
        data = exact if N0 is None else galerkin_input(problem, spec, N0)
        label = f"s_max={s_max:g} " + ("exact" if N0 is None else f"N0={N0}")
        inv = invert(data, ScanConfig(sum_rule_value=problem.S, workers=workers),
                     None if N0 is None else exact, problem)
        rep.converged &= inv.result.converged
        if N0 is not None:
            rep.checks.append(info(label, "chi_input", inv.chi.chi_input, pin))
        rep.checks.append(info(label, "chi_fit", inv.chi.chi_fit, pfit))
        if bound is None:
            rep.checks.append(info(label, "chi_solution", inv.chi.chi_solution, psol))
        else:
            rep.checks.append(at_most(label, "chi_solution", inv.chi.chi_solution, bound, psol))
        rep.runs.append(inv.record(label))
    return rep


# ---------------------------------------------------------------- Laplace


def laplace_config(problem=PROBLEM, workers=1) -> ScanConfig:
    """Grid-only search, as used for the Laplace inversions."""
    return ScanConfig(sum_rule_value=problem.S, skip_refine=True, levels=LAPLACE_LEVELS,
                      workers=workers)


def reproduce_laplace(problem=PROBLEM, seed=0, workers=1, tau=LAPLACE_TAU,
                      n_seeds=LAPLACE_SEEDS, **_) -> Report:
    rep = Report("laplace")
    spec = KernelSpec.laplace()
    exact = exact_input(problem, spec)
    cfg = laplace_config(problem, workers)
    inv = invert(exact, cfg, problem=problem)
    rep.converged &= inv.result.converged
    rep.checks += [
        info("exact grid-only", "chi_fit", inv.chi.chi_fit, 2.6e-6),
        at_most("exact grid-only", "chi_solution", inv.chi.chi_solution, 1e-4, 8.0e-6),
    ]
    rep.runs.append(inv.record("exact grid-only"))
    seed = 0 if seed is None else int(seed)
    sols, fits = [], []
    for s in range(seed, seed + n_seeds):
        noisy = noisy_input(exact, tau, s)
        inv = invert(noisy, cfg, exact, problem)
        rep.converged &= inv.result.converged
        sols.append(inv.chi.chi_solution)
        fits.append(inv.chi.chi_fit)
        rep.runs.append(inv.record(f"tau={tau:g} seed={s}"))
    label = f"tau={tau:g} seeds {seed}..{seed + n_seeds - 1}"
    worst = max(max(f / tau, tau / f) for f in fits)
    rep.checks += [
        at_most(label, "median chi_solution", statistics.median(sols), 3e-2, 8.9e-3),
        info(label, "median chi_fit", statistics.median(fits), 4.9e-2),
        at_most(label, "max factor between chi_fit and tau", worst, 1.5),
    ]
    return rep


REPRODUCERS = {
    "table1": reproduce_table1,
    "table2": reproduce_table2,
    "table3": reproduce_table3,
    "fig1": reproduce_fig1,
    "stieltjes": reproduce_stieltjes,
    "laplace": reproduce_laplace,
}


def saturation(data: SampledInput, config: ScanConfig, Ms=(2, 3, 4, 6), f_true=None) -> list[dict]:
    """chi_fit (and chi_solution when f_true is known) against the parameter count M.

    M counts Ebar, beta, the free roots, the gamma coefficients and, without
    a sum rule, the amplitude C.  Extra parameters beyond the minimum are
    spent on gamma coefficients.
    """
    base = 2 + (config.N - 1) + (0 if config.sum_rule_active else 1)
    rows = []
    for M in Ms:
        K = M - base
        if K < 0:
            rows.append({"M": M, "K_gamma": None, "chi_fit": math.nan, "note": "below minimum"})
            continue
        cfg = ScanConfig.from_dict({**config.to_dict(), "K_gamma": K})
        res = fit(data, cfg)
        row = {"M": M, "K_gamma": K, "chi_fit": res.chi_fit, "converged": res.converged}
        if f_true is not None:
            row["chi_solution"] = metrics.chi_solution(f_true, lambda E: eval_f(res.ansatz, E))
        rows.append(row)
    return rows
