"""Command-line front end.

    shapeinv generate-input --family lorentz --sigma-i 10 --exact
    shapeinv invert --input input.csv
    shapeinv baseline --input input.csv --N 2 3 4 5
    shapeinv reproduce table2

Exit status is 0 when every computation converged and every validation
passed, 1 when a fit or acceptance check failed and 2 for usage or I/O errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import baseline, experiments, metrics, serialize
from .ansatz import eval_f
from .fitter import ScanConfig, fit
from .kernels import LAPLACE_ZMAX, LORENTZ_RANGE, STIELTJES_WIDTH, DomainError, Family, KernelSpec
from .model_problem import (ModelProblem, ProvenanceKind, exact_f, exact_input, galerkin_input,
                            noisy_input)
from .quadrature import QuadratureError

log = logging.getLogger("shapeinv")

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _add_globals(p, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--config", type=Path, default=d(None), help="JSON run configuration")
    p.add_argument("--out", type=Path, default=d(Path(".")), help="output directory")
    p.add_argument("--threads", type=int, default=d(1), help="worker cap for grid scans")
    p.add_argument("--seed", type=int, default=d(None), help="seed for noise generation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shapeinv",
        description="Invert first-kind integral transforms with a shape-constrained ansatz.")
    _add_globals(parser, suppress=False)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate-input", help="write a sampled transform and its sidecar")
    _add_globals(g, suppress=True)
    g.add_argument("--family", choices=[f.value for f in Family], required=True)
    g.add_argument("--sigma-i", type=float, help="Lorentz width (MeV)")
    g.add_argument("--s-max", type=float, default=-2.0, help="upper end of the Stieltjes window (MeV)")
    g.add_argument("--z-max", type=float, default=LAPLACE_ZMAX, help="upper end of the Laplace window (1/MeV)")
    g.add_argument("--n-samples", type=int, default=100)
    g.add_argument("--eta", type=float, default=1.0, help="source range parameter (1/fm)")
    src = g.add_mutually_exclusive_group()
    src.add_argument("--exact", action="store_true", help="exact transform (default)")
    src.add_argument("--galerkin", type=int, metavar="N0", help="truncated Laguerre basis of size N0")
    g.add_argument("--noise", type=float, metavar="TAU", help="multiplicative Gaussian noise level")
    g.add_argument("--output", type=Path, help="CSV path (default <out>/input.csv)")

    i = sub.add_parser("invert", help="fit the shape ansatz to an input file")
    _add_globals(i, suppress=True)
    i.add_argument("--input", type=Path, required=True)
    i.add_argument("--N", type=int, help="number of extrema of f")
    i.add_argument("--nu", type=float, help="threshold exponent")
    i.add_argument("--k-gamma", type=int, help="number of gamma coefficients")
    i.add_argument("--levels", type=int, help="grid refinement levels")
    i.add_argument("--points", type=int, help="grid points per axis")
    i.add_argument("--grid-only", action="store_true", help="skip the local refinement")
    rule = i.add_mutually_exclusive_group()
    rule.add_argument("--no-sum-rule", action="store_true", help="fit C instead of fixing it")
    rule.add_argument("--sum-rule", type=float, metavar="S", help="value of int f dE")
    i.add_argument("--saturation", action="store_true",
                   help="also report chi_fit for M = 2, 3, 4, 6 free parameters")
    i.add_argument("--prefix", default="", help="prefix for output file names")

    b = sub.add_parser("baseline", help="standard expansion inversion over a list of N")
    _add_globals(b, suppress=True)
    b.add_argument("--input", type=Path, required=True)
    b.add_argument("--N", type=int, nargs="+", default=[2, 3, 4, 5, 6, 7, 8, 9, 10])
    b.add_argument("--alpha-min", type=float, default=0.01)
    b.add_argument("--alpha-max", type=float, default=2.0)
    b.add_argument("--alpha-points", type=int, default=40)

    r = sub.add_parser("reproduce", help="run one experiment matrix and compare with published values")
    _add_globals(r, suppress=True)
    r.add_argument("name", choices=sorted(experiments.REPRODUCERS))
    return parser


# ----------------------------------------------------------------- commands


def _config(args) -> dict:
    if args.config is None:
        return {}
    cfg = serialize.read_json(args.config)
    if not isinstance(cfg, dict):
        raise UsageError(f"{args.config}: configuration must be a JSON object")
    return cfg


def cmd_generate_input(args) -> int:
    fam = Family(args.family)
    if fam is Family.LORENTZ:
        if args.sigma_i is None:
            raise UsageError("--sigma-i is required for the Lorentz family")
        spec = KernelSpec.lorentz(args.sigma_i, LORENTZ_RANGE, args.n_samples)
    elif fam is Family.STIELTJES:
        spec = KernelSpec.stieltjes(args.s_max, STIELTJES_WIDTH, args.n_samples)
    else:
        spec = KernelSpec.laplace(args.z_max, args.n_samples)
    p = ModelProblem(eta=args.eta)
    if args.galerkin is not None:
        data = galerkin_input(p, spec, args.galerkin)
    else:
        data = exact_input(p, spec)
    if args.noise is not None:
        if args.seed is None:
            raise UsageError("--noise needs --seed for a reproducible draw")
        data = noisy_input(data, args.noise, args.seed)
    path = args.output or args.out / "input.csv"
    serialize.write_input(data, path, p)
    print(f"wrote {path} ({len(data)} samples, {data.provenance})")
    return EXIT_OK


def _scan_config(args, cfg: dict, problem: ModelProblem | None) -> ScanConfig:
    scan = dict(cfg.get("scan", {}))
    for key, val in (("N", args.N), ("nu", args.nu), ("K_gamma", args.k_gamma),
                     ("levels", args.levels), ("points", args.points)):
        if val is not None:
            scan[key] = val
    if args.grid_only:
        scan["skip_refine"] = True
    if args.no_sum_rule:
        scan["sum_rule"] = {"active": False, "value": None}
    elif args.sum_rule is not None:
        scan["sum_rule"] = {"active": True, "value": args.sum_rule}
    elif "sum_rule" not in scan:
        scan["sum_rule"] = ({"active": True, "value": problem.S} if problem is not None
                            else {"active": False, "value": None})
    N = scan.get("N", 1)
    if "other_roots" not in scan and N > 1:
        raise UsageError("N > 1 needs initial values for the free roots (scan.other_roots in --config)")
    scan["workers"] = args.threads
    return ScanConfig.from_dict(scan)


def cmd_invert(args) -> int:
    data, problem = serialize.read_input(args.input)
    cfg = _scan_config(args, _config(args), problem)
    res = fit(data, cfg)
    out = args.out
    pre = args.prefix
    E = metrics.solution_grid()
    f_appr = eval_f(res.ansatz, E)
    f_true = exact_f(problem, E) if problem is not None else None
    chi_in = None
    if problem is not None and data.provenance.kind is not ProvenanceKind.EXACT:
        exact = exact_input(problem, data.kernel)
        if np.array_equal(exact.sigma, data.sigma):
            chi_in = metrics.chi_input(exact.phi, data.phi)
    chi_sol = metrics.chi_solution(f_true, f_appr) if f_true is not None else None
    report = metrics.ChiReport(chi_in, res.chi_fit, chi_sol, len(E), len(data))
    serialize.write_json(out / f"{pre}fit_result.json", res.to_dict() | {"config": cfg.to_dict()})
    serialize.write_solution(out / f"{pre}solution.csv", E, f_appr, f_true)
    serialize.write_json(out / f"{pre}chi_report.json", report.to_dict())
    a = res.ansatz
    print(f"mode={res.mode} converged={res.converged} Ebar={a.Ebar:.10g} beta={a.beta:.10g} "
          f"roots={[round(r, 10) for r in a.roots]}")
    print(f"chi_fit={res.chi_fit:.3e}" + (f" chi_solution={chi_sol:.3e}" if chi_sol is not None else "")
          + (f" chi_input={chi_in:.3e}" if chi_in is not None else ""))
    if args.saturation:
        ftrue = (lambda x: exact_f(problem, x)) if problem is not None else None
        rows = experiments.saturation(data, cfg, f_true=ftrue)
        serialize.write_json(out / f"{pre}saturation.json", rows)
        for row in rows:
            print(f"  M={row['M']} K_gamma={row['K_gamma']} chi_fit={row['chi_fit']:.3e}"
                  + (f" chi_solution={row['chi_solution']:.3e}" if "chi_solution" in row else ""))
    return EXIT_OK if res.converged else EXIT_FAILED


def cmd_baseline(args) -> int:
    data, problem = serialize.read_input(args.input)
    cfg = _config(args)
    alphas = cfg.get("alpha_grid") or np.geomspace(args.alpha_min, args.alpha_max, args.alpha_points)
    alphas = np.asarray(alphas, dtype=float)
    if np.any(alphas <= 0):
        raise UsageError("alpha grid must be positive")
    Ns = cfg.get("Ns", args.N)
    if any(not 1 <= n <= baseline.N_CAP for n in Ns):
        raise UsageError(f"N values must lie in [1, {baseline.N_CAP}]")
    f_true = (lambda E: exact_f(problem, E)) if problem is not None else None
    rows = baseline.sweep(data, Ns, alphas, f_true)
    nan = float("nan")
    path = serialize.write_csv(
        args.out / "baseline_metrics.csv", ["N", "alpha", "chi_fit", "chi_solution", "cond"],
        [[r.N for r in rows], [r.alpha for r in rows], [r.chi_fit for r in rows],
         [nan if r.chi_solution is None else r.chi_solution for r in rows], [r.cond for r in rows]])
    for r in rows:
        print(f"N={r.N:2d} alpha={r.alpha:.4g} chi_fit={r.chi_fit:.3e}"
              + (f" chi_solution={r.chi_solution:.3e}" if r.chi_solution is not None else "")
              + f" cond={r.cond:.2e}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    run = experiments.REPRODUCERS[args.name]
    rep = run(out=args.out, seed=args.seed, workers=args.threads)
    print(rep.table())
    for path in rep.write(args.out):
        print(f"wrote {path}")
    return EXIT_OK if rep.ok else EXIT_FAILED


COMMANDS = {
    "generate-input": cmd_generate_input,
    "invert": cmd_invert,
    "baseline": cmd_baseline,
    "reproduce": cmd_reproduce,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, DomainError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, QuadratureError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
