"""Command-line entry point and JSON experiment reports.

Exit codes: 0 success, 2 argument or domain error, 3 a numerical gate failed,
4 an internal invariant was violated.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_USAGE, EXIT_GATE, EXIT_INTERNAL = 0, 2, 3, 4


class GateFailure(RuntimeError):
    """A numerical acceptance gate did not hold."""


@dataclass
class ResultRow:
    name: str
    value: object
    provenance: str  # closed-form, mc, quadrature, convolution, ...
    tolerance: float | None = None
    reference: object = None
    passed: bool | None = None


@dataclass
class ExperimentReport:
    command: str
    params: dict
    seed: int | None = None
    partition: str = "single stream"
    results: list = field(default_factory=list)
    wall_clock: float = 0.0
    version: str = __version__
    schema: str = SCHEMA_VERSION

    def add(self, name, value, provenance, tolerance=None, reference=None, passed=None):
        self.results.append(ResultRow(name, value, provenance, tolerance, reference, passed))

    @property
    def passed(self) -> bool:
        return all(r.passed is not False for r in self.results)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=_jsonable, allow_nan=True)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if isinstance(x, np.bool_):
        return bool(x)
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _gate(report, name, value, reference, tol, provenance, rel=True):
    err = abs(value - reference) / abs(reference) if rel and reference != 0 else abs(value - reference)
    report.add(name, value, provenance, tol, reference, bool(err < tol))
    return err


# --- subcommands -------------------------------------------------------------

def cmd_prob(args, report):
    from .exact_formulas import touching_probability
    report.add("touching_probability", touching_probability(args.kappa), "closed-form")


def cmd_exact(args, report):
    from .exact_formulas import moment, threshold
    value = moment(args.law, args.kappa, args.lam)
    report.add(f"moment[{args.law}]", "Infinite" if math.isinf(value) else value, "closed-form")
    report.add("threshold", threshold(args.law, args.kappa), "closed-form")


def cmd_root(args, report):
    from .exponents import root_nl, root_np
    fn = root_np if args.kind == "np" else root_nl
    report.add(f"root_{args.kind}", fn(args.kappa, args.a), "bisection")


def cmd_density(args, report):
    from .radii_laws import build_series
    series = build_series(args.kappa, args.law, terms=args.terms)
    report.add("mass", series.mass, "residue-series")
    report.add("s_min", series.s_min, "residue-series")
    report.add("tail_bound", series.tail_bound, "residue-series")
    report.add("leading_poles", series.poles[:5], "residue-series")
    if args.density_out:
        s = np.linspace(series.s_min, args.s_max, args.points)
        dens, ccdf = series.evaluate(s)
        _write_csv(args.density_out, ["s", "density", "ccdf", "law_tag", "kappa", "K"],
                   ((a, b, c, args.law, args.kappa, series.terms) for a, b, c in zip(s, dens, ccdf)))


def cmd_cascade(args, report):
    from .cascade import CascadeConfig, eps_grid, estimate, nl_functional
    cfg = CascadeConfig(args.kappa, args.a, eps_grid(args.eps_max, args.eps_decades, args.points_per_decade),
                        n_samples=args.samples, seed=args.seed, c0=args.c0, method=args.method,
                        h=args.h, threads=args.threads)
    est = nl_functional(cfg) if args.nested_loops else estimate(cfg)
    report.seed = args.seed
    if args.method == "mc":
        report.partition = est.meta.get("streams", "SeedSequence(seed, spawn_key=(eps_index, chunk_index))")
    for e, v, s in zip(est.eps, est.values, est.stderr):
        report.add(f"Z(eps={e:.6g})", {"value": v, "stderr": s}, args.method)
    report.add("slope", est.slope, "weighted least squares" if args.method == "mc" else "least squares")
    report.add("half_width", est.half_width, "fit")
    report.add("reference", est.reference, "bisection")
    report.add("meta", {k: v for k, v in est.meta.items()}, args.method)
    if args.csv:
        _write_csv(args.csv, ["eps", "estimate", "stderr", "method"], est.as_rows())


def cmd_verify(args, report):
    from . import levy_verify as lv
    t = args.target
    if t == "levy":
        r = lv.lemma_levy_check(args.kappa, args.p, args.l1, args.l2, n=args.samples, seed=args.seed)
        report.seed = args.seed
        report.partition = "SeedSequence(seed).spawn(chunks)"
        report.add("mc", r.mc_value, "mc")
        report.add("jackknife_stderr", r.stderr, "mc")
        report.add("closed", r.closed_value, "closed-form")
        report.add("rel_err", r.rel_err, "mc vs closed-form", args.tol, 0.0, r.rel_err < args.tol)
    elif t == "fslen":
        f = lv.forested_length_law_check(args.kappa, args.q, (args.la, args.lb), n=args.samples, seed=args.seed)
        report.seed = args.seed
        report.add("slope", f.slope, "importance-sampled histogram fit")
        report.add("target", f.target, "closed-form")
        report.add("abs_err", f.error, "fit", args.tol, 0.0, f.error < args.tol)
        report.add("amplitude", {"fit": f.amplitude, "closed": f.amplitude_target}, "fit")
        report.add("ess", f.ess, "mc")
    elif t == "integral1":
        r = lv.integral_identity_1(args.a, args.b)
        report.add("quadrature", r.quadrature, "quadrature")
        report.add("closed", r.closed, "closed-form")
        report.add("rel_err", r.rel_err, "quadrature vs closed-form", args.tol, 0.0, r.rel_err < args.tol)
    elif t == "integral2":
        r = lv.integral_identity_2(args.kappa, args.p)
        report.add("quadrature", r.quadrature, "quadrature")
        report.add("closed", r.closed, "closed-form")
        report.add("rel_err", r.rel_err, "quadrature vs closed-form", args.tol, 0.0, r.rel_err < args.tol)
    elif t == "ratio-algebra":
        alpha = args.alpha
        if alpha is None:
            from .exact_formulas import as_context
            ctx = as_context(args.kappa)
            alpha = 0.5 * (ctx.q_coeff + 4.0 / ctx.gamma)
        d = lv.ratio_algebra_check(args.kappa, alpha)
        report.add("alpha", alpha, "input")
        report.add("discrepancy", d, "algebra vs closed-form", args.tol, 0.0, d < args.tol)
    elif t == "identities":
        from .acceptance import criterion_2
        res = criterion_2()
        report.add("identity_battery", res.details, "closed-form", passed=res.passed)


def cmd_loewner(args, report):
    from . import radial_loewner as rl
    t = args.target
    if t == "drift-check":
        err = rl.drift_identity_check(args.states, args.seed, args.kappa)
        report.seed = args.seed
        report.add("max_rel_discrepancy", err, "closed-form", 1e-12, 0.0, err < 1e-12)
    elif t == "flow-check":
        rng = np.random.default_rng(args.seed)
        times, theta = rl.brownian_driving(args.kappa, args.t_end, args.dt, rng)
        pts = np.exp(1j * np.linspace(0.3, 6.0, 12))
        st = rl.evolve_flow(times, theta, pts)
        report.seed = args.seed
        rel = abs(st.derivative / math.exp(args.t_end) - 1.0)
        report.add("derivative_rel_err", rel, "rk4", 1e-6, 0.0, rel < 1e-6)
        report.add("boundary_modulus_drift", st.max_modulus_drift, "rk4", 1e-8, 0.0, st.max_modulus_drift < 1e-8)
        report.add("swallowed", int(st.swallowed.sum()), "rk4")
        if args.csv:
            _write_csv(args.csv, ["t", "theta"], zip(times, theta))
    elif t == "passage":
        res = rl.first_passage(args.kappa, args.psi0, args.dt, np.random.default_rng(args.seed), args.samples,
                               delta=args.delta)
        report.seed = args.seed
        pu = rl.upper_exit_probability(args.kappa, args.psi0, args.delta)
        rel = abs(res.p_upper / pu - 1.0)
        report.add("p_upper", res.p_upper, "mc")
        report.add("p_upper_scale_function", pu, "quadrature")
        report.add("rel_err", rel, "mc vs quadrature", 0.01, 0.0, rel < 0.01)
        report.add("mean_tau", {"mc": res.mean_tau, "stderr": res.stderr_tau,
                                "green": rl.mean_exit_time(args.kappa, args.psi0, args.delta)}, "mc")
        report.add("censored", res.censored, "mc")
        report.add("backend", res.backend, "kernel")
        if args.csv:
            _write_csv(args.csv, ["tau", "side"], ((s.tau, s.side) for s in res.samples()))


def cmd_suite(args, report):
    from .acceptance import run_suite
    for res in run_suite(full=args.full, printer=lambda line: print(line, file=sys.stderr)):
        report.add(f"criterion {res.number}: {res.title}", res.details, "suite", passed=res.passed)


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cleobs", description=__doc__.splitlines()[0])
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("prob", help="boundary-touching probability")
    s.add_argument("--kappa", type=float, required=True)
    s.set_defaults(func=cmd_prob)

    s = sub.add_parser("exact", help="closed-form conformal-radius moment")
    s.add_argument("--kappa", type=float, required=True)
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--law", choices=["ssw", "touch", "nontouch", "wtd"], required=True)
    s.set_defaults(func=cmd_exact)

    s = sub.add_parser("root", help="nested-path (np) or nested-loop (nl) exponent")
    s.add_argument("kind", choices=["np", "nl"])
    s.add_argument("--kappa", type=float, required=True)
    s.add_argument("--a", type=float, required=True)
    s.set_defaults(func=cmd_root)

    s = sub.add_parser("density", help="residue-series density; CSV columns s, density, ccdf, law_tag, kappa, K")
    s.add_argument("--kappa", type=float, required=True)
    s.add_argument("--law", choices=["ssw", "touch", "nontouch", "wtd"], required=True)
    s.add_argument("--terms", type=int, default=200)
    s.add_argument("--out", dest="density_out", help="CSV output path")
    s.add_argument("--s-max", type=float, default=20.0)
    s.add_argument("--points", type=int, default=2001)
    s.set_defaults(func=cmd_density)

    s = sub.add_parser("cascade", help="cascade functional and exponent fit; CSV columns eps, estimate, stderr, method")
    s.add_argument("--kappa", type=float, required=True)
    s.add_argument("--a", type=float, default=1.0)
    s.add_argument("--eps-max", type=float, default=0.1)
    s.add_argument("--eps-decades", type=float, default=2.0)
    s.add_argument("--points-per-decade", type=int, default=3)
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--method", choices=["mc", "conv"], default="mc")
    s.add_argument("--c0", type=float, default=1.0)
    s.add_argument("--h", type=float, default=1e-3, help="convolution grid step")
    s.add_argument("--nested-loops", action="store_true", help="nested-loop functional instead")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_cascade)

    s = sub.add_parser("verify", help="lemma and identity checks")
    s.add_argument("target", choices=["levy", "fslen", "integral1", "integral2", "ratio-algebra", "identities"])
    s.add_argument("--kappa", type=float, default=6.0)
    s.add_argument("--p", type=float, default=-0.3)
    s.add_argument("--l1", type=float, default=1.0)
    s.add_argument("--l2", type=float, default=1.0)
    s.add_argument("--q", type=float, default=1.0)
    s.add_argument("--la", type=float, default=1.0)
    s.add_argument("--lb", type=float, default=100.0)
    s.add_argument("--a", type=float, default=-0.25)
    s.add_argument("--b", type=float, default=-0.75)
    s.add_argument("--alpha", type=float)
    s.add_argument("--samples", type=int, default=1_000_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--tol", type=float, default=None)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("loewner", help="Loewner-flow checks and first passage; CSV (t, theta) or (tau, side)")
    s.add_argument("target", choices=["drift-check", "flow-check", "passage"])
    s.add_argument("--kappa", type=float, default=6.0)
    s.add_argument("--psi0", type=float, default=math.pi)
    s.add_argument("--dt", type=float, default=None)
    s.add_argument("--t-end", type=float, default=1.0)
    s.add_argument("--delta", type=float, default=1e-5)
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--states", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--csv")
    s.set_defaults(func=cmd_loewner)

    s = sub.add_parser("suite", help="acceptance suite")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--quick", dest="full", action="store_false", help="deterministic criteria only (default)")
    g.add_argument("--full", dest="full", action="store_true", help="every criterion at full sample sizes")
    s.set_defaults(func=cmd_suite, full=False)
    return p


_VERIFY_TOLS = {"levy": 0.02, "fslen": 0.05, "integral1": 1e-5, "integral2": 1e-5,
                "ratio-algebra": 1e-9, "identities": None}


def run(argv=None) -> int:
    from .exact_formulas import DomainError
    from .radii_laws import ResidueMismatch

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    if args.command == "verify" and args.tol is None:
        args.tol = _VERIFY_TOLS[args.target]
    if args.command == "loewner" and args.dt is None:
        args.dt = 1e-4 if args.target == "flow-check" else 2e-3
    params = {k: v for k, v in vars(args).items() if k not in ("func",)}
    report = ExperimentReport(args.command, params)
    start = time.perf_counter()
    try:
        args.func(args, report)
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResidueMismatch, AssertionError, ArithmeticError) as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    report.wall_clock = time.perf_counter() - start
    text = report.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK if report.passed else EXIT_GATE


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
