"""Acceptance criteria, one function per criterion.

Each ``criterion_N`` returns a :class:`CriterionResult` holding named gates.
``run_suite`` runs every criterion once: the quick mode keeps the
deterministic ones (1, 2, 3, 4, 7, 8), the full mode adds the Monte Carlo
ones at their full sample sizes.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import exact_formulas as ef
from . import exponents as ex
from . import levy_verify as lv
from . import radial_loewner as rl
from .cascade import CascadeConfig, eps_grid, estimate
from .radii_laws import LAW_TAGS, build_series, transform_roundtrip

KAPPA_GRID = (4.2, 4.8, 16.0 / 3.0, 6.0, 7.0, 7.8)
QUICK = (1, 2, 3, 4, 7, 8)
FULL = tuple(range(1, 11))


@dataclass
class Gate:
    name: str
    value: float
    tolerance: float
    passed: bool
    reference: float | None = None
    note: str = ""


@dataclass
class CriterionResult:
    number: int
    title: str
    gates: list = field(default_factory=list)
    runtime: float = 0.0
    # a gate here is expected to fail, with the reason recorded in ``note``
    known_red: tuple = ()

    @property
    def passed(self) -> bool:
        return all(g.passed for g in self.gates)

    @property
    def details(self) -> list:
        return [g.__dict__ for g in self.gates]

    def check(self, name, value, tolerance, reference=None, note=""):
        """Gate ``|value - reference| < tolerance`` (or ``value < tolerance`` without a reference)."""
        err = value if reference is None else abs(value - reference)
        g = Gate(name, float(value), tolerance, bool(err < tolerance), reference, note)
        self.gates.append(g)
        return g

    def line(self) -> str:
        bad = [g.name for g in self.gates if not g.passed]
        tag = "PASS" if not bad else "FAIL"
        tail = "" if not bad else "  failing: " + ", ".join(bad)
        return f"[{tag}] criterion {self.number}: {self.title} ({self.runtime:.1f}s){tail}"


def _rel(a, b):
    return abs(a - b) / abs(b)


# --- 1 ------------------------------------------------------------------------

def criterion_1(full=True) -> CriterionResult:
    r = CriterionResult(1, "exact values")
    r.check("touching_probability(6)", ef.touching_probability(6.0), 1e-12, 0.5)
    r.check("kappa0", ef.kappa0_argmax(), 1e-4, 6.95061)
    r.check("root_np(6,1)", ex.root_np(6.0, 1.0), 1e-10, 5.0 / 48.0)
    r.check("root_np(16/3,1)", ex.root_np(16.0 / 3.0, 1.0), 1e-10, 1.0 / 8.0)
    for k in (4.5, 16.0 / 3.0, 6.0, 7.5):
        r.check(f"root_nl({k:.4g},1)", ex.root_nl(k, 1.0), 1e-10, 0.0)
    return r


# --- 2 ------------------------------------------------------------------------

def _lambda_grid(ctx, n=12):
    lo = max(ctx.touch_threshold, ctx.loop_threshold)
    return lo + np.geomspace(0.02, 4.0, n)


def _alpha_grid(ctx, n=12):
    q, hi = ctx.q_coeff, 4.0 / ctx.gamma
    return q + (hi - q) * np.linspace(0.04, 0.96, n)


def criterion_2(full=True) -> CriterionResult:
    r = CriterionResult(2, "identity battery")
    mass = sum_rule = fact = ratio = root = nl = 0.0
    for k in KAPPA_GRID:
        ctx = ef.as_context(k)
        p = ef.touching_probability(ctx)
        mass = max(mass,
                   abs(ef.cr_moment_touching(ctx, 0.0) + ef.cr_moment_nontouching(ctx, 0.0) - 1.0),
                   abs(ef.cr_moment_touching(ctx, 0.0) - p),
                   abs(ef.wtd_moment(ctx, 0.0) - (1.0 - p)))
        for lam in _lambda_grid(ctx):
            ssw = ef.ssw_moment(ctx, lam)
            a_, b_ = ef.cr_moment_touching(ctx, lam), ef.cr_moment_nontouching(ctx, lam)
            sum_rule = max(sum_rule, _rel(a_ + b_, ssw))
            fact = max(fact, _rel(ef.wtd_moment(ctx, lam) * ssw, b_))
        for alpha in _alpha_grid(ctx):
            lam = ef.alpha_param(ctx, alpha).lambda_equiv
            lhs = ef.cr_moment_nontouching(ctx, lam) / ef.cr_moment_touching(ctx, lam)
            ratio = max(ratio, _rel(lhs, ef.ssw_moment(ctx, lam) * ef.cr_ratio(ctx, alpha)))
        for a in (0.3, 0.7, 1.0, 1.5, 3.0):
            root = max(root, _rel(ef.wtd_moment(ctx, -ex.root_np(ctx, a)), 1.0 / a))
            nl = max(nl, _rel(ef.ssw_moment(ctx, -ex.root_nl(ctx, a)), 1.0 / a))
    r.check("mass identities (abs)", mass, 1e-12)
    r.check("touch + nontouch = ssw", sum_rule, 1e-9)
    r.check("wtd * ssw = nontouch", fact, 1e-9)
    r.check("ratio identity", ratio, 1e-9)
    r.check("wtd_moment(-root_np(a)) = 1/a", root, 1e-9)
    r.check("ssw_moment(-root_nl(a)) = 1/a", nl, 1e-9)
    return r


# --- 3 ------------------------------------------------------------------------

def criterion_3(full=True) -> CriterionResult:
    r = CriterionResult(3, "Legendre duality")
    worst = {"t<c1": 0.0, "t>c1": 0.0}
    inv = 0.0
    for k in (16.0 / 3.0, 6.0, 7.0):
        ctx = ef.as_context(k)
        qc = 1.0 - ef.touching_probability(ctx)
        for aq in (0.3, 0.6, 0.9, 1.2, 2.0, 4.0):
            a = aq / qc
            d = ex.rate_duality_check(ctx, a)
            worst[d["branch"]] = max(worst[d["branch"]], d["discrepancy"])
            inv = max(inv, abs(ex.root_np(ctx, a) - ex.lambda_inverse(ctx, -math.log(aq))))
    r.check("duality, a P[T^c] < 1", worst["t<c1"], 1e-6)
    r.check("duality, a P[T^c] > 1", worst["t>c1"], 1e-6)
    r.check("root_np = Lambda^-1(-log a P[T^c])", inv, 1e-8)
    return r


# --- 4 ------------------------------------------------------------------------

def criterion_4(full=True) -> CriterionResult:
    r = CriterionResult(4, "transform round-trips")
    rt = mass = 0.0
    for k in (16.0 / 3.0, 6.0, 7.0):
        ctx = ef.as_context(k)
        for law in LAW_TAGS:
            s = build_series(ctx, law)
            thr = ef.threshold(law, ctx)
            rt = max(rt, transform_roundtrip(s, thr + np.array([0.05, 0.2, 0.5, 1.0, 2.0, 5.0])))
            mass = max(mass, abs(s.mass - ef.law_mass(law, ctx)))
    r.check("density -> moment transform (rel)", rt, 1e-6)
    r.check("series mass vs P[T], P[T^c], 1", mass, 1e-8)
    return r


# --- 5 ------------------------------------------------------------------------

C0_NOTE = ("pre-asymptotic shift: the a=1 functional equals the loop-radius CCDF, whose "
           "leading correction exp(-(lambda_2 - lambda_1) u) moves the fitted slope by "
           "more than the Monte Carlo half-width; the shift shrinks on deeper eps grids")


def criterion_5(full=True, n=1_000_000, threads=1) -> CriterionResult:
    r = CriterionResult(5, "cascade exponent", known_red=("c0 sweep",))
    grid = eps_grid(0.1, 2, 3)
    mc = {}
    for c0 in (1.0, 0.25, 4.0):
        mc[c0] = estimate(CascadeConfig(6.0, 1.0, grid, n_samples=n, seed=11, c0=c0, threads=threads))
    r.check("kappa=6 mc slope", mc[1.0].slope, 0.01, 5.0 / 48.0)
    conv = estimate(CascadeConfig(6.0, 1.0, grid, method="conv"))
    r.check("kappa=6 conv slope", conv.slope, 0.005, 5.0 / 48.0)
    mc53 = estimate(CascadeConfig(16.0 / 3.0, 1.0, grid, n_samples=n, seed=12, threads=threads))
    r.check("kappa=16/3 mc slope", mc53.slope, 0.01, 1.0 / 8.0)
    hw = mc[1.0].half_width
    shift = max(abs(mc[c].slope - mc[1.0].slope) for c in (0.25, 4.0))
    r.check("c0 sweep", shift, hw, note=C0_NOTE)
    return r


# --- 6 ------------------------------------------------------------------------

LEVY_POINTS = ((6.0, -0.3, 1.0, 1.0), (6.0, -0.2, 1.0, 2.5), (16.0 / 3.0, -0.4, 0.5, 1.0),
               (7.0, -0.25, 2.0, 0.7))


def criterion_6(full=True, n=10_000_000) -> CriterionResult:
    r = CriterionResult(6, "stable positive-part moments")
    for i, (k, p, l1, l2) in enumerate(LEVY_POINTS):
        c = lv.lemma_levy_check(k, p, l1, l2, n=n, seed=100 + i)
        r.check(f"(kappa={k:.4g}, p={p}, l1={l1}, l2={l2})", c.rel_err, 0.02)
    return r


# --- 7 ------------------------------------------------------------------------

ID1_GRID = (-0.9, -0.75, -0.5, -0.25, -0.1)
ID2_P_FRACTIONS = (0.02, 0.2, 0.5, 0.8, 0.98)


def criterion_7(full=True) -> CriterionResult:
    r = CriterionResult(7, "integral identities")
    w1 = max(lv.integral_identity_1(a, b).rel_err for a in ID1_GRID for b in ID1_GRID if a != b)
    w2 = 0.0
    for k in (4.5, 16.0 / 3.0, 6.0, 7.0, 7.8):
        lo = as_gamma2(k) / 4.0 - 1.0
        for f in ID2_P_FRACTIONS:
            w2 = max(w2, lv.integral_identity_2(k, lo * (1.0 - f)).rel_err)
    r.check("first identity, 5x5 (a, b) grid", w1, 1e-5)
    r.check("second identity, 5 kappa x 5 p grid", w2, 1e-5)
    return r


def as_gamma2(kappa):
    return ef.as_context(kappa).gamma ** 2


# --- 8 ------------------------------------------------------------------------

def criterion_8(full=True) -> CriterionResult:
    r = CriterionResult(8, "arc-moment ratio algebra")
    worst = 0.0
    for k in (4.5, 5.0, 16.0 / 3.0, 6.0, 7.5):
        ctx = ef.as_context(k)
        q, hi = ctx.q_coeff, 4.0 / ctx.gamma
        for f in (0.05, 0.25, 0.5, 0.75, 0.95):
            worst = max(worst, lv.ratio_algebra_check(ctx, q + f * (hi - q)))
    r.check("5x5 (kappa, alpha) grid", worst, 1e-9)
    return r


# --- 9 ------------------------------------------------------------------------

def criterion_9(full=True, n=100_000, dt=1e-3) -> CriterionResult:
    r = CriterionResult(9, "radial Loewner flow and driving process")
    r.check("drift identities at 1e3 states", rl.drift_identity_check(1000, seed=5, kappa=6.0), 1e-12)
    rng = np.random.default_rng(6)
    times, theta = rl.brownian_driving(6.0, 1.0, 1e-4, rng)
    st = rl.evolve_flow(times, theta, np.exp(1j * np.linspace(0.3, 6.0, 12)))
    r.check("g'(0) = e^t at t=1 (rel)", abs(st.derivative / math.e - 1.0), 1e-6)
    r.check("boundary modulus drift", st.max_modulus_drift, 1e-8)
    for i, psi0 in enumerate((math.pi, 2.0 * math.pi / 3.0)):
        res = rl.first_passage(6.0, psi0, dt, np.random.default_rng(70 + i), n)
        pu = rl.upper_exit_probability(6.0, psi0)
        r.check(f"upper-exit frequency, psi0={psi0:.4f} (rel)", abs(res.p_upper / pu - 1.0), 0.01)
    return r


# --- 10 -----------------------------------------------------------------------

FSLEN_POINTS = ((6.0, 0.5), (6.0, 1.0), (16.0 / 3.0, 1.5))


def criterion_10(full=True, n=2_000_000) -> CriterionResult:
    r = CriterionResult(10, "forested-length power law")
    for i, (k, q) in enumerate(FSLEN_POINTS):
        f = lv.forested_length_law_check(k, q, (1.0, 100.0), n=n, seed=200 + i)
        r.check(f"(kappa={k:.4g}, q={q}) slope", f.slope, 0.05, f.target)
    return r


CRITERIA = {i: globals()[f"criterion_{i}"] for i in FULL}


def run_criterion(number: int, **kw) -> CriterionResult:
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = CRITERIA[number](**kw)
    res.runtime = time.perf_counter() - t0
    return res


def run_suite(full: bool = False, printer=print):
    """Run each criterion once; yields results and prints one line per criterion."""
    for i in FULL if full else QUICK:
        res = run_criterion(i)
        if printer is not None:
            printer(res.line())
        yield res
