"""Checks of the analytic lemmas behind the touching/non-touching moment ratio.

* one-sided stable samples and the positive-part moment of a difference of
  two independent stable variables,
* the pushforward law of a stable subordinator evaluated at a power-law
  random time,
* two principal-value integral identities,
* the complex-exponential algebra that turns the two boundary-arc moments
  into the closed-form moment ratio.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn

from .exact_formulas import DomainError, as_context, cr_ratio

PI = math.pi


def cpow(z: complex, s: float) -> complex:
    """Principal-branch power ``|z|^s e^{i s arg z}`` with ``arg z`` in ``(-pi, pi]``."""
    z = complex(z)
    if z == 0:
        return 0j
    return cmath.exp(s * (math.log(abs(z)) + 1j * cmath.phase(z)))


# --- stable sampling ---------------------------------------------------------

@dataclass(frozen=True)
class SubordinatorSpec:
    """Stable subordinator marginal with ``E exp(-t Y) = exp(-t^beta * level)``."""

    beta: float
    level: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise DomainError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.level > 0:
            raise DomainError("level must be positive")

    def laplace(self, t):
        return np.exp(-np.power(t, self.beta) * self.level)

    def moment(self, s: float) -> float:
        """``E[Y^s]`` for ``s < beta``."""
        if s >= self.beta:
            return math.inf
        return self.level ** (s / self.beta) * gamma_fn(1.0 - s / self.beta) / gamma_fn(1.0 - s)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.level ** (1.0 / self.beta) * kanter(self.beta, n, rng)


def kanter(beta: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Kanter's representation of the standard one-sided stable law of index ``beta``."""
    u = PI * (1.0 - rng.random(n))  # (0, pi]
    e = rng.standard_exponential(n)
    a = np.sin(beta * u) / np.sin(u) ** (1.0 / beta)
    b = (np.sin((1.0 - beta) * u) / e) ** ((1.0 - beta) / beta)
    return a * b


def sample_positive_stable(beta: float, n: int, seed) -> np.ndarray:
    """``n`` samples with ``E exp(-t S) = exp(-t^beta)``."""
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta must lie in (0, 1), got {beta}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return kanter(beta, int(n), rng)


# --- positive-part moment ----------------------------------------------------

@dataclass
class MCCheck:
    mc_value: float
    closed_value: float
    rel_err: float
    stderr: float = float("nan")
    meta: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.mc_value, self.closed_value, self.rel_err))


def positive_part_closed(ctx, p: float, l1: float, l2: float) -> complex:
    """Closed form of ``E[(Y_l1 - Y'_l2)_+^p]``; returned complex so callers can check realness."""
    ctx = as_context(ctx)
    g2 = ctx.gamma ** 2
    s = 4.0 * p / g2
    w = cmath.exp(1j * PI * g2 / 8.0) * l1 + cmath.exp(-1j * PI * g2 / 8.0) * l2
    phase = cmath.exp(1j * PI * (p + 1.0) / 2.0)
    pref = 4.0 / (PI * g2) * gamma_fn(-s) * gamma_fn(p + 1.0)
    z = phase * cpow(w, s)
    # the formula keeps the real part; the imaginary remainder is reported separately
    return complex(pref * z.real, pref * z.imag)


def _jackknife(chunk_sums: np.ndarray, chunk_counts: np.ndarray) -> tuple[float, float]:
    total, n = chunk_sums.sum(), chunk_counts.sum()
    k = chunk_sums.size
    if k < 2:
        return total / n, float("nan")
    loo = (total - chunk_sums) / (n - chunk_counts)
    se = math.sqrt((k - 1) / k * np.sum((loo - loo.mean()) ** 2))
    return total / n, se


def lemma_levy_check(ctx, p: float, l1: float, l2: float, n: int = 10_000_000, seed=0,
                     chunks: int = 20) -> MCCheck:
    """Monte Carlo of ``E[(Y_l1 - Y'_l2)_+^p]`` against its closed form.

    The error bar is a delete-one-chunk jackknife.  For ``p <= -1/2`` the
    estimator has infinite variance and a warning is issued.
    """
    ctx = as_context(ctx)
    if not -1.0 < p < 0.0:
        raise DomainError(f"p must lie in (-1, 0), got {p}")
    if not (l1 > 0 and l2 > 0):
        raise DomainError("levels must be positive")
    if p <= -0.5:
        warnings.warn("p <= -1/2: the estimate is dominated by near-zero differences "
                      "and its variance is infinite", RuntimeWarning, stacklevel=2)
    beta = ctx.stable_index
    y1, y2 = SubordinatorSpec(beta, l1), SubordinatorSpec(beta, l2)
    root = np.random.SeedSequence(seed)
    sums, counts = [], []
    for child, size in zip(root.spawn(chunks), np.diff(np.linspace(0, n, chunks + 1).astype(np.int64))):
        rng = np.random.default_rng(child)
        d = y1.sample(size, rng) - y2.sample(size, rng)
        pos = d[d > 0]
        sums.append(np.sum(pos ** p))
        counts.append(size)
    mean, se = _jackknife(np.array(sums), np.array(counts, dtype=float))
    closed = positive_part_closed(ctx, p, l1, l2)
    return MCCheck(mean, closed.real, abs(mean / closed.real - 1.0), se,
                   {"bracket_imag": closed.imag, "n": n, "kappa": ctx.kappa, "p": p,
                    "l1": l1, "l2": l2, "stderr_rel": se / abs(closed.real)})


def exceedance_probability(ctx, l1: float, l2: float, n: int = 1_000_000, seed=0) -> tuple[float, float]:
    """MC estimate and standard error of ``P[Y_l1 > Y'_l2]``."""
    ctx = as_context(ctx)
    rng = np.random.default_rng(seed)
    beta = ctx.stable_index
    d = SubordinatorSpec(beta, l1).sample(n, rng) - SubordinatorSpec(beta, l2).sample(n, rng)
    m = float(np.mean(d > 0))
    return m, math.sqrt(m * (1 - m) / n)


# --- forested segment length -------------------------------------------------

@dataclass
class PowerLawFit:
    slope: float
    target: float
    stderr: float
    amplitude: float
    amplitude_target: float
    ess: float
    centers: np.ndarray
    density: np.ndarray

    @property
    def error(self) -> float:
        return abs(self.slope - self.target)


def forested_length_law_check(ctx, q: float, window=(1.0, 100.0), n: int = 2_000_000, seed=0,
                              bins: int = 24, t_range=None) -> PowerLawFit:
    """Power of the density of ``Y_t`` when ``t`` has the infinite law ``t^{-q} dt``.

    ``t`` is drawn log-uniformly on a truncated range with weight
    ``t^{1-q} log(t_hi/t_lo)``; ``Y_t = t^{1/beta} Y_1``.  The weighted
    histogram on log-spaced bins of ``window`` is fitted by least squares in
    log-log coordinates.  The target power is ``-beta q + beta - 1`` and the
    amplitude target is ``beta E[Y_1^{beta(q-1)}]``.
    """
    ctx = as_context(ctx)
    if q >= 2:
        raise DomainError("q >= 2: the pushforward measure of any window is infinite")
    la, lb = map(float, window)
    if not 0 < la < lb:
        raise DomainError("window must satisfy 0 < L_a < L_b")
    beta = ctx.stable_index
    if t_range is None:
        # small t reach the window only through the heavy right tail of Y_1,
        # large t only through its super-exponentially thin left tail
        t_range = (1e-12 * la ** beta, (1e3 * lb) ** beta)
    t_lo, t_hi = t_range
    span = math.log(t_hi / t_lo)
    rng = np.random.default_rng(seed)
    edges = np.geomspace(la, lb, bins + 1)
    acc = np.zeros(bins)
    w_sum = w_sq = 0.0
    left = int(n)
    while left:
        size = min(left, 1 << 20)
        left -= size
        log_t = math.log(t_lo) + span * rng.random(size)
        w = np.exp((1.0 - q) * log_t) * span
        y = np.exp(log_t / beta) * kanter(beta, size, rng)
        inside = (y >= la) & (y < lb)
        acc += np.bincount(np.searchsorted(edges, y[inside], side="right") - 1,
                           weights=w[inside], minlength=bins)[:bins]
        w_sum += w[inside].sum()
        w_sq += (w[inside] ** 2).sum()
    ess = w_sum ** 2 / w_sq if w_sq > 0 else 0.0
    if ess < 1000:
        warnings.warn(f"effective sample size {ess:.0f} in the window; widen the proposal or raise n",
                      RuntimeWarning, stacklevel=2)
    dens = acc / (n * np.diff(edges))
    centers = np.sqrt(edges[:-1] * edges[1:])
    ok = dens > 0
    x, y = np.log(centers[ok]), np.log(dens[ok])
    design = np.column_stack([np.ones_like(x), x])
    beta_hat, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ beta_hat
    cov = np.linalg.inv(design.T @ design) * float(resid @ resid) / max(x.size - 2, 1)
    target = -beta * q + beta - 1.0
    amp_target = beta * SubordinatorSpec(beta).moment(beta * (q - 1.0))
    # the amplitude at the exact power, averaged over bins
    amp = float(np.exp(np.mean(y - target * x)))
    return PowerLawFit(float(beta_hat[1]), target, math.sqrt(cov[1, 1]), amp, amp_target, ess,
                       centers, dens)


# --- principal-value quadrature ----------------------------------------------

@dataclass
class PVQuadrature:
    """Symmetric-excision principal value of ``f`` on ``(lo, hi)`` about ``center``.

    ``f`` may be real or complex valued and must be smooth away from
    ``center``.  The excised integral has an expansion in odd powers of the
    half-width ``eps`` (both for a simple pole and for a removable
    singularity), which Richardson extrapolation removes.
    """

    integrand: object
    center: float
    lo: float = -math.inf
    hi: float = math.inf
    breakpoints: tuple = ()
    eps0: float = 0.05
    levels: int = 5
    epsrel: float = 1e-13
    complex_valued: bool = False
    table: list = field(default_factory=list)

    def excised(self, eps: float) -> complex:
        c = self.center
        total = 0.0
        for a, b in ((self.lo, c - eps), (c + eps, self.hi)):
            inner = sorted(x for x in self.breakpoints if a < x < b)
            pieces = [a, *inner, b]
            for lo, hi in zip(pieces[:-1], pieces[1:]):
                kw = dict(epsabs=1e-15, epsrel=self.epsrel, limit=400)
                if self.complex_valued:
                    kw["complex_func"] = True
                val, _ = integrate.quad(self.integrand, lo, hi, **kw)
                total = total + val
        return total

    def evaluate(self) -> tuple[complex, float]:
        """Return ``(value, change)`` where ``change`` is the last refinement step."""
        eps = [self.eps0 / 2 ** k for k in range(self.levels)]
        row = [self.excised(e) for e in eps]
        self.table = [row]
        power = 1
        while len(row) > 1:
            f = 2.0 ** power
            row = [(f * row[i + 1] - row[i]) / (f - 1.0) for i in range(len(row) - 1)]
            self.table.append(row)
            power += 2
        diag = [r[-1] for r in self.table]
        change = abs(diag[-1] - diag[-2]) if len(diag) > 1 else math.inf
        return diag[-1], float(change)

    def raw_halving_change(self) -> float:
        """Change of the extrapolated value when every excision half-width is halved."""
        first, _ = self.evaluate()
        self.eps0 /= 2
        try:
            second, _ = self.evaluate()
        finally:
            self.eps0 *= 2
        return float(abs(second - first))


@dataclass
class QuadCheck:
    quadrature: complex
    closed: complex
    rel_err: float
    meta: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.quadrature, self.closed, self.rel_err))


def _rel(a, b) -> float:
    if b == 0:
        return abs(a)
    return abs(a - b) / abs(b)


def _identity1_integrand(a: float, b: float):
    # (t^a - t^b)/(t - 1) dt with t = e^x, arranged to avoid overflow
    def f(x):
        if x > 0:
            return (math.exp(a * x) - math.exp(b * x)) / -math.expm1(-x)
        if x < -1:
            return (math.exp((a + 1) * x) - math.exp((b + 1) * x)) / math.expm1(x)
        if x < 0:
            return math.exp((b + 1) * x) * math.expm1((a - b) * x) / math.expm1(x)
        return a - b
    return f


def integral_identity_1(a: float, b: float, tol: float = 1e-9) -> QuadCheck:
    """PV of ``int_0^inf (t^a - t^b)/(t - 1) dt`` against ``pi (cot(pi b) - cot(pi a))``, ``a, b`` in (-1, 0)."""
    if not (-1 < a < 0 and -1 < b < 0):
        raise DomainError("a and b must lie in (-1, 0)")
    closed = PI * (1.0 / math.tan(PI * b) - 1.0 / math.tan(PI * a))
    if a == b:
        return QuadCheck(0.0, 0.0, 0.0, {"change": 0.0})
    pv = PVQuadrature(_identity1_integrand(a, b), 0.0)
    val, change = pv.evaluate()
    if change > tol * max(1.0, abs(val)):
        warnings.warn(f"excision refinement did not settle (last change {change:.2e})", RuntimeWarning,
                      stacklevel=2)
    return QuadCheck(float(val), closed, _rel(val, closed), {"change": change})


def _identity2_parts(ctx, p: float):
    g2 = ctx.gamma ** 2
    theta = PI * g2 / 4.0
    m = 4.0 / g2
    s = 4.0 * p / g2
    ez = cmath.exp(-1j * theta)
    iso = 1j * (g2 / 2.0) * math.sin(theta)
    cos_t = math.cos(theta)
    return g2, theta, m, s, ez, iso, cos_t


def _identity2_integrand(ctx, p: float):
    """``z * F(z)`` with ``z = e^x``, ``F`` the contour-integral integrand on the real axis."""
    g2, theta, m, s, ez, iso, cos_t = _identity2_parts(ctx, p)
    ezc = ez.conjugate()

    def f(x):
        if x > 0:
            # factor z^{1-m-s}; every remaining power is negative
            zi = math.exp(-x)
            zm = -math.expm1(-m * x)          # 1 - z^{-m}
            z1 = -math.expm1(-x)              # 1 - z^{-1}
            first = (ez + ezc * zi * zi - 2.0 * cos_t * zi) / (zm * z1)
            second = iso / z1
            return math.exp((1.0 - m - s) * x) * (first + second)
        if x < 0:
            z = math.exp(x)
            zm = math.expm1(m * x)            # z^m - 1
            z1 = math.expm1(x)                # z - 1
            first = (ez * z * z + ezc - 2.0 * cos_t * z) / (zm * z1)
            second = iso * math.exp((2.0 - m) * x) / z1
            return math.exp(-s * x) * (first + second)
        return complex("nan")
    return f


def integral_identity_2_closed(ctx, p: float) -> complex:
    ctx = as_context(ctx)
    g2 = ctx.gamma ** 2
    th = PI * g2 / 4.0

    def cot(x):
        return 1.0 / math.tan(x)

    re = (PI * g2 / 4.0) * math.cos(th) * (cot(PI * (p - g2 / 4.0)) - cot(PI * p))
    im = (PI * g2 / 4.0) * math.sin(th) * (2.0 * cot(4.0 * PI * (p + 1.0) / g2) - cot(PI * p)
                                           - cot(PI * (p - g2 / 4.0)))
    return complex(re, im)


def integral_identity_2(ctx, p: float, tol: float = 1e-8) -> QuadCheck:
    """Complex PV quadrature of the contour-integral identity on ``(0, inf)``.

    Both singular factors ``1/(z-1)`` and ``1/(z^{4/gamma^2}-1)`` sit at
    ``z = 1`` and are excised together.  ``rel_err`` is the larger of the
    real-part and imaginary-part relative errors.
    """
    ctx = as_context(ctx)
    g2 = ctx.gamma ** 2
    if not g2 / 4.0 - 1.0 < p < 0.0:
        raise DomainError(f"p must lie in (gamma^2/4 - 1, 0) = ({g2 / 4 - 1}, 0)")
    closed = integral_identity_2_closed(ctx, p)
    # slow algebraic decay near the lower end of the p-range: split the tail
    decay = 4.0 * (p + 1.0) / g2 - 1.0
    grow = -4.0 * p / g2
    pts = tuple(x for x in (-20.0 / grow, -2.0 / grow, 2.0 / decay, 20.0 / decay) if abs(x) > 0.1)
    pv = PVQuadrature(_identity2_integrand(ctx, p), 0.0, breakpoints=pts, complex_valued=True)
    val, change = pv.evaluate()
    flagged = change > tol * max(1.0, abs(val))
    if flagged:
        warnings.warn(f"excision refinement did not settle (last change {change:.2e})", RuntimeWarning,
                      stacklevel=2)
    err = max(_rel(val.real, closed.real), _rel(val.imag, closed.imag))
    return QuadCheck(complex(val), closed, err, {"change": change, "not_converged": flagged,
                                                  "re_err": _rel(val.real, closed.real),
                                                  "im_err": _rel(val.imag, closed.imag)})


def integral_identity_2_real_route(ctx, p: float) -> QuadCheck:
    """Real part through ``z = t^{gamma^2/4}``, reducing it to the first identity."""
    ctx = as_context(ctx)
    g2 = ctx.gamma ** 2
    a = -p + g2 / 4.0 - 1.0
    b = -p - 1.0
    inner = integral_identity_1(a, b)
    scale = (g2 / 4.0) * math.cos(PI * g2 / 4.0)
    closed = integral_identity_2_closed(ctx, p).real
    val = scale * inner.quadrature
    return QuadCheck(val, closed, _rel(val, closed), {"identity_1_exponents": (a, b)})


# --- boundary-arc algebra ----------------------------------------------------

def arc_moment(ctx, p: float, c2: float = 1.0) -> complex:
    """Closed-form first boundary-arc moment with the real constant set to ``c2``."""
    ctx = as_context(ctx)
    g2 = ctx.gamma ** 2

    def cot(x):
        return 1.0 / math.tan(x)

    core = (cot(PI * (p - g2 / 4.0)) - cot(PI * p)
            + 1j * math.tan(PI * g2 / 4.0) * (2.0 * cot(4.0 * PI * (p + 1.0) / g2)
                                               - cot(PI * p) - cot(PI * (p - g2 / 4.0))))
    return c2 * cmath.exp(1j * PI * p / 2.0 - 1j * PI * g2 / 4.0) * core


def exponent_from_alpha(ctx, alpha: float) -> float:
    """``p = gamma alpha / 2 - 2``, mapping ``(Q, 4/gamma)`` onto ``(gamma^2/4 - 1, 0)``."""
    ctx = as_context(ctx)
    return ctx.gamma * alpha / 2.0 - 2.0


def ratio_routes(ctx, alpha: float) -> dict:
    """The moment ratio assembled three ways from the boundary-arc moments."""
    ctx = as_context(ctx)
    p = exponent_from_alpha(ctx, alpha)
    g2 = ctx.gamma ** 2
    o1 = arc_moment(ctx, p)
    o2 = o1.conjugate()  # swapping the two arcs conjugates the moment
    ph = cmath.exp(1j * PI * (p + 1.0) / 2.0)
    direct = (ph * o1 + o2 / ph) / (ph * o2 + o1 / ph)

    a = cmath.exp(1j * PI * g2 / 4.0)
    b = cmath.exp(1j * PI * 4.0 / g2)
    c = cmath.exp(1j * PI * 4.0 * p / g2)
    d = cmath.exp(1j * PI * p)
    sd = cmath.exp(1j * PI * p / 2.0)
    abc2 = (a * b * c) ** 2
    o_ratio = (d / a ** 2) * (d ** 4 - (a ** 2 + 1) * d ** 2 + abc2) / (
        -d ** 4 + (a ** 2 + 1) * (b * c) ** 2 * d ** 2 - abc2)
    # e^{i pi (p+1)/2} = i sqrt(d)
    u, v = 1j * sd, -1j / sd
    via_abcd = (u * o_ratio + v) / (u + v * o_ratio)

    arg_num = PI * (-g2 / 2.0 - 4.0 / g2 - 4.0 * p / g2 + 2.0 * p)
    arg_den = PI * (-g2 / 4.0 - 4.0 / g2 - 4.0 * p / g2 + p)
    simplified = -1.0 / (2.0 * math.cos(PI * g2 / 4.0)) * math.sin(arg_num) / math.sin(arg_den)
    return {"p": p, "direct": direct, "via_abcd": via_abcd, "simplified": simplified,
            "o_ratio": o_ratio, "o_ratio_direct": o1 / o2}


def ratio_algebra_check(ctx, alpha: float) -> float:
    """Largest deviation of the assembled ratios from :func:`cr_ratio`, imaginary parts included."""
    ctx = as_context(ctx)
    if not ctx.q_coeff < alpha < 4.0 / ctx.gamma:
        raise DomainError("alpha must lie in (Q, 4/gamma)")
    r = ratio_routes(ctx, alpha)
    target = cr_ratio(ctx, alpha)
    devs = [abs(r["direct"] - target), abs(r["via_abcd"] - target), abs(r["simplified"] - target),
            abs(r["o_ratio"] - r["o_ratio_direct"])]
    return float(max(devs))
