"""Nested-circuit cascade and independent estimation of the nested-path exponent.

The cascade is ``sigma`` i.i.d. increments ``-log X_i`` drawn from the law of
``-log CR(0, D~)`` given ``T^c``, stopped after a geometric number of steps
(``P[sigma >= k] = P[T^c]^k``), followed by a terminal excess ``F`` drawn from
the law of ``-log CR(0, D_{L^o})`` given ``T``.  With ``u = log(c0/eps)``,

    Z(eps) = E[a^ell * 1{S_sigma + F >= u}],   ell = #{k <= sigma : S_k <= u},

decays like ``eps^x`` with ``x`` the nested-path exponent.  ``Z`` is estimated
by Monte Carlo and, independently, by discretised renewal convolution.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import fftconvolve

from . import kernels
from .exact_formulas import KappaContext, as_context, touching_probability
from .exponents import mean_increment, root_nl, root_np
from .radii_laws import LawSampler, build_series

CHUNK = 1 << 17


@dataclass
class CascadeConfig:
    """Parameters of a cascade experiment.

    ``eps_grid`` must be strictly decreasing in (0, 1].  ``method`` is ``"mc"``
    or ``"conv"``; ``h`` is the grid step of the convolution method.
    """

    kappa: float
    a: float = 1.0
    eps_grid: tuple = ()
    n_samples: int = 100_000
    seed: int = 0
    c0: float = 1.0
    method: str = "mc"
    h: float = 1e-3
    threads: int = 1

    def __post_init__(self):
        self.ctx = as_context(self.kappa)
        self.kappa = self.ctx.kappa
        eps = np.asarray(self.eps_grid, dtype=float)
        if eps.size == 0:
            raise ValueError("eps_grid is empty")
        if np.any(eps <= 0) or np.any(eps > 1) or np.any(np.diff(eps) >= 0):
            raise ValueError("eps_grid must be strictly decreasing in (0, 1]")
        if not self.a > 0:
            raise ValueError("a must be positive")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not self.h > 0:
            raise ValueError("h must be positive")
        if not self.c0 > 0:
            raise ValueError("c0 must be positive")
        if self.method not in ("mc", "conv"):
            raise ValueError(f"unknown method {self.method!r}")
        self.eps_grid = tuple(float(e) for e in eps)

    @property
    def levels(self) -> np.ndarray:
        return np.log(self.c0 / np.asarray(self.eps_grid))


def eps_grid(eps_max: float = 0.1, decades: float = 2.0, per_decade: int = 3) -> tuple:
    """Log-spaced decreasing grid from ``eps_max`` over ``decades`` decades."""
    n = int(round(decades * per_decade)) + 1
    return tuple(eps_max * 10.0 ** (-np.arange(n) / per_decade))


@dataclass
class CascadeEstimate:
    eps: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    method: str
    slope: float = float("nan")
    half_width: float = float("nan")
    reference: float = float("nan")
    meta: dict = field(default_factory=dict)

    def as_rows(self):
        return [(float(e), float(v), float(s), self.method)
                for e, v, s in zip(self.eps, self.values, self.stderr)]


@dataclass
class CascadeSample:
    """One cascade realisation: ``increments`` has length ``sigma``."""

    increments: np.ndarray
    final_excess: float

    @property
    def sigma(self) -> int:
        return int(self.increments.size)

    @property
    def partial_sums(self) -> np.ndarray:
        return np.cumsum(self.increments)


# --- samplers ----------------------------------------------------------------

_SAMPLER_CACHE: dict = {}


def cascade_samplers(ctx) -> tuple[LawSampler, LawSampler]:
    """Samplers for the increment law (given T^c) and the terminal law (given T)."""
    ctx = as_context(ctx)
    key = ("np", ctx.kappa)
    if key not in _SAMPLER_CACHE:
        _SAMPLER_CACHE[key] = (LawSampler(build_series(ctx, "wtd")),
                               LawSampler(build_series(ctx, "touch")))
    return _SAMPLER_CACHE[key]


def loop_sampler(ctx) -> LawSampler:
    ctx = as_context(ctx)
    key = ("nl", ctx.kappa)
    if key not in _SAMPLER_CACHE:
        _SAMPLER_CACHE[key] = LawSampler(build_series(ctx, "ssw"))
    return _SAMPLER_CACHE[key]


def sample_cascade_batch(ctx, n: int, rng: np.random.Generator):
    """Draw ``n`` independent cascades.

    Returns
    -------
    counts : (n,) int64
        ``sigma`` of each cascade.
    increments : (sum(counts),) float
        Concatenated increments, cascade by cascade.
    finals : (n,) float
        Terminal excess ``F``.
    """
    ctx = as_context(ctx)
    inc_sampler, fin_sampler = cascade_samplers(ctx)
    p_touch = touching_probability(ctx)
    counts = rng.geometric(p_touch, size=n).astype(np.int64) - 1
    increments = inc_sampler.sample(int(counts.sum()), rng)
    finals = fin_sampler.sample(n, rng)
    return counts, increments, finals


def sample_cascade(ctx, rng: np.random.Generator) -> CascadeSample:
    counts, inc, fin = sample_cascade_batch(ctx, 1, rng)
    return CascadeSample(inc, float(fin[0]))


# --- Monte Carlo -------------------------------------------------------------

def _stream(seed: int, *key: int) -> np.random.Generator:
    # counter-mode streams: one SeedSequence child per (eps index, chunk index)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def _chunks(n: int) -> list[tuple[int, int]]:
    return [(i, min(CHUNK, n - lo)) for i, lo in enumerate(range(0, n, CHUNK))]


def _np_chunk_moments(ctx, a, level, seed, i_eps, i_chunk, size):
    rng = _stream(seed, i_eps, i_chunk)
    counts, inc, fin = sample_cascade_batch(ctx, size, rng)
    ell, total = kernels.cascade_counts(inc, counts, np.array([level]))
    hit = (total + fin) >= level
    w = np.where(hit, np.power(a, ell[:, 0].astype(float)), 0.0)
    return np.array([w.sum(), (w * w).sum(), float(size)])


def _nl_chunk_moments(ctx, a, level, seed, i_eps, i_chunk, size):
    rng = _stream(seed, i_eps, i_chunk)
    sampler = loop_sampler(ctx)
    count = np.zeros(size)
    total = np.zeros(size)
    live = np.arange(size)
    while live.size:
        total[live] += sampler.sample(live.size, rng)
        below = total[live] <= level
        count[live[below]] += 1
        live = live[below]
    w = np.power(a, count)
    return np.array([w.sum(), (w * w).sum(), float(size)])


def _run_mc(config: CascadeConfig, chunk_fn) -> tuple[np.ndarray, np.ndarray, list]:
    ctx = config.ctx
    values, errors, ess = [], [], []
    pool = ThreadPoolExecutor(config.threads) if config.threads > 1 else None
    try:
        for i_eps, level in enumerate(config.levels):
            jobs = [(ctx, config.a, float(level), config.seed, i_eps, i, size)
                    for i, size in _chunks(config.n_samples)]
            if pool is None:
                parts = [chunk_fn(*job) for job in jobs]
            else:
                parts = list(pool.map(lambda job: chunk_fn(*job), jobs))
            s1, s2, n = np.sum(np.array(parts), axis=0)
            mean = s1 / n
            var = max(s2 / n - mean * mean, 0.0)
            values.append(mean)
            errors.append(math.sqrt(var / n))
            ess.append(s1 * s1 / s2 if s2 > 0 else 0.0)
    finally:
        if pool is not None:
            pool.shutdown()
    if config.a > 1 and min(ess) < 100:
        warnings.warn(f"effective sample size down to {min(ess):.0f}; heavy weights", RuntimeWarning,
                      stacklevel=3)
    return np.array(values), np.array(errors), ess


def estimate_functional_mc(config: CascadeConfig) -> CascadeEstimate:
    """Monte Carlo estimate of ``E[a^ell 1{S_sigma + F >= log(c0/eps)}]`` for every eps."""
    values, errors, ess = _run_mc(config, _np_chunk_moments)
    est = CascadeEstimate(np.array(config.eps_grid), values, errors, "mc",
                          reference=root_np(config.ctx, config.a),
                          meta={"n_samples": config.n_samples, "seed": config.seed,
                                "c0": config.c0, "ess": ess, "chunk": CHUNK,
                                "streams": "SeedSequence(seed, spawn_key=(eps_index, chunk_index))"})
    _attach_fit(est)
    return est


def nl_functional(config: CascadeConfig) -> CascadeEstimate:
    """Nested-loop analogue: ``E[a^t]`` with ``t = #{k : S_k <= log(c0/eps)}`` and loop increments."""
    if config.method == "conv":
        est = _nl_conv(config)
    else:
        values, errors, ess = _run_mc(config, _nl_chunk_moments)
        est = CascadeEstimate(np.array(config.eps_grid), values, errors, "mc",
                              meta={"n_samples": config.n_samples, "seed": config.seed,
                                    "c0": config.c0, "ess": ess})
    est.reference = root_nl(config.ctx, config.a)
    _attach_fit(est, weighted=est.method == "mc")
    return est


# --- convolution -------------------------------------------------------------

def _grid_laws(ctx: KappaContext, laws, top: float, h: float):
    n = int(math.ceil(top / h)) + 2
    s = h * np.arange(n)
    out = []
    for law in laws:
        dens, ccdf = build_series(ctx, law).evaluate(s)
        out.append((dens, ccdf))
    return s, out


def _renewal_density(step_density, weight: float, h: float, max_terms: int, tol: float = 1e-13):
    """``sum_{m>=1} weight^m p_m`` on the grid, ``p_m`` the m-fold convolution of ``step_density``.

    Stops when a term's mass falls below ``tol`` or after ``max_terms`` terms.
    """
    n = step_density.size
    term = weight * step_density
    total = term.copy()
    used = 1
    capped = True
    for used in range(2, max_terms + 1):
        term = weight * h * fftconvolve(term, step_density)[:n]
        total += term
        if h * np.abs(term).sum() < tol * max(1.0, h * np.abs(total).sum()):
            capped = False
            break
    return total, used, capped


def _trapezoid_conv(r, g, h):
    """``int_0^{s_i} r(s) g(s_i - s) ds`` on the grid; ``r(0) = 0`` is assumed."""
    n = r.size
    full = fftconvolve(r, g)[:n]
    return h * (full - 0.5 * r * g[0])


def _np_conv_on_grid(ctx: KappaContext, a: float, top: float, h: float, max_terms: int):
    s, ((wd, wc), (td, tc)) = _grid_laws(ctx, ("wtd", "touch"), top, h)
    qc = 1.0 - touching_probability(ctx)
    # wtd density integrates to P[T^c]; a * P[T^c] * (conditional density)
    renewal, used, capped = _renewal_density(wd, a, h, max_terms)
    g = tc + wc
    z = g + _trapezoid_conv(renewal, g, h)
    return s, z, used, capped, qc


def _conv_estimate(config: CascadeConfig, on_grid) -> CascadeEstimate:
    levels = config.levels
    top = max(float(levels.max()), 0.0) + 10 * config.h
    ctx = config.ctx
    c1 = 1.0 / mean_increment(ctx)
    max_terms = max(int(50 * max(top, 1.0) * c1), 200)
    s, z, used, capped = on_grid(ctx, config.a, top, config.h, max_terms)[:4]
    s2, z2 = on_grid(ctx, config.a, top, 2 * config.h, max_terms)[:2]
    fine = CubicSpline(s, z)(np.maximum(levels, 0.0))
    coarse = CubicSpline(s2, z2)(np.maximum(levels, 0.0))
    # second-order scheme: Richardson estimate of the discretisation error
    err = np.abs(fine - coarse) / 3.0
    return CascadeEstimate(np.array(config.eps_grid), fine, err, "conv",
                           meta={"h": config.h, "terms": used, "term_cap": max_terms,
                                 "cap_reached": capped, "c0": config.c0})


def estimate_functional_conv(config: CascadeConfig) -> CascadeEstimate:
    """Deterministic evaluation of the cascade functional by renewal convolution.

    ``Z = G + R * G`` with ``R = sum_{m>=1} (a P[T^c])^m p_m`` the weighted
    renewal density of the increments and ``G(u) = P[F >= u; T] + P[X_1 > u; T^c]``.
    """
    est = _conv_estimate(config, _np_conv_on_grid)
    est.reference = root_np(config.ctx, config.a)
    _attach_fit(est, weighted=False)
    return est


def _nl_conv_on_grid(ctx: KappaContext, a: float, top: float, h: float, max_terms: int):
    s, ((d, c),) = _grid_laws(ctx, ("ssw",), top, h)
    renewal, used, capped = _renewal_density(d, a, h, max_terms)
    z = c + _trapezoid_conv(renewal, c, h)
    return s, z, used, capped


def _nl_conv(config: CascadeConfig) -> CascadeEstimate:
    return _conv_estimate(config, _nl_conv_on_grid)


def estimate(config: CascadeConfig) -> CascadeEstimate:
    if config.method == "conv":
        return estimate_functional_conv(config)
    return estimate_functional_mc(config)


# --- exponent fit ------------------------------------------------------------

def fit_exponent(eps, values, stderr=None, z: float = 1.959963984540054) -> tuple[float, float]:
    """Slope of ``log(value)`` against ``log(eps)`` so that ``value ~ eps^slope``.

    Weighted least squares with weights ``(value/stderr)^2`` when every
    ``stderr`` is positive; otherwise ordinary least squares with a
    residual-based error.  Returns ``(slope, half_width)`` where ``half_width``
    is ``z`` standard errors of the slope.
    """
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    if eps.size < 3:
        raise ValueError("need at least 3 eps points")
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        raise ValueError("cannot fit: estimates must be positive and finite")
    x = np.log(eps)
    y = np.log(values)
    design = np.column_stack([np.ones_like(x), x])
    if stderr is not None and np.all(np.asarray(stderr) > 0):
        sig = np.asarray(stderr, dtype=float) / values
        w = 1.0 / sig ** 2
        cov = np.linalg.inv(design.T @ (design * w[:, None]))
        beta = cov @ (design.T @ (w * y))
        se = math.sqrt(cov[1, 1])
    else:
        beta, *_ = np.linalg.lstsq(design, y, rcond=None)
        resid = y - design @ beta
        dof = max(x.size - 2, 1)
        cov = np.linalg.inv(design.T @ design) * float(resid @ resid) / dof
        se = math.sqrt(cov[1, 1])
    return float(beta[1]), z * se


def _attach_fit(est: CascadeEstimate, weighted: bool = True):
    # deterministic discretisation errors are not variances, so the
    # convolution values are fitted unweighted (half-width = misfit)
    if est.eps.size >= 3 and np.all(est.values > 0):
        est.slope, est.half_width = fit_exponent(est.eps, est.values,
                                                 est.stderr if weighted else None)
