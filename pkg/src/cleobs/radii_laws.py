"""Laws of ``S = -log CR`` recovered from their moment transforms.

Each moment ``M(lam) = E[exp(-lam S); event]`` is meromorphic in ``lam`` with
simple poles on the negative axis and decays as ``lam -> +inf``, so the density
of ``S`` is the exponential sum ``f(s) = sum_k a_k exp(lam_k s)`` with
``a_k = Res_{lam_k} M``.  Poles come from zeros of the denominators written in
``u = sqrt(t)``, ``t = (kappa-4)^2 - 8 kappa lam``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import kernels
from .exact_formulas import PI, KappaContext, as_context, law_mass, moment, moment_continued, threshold

LAW_TAGS = ("ssw", "touch", "nontouch", "wtd")
DEFAULT_TERMS = 200

# families of denominator zeros in u: spacing and first zero
_SIN_FAMILY = "sin"  # sin(pi u / 4) = 0 at u = 4k
_COS_FAMILY = "cos"  # cos(pi u / kappa) = 0 at u = kappa (2k - 1) / 2


class ResidueMismatch(RuntimeError):
    """Analytic and numerical residues disagree."""


def _pole_u(family: str, k: int, kappa: float) -> float:
    return 4.0 * k if family == _SIN_FAMILY else kappa * (2 * k - 1) / 2.0


def _families(law: str) -> tuple[str, ...]:
    return {
        "ssw": (_COS_FAMILY,),
        "touch": (_SIN_FAMILY,),
        "wtd": (_SIN_FAMILY,),
        "nontouch": (_SIN_FAMILY, _COS_FAMILY),
    }[law]


def _residue_u(law: str, ctx: KappaContext, u: float, family: str) -> float:
    """Residue in ``lam`` of ``M = N(u)/D(u)`` at a simple zero ``u`` of ``D``.

    With ``d lam / d u = -u/(4 kappa)`` the residue is ``-N(u) u / (4 kappa D'(u))``.
    """
    k = ctx.kappa
    c0 = math.cos(PI * (k - 4.0) / k)
    if law == "ssw":
        num, dden = c0, -(PI / k) * math.sin(PI * u / k)
    elif law == "touch":
        num = 2.0 * c0 * math.sin(PI * (k - 4.0) * u / (4.0 * k))
        dden = (PI / 4.0) * math.cos(PI * u / 4.0)
    elif law == "wtd":
        num = math.sin(PI * (8.0 - k) * u / (4.0 * k))
        dden = (PI / 4.0) * math.cos(PI * u / 4.0)
    else:
        cos_u = math.cos(PI * u / k)
        sin_u = math.sin(PI * u / 4.0)
        if family == _SIN_FAMILY and abs(cos_u) < 1e-9 or family == _COS_FAMILY and abs(sin_u) < 1e-9:
            # both denominator factors vanish: the pole is shared with the loop
            # and touching laws and the sum rule fixes its residue
            return _residue_u("ssw", ctx, u, _COS_FAMILY) - _residue_u("touch", ctx, u, _SIN_FAMILY)
        num = c0 * math.sin(PI * (8.0 - k) * u / (4.0 * k))
        if family == _SIN_FAMILY:
            dden = cos_u * (PI / 4.0) * math.cos(PI * u / 4.0)
        else:
            dden = -(PI / k) * math.sin(PI * u / k) * sin_u
    return -num * u / (4.0 * k * dden)


def numerical_residue(law: str, ctx, pole: float, rel_step: float = 1e-6, gap: float = math.inf) -> float:
    """Estimate ``lim (lam - pole) M(lam)`` by a symmetric two-point limit.

    ``gap`` is the distance to the nearest other pole; the step is kept well
    inside it.
    """
    ctx = as_context(ctx)
    h = min(rel_step * max(1.0, abs(pole)), 1e-4 * gap)
    right = h * moment_continued(law, ctx, pole + h)
    left = -h * moment_continued(law, ctx, pole - h)
    return 0.5 * (left + right)


@dataclass
class ResidueSeries:
    """Exponential-sum density ``f(s) = sum_k a_k exp(lam_k s)`` of ``S = -log CR``.

    Attributes
    ----------
    law_tag : str
    kappa : float
    poles : ndarray
        Strictly decreasing negative poles ``lam_k``.
    coefficients : ndarray
        Residues ``a_k``.
    families : ndarray of str
        Which denominator factor produced each pole.
    s_min : float
        Below ``s_min`` the truncation bound is not controlled; the density is
        reported as 0 there (the true density is super-exponentially small).
    tail_bound : float
        Bound on the omitted CCDF terms for ``s >= s_min``.
    mass : float
        ``CCDF(s_min)``, i.e. the total mass carried by the truncated series.
    """

    law_tag: str
    kappa: float
    poles: np.ndarray
    coefficients: np.ndarray
    families: np.ndarray
    s_min: float = 0.0
    tail_bound: float = 0.0
    mass: float = float("nan")
    diagnostics: dict = field(default_factory=dict)

    @property
    def terms(self) -> int:
        return int(self.poles.size)

    def evaluate(self, s):
        """Return ``(density, ccdf)`` at ``s``; below ``s_min`` density is 0 and ccdf is the mass."""
        s = np.asarray(s, dtype=np.float64)
        clipped = np.maximum(s, self.s_min)
        dens, ccdf = kernels.series_eval(self.poles, self.coefficients, clipped)
        below = s < self.s_min
        if np.any(below):
            dens = np.where(below, 0.0, dens)
            ccdf = np.where(below, self.mass, ccdf)
        return dens, ccdf

    def density(self, s):
        return self.evaluate(s)[0]

    def ccdf(self, s):
        return self.evaluate(s)[1]

    def laplace_tail(self, lam: float, s0: float) -> float:
        """Exact ``int_{s0}^inf exp(-lam s) f(s) ds`` of the truncated series."""
        rate = self.poles - lam
        return float(np.sum(self.coefficients * np.exp(rate * s0) / (-rate)))


def _tail_envelope(ctx: KappaContext, law: str, poles, coefs, fams):
    """Per-family bound ``|a_k| <= A u_k`` extrapolated past the last retained pole."""
    out = []
    for fam in set(fams):
        sel = fams == fam
        us = np.sqrt(ctx.t_of_lambda(poles[sel]))
        amp = 1.5 * float(np.max(np.abs(coefs[sel]) / us))
        spacing = 4.0 if fam == _SIN_FAMILY else ctx.kappa
        out.append((amp, float(us.max()), spacing))
    return out


def _tail_at(ctx: KappaContext, envelope, s: float) -> float:
    """Geometric-comparison bound on the omitted CCDF terms at ``s``."""
    k = ctx.kappa
    total = 0.0
    for amp, u_last, spacing in envelope:
        u1 = u_last + spacing
        u2 = u1 + spacing
        lam1 = ((k - 4.0) ** 2 - u1 * u1) / (8.0 * k)
        lam2 = ((k - 4.0) ** 2 - u2 * u2) / (8.0 * k)
        first = amp * u1 * math.exp(lam1 * s) / (-lam1)
        ratio = (u2 / u1) * math.exp((lam2 - lam1) * s)
        if ratio >= 1.0:
            return math.inf
        total += first / (1.0 - ratio)
    return total


def build_series(ctx, law_tag: str, terms: int = DEFAULT_TERMS, check: bool = True,
                 tail_tol: float = 1e-14) -> ResidueSeries:
    """Residue-series density of ``-log CR`` for ``law_tag``.

    Parameters
    ----------
    ctx : KappaContext or float
    law_tag : {"ssw", "touch", "nontouch", "wtd"}
    terms : int
        Number of poles kept (across both families for ``nontouch``).
    check : bool
        Cross-check every analytic residue against :func:`numerical_residue`;
        raises :class:`ResidueMismatch` on disagreement beyond ``1e-7``.
    tail_tol : float
        Target bound on the omitted tail used to place ``s_min``.
    """
    ctx = as_context(ctx)
    law = law_tag.lower()
    if law not in LAW_TAGS:
        raise ValueError(f"unknown law {law_tag!r}")
    if terms < 1:
        raise ValueError("terms must be >= 1")
    k = ctx.kappa
    # enough candidates from every family, merged and cut to the first `terms`
    cands: dict[float, list] = {}
    for fam in _families(law):
        for j in range(1, terms + 1):
            u = _pole_u(fam, j, k)
            key = round(u, 9)  # coincidence detection only
            if key in cands:
                cands[key][1] = "both"
            else:
                cands[key] = [u, fam]
    picked = sorted(cands.values())[:terms]
    fams = np.array([f for _, f in picked])
    us_arr = np.array([u for u, _ in picked], dtype=np.float64)
    poles = ((k - 4.0) ** 2 - us_arr ** 2) / (8.0 * k)
    coefs = np.array([
        _residue_u(law, ctx, u, _SIN_FAMILY if f in (_SIN_FAMILY, "both") else _COS_FAMILY)
        for u, f in zip(us_arr, fams)
    ])
    fams = np.where(fams == "both", _SIN_FAMILY, fams)
    scale = float(np.max(np.abs(coefs)))
    if check:
        worst = 0.0
        gaps = np.abs(np.diff(poles))
        gaps = np.minimum(np.append(gaps, np.inf), np.insert(gaps, 0, np.inf))
        for pole, a, gap in zip(poles[:40], coefs[:40], gaps[:40]):
            est = numerical_residue(law, ctx, float(pole), gap=float(gap))
            err = abs(est - a) / max(abs(a), 1e-3 * scale)
            worst = max(worst, err)
            if err > 1e-7:
                raise ResidueMismatch(
                    f"{law} kappa={k}: residue at {pole} analytic {a} numerical {est}")
    series = ResidueSeries(law, k, poles, coefs, fams)
    envelope = _tail_envelope(ctx, law, poles, coefs, fams)
    target = tail_tol * law_mass(law, ctx)
    lo, hi = 0.0, 1.0
    while _tail_at(ctx, envelope, hi) > target:
        hi *= 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _tail_at(ctx, envelope, mid) > target:
            lo = mid
        else:
            hi = mid
    series.s_min = hi
    series.tail_bound = _tail_at(ctx, envelope, hi)
    _, mass = kernels.series_eval(poles, coefs, np.array([hi]))
    series.mass = float(mass[0])
    if check:
        series.diagnostics["residue_check_worst"] = worst
    return series


def transform_roundtrip(series: ResidueSeries, lambda_grid, epsrel: float = 1e-12) -> float:
    """Max relative error between ``int exp(-lam s) f(s) ds`` and the closed-form moment.

    The integral is adaptive quadrature over ``[s_min, s_cut]`` plus the exact
    tail of the exponential sum beyond ``s_cut``.
    """
    ctx = KappaContext(series.kappa)
    thr = threshold(series.law_tag, ctx)
    lam4 = series.poles[min(3, series.terms - 1)]
    s_cut = max(1.0, 30.0 / abs(lam4))
    breaks = [b for b in (0.02, 0.1, 0.3, 1.0, 3.0) if series.s_min < b < s_cut]
    worst = 0.0
    for lam in lambda_grid:
        if lam <= thr:
            raise ValueError(f"lambda={lam} is not above the threshold {thr}")

        def integrand(s, lam=lam):
            return math.exp(-lam * s) * float(series.density(np.array([s]))[0])

        with warnings.catch_warnings():
            # at large lam the moment is ~1e-9 and epsrel is limited by roundoff
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            body, _ = integrate.quad(integrand, series.s_min, s_cut, points=breaks or None,
                                     epsabs=1e-17, epsrel=epsrel, limit=400)
        value = body + series.laplace_tail(lam, s_cut)
        exact = moment(series.law_tag, ctx, lam)
        worst = max(worst, abs(value - exact) / abs(exact))
    return worst


# --- sampling ----------------------------------------------------------------

class LawSampler:
    """Inverse-transform sampler for the normalised law of a :class:`ResidueSeries`.

    The complementary CDF is tabulated on a two-scale grid; inversion locates
    the bracketing cell by binary search and interpolates ``log CCDF`` linearly,
    which is exact for a single exponential.  Past the table the leading
    exponential term is inverted analytically.
    """

    def __init__(self, series: ResidueSeries, fine_step: float = 5e-4, coarse_step: float = 5e-3,
                 knee: float = 5.0, tail_level: float = 1e-15):
        self.series = series
        lead = -float(series.poles[0])
        s_max = series.s_min + math.log(1.0 / tail_level) / lead
        knee = min(max(knee, series.s_min + 1.0), s_max)
        fine = np.arange(series.s_min, knee, fine_step)
        # the far tail is nearly a single exponential, which log-linear
        # interpolation reproduces exactly, so a coarse grid is enough there
        coarse_step = max(coarse_step, (s_max - knee) / 100_000)
        coarse = np.arange(knee, s_max + coarse_step, coarse_step)
        grid = np.concatenate([fine, coarse])
        _, ccdf = kernels.series_eval(series.poles, series.coefficients, grid)
        envelope = np.minimum.accumulate(ccdf)
        self.nonmonotone = float(np.max(ccdf - envelope))
        if self.nonmonotone > 1e-12 * series.mass:
            warnings.warn(f"truncated CCDF non-monotone by {self.nonmonotone:.3g}; "
                          "using its monotone envelope", RuntimeWarning, stacklevel=2)
        keep = envelope > 0
        self.grid = grid[keep]
        self.norm = float(envelope[0])
        self.neg_log_ccdf = -np.log(envelope[keep] / self.norm)
        self.lead_rate = lead

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``n`` values of ``S``."""
        if n == 0:
            return np.empty(0)
        v = rng.random(n)
        # target -log(CCDF/norm) = -log(1 - v) is exponential(1); use 1-v in (0, 1]
        y = -np.log1p(-v)
        table = self.neg_log_ccdf
        idx = np.searchsorted(table, y, side="right")
        out = np.empty(n)
        inside = idx < table.size
        j = np.clip(idx[inside], 1, table.size - 1)
        y0, y1 = table[j - 1], table[j]
        s0, s1 = self.grid[j - 1], self.grid[j]
        w = np.where(y1 > y0, (y[inside] - y0) / np.where(y1 > y0, y1 - y0, 1.0), 0.0)
        out[inside] = s0 + w * (s1 - s0)
        out[~inside] = self.grid[-1] + (y[~inside] - table[-1]) / self.lead_rate
        return out

    def cdf(self, s) -> np.ndarray:
        """CDF of the normalised law from the series (not the table)."""
        return 1.0 - self.series.ccdf(s) / self.norm


def law_sampler(ctx, law_tag: str, terms: int = DEFAULT_TERMS) -> LawSampler:
    return LawSampler(build_series(ctx, law_tag, terms))
