"""Nested-path and nested-loop exponents and the large-deviation toolkit.

The nested-path exponent ``x = root_np(kappa, a)`` is the solution below
``1 - kappa/8`` of ``a * E[CR(0, D~)^{-x} ; T^c] = 1``; the nested-loop
exponent solves the analogous equation for the loop moment.  The rate function
``Lambda(lam) = log E[CR(0, D~)^{-lam} | T^c]`` gives a second, independent
route to the nested-path exponent through Legendre duality.
"""

from __future__ import annotations

import math

from .exact_formulas import (
    PI,
    DomainError,
    as_context,
    cos_t,
    dlog_sinc_t,
    log_cos_t,
    log_sinc_t,
    touching_probability,
)

T_LEFT_CAP = 1e6
LAMBDA_LEFT = -1e6
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _bisect(f, lo: float, hi: float, maxiter: int = 400) -> float:
    """Bisection for a decreasing ``f`` with ``f(lo) > 0 > f(hi)``, run to machine precision."""
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _expand_left(f, start: float = -1.0) -> float:
    t_left = start
    while f(t_left) <= 0:
        t_left *= 2.0
        if abs(t_left) > T_LEFT_CAP:
            raise RuntimeError("no sign change found within |t| <= 1e6; root bracket failed")
    return t_left


def _np_constants(kappa: float) -> tuple[float, float]:
    return PI / 4.0, PI * (8.0 - kappa) / (4.0 * kappa)


def root_np(ctx, a: float) -> float:
    """Nested-path exponent: the root ``x < 1 - kappa/8`` of
    ``gsin(pi/4, t) = a gsin(pi(8-kappa)/(4 kappa), t)`` with ``t = (kappa-4)^2 + 8 kappa x``.
    """
    ctx = as_context(ctx)
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}")
    k = ctx.kappa
    d, c = _np_constants(k)
    log_a = math.log(a)
    # log of the decreasing ratio gsin(d,t)/gsin(c,t), minus log a
    base = math.log(d / c)

    def h(t):
        return base + log_sinc_t(d, t) - log_sinc_t(c, t) - log_a

    t_left = 0.0 if h(0.0) > 0 else _expand_left(h)
    t_star = _bisect(h, t_left, 16.0)
    return (t_star - (k - 4.0) ** 2) / (8.0 * k)


def root_nl(ctx, a: float) -> float:
    """Nested-loop exponent: the root ``x < 1 - 2/kappa - 3 kappa/32`` of
    ``gcos(pi/kappa, t) = a cos(pi (kappa-4)/kappa)``.
    """
    ctx = as_context(ctx)
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}")
    k = ctx.kappa
    c = PI / k
    rhs = math.log(a * math.cos(PI * (k - 4.0) / k))
    t_right = k * k / 4.0

    def h(t):
        if t >= t_right:
            return -math.inf
        return log_cos_t(c, t) - rhs

    t_left = 0.0 if h(0.0) > 0 else _expand_left(h)
    t_star = _bisect(h, t_left, t_right)
    return (t_star - (k - 4.0) ** 2) / (8.0 * k)


def closed_form_np(kappa: float, a: float) -> float:
    """Explicit nested-path exponent at ``kappa = 6`` and ``kappa = 16/3``."""
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}")
    if abs(kappa - 6.0) < 1e-12:
        arg = (a - 1.0) / 2.0
        if not -1.0 <= arg <= 1.0:
            raise DomainError("arccos argument outside [-1, 1]; need a <= 3")
        return 3.0 / (4.0 * PI ** 2) * math.acos(arg) ** 2 - 1.0 / 12.0
    if abs(kappa - 16.0 / 3.0) < 1e-12:
        arg = a / 2.0
        if not -1.0 <= arg <= 1.0:
            raise DomainError("arccos argument outside [-1, 1]; need a <= 2")
        return 3.0 / (2.0 * PI ** 2) * math.acos(arg) ** 2 - 1.0 / 24.0
    raise DomainError("closed forms exist only for kappa = 6 and kappa = 16/3")


# --- rate function ---------------------------------------------------------

def lambda_domain_end(ctx) -> float:
    """Right end ``1 - kappa/8`` of the domain of ``Lambda``."""
    return 1.0 - as_context(ctx).kappa / 8.0


def lambda_value(ctx, lam: float) -> float:
    """``Lambda(lam) = log(E[CR(0, D~)^{-lam} ; T^c] / P[T^c])``; ``inf`` for ``lam >= 1 - kappa/8``."""
    ctx = as_context(ctx)
    k = ctx.kappa
    if lam >= 1.0 - k / 8.0:
        return math.inf
    d, c = _np_constants(k)
    t = (k - 4.0) ** 2 + 8.0 * k * lam
    log_wtd = math.log(c / d) + log_sinc_t(c, t) - log_sinc_t(d, t)
    return log_wtd - math.log1p(-touching_probability(ctx))


def lambda_prime(ctx, lam: float) -> float:
    """Derivative of :func:`lambda_value`, from the closed form."""
    ctx = as_context(ctx)
    k = ctx.kappa
    if lam >= 1.0 - k / 8.0:
        return math.inf
    d, c = _np_constants(k)
    t = (k - 4.0) ** 2 + 8.0 * k * lam
    return 8.0 * k * (dlog_sinc_t(c, t) - dlog_sinc_t(d, t))


def mean_increment(ctx) -> float:
    """``Lambda'(0)``: the mean of ``-log CR(0, D~)`` given ``T^c``; its inverse is ``c1``."""
    return lambda_prime(ctx, 0.0)


def lambda_inverse(ctx, y: float) -> float:
    """Solve ``Lambda(lam) = y`` by bisection on ``(-1e6, 1 - kappa/8)``."""
    ctx = as_context(ctx)
    hi = lambda_domain_end(ctx)
    if lambda_value(ctx, LAMBDA_LEFT) > y:
        raise RuntimeError(f"Lambda^-1({y}) lies below {LAMBDA_LEFT}")
    return _bisect(lambda lam: y - lambda_value(ctx, lam), LAMBDA_LEFT, hi)


def golden_max(f, lo: float, hi: float, tol: float = 1e-12, maxiter: int = 500) -> tuple[float, float]:
    """Golden-section search for the maximum of a unimodal ``f`` on ``[lo, hi]``."""
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(maxiter):
        if hi - lo <= tol * max(1.0, abs(lo) + abs(hi)):
            break
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = f(x1)
    x = 0.5 * (lo + hi)
    return x, f(x)


def legendre_maximizer(ctx, s: float) -> float:
    """The ``lam`` attaining ``sup_lam (lam s - Lambda(lam))`` for ``s > 0``."""
    ctx = as_context(ctx)
    end = lambda_domain_end(ctx)
    lo = -1.0
    while lambda_prime(ctx, lo) > s:
        lo *= 2.0
        if lo < -1e15:
            raise RuntimeError(f"maximizer for s={s} lies below -1e15")
    # the maximizer sits strictly left of the asymptote; find a right bracket
    hi = end - 1e-3 * (end - lo)
    step = 1e-3
    while lambda_prime(ctx, hi) < s:
        step *= 1e-2
        hi = end - step * (end - lo)
        if step < 1e-300:
            raise RuntimeError(f"maximizer for s={s} too close to the asymptote")

    def objective(lam):
        return lam * s - lambda_value(ctx, lam)

    lam, _ = golden_max(objective, lo, hi, tol=1e-7)
    # Newton on Lambda'(lam) = s, kept inside the bracket, with finite-difference Lambda''
    for _ in range(30):
        g = lambda_prime(ctx, lam) - s
        if g > 0:
            hi = min(hi, lam)
        else:
            lo = max(lo, lam)
        h = 1e-6 * max(1.0, abs(lam))
        near_asymptote = end - lam < 1e-6
        if near_asymptote or lam + h >= end:
            new = 0.5 * (lo + hi)
        else:
            curv = (lambda_prime(ctx, lam + h) - lambda_prime(ctx, lam - h)) / (2.0 * h)
            new = lam - g / curv if curv > 0 else 0.5 * (lo + hi)
            if not lo < new < hi:
                new = 0.5 * (lo + hi)
        if abs(new - lam) <= 1e-15 * max(1.0, abs(lam)):
            lam = new
            break
        lam = new
    return lam


def legendre_star(ctx, s: float) -> float:
    """``Lambda*(s) = sup_lam (lam s - Lambda(lam))``; ``inf`` for ``s <= 0``."""
    if s <= 0:
        return math.inf
    lam = legendre_maximizer(ctx, s)
    return lam * s - lambda_value(ctx, lam)


def rate_duality_check(ctx, a: float) -> dict:
    """Compare ``sup_t {log(a P[T^c]) t - t Lambda*(1/t)}`` with ``-Lambda^{-1}(-log(a P[T^c]))``.

    The supremum runs over ``t in (0, c1)`` when ``a P[T^c] < 1`` and over
    ``t in (c1, inf)`` when ``a P[T^c] > 1``.  Returns a dict with the two
    sides, the discrepancy and the branch used.
    """
    ctx = as_context(ctx)
    qc = 1.0 - touching_probability(ctx)
    aq = a * qc
    if abs(aq - 1.0) < 1e-12:
        raise DomainError("a * P[T^c] = 1 is the boundary case; the duality check is skipped there")
    log_aq = math.log(aq)
    c1 = 1.0 / mean_increment(ctx)

    def objective(t):
        return log_aq * t - t * legendre_star(ctx, 1.0 / t)

    if aq < 1.0:
        branch = "t<c1"
        lo, hi = 1e-12 * c1, c1
    else:
        branch = "t>c1"
        lo, hi = c1, 2.0 * c1
        while objective(2.0 * hi) > objective(hi):
            hi *= 2.0
            if hi > 1e12:
                raise RuntimeError("supremum not bracketed")
        hi *= 2.0
    t_star, sup_value = golden_max(objective, lo, hi, tol=1e-10)
    target = -lambda_inverse(ctx, -log_aq)
    return {
        "sup": sup_value,
        "minus_lambda_inverse": target,
        "argmax_t": t_star,
        "branch": branch,
        "discrepancy": abs(sup_value - target),
    }
