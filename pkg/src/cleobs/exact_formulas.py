"""Closed-form conformal-radius observables of CLE_kappa for kappa in (4, 8).

Every moment formula is written in the real variable ``t`` and evaluated
through :func:`gsin` / :func:`gcos`, which continue ``sin(c*sqrt(t))`` and
``cos(c*sqrt(t))`` to ``t < 0`` by their hyperbolic counterparts.  Divergent
moments are reported as ``math.inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

PI = math.pi

# values this close above a divergence threshold count as divergent
THRESHOLD_SLACK = 1e-14

# |c^2 t| below this uses the power series of sin(x)/x, cos(x)
_SERIES_CUTOFF = 1e-4


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a formula."""


@dataclass(frozen=True)
class KappaContext:
    """Parameter bundle derived from ``kappa``.

    Attributes
    ----------
    kappa : float
        SLE parameter, strictly inside (4, 8).
    gamma : float
        ``4 / sqrt(kappa)``.
    q_coeff : float
        ``gamma/2 + 2/gamma``.
    stable_index : float
        ``gamma**2 / 4 = 4 / kappa``, the index of the boundary-length subordinator.
    rho : float
        Force-point weight ``kappa - 6``.
    """

    kappa: float
    gamma: float = field(init=False)
    q_coeff: float = field(init=False)
    stable_index: float = field(init=False)
    rho: float = field(init=False)

    def __post_init__(self):
        k = float(self.kappa)
        if not (4.0 < k < 8.0) or math.isnan(k):
            raise DomainError(f"kappa must lie in (4, 8), got {self.kappa!r}")
        g = 4.0 / math.sqrt(k)
        object.__setattr__(self, "kappa", k)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "q_coeff", g / 2.0 + 2.0 / g)
        object.__setattr__(self, "stable_index", 4.0 / k)
        object.__setattr__(self, "rho", k - 6.0)

    @property
    def touch_threshold(self) -> float:
        """Divergence threshold ``kappa/8 - 1`` of the touching and D-tilde moments."""
        return self.kappa / 8.0 - 1.0

    @property
    def loop_threshold(self) -> float:
        """Divergence threshold ``3 kappa/32 + 2/kappa - 1`` of the loop moments."""
        k = self.kappa
        return 3.0 * k / 32.0 + 2.0 / k - 1.0

    def t_of_lambda(self, lam: float) -> float:
        """Continuation variable ``(kappa-4)^2 - 8 kappa lam`` of a moment at ``lam``."""
        k = self.kappa
        return (k - 4.0) ** 2 - 8.0 * k * lam

    def lambda_of_t(self, t: float) -> float:
        k = self.kappa
        return ((k - 4.0) ** 2 - t) / (8.0 * k)


def as_context(kappa) -> KappaContext:
    """Accept either a :class:`KappaContext` or a bare ``kappa`` value."""
    if isinstance(kappa, KappaContext):
        return kappa
    return KappaContext(kappa)


# --- continued trigonometric helpers --------------------------------------

def sinc_t(c: float, t: float) -> float:
    """Entire function ``sum_n (-c^2 t)^n / (2n+1)!``.

    Equals ``sin(c sqrt t)/(c sqrt t)`` for ``t > 0`` and
    ``sinh(c sqrt(-t))/(c sqrt(-t))`` for ``t < 0``.
    """
    z = c * c * t
    if abs(z) < _SERIES_CUTOFF:
        return 1.0 - z / 6.0 + z * z / 120.0 - z ** 3 / 5040.0
    if z > 0:
        x = math.sqrt(z)
        return math.sin(x) / x
    x = math.sqrt(-z)
    return math.sinh(x) / x


def cos_t(c: float, t: float) -> float:
    """Entire function ``sum_n (-c^2 t)^n / (2n)!`` (equal to :func:`gcos`)."""
    z = c * c * t
    if abs(z) < _SERIES_CUTOFF:
        return 1.0 - z / 2.0 + z * z / 24.0 - z ** 3 / 720.0
    if z > 0:
        return math.cos(math.sqrt(z))
    return math.cosh(math.sqrt(-z))


def gsin(c: float, t: float) -> float:
    """``sin(c sqrt t)`` for ``t >= 0`` and ``sinh(c sqrt(-t))`` for ``t < 0``."""
    if t >= 0:
        return math.sin(c * math.sqrt(t))
    return math.sinh(c * math.sqrt(-t))


def gcos(c: float, t: float) -> float:
    """``cos(c sqrt t)`` for ``t >= 0`` and ``cosh(c sqrt(-t))`` for ``t < 0``."""
    return cos_t(c, t)


def _log_sinh_over_x(x: float) -> float:
    if x < 20.0:
        return math.log(math.sinh(x) / x)
    return x - math.log(2.0 * x) + math.log1p(-math.exp(-2.0 * x))


def log_sinc_t(c: float, t: float) -> float:
    """Logarithm of :func:`sinc_t`, overflow-safe for large negative ``t``."""
    z = c * c * t
    if z < -1.0:
        return _log_sinh_over_x(math.sqrt(-z))
    return math.log(sinc_t(c, t))


def log_cos_t(c: float, t: float) -> float:
    z = c * c * t
    if z < -400.0:
        x = math.sqrt(-z)
        return x - math.log(2.0) + math.log1p(math.exp(-2.0 * x))
    return math.log(cos_t(c, t))


def gsin_ratio(c: float, d: float, t: float) -> float:
    """``gsin(c, t) / gsin(d, t)``, continuous through ``t = 0`` where it equals ``c/d``.

    Valid for any real ``t`` away from zeros of the denominator; large negative
    ``t`` goes through logarithms to avoid overflow.
    """
    if max(c, d) ** 2 * t > -400.0:
        return (c / d) * sinc_t(c, t) / sinc_t(d, t)
    return (c / d) * math.exp(log_sinc_t(c, t) - log_sinc_t(d, t))


def dlog_sinc_t(c: float, t: float) -> float:
    """Derivative in ``t`` of ``log sinc_t(c, t)``."""
    z = c * c * t
    if abs(z) < 1e-2:
        s = -1.0 / 3.0 - z / 45.0 - 2.0 * z * z / 945.0 - z ** 3 / 4725.0 - 2.0 * z ** 4 / 93555.0
        return 0.5 * c * c * s
    if z > 0:
        x = math.sqrt(z)
        return (1.0 / math.tan(x) - 1.0 / x) * c * c / (2.0 * x)
    y = math.sqrt(-z)
    return -(1.0 / math.tanh(y) - 1.0 / y) * c * c / (2.0 * y)


def dlog_cos_t(c: float, t: float) -> float:
    """Derivative in ``t`` of ``log cos_t(c, t)``."""
    z = c * c * t
    if abs(z) < 1e-2:
        # -tan(x)/x * c^2/2 with tan(x)/x = 1 + x^2/3 + 2x^4/15 + 17x^6/315
        return -0.5 * c * c * (1.0 + z / 3.0 + 2.0 * z * z / 15.0 + 17.0 * z ** 3 / 315.0)
    if z > 0:
        x = math.sqrt(z)
        return -math.tan(x) * c * c / (2.0 * x)
    y = math.sqrt(-z)
    return math.tanh(y) * c * c / (2.0 * y)


# --- touching probability --------------------------------------------------

def touching_probability(ctx) -> float:
    """Probability that the loop surrounding the origin touches the boundary."""
    k = as_context(ctx).kappa
    return 1.0 - math.sin(PI * (k / 4.0 + 8.0 / k)) / math.sin(PI * (k - 4.0) / 4.0)


def _argmax_numerator(x: float) -> float:
    # numerator of d/dx touching_probability; the tan-form equation cleared of poles
    a = PI * (x / 4.0 + 8.0 / x)
    b = PI * x / 4.0
    r = (x * x - 32.0) / (x * x)
    return math.sin(a) * math.cos(b) - r * math.cos(a) * math.sin(b)


def kappa0_argmax(lo: float = 4.5, hi: float = 7.9, panels: int = 64, tol: float = 1e-10) -> float:
    """Location of the maximum of :func:`touching_probability` over (4, 8).

    Scans ``panels`` equal panels of ``[lo, hi]`` for sign changes of the
    stationarity equation and bisects the unique bracket to ``tol``.
    """
    xs = [lo + (hi - lo) * i / panels for i in range(panels + 1)]
    vals = [_argmax_numerator(x) for x in xs]
    brackets = [(xs[i], xs[i + 1]) for i in range(panels) if vals[i] * vals[i + 1] < 0]
    if len(brackets) != 1:
        raise RuntimeError(f"expected one stationary point in [{lo}, {hi}], found {len(brackets)}")
    a, b = brackets[0]
    fa = _argmax_numerator(a)
    while b - a > tol:
        m = 0.5 * (a + b)
        fm = _argmax_numerator(m)
        if fa * fm <= 0:
            b = m
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


# --- conformal radius moments ----------------------------------------------

def _divergent(lam: float, threshold: float) -> bool:
    return lam <= threshold + THRESHOLD_SLACK


def _ssw_formula(ctx: KappaContext, t: float) -> float:
    k = ctx.kappa
    return math.cos(PI * (k - 4.0) / k) / cos_t(PI / k, t)


def _touch_formula(ctx: KappaContext, t: float) -> float:
    k = ctx.kappa
    return 2.0 * math.cos(PI * (k - 4.0) / k) * gsin_ratio(PI * (k - 4.0) / (4.0 * k), PI / 4.0, t)


def _nontouch_formula(ctx: KappaContext, t: float) -> float:
    k = ctx.kappa
    return (math.cos(PI * (k - 4.0) / k) * gsin_ratio(PI * (8.0 - k) / (4.0 * k), PI / 4.0, t)
            / cos_t(PI / k, t))


def _wtd_formula(ctx: KappaContext, t: float) -> float:
    k = ctx.kappa
    return gsin_ratio(PI * (8.0 - k) / (4.0 * k), PI / 4.0, t)


_FORMULAS = {
    "ssw": (_ssw_formula, "loop"),
    "touch": (_touch_formula, "touch"),
    "nontouch": (_nontouch_formula, "loop"),
    "wtd": (_wtd_formula, "touch"),
}


def ssw_moment(ctx, lam: float) -> float:
    """``E[CR(0, D_{L^o})^lam]``, the moment of the loop surrounding the origin."""
    ctx = as_context(ctx)
    if _divergent(lam, ctx.loop_threshold):
        return math.inf
    return _ssw_formula(ctx, ctx.t_of_lambda(lam))


def cr_moment_touching(ctx, lam: float) -> float:
    """``E[CR(0, D_{L^o})^lam ; T]`` with ``T`` the boundary-touching event."""
    ctx = as_context(ctx)
    if _divergent(lam, ctx.touch_threshold):
        return math.inf
    return _touch_formula(ctx, ctx.t_of_lambda(lam))


def cr_moment_nontouching(ctx, lam: float) -> float:
    """``E[CR(0, D_{L^o})^lam ; T^c]``."""
    ctx = as_context(ctx)
    if _divergent(lam, ctx.loop_threshold):
        return math.inf
    return _nontouch_formula(ctx, ctx.t_of_lambda(lam))


def wtd_moment(ctx, lam: float) -> float:
    """``E[CR(0, D~)^lam ; T^c]`` where ``D~`` drops all boundary-touching loops."""
    ctx = as_context(ctx)
    if _divergent(lam, ctx.touch_threshold):
        return math.inf
    return _wtd_formula(ctx, ctx.t_of_lambda(lam))


def moment_continued(law: str, ctx, lam: float) -> float:
    """Meromorphic continuation of a moment formula to all real ``lam``.

    No threshold check: below the divergence threshold this is the analytic
    continuation, not an expectation.  Used for residue computations.
    """
    ctx = as_context(ctx)
    return _FORMULAS[_law_key(law)][0](ctx, ctx.t_of_lambda(lam))


def _law_key(law: str) -> str:
    key = law.lower()
    if key not in _FORMULAS:
        raise DomainError(f"unknown law {law!r}")
    return key


MOMENTS = {
    "ssw": ssw_moment,
    "touch": cr_moment_touching,
    "nontouch": cr_moment_nontouching,
    "wtd": wtd_moment,
}


def moment(law: str, ctx, lam: float) -> float:
    """Dispatch by law tag (``ssw``, ``touch``, ``nontouch``, ``wtd``)."""
    return MOMENTS[_law_key(law)](ctx, lam)


def threshold(law: str, ctx) -> float:
    """Divergence threshold of the moment of ``law``."""
    ctx = as_context(ctx)
    kind = _FORMULAS[_law_key(law)][1]
    return ctx.touch_threshold if kind == "touch" else ctx.loop_threshold


def law_mass(law: str, ctx) -> float:
    """Total mass of the law: 1, P[T], P[T^c], P[T^c] for ssw, touch, nontouch, wtd."""
    key = _law_key(law)
    if key == "ssw":
        return 1.0
    p = touching_probability(ctx)
    return p if key == "touch" else 1.0 - p


# --- alpha parametrisation and the CR ratio --------------------------------

@dataclass(frozen=True)
class AlphaParam:
    alpha: float
    delta_alpha: float
    lambda_equiv: float


def alpha_param(ctx, alpha: float) -> AlphaParam:
    """Bundle ``alpha`` with ``Delta_alpha`` and ``lambda = 2 Delta_alpha - 2``.

    ``alpha`` must lie in ``(Q, 4/gamma]``; the right endpoint corresponds to
    ``lambda = 0``.
    """
    ctx = as_context(ctx)
    q = ctx.q_coeff
    upper = 4.0 / ctx.gamma
    if not (q < alpha <= upper * (1.0 + 1e-15)):
        raise DomainError(f"alpha must lie in (Q, 4/gamma] = ({q}, {upper}], got {alpha}")
    delta = 0.5 * alpha * (q - 0.5 * alpha)
    return AlphaParam(alpha, delta, 2.0 * delta - 2.0)


def alpha_from_lambda(ctx, lam: float) -> AlphaParam:
    """Invert ``lambda = 2 Delta_alpha - 2`` on the branch ``alpha >= Q``."""
    ctx = as_context(ctx)
    q = ctx.q_coeff
    disc = q * q - 2.0 * (lam + 2.0)
    if disc < 0:
        raise DomainError(f"lambda={lam} exceeds the maximum {q * q / 2 - 2} of 2 Delta_alpha - 2")
    alpha = q + math.sqrt(disc)
    upper = 4.0 / ctx.gamma
    if upper < alpha < upper * (1.0 + 1e-12):  # roundoff past the lambda = 0 endpoint
        alpha = upper
    return alpha_param(ctx, alpha)


def cr_ratio(ctx, alpha) -> float:
    """Ratio of the non-touching to touching conformal-radius moments, divided
    by the loop moment, written in the ``alpha`` variable.

    Evaluates ``sin(pi(gamma - 2/gamma)(Q-alpha)) /
    (2 cos(pi(1 - gamma^2/4)) sin(pi(2/gamma - gamma/2)(Q-alpha)))`` with the
    removable singularity at ``alpha = Q`` resolved.
    """
    ctx = as_context(ctx)
    if isinstance(alpha, AlphaParam):
        alpha = alpha.alpha
    elif alpha != ctx.q_coeff:  # alpha = Q is the small-angle limit
        alpha = alpha_param(ctx, alpha).alpha
    g = ctx.gamma
    x2 = (ctx.q_coeff - alpha) ** 2
    num_c = PI * (g - 2.0 / g)
    den_c = PI * (2.0 / g - g / 2.0)
    return gsin_ratio(num_c, den_c, x2) / (2.0 * math.cos(PI * (1.0 - g * g / 4.0)))
