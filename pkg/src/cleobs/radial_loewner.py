"""Radial Loewner flow and the angular-gap diffusion of radial SLE_kappa(kappa - 6).

With driving point ``U_t = exp(i theta_t)`` and force point ``g_t(x) = exp(i phi_t)``
the gap ``psi = theta - phi`` in ``(0, 2 pi)`` solves

    d psi = sqrt(kappa) dB + ((rho + 2)/2) cot(psi/2) dt,   rho = kappa - 6,

so for the exploration process the drift is ``((kappa - 4)/2) cot(psi/2)``.
Time is log conformal radius: ``g_t'(0) = e^t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, optimize, special

from . import kernels
from .exact_formulas import as_context

TWO_PI = 2.0 * math.pi
DEFAULT_DELTA = 1e-5


class LoewnerSingularity(ValueError):
    """The Loewner vector field was evaluated at the driving point."""


def phi_field(u, z):
    """``z (u + z)/(u - z)``, the radial Loewner vector field."""
    u = np.asarray(u, dtype=complex)
    z = np.asarray(z, dtype=complex)
    diff = u - z
    if np.any(diff == 0):
        raise LoewnerSingularity("field evaluated at the driving point")
    out = z * (u + z) / diff
    return out if out.ndim else complex(out)


def field_derivative_at_origin(u: complex, h: float = 1e-6) -> complex:
    """Central difference of ``phi_field(u, .)`` at 0; equals 1 for every ``u``."""
    return (phi_field(u, h) - phi_field(u, -h)) / (2.0 * h)


# --- angular drifts ----------------------------------------------------------

def _cot(x):
    return 1.0 / np.tan(x)


def angular_drifts(theta, phi, rho: float):
    """``(d theta, d phi)`` drift coefficients in angular form."""
    return 0.5 * rho * _cot(0.5 * (theta - phi)), _cot(0.5 * (phi - theta))


def complex_drifts(theta, phi, rho: float):
    """The same drifts read off the complex equations.

    ``phi`` from ``d g = phi_field(U, g) dt`` on the circle; ``theta`` from
    ``dU = -(kappa/2) U dt + i sqrt(kappa) U dB + (rho/2) phi_field(g(x), U) dt``
    after removing the Ito term, i.e. ``i U d theta``.  Returns complex values
    whose imaginary parts should vanish.
    """
    u = np.exp(1j * np.asarray(theta, dtype=float))
    g = np.exp(1j * np.asarray(phi, dtype=float))
    return 0.5 * rho * phi_field(g, u) / (1j * u), phi_field(u, g) / (1j * g)


def drift_identity_check(n: int = 1000, seed=0, kappa: float = 6.0) -> float:
    """Largest relative discrepancy (imaginary residues included) over random states."""
    rho = as_context(kappa).rho
    rng = np.random.default_rng(seed)
    theta = rng.uniform(-math.pi, math.pi, n)
    psi = rng.uniform(1e-3, TWO_PI - 1e-3, n)
    phi = theta - psi
    a_theta, a_phi = angular_drifts(theta, phi, rho)
    c_theta, c_phi = complex_drifts(theta, phi, rho)
    err = 0.0
    for a, c in ((a_theta, c_theta), (a_phi, c_phi)):
        scale = np.maximum(np.abs(a), 1.0)
        err = max(err, float(np.max(np.abs(c - a) / scale)))
    return err


# --- driving process ---------------------------------------------------------

@dataclass(frozen=True)
class DrivingState:
    """Driving and force-point angles, their gap in (0, 2 pi) and time."""

    theta: float
    phi: float
    psi: float
    t: float = 0.0

    @classmethod
    def start(cls, psi0: float, theta0: float = 0.0) -> "DrivingState":
        if not 0.0 < psi0 < TWO_PI:
            raise ValueError("psi0 must lie in (0, 2 pi)")
        return cls(theta0, theta0 - psi0, psi0, 0.0)


RELATIVE_STEP = 0.2


def default_length_scale(kappa: float, dt: float, relative_step: float = RELATIVE_STEP) -> float:
    """Boundary-layer width at which a full step moves ``psi`` by ``relative_step`` of its distance.

    Inside the layer the log-distance clock advances by ``relative_step**2``
    per step.
    """
    return math.sqrt(kappa * dt) / relative_step


def step_driving(state: DrivingState, ctx, dt: float, rng: np.random.Generator,
                 rho: float | None = None, delta: float = DEFAULT_DELTA,
                 length_scale: float | None = None, max_halvings: int = 60,
                 normal: float | None = None) -> DrivingState:
    """One step of the gap diffusion with boundary-adapted size.

    Away from the boundary this is Euler-Maruyama with step ``dt``; an update
    overshooting the boundary by more than ``delta`` is retried with half the
    step and the same normal.  Within ``length_scale`` of the boundary the
    step is ``dt (dist/length_scale)^2`` and is taken on ``log dist``, which
    cannot cross zero.  The angles ``theta`` and ``phi`` take Euler steps
    driven by the same normal; the gap has its own update so it is exactly
    invariant under a common rotation of the angles.
    """
    ctx = as_context(ctx)
    if not 0.0 < state.psi < TWO_PI:
        raise ValueError("psi must lie in (0, 2 pi)")
    rho = ctx.rho if rho is None else rho
    k = ctx.kappa
    if length_scale is None:
        length_scale = default_length_scale(k, dt)
    z = rng.standard_normal() if normal is None else normal
    p = state.psi
    low = p < math.pi
    dist = p if low else TWO_PI - p
    c = 1.0 / math.tan(0.5 * p)
    drift = 0.5 * (rho + 2.0) * c
    if dist < length_scale:
        ds = k * dt / length_scale ** 2
        h = ds * dist * dist / k
        # in the clock ds = kappa dt / dist^2 the log-distance has unit noise
        log_drift = 0.5 * (rho + 2.0) / k * dist / math.tan(0.5 * dist) - 0.5
        d = math.exp(math.log(dist) + log_drift * ds + (1.0 if low else -1.0) * math.sqrt(ds) * z)
        new = d if low else TWO_PI - d
    else:
        h = dt
        new = p + drift * h + math.sqrt(k * h) * z
        for _ in range(max_halvings):
            if -delta <= new <= TWO_PI + delta:
                break
            h *= 0.5
            new = p + drift * h + math.sqrt(k * h) * z
    noise = math.sqrt(k * h) * z
    return DrivingState(state.theta + 0.5 * rho * c * h + noise, state.phi - c * h, new, state.t + h)


def drive_path(ctx, psi0: float, t_end: float, dt: float, rng: np.random.Generator,
               rho: float | None = None, theta0: float = 0.0, delta: float = DEFAULT_DELTA):
    """Run :func:`step_driving` until ``t_end`` or absorption.

    Returns arrays ``(t, theta, phi, psi)`` including the initial state.
    """
    state = DrivingState.start(psi0, theta0)
    rows = [(state.t, state.theta, state.phi, state.psi)]
    while state.t < t_end and delta < state.psi < TWO_PI - delta:
        state = step_driving(state, ctx, min(dt, t_end - state.t), rng, rho=rho, delta=delta)
        rows.append((state.t, state.theta, state.phi, state.psi))
    return tuple(np.array(col) for col in zip(*rows))


def quadratic_variation(values) -> float:
    return float(np.sum(np.diff(values) ** 2))


# --- Loewner flow ------------------------------------------------------------

@dataclass
class FlowState:
    """Images of tracked points under ``g_t``.

    ``derivative`` is the four-point contour estimate of ``g_t'(0)`` from the
    images of ``r, ir, -r, -ir``.
    """

    points: np.ndarray
    images: np.ndarray
    swallowed: np.ndarray
    swallow_time: np.ndarray
    t: float
    derivative: complex
    probe_radius: float
    max_modulus_drift: float = 0.0
    substeps: int = 0
    history: list = field(default_factory=list)


def _rk4(z, u0, u_mid, u1, h):
    k1 = phi_field(u0, z)
    k2 = phi_field(u_mid, z + 0.5 * h * k1)
    k3 = phi_field(u_mid, z + 0.5 * h * k2)
    k4 = phi_field(u1, z + h * k3)
    return z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def evolve_flow(times, theta, points=(), probe_radius: float = 1e-4, swallow_tol: float = 1e-2,
                stiffness: float = 0.002, max_substeps: int = 1_000_000, record_every: int = 0) -> FlowState:
    """RK4 integration of ``dg = phi_field(U_t, g) dt`` along a sampled driving path.

    ``theta`` is linearly interpolated between the samples at ``times``.  A
    step is split so that ``h * 2/d^2 <= stiffness`` with ``d`` the smallest
    distance of a live point to the driving point.  Points within
    ``swallow_tol`` of the driving point are frozen and flagged.
    """
    times = np.asarray(times, dtype=float)
    theta = np.asarray(theta, dtype=float)
    pts = np.asarray(points, dtype=complex).ravel()
    probes = probe_radius * np.array([1, 1j, -1, -1j])
    z = np.concatenate([probes, pts])
    n_probe = probes.size
    on_circle = np.abs(np.abs(z) - 1.0) < 1e-12
    swallowed = np.zeros(z.size, dtype=bool)
    when = np.full(z.size, np.nan)
    drift = 0.0
    subs = 0
    hist = []
    if np.any(np.abs(z - np.exp(1j * theta[0])) < swallow_tol):
        raise LoewnerSingularity("a tracked point starts at the driving point")
    for j in range(times.size - 1):
        t0, t1 = times[j], times[j + 1]
        live = ~swallowed
        d = np.abs(z[live] - np.exp(1j * theta[j])).min() if live.any() else 1.0
        m = int(min(max_substeps, max(1, math.ceil((t1 - t0) * 2.0 / (stiffness * d * d)))))
        h = (t1 - t0) / m
        for k in range(m):
            a = k / m
            th0 = theta[j] + (theta[j + 1] - theta[j]) * a
            th1 = theta[j] + (theta[j + 1] - theta[j]) * (a + 1.0 / m)
            u0, u1 = np.exp(1j * th0), np.exp(1j * th1)
            u_mid = np.exp(1j * 0.5 * (th0 + th1))
            live = ~swallowed
            z[live] = _rk4(z[live], u0, u_mid, u1, h)
            close = live & (np.abs(z - u1) < swallow_tol)
            when[close] = t0 + (k + 1) * h
            swallowed |= close
            subs += 1
        if on_circle.any():
            ok = on_circle & ~swallowed
            if ok.any():
                drift = max(drift, float(np.max(np.abs(np.abs(z[ok]) - 1.0))))
        if record_every and j % record_every == 0:
            hist.append((t1, z[n_probe:].copy()))
    omega = np.array([1, 1j, -1, -1j])
    deriv = complex(np.sum(z[:n_probe] / omega) / (4.0 * probe_radius))
    return FlowState(pts, z[n_probe:], swallowed[n_probe:], when[n_probe:], float(times[-1]),
                     deriv, probe_radius, drift, subs, hist)


def brownian_driving(kappa: float, t_end: float, dt: float, rng: np.random.Generator, theta0: float = 0.0):
    """Grid samples of ``theta0 + sqrt(kappa) B_t``."""
    n = int(round(t_end / dt))
    times = np.linspace(0.0, t_end, n + 1)
    inc = math.sqrt(kappa * t_end / n) * rng.standard_normal(n)
    return times, theta0 + np.concatenate([[0.0], np.cumsum(inc)])


# --- first passage -----------------------------------------------------------

LOWER, UPPER = "lower", "upper"


@dataclass
class FirstPassageSample:
    tau: float
    side: str


@dataclass
class PassageResult:
    """Exit times (log conformal radius) and sides of independent gap paths.

    ``status`` holds ``kernels.EXIT_LOWER``/``EXIT_UPPER`` or ``RUNNING`` for
    paths censored at ``t_max``.
    """

    tau: np.ndarray
    status: np.ndarray
    psi0: float
    kappa: float
    dt: float
    delta: float
    backend: str
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.tau.size)

    @property
    def censored(self) -> int:
        return int(np.sum(self.status == kernels.RUNNING))

    @property
    def p_upper(self) -> float:
        return float(np.mean(self.status == kernels.EXIT_UPPER))

    @property
    def p_lower(self) -> float:
        return float(np.mean(self.status == kernels.EXIT_LOWER))

    @property
    def mean_tau(self) -> float:
        done = self.status != kernels.RUNNING
        return float(self.tau[done].mean())

    @property
    def stderr_tau(self) -> float:
        done = self.status != kernels.RUNNING
        return float(self.tau[done].std(ddof=1) / math.sqrt(done.sum()))

    def samples(self) -> list:
        names = {kernels.EXIT_LOWER: LOWER, kernels.EXIT_UPPER: UPPER, kernels.RUNNING: "censored"}
        return [FirstPassageSample(float(t), names[int(s)]) for t, s in zip(self.tau, self.status)]


def first_passage(ctx, psi0: float, dt: float, rng, n: int, delta: float = DEFAULT_DELTA,
                  length_scale: float | None = None, t_max: float = 200.0, block: int = 256,
                  max_halvings: int = 60, backend: str | None = None) -> PassageResult:
    """Exit time and side of ``n`` independent gap paths started at ``psi0``.

    Paths are absorbed once ``psi`` leaves ``(delta, 2 pi - delta)``.  Normals
    are drawn in blocks of ``block`` columns for the still-running paths, so
    a given ``rng`` state gives the same result with either kernel backend.
    """
    ctx = as_context(ctx)
    if not 0.0 < psi0 < TWO_PI:
        raise ValueError("psi0 must lie in (0, 2 pi)")
    if not delta < psi0 < TWO_PI - delta:
        raise ValueError("psi0 lies inside the absorption layer")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    kern = kernels.backend(backend) if backend else kernels
    ls = default_length_scale(ctx.kappa, dt) if length_scale is None else length_scale
    psi = np.full(n, float(psi0))
    tau = np.zeros(n)
    status = np.zeros(n, dtype=np.int8)
    live = np.arange(n)
    while live.size:
        normals = rng.standard_normal((live.size, block))
        p, t, s = psi[live].copy(), tau[live].copy(), status[live].copy()
        kern.passage_block(p, t, s, normals, ctx.kappa, dt, ls, delta, max_halvings)
        psi[live], tau[live], status[live] = p, t, s
        keep = (s == kernels.RUNNING) & (t < t_max)
        live = live[keep]
    name = backend or kernels.BACKEND
    return PassageResult(tau, status, float(psi0), ctx.kappa, dt, delta, name,
                         {"length_scale": ls, "t_max": t_max, "block": block})


# --- diffusion oracles -------------------------------------------------------

def scale_exponent(kappa: float) -> float:
    """``a`` in the scale density ``sin(y/2)^{-a}``."""
    return 2.0 * (kappa - 4.0) / kappa


def scale_function(kappa: float, y):
    """``S(y) = int_0^y sin(v/2)^{-a} dv`` via the incomplete beta function."""
    a = scale_exponent(kappa)
    y = np.asarray(y, dtype=float)
    half = 0.5 * special.beta(0.5 * (1.0 - a), 0.5)
    w = 0.5 * np.minimum(y, TWO_PI - y)
    part = 0.5 * special.betainc(0.5 * (1.0 - a), 0.5, np.sin(w) ** 2) * special.beta(0.5 * (1.0 - a), 0.5)
    # int_0^{w} sin^{-a} over w <= pi/2, reflected about pi/2 for the upper half
    out = np.where(y <= math.pi, 2.0 * part, 2.0 * (2.0 * half - part))
    return out if out.ndim else float(out)


def upper_exit_probability(kappa: float, psi0: float, delta: float = DEFAULT_DELTA,
                           method: str = "quad") -> float:
    """Probability that the gap reaches ``2 pi - delta`` before ``delta``.

    ``method="quad"`` integrates the scale density numerically;
    ``"beta"`` uses the closed form of the scale function.
    """
    if method == "beta":
        s = lambda y: scale_function(kappa, y)  # noqa: E731
        return (s(psi0) - s(delta)) / (s(TWO_PI - delta) - s(delta))
    a = scale_exponent(kappa)

    def dens(y):
        return math.sin(0.5 * y) ** (-a)

    opts = dict(epsabs=0.0, epsrel=1e-12, limit=200)
    num, _ = integrate.quad(dens, delta, psi0, **opts)
    den_lo, _ = integrate.quad(dens, delta, math.pi, **opts)
    return num / (2.0 * den_lo)


def mean_exit_time(kappa: float, psi0: float, delta: float = DEFAULT_DELTA) -> float:
    """Expected absorption time from the Green's function of the gap diffusion."""
    a = scale_exponent(kappa)
    lo, hi = delta, TWO_PI - delta
    s_lo, s_hi, s_x = (scale_function(kappa, v) for v in (lo, hi, psi0))

    def speed(y):
        return (2.0 / kappa) * math.sin(0.5 * y) ** a

    opts = dict(epsabs=0.0, epsrel=1e-11, limit=200)
    left, _ = integrate.quad(lambda y: (scale_function(kappa, y) - s_lo) * speed(y), lo, psi0, **opts)
    right, _ = integrate.quad(lambda y: (s_hi - scale_function(kappa, y)) * speed(y), psi0, hi, **opts)
    return ((s_hi - s_x) * left + (s_x - s_lo) * right) / (s_hi - s_lo)


@dataclass
class RefinementStudy:
    dts: np.ndarray
    means: np.ndarray
    stderrs: np.ndarray
    exact: float
    slope: float
    slope_stderr: float
    p_upper: np.ndarray


def refinement_study(ctx, psi0: float, dts, n: int, seed=0, delta: float = DEFAULT_DELTA,
                     length_scale: float | None = None) -> RefinementStudy:
    """Mean exit time bias against the Green's-function value for a ladder of steps.

    ``slope`` is the exponent ``p`` of a weighted fit ``bias = c dt^p``
    (observed weak order) and ``slope_stderr`` its standard error.  ``length_scale`` is held fixed across the ladder when
    given; by default it is tied to the coarsest step.
    """
    ctx = as_context(ctx)
    dts = np.sort(np.asarray(dts, dtype=float))[::-1]
    ls = default_length_scale(ctx.kappa, dts[0]) if length_scale is None else length_scale
    exact = mean_exit_time(ctx.kappa, psi0, delta)
    means, errs, pu = [], [], []
    for i, dt in enumerate(dts):
        res = first_passage(ctx, psi0, dt, np.random.default_rng([seed, i]), n, delta=delta,
                            length_scale=ls)
        means.append(res.mean_tau)
        errs.append(res.stderr_tau)
        pu.append(res.p_upper)
    means, errs = np.array(means), np.array(errs)
    bias = means - exact
    # fit bias = c dt^p on the signed biases with their standard errors; a
    # log|bias| fit is biased once |bias| drops to the noise level
    c0 = bias[0] / dts[0]
    (c, p), cov = optimize.curve_fit(lambda d, c, p: c * d ** p, dts, bias, p0=(c0, 1.0),
                                     sigma=errs, absolute_sigma=True, maxfev=10_000)
    return RefinementStudy(dts, means, errs, exact, float(p), float(math.sqrt(cov[1, 1])),
                           np.array(pu))


def with_state(state: DrivingState, **changes) -> DrivingState:
    return replace(state, **changes)
