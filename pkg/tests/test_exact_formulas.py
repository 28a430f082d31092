import math

import mpmath as mp
import pytest
from hypothesis import given, strategies as st

from cleobs import exact_formulas as ef
from cleobs.exact_formulas import DomainError

kappas = st.floats(4.05, 7.95)


def _complex_route(law, kappa, lam):
    """Moment formulas through complex square roots in mpmath (no real continuation)."""
    k = mp.mpf(kappa)
    r = mp.sqrt(mp.mpc((k - 4) ** 2 - 8 * k * lam))
    c = mp.cos(mp.pi * (k - 4) / k)
    ratio = mp.sin(mp.pi * (8 - k) / (4 * k) * r) / mp.sin(mp.pi / 4 * r)
    if law == "ssw":
        v = c / mp.cos(mp.pi / k * r)
    elif law == "touch":
        v = 2 * c * mp.sin(mp.pi * (k - 4) / (4 * k) * r) / mp.sin(mp.pi / 4 * r)
    elif law == "nontouch":
        v = c * ratio / mp.cos(mp.pi / k * r)
    else:
        v = ratio
    return complex(v)


# --- context -----------------------------------------------------------------

@given(kappas)
def test_context_invariants(k):
    ctx = ef.KappaContext(k)
    assert ctx.gamma ** 2 * ctx.kappa == pytest.approx(16.0, rel=1e-15)
    assert math.sqrt(2) < ctx.gamma < 2
    assert 0.5 < ctx.stable_index < 1
    assert ctx.q_coeff > 2


@pytest.mark.parametrize("bad", [4.0, 8.0, 3.0, 9.5, float("nan")])
def test_context_rejects_outside_interval(bad):
    with pytest.raises(DomainError):
        ef.KappaContext(bad)


# --- touching probability and its maximiser -----------------------------------

def test_touching_probability_examples():
    assert ef.touching_probability(6.0) == pytest.approx(0.5, abs=1e-12)
    assert 0 < ef.touching_probability(4.001) < 0.01
    assert abs(ef.touching_probability(7.999) - 0.5) < 0.002


def test_kappa0_is_a_maximum():
    k0 = ef.kappa0_argmax()
    assert abs(k0 - 6.95061) < 1e-4
    h = 1e-5
    d = (ef.touching_probability(k0 + h) - ef.touching_probability(k0 - h)) / (2 * h)
    assert abs(d) < 1e-5
    p0 = ef.touching_probability(k0)
    assert p0 > ef.touching_probability(k0 - 0.5)
    assert p0 > ef.touching_probability(k0 + 0.5)


@given(kappas)
def test_touching_probability_range(k):
    assert 0 < ef.touching_probability(k) <= ef.touching_probability(ef.kappa0_argmax()) + 1e-15


# --- moments -------------------------------------------------------------------

def test_ssw_examples():
    assert ef.ssw_moment(6, 0.0) == pytest.approx(1.0, abs=1e-14)
    assert math.isinf(ef.ssw_moment(6, -5.0 / 48.0))
    v = ef.ssw_moment(6, 1.0)
    assert 0 < v < 0.05
    # t = -44 at kappa = 6, lambda = 1
    assert v == pytest.approx(0.5 / math.cosh(math.pi / 6 * math.sqrt(44)), rel=1e-14)


def test_touching_examples():
    assert ef.cr_moment_touching(6, 0.0) == pytest.approx(0.5, abs=1e-14)
    assert math.isinf(ef.cr_moment_touching(6, -0.25))
    assert 0 < ef.cr_moment_touching(5, 0.3) < math.inf


def test_nontouching_examples(kappa):
    assert math.isinf(ef.cr_moment_nontouching(kappa, ef.as_context(kappa).loop_threshold))
    assert ef.cr_moment_nontouching(6, 0.0) == pytest.approx(0.5, abs=1e-14)
    assert ef.cr_moment_nontouching(16 / 3, 0.0) == pytest.approx(1 - ef.touching_probability(16 / 3), abs=1e-14)


def test_wtd_examples():
    assert ef.wtd_moment(6, 0.0) == pytest.approx(0.5, abs=1e-14)
    for k in (4.5, 6.0, 7.5):
        lam_t0 = (k - 4) ** 2 / (8 * k)
        assert ef.wtd_moment(k, lam_t0) == pytest.approx((8 - k) / k, rel=1e-14)
    assert ef.wtd_moment(6, -5.0 / 48.0) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("law", ["ssw", "touch", "nontouch", "wtd"])
@given(k=kappas, offset=st.floats(1e-3, 6.0))
def test_real_continuation_matches_complex_route(law, k, offset):
    ctx = ef.as_context(k)
    lam = ef.threshold(law, ctx) + offset
    ours = ef.moment(law, ctx, lam)
    ref = _complex_route(law, k, lam)
    assert abs(ref.imag) < 1e-12 * abs(ref.real)
    assert ours == pytest.approx(ref.real, rel=1e-10)
    assert ours > 0


@given(kappas)
def test_mass_identities(k):
    p = ef.touching_probability(k)
    assert abs(ef.cr_moment_touching(k, 0) + ef.cr_moment_nontouching(k, 0) - 1) < 1e-12
    assert abs(ef.cr_moment_touching(k, 0) - p) < 1e-12
    assert abs(ef.wtd_moment(k, 0) - (1 - p)) < 1e-12


@given(k=kappas, offset=st.floats(1e-3, 10.0))
def test_sum_rule_and_factorisation(k, offset):
    ctx = ef.as_context(k)
    lam = ctx.loop_threshold + offset
    ssw = ef.ssw_moment(ctx, lam)
    a, b = ef.cr_moment_touching(ctx, lam), ef.cr_moment_nontouching(ctx, lam)
    assert a + b == pytest.approx(ssw, rel=1e-11)
    assert ef.wtd_moment(ctx, lam) * ssw == pytest.approx(b, rel=1e-11)


@given(kappas)
def test_threshold_ordering(k):
    ctx = ef.as_context(k)
    assert ctx.touch_threshold < ctx.loop_threshold


@pytest.mark.parametrize("law", ["ssw", "touch", "nontouch", "wtd"])
def test_continuity_across_t_zero(law, kappa):
    ctx = ef.as_context(kappa)
    lam0 = ctx.lambda_of_t(0.0)
    mid = ef.moment(law, ctx, lam0)
    for d in (-1e-9, 1e-9):
        assert abs(ef.moment(law, ctx, lam0 + d) - mid) < 1e-7


def test_divergence_is_signalled_not_raised(kappa):
    ctx = ef.as_context(kappa)
    for law in ("ssw", "touch", "nontouch", "wtd"):
        thr = ef.threshold(law, ctx)
        assert math.isinf(ef.moment(law, ctx, thr))
        assert math.isinf(ef.moment(law, ctx, thr - 0.3))
        assert math.isfinite(ef.moment(law, ctx, thr + 1e-6))


@given(st.floats(-3.0, 3.0), st.floats(-200.0, 200.0))
def test_sinc_series_matches_closed_form(c, t):
    z = c * c * t
    if abs(z) < 1e-12:
        return
    x = math.sqrt(abs(z))
    ref = math.sin(x) / x if z > 0 else math.sinh(x) / x
    assert ef.sinc_t(c, t) == pytest.approx(ref, rel=1e-12, abs=1e-300)


# --- alpha parametrisation and the ratio -------------------------------------------

def test_cr_ratio_at_lambda_zero():
    k = 5.0
    ap = ef.alpha_from_lambda(k, 0.0)
    p = ef.touching_probability(k)
    assert ef.cr_ratio(k, ap) == pytest.approx((1 - p) / p, rel=1e-12)


def test_cr_ratio_small_angle_limit(kappa):
    ctx = ef.as_context(kappa)
    g = ctx.gamma
    limit = (g - 2 / g) / (2 * math.cos(math.pi * (1 - g * g / 4)) * (2 / g - g / 2))
    assert ef.cr_ratio(ctx, ctx.q_coeff) == pytest.approx(limit, rel=1e-12)
    assert ef.cr_ratio(ctx, ctx.q_coeff + 1e-7) == pytest.approx(limit, rel=1e-9)


@given(k=kappas, frac=st.floats(0.01, 0.99))
def test_ratio_identity(k, frac):
    ctx = ef.as_context(k)
    alpha = ctx.q_coeff + frac * (4 / ctx.gamma - ctx.q_coeff)
    lam = ef.alpha_param(ctx, alpha).lambda_equiv
    lhs = ef.cr_moment_nontouching(ctx, lam) / ef.cr_moment_touching(ctx, lam)
    assert lhs == pytest.approx(ef.ssw_moment(ctx, lam) * ef.cr_ratio(ctx, alpha), rel=1e-10)


@given(k=kappas, frac=st.floats(0.001, 1.0))
def test_alpha_round_trip(k, frac):
    ctx = ef.as_context(k)
    alpha = ctx.q_coeff + frac * (4 / ctx.gamma - ctx.q_coeff)
    ap = ef.alpha_param(ctx, alpha)
    back = ef.alpha_from_lambda(ctx, ap.lambda_equiv)
    assert back.lambda_equiv == pytest.approx(ap.lambda_equiv, abs=1e-12)
    # lambda is quadratic in alpha at Q, so alpha itself is recovered to
    # roughly 1e-16 / (alpha - Q)
    assert abs(back.alpha - alpha) < max(1e-12, 1e-15 / (alpha - ctx.q_coeff))


def test_alpha_from_lambda_domain():
    ctx = ef.as_context(6.0)
    with pytest.raises(DomainError):
        ef.alpha_from_lambda(ctx, ctx.q_coeff ** 2 / 2 - 2 + 0.1)
    ap = ef.alpha_from_lambda(ctx, 0.0)
    assert ap.delta_alpha == pytest.approx(1.0, abs=1e-14)


def test_alpha_outside_range_rejected():
    ctx = ef.as_context(6.0)
    with pytest.raises(DomainError):
        ef.alpha_param(ctx, ctx.q_coeff - 0.01)
    with pytest.raises(DomainError):
        ef.cr_ratio(ctx, 4 / ctx.gamma + 0.05)
