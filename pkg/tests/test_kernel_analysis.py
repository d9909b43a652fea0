import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from levy_spde._numerics import unit_ball_volume, unit_sphere_area
from levy_spde.kernel_analysis import (
    Envelope,
    GridFunction,
    Kernel,
    RadialFunction,
    build_profile,
    compute_G_R,
    compute_h_R,
    dist_fn,
    laplace_kernel,
    lp_norm,
    power_kernel,
    yukawa_kernel,
    zero_kernel,
)
from levy_spde.white_noise import GridSpec


def ball_average_oracle(profile, R, s):
    """int_{B_R(0)} profile(|x - y|) dy with |x| = s, by a 2-d quadrature in spherical coordinates."""
    def inner(theta, rho):
        dist = math.sqrt(max(s * s + rho * rho - 2 * s * rho * math.cos(theta), 1e-300))
        return float(profile(dist)) * 2 * math.pi * rho * rho * math.sin(theta)

    val, _ = integrate.dblquad(inner, 0, R, 0, math.pi, epsabs=1e-11, epsrel=1e-10)
    return val


def test_laplace_G_R_examples():
    G = compute_G_R(laplace_kernel(3), 1.0)
    assert G(0.0) == pytest.approx(0.5, rel=1e-8)
    assert G(2.0) == pytest.approx(1 / 6, rel=1e-8)


@pytest.mark.parametrize("s", [0.0, 0.4, 0.999, 1.5, 3.0, 20.0])
def test_laplace_G_R_matches_uniform_ball_potential(s):
    # potential of the uniformly charged unit ball
    expected = (0.5 - s * s / 6) if s <= 1 else 1 / (3 * s)
    assert compute_G_R(laplace_kernel(3), 1.0)(s) == pytest.approx(expected, rel=1e-6)


@pytest.mark.parametrize("s", [0.0, 0.5, 1.3, 4.0])
def test_yukawa_G_R_against_spherical_quadrature(s):
    k = yukawa_kernel(4.0)
    got = compute_G_R(k, 1.0)(s)
    assert got == pytest.approx(ball_average_oracle(k.profile, 1.0, s), rel=1e-5)


def test_G_R_in_two_dimensions_uses_cap_fraction():
    k = power_kernel(2, 3.0)
    G = compute_G_R(k, 1.0)
    for s in (0.0, 0.7, 2.5):
        def f(phi, rho):
            dist = math.hypot(s - rho * math.cos(phi), rho * math.sin(phi))
            return min(1.0, dist**-3.0) * rho
        ref = integrate.dblquad(f, 0, 1, 0, 2 * math.pi, epsabs=1e-11, epsrel=1e-10)[0]
        assert G(s) == pytest.approx(ref, rel=1e-5)


def test_grid_path_matches_radial_path():
    k = power_kernel(2, 3.0)
    radial = compute_G_R(k, 1.0)
    nonradial = Kernel(2, k.evaluate, k.envelope)
    grid = GridSpec(((-3, 3), (-3, 3)), (12, 12))
    G = compute_G_R(nonradial, 1.0, grid)
    r = np.linalg.norm(grid.centers(), axis=-1)
    np.testing.assert_allclose(G.values, radial(r), rtol=2e-3)


def test_indicator_distribution_function():
    grid = GridSpec(((-2, 2),), (400,))
    f = GridFunction(grid, (np.abs(grid.centers()[..., 0]) < 1).astype(float))
    assert dist_fn(f, 0.5) == pytest.approx(2.0)
    assert dist_fn(f, 1.5) == 0.0


def test_inverse_distance_distribution_function():
    f = RadialFunction.from_callable(1, lambda s: 1 / s, 1e3, tail_power=1.0)
    alpha = np.array([1e-4, 0.01, 0.5, 2.0, 50.0])
    np.testing.assert_allclose(dist_fn(f, alpha), 2 / alpha, rtol=1e-5)


def test_h_R_of_unit_interval_indicator():
    grid = GridSpec(((-2, 2),), (400,))
    f = GridFunction(grid, (np.abs(grid.centers()[..., 0]) < 1).astype(float))
    prof = build_profile(f)
    assert compute_h_R(prof, 2.0).value == pytest.approx(2.0)


def test_exponential_lp_norms():
    f = RadialFunction.from_callable(1, lambda s: np.exp(-s), 50.0, tail_power=0.0, tail_rate=1.0)
    prof = build_profile(f)
    assert lp_norm(prof, 1).value == pytest.approx(2.0, rel=1e-5)
    assert prof.lp_norm(2).value == pytest.approx(1.0, rel=1e-5)


def test_bounded_power_in_L2_not_L1_in_five_dimensions():
    f = RadialFunction.from_callable(5, lambda s: np.minimum(1, s**-3.0), 50.0, tail_power=3.0)
    prof = build_profile(f)
    expected = unit_ball_volume(5) + unit_sphere_area(5)  # ball + int_1^inf s^-6 s^4 ds
    l2 = prof.lp_norm(2)
    assert l2.finite and l2.value == pytest.approx(expected, rel=1e-3)
    assert prof.lp_norm(1).divergent


def test_laplace_profile_h_diverges_and_yukawa_is_finite():
    lap = build_profile(laplace_kernel(3), R=1.0)
    assert lap.h(2.0).divergent
    yuk = build_profile(yukawa_kernel(4.0), R=1.0)
    # ||G_R||_1 = |B_R| int G = (4 pi / 3) / eps
    assert yuk.lp_norm(1).value == pytest.approx(4 * math.pi / 3 / 4.0, rel=1e-5)
    assert yuk.h(10.0).finite


def test_layer_cake_from_tabulated_distribution():
    yuk = build_profile(yukawa_kernel(4.0), R=1.0)
    assert yuk.layer_cake_l1() == pytest.approx(yuk.lp_norm(1).value, rel=0.01)


def test_non_sharp_envelope_is_inconclusive():
    k = Kernel(3, lambda x, y: np.zeros(np.shape(x)[:-1]), Envelope(1.0, 1.0, sharp=False),
               profile=lambda r: np.full(np.shape(r), 0.0) + 1e-3 * np.minimum(1, np.asarray(r) ** -1.0))
    prof = build_profile(k, R=1.0)
    assert prof.h(1.0).status.value == "inconclusive"


def test_zero_kernel_profile():
    prof = build_profile(zero_kernel(3))
    assert prof.h(5.0).value == 0.0
    assert prof.lp_norm(2).value == 0.0


def test_envelope_spot_check_rejects_violations():
    with pytest.raises(ValueError, match="envelope violated"):
        Kernel(3, lambda x, y: np.ones(np.shape(x)[:-1]), Envelope(1.0, 2.0))


def test_nonintegrable_singularity_rejected():
    with pytest.raises(ValueError, match="singularity order"):
        Kernel(2, lambda x, y: np.zeros(np.shape(x)[:-1]), Envelope(1.0, 2.0), singularity_order=2.0)


def test_periodicity_check_uses_joint_shift():
    ev = lambda x, y: np.exp(-np.sum((x - y) ** 2, axis=-1)) * (2 + np.cos(2 * np.pi * x[..., 0]))
    Kernel(2, ev, Envelope(3.0, 0.0, rate=1.0, theta=2.0), periodicity=(1.0, 0.0))
    with pytest.raises(ValueError, match="joint shift"):
        Kernel(2, ev, Envelope(3.0, 0.0, rate=1.0, theta=2.0), periodicity=(0.5, 0.0))


def test_boundary_touching_superlevel_set_without_envelope_refused():
    grid = GridSpec(((-1, 1),), (10,))
    f = GridFunction(grid, np.ones(10))
    with pytest.raises(ValueError, match="boundary"):
        dist_fn(f, 0.5)


def test_profile_csv_export(tmp_path):
    prof = build_profile(yukawa_kernel(4.0))
    dpath, gpath = prof.to_csv(tmp_path / "yuk")
    rows = np.loadtxt(dpath, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(rows[:, 1], prof.d_values)
    assert gpath.exists()


profiles = st.tuples(
    st.sampled_from([1, 2, 3]),
    st.floats(0.2, 5.0),   # amplitude
    st.floats(0.5, 3.0),   # width
    st.floats(0.0, 2.0),   # decay rate
)


def _radial(d, amp, width, rate):
    power = d + 1.0
    fn = lambda s: amp / (1 + (s / width) ** power) * np.exp(-rate * s)
    return RadialFunction.from_callable(d, fn, 40.0, tail_power=power, tail_rate=rate, s_min=1e-3)


@settings(max_examples=30, deadline=None)
@given(profiles, st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_layer_cake_identities_hold(p, u1, u2):
    f = _radial(*p)
    lo, hi = sorted((u1 * f.sup, u2 * f.sup))
    if hi - lo < 1e-3 * f.sup:
        return
    a = np.linspace(lo, hi, 2001)
    dvals = dist_fn(f, a)
    via_d = integrate.simpson(dvals, x=a)
    direct = f.integral("min", hi).value - f.integral("min", lo).value
    assert via_d == pytest.approx(direct, rel=0.01, abs=1e-9)
    second = integrate.simpson(a * dvals, x=a)
    direct2 = 0.5 * (f.integral("min", hi, 2.0).value - f.integral("min", lo, 2.0).value)
    assert second == pytest.approx(direct2, rel=0.01, abs=1e-9)
    excess = f.integral("excess", lo).value - f.integral("excess", hi).value
    assert excess == pytest.approx(direct, rel=1e-6, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(profiles, st.lists(st.floats(1e-3, 1e3), min_size=2, max_size=6))
def test_distribution_nonincreasing_and_h_monotone(p, xs):
    f = _radial(*p)
    xs = np.sort(np.asarray(xs))
    dv = dist_fn(f, xs * f.sup * 1e-3)
    assert np.all(np.diff(dv) <= 1e-12 * max(dv.max(), 1))
    prof = build_profile(f)
    hs = np.array([prof.h(x).value for x in xs])
    assert np.all(np.diff(hs) >= -1e-9 * max(hs.max(), 1))
    l1 = prof.lp_norm(1).value
    assert np.all(hs <= xs * l1 * (1 + 1e-9))
