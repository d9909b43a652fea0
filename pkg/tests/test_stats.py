import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levy_spde.elliptic_solver import ClosedFormGreen, apply_kernel, assemble, laplacian
from levy_spde.levy_core import LevyTriplet, atoms, power_law
from levy_spde.solutions import generalized_batch, mild_field
from levy_spde.stats import (
    SampleSet,
    empirical_cf,
    empirical_cf_test,
    false_alarm_rate,
    hill,
    moment_estimate,
    pairing_cf,
    stabilization,
    stationarity_test,
    tail_index,
    variance_checks_apply,
)
from levy_spde.white_noise import GridSpec, TestFunction, pair_batch, sample_noise, sample_noise_batch


def test_degenerate_samples_have_exact_cf():
    z = np.linspace(-3, 3, 11)
    rep = empirical_cf_test(np.full(1000, 0.7), lambda z: np.exp(0.7j * z), z)
    assert rep.max_error < 1e-14 and rep.passed


def test_cf_shift_rule():
    x = np.random.default_rng(0).standard_normal(2000)
    z = np.linspace(-2, 2, 9)
    np.testing.assert_allclose(empirical_cf(x + 1.5, z), empirical_cf(x, z) * np.exp(1.5j * z), atol=1e-12)


def test_gaussian_pairing_cf_passes_at_1e5():
    grid = GridSpec.cube(1, -2, 2, 32)
    t = LevyTriplet(a=1.5, gamma=0.2)
    phi = TestFunction((0.1,), 1.3)
    vals = phi(grid.centers())
    s = pair_batch(sample_noise_batch(grid, t, 0.1, 1, 100_000), vals)
    target = pairing_cf(t, vals, grid.cell_volume)
    # closed form of the Gaussian pairing
    z = np.linspace(-4, 4, 21)
    var = t.a * np.sum(vals**2) * grid.cell_volume
    mean = t.gamma * np.sum(vals) * grid.cell_volume
    np.testing.assert_allclose(target(z), np.exp(1j * mean * z - 0.5 * var * z**2), rtol=1e-12)
    rep = empirical_cf_test(SampleSet(s), target, z)
    assert rep.passed, rep.render()
    assert len(rep.to_csv().splitlines()) == 22


def test_atomic_pairing_cf_band():
    grid = GridSpec.cube(1, -1, 1, 16)
    t = LevyTriplet(nu=atoms([2.0, -2.0], [1.0, 1.0]))
    phi = TestFunction((0.0,), 0.9)
    vals = phi(grid.centers())
    s = pair_batch(sample_noise_batch(grid, t, 0.1, 2, 100_000), vals)
    rep = empirical_cf_test(s, pairing_cf(t, vals, grid.cell_volume), np.linspace(-5, 5, 21))
    assert rep.passed, rep.render()


def test_identical_sets_have_zero_ks_statistic():
    x = np.random.default_rng(1).standard_normal(1000)
    rep = stationarity_test({"0": x, "1": x.copy()})
    assert rep.pairs[0][2] == 0.0 and rep.passed


def test_stationarity_needs_two_shifts():
    with pytest.raises(ValueError):
        stationarity_test({"0": np.zeros(10)})


def test_ks_self_consistency_false_alarm():
    # two disjoint seed ranges of the same pairing, 50 repetitions
    grid = GridSpec.cube(1, -2, 2, 16)
    t = LevyTriplet(a=0.5, nu=atoms([1.0, -2.0], [0.5, 0.3]))
    vals = TestFunction((0.0,), 1.0)(grid.centers())
    reports = []
    for rep in range(50):
        a = pair_batch(sample_noise_batch(grid, t, 0.1, 1000 + 2 * rep, 1000), vals)
        b = pair_batch(sample_noise_batch(grid, t, 0.1, 1001 + 2 * rep, 1000), vals)
        reports.append(stationarity_test({"a": a, "b": b}))
    assert sum(r.passed for r in reports) >= 49
    assert false_alarm_rate(reports) <= 0.02


def test_constant_coefficient_field_is_stationary_under_arbitrary_shifts():
    grid = GridSpec.cube(2, -3, 3, 48)
    op = assemble(laplacian(2, 4.0), grid, pad=6)
    t = LevyTriplet(a=0.3, nu=atoms([1.5, -1.0], [0.6, 0.6]))
    base = TestFunction((-0.4, 0.1), 0.8)
    shifts = {f"{s:g}": base.shifted((s, 0.3 * s)) for s in (0.0, 0.375, 0.75)}
    sets = {}
    for k, (name, phi) in enumerate(shifts.items()):
        inc = sample_noise_batch(grid, t, 0.1, 50 + k, 10_000)
        sets[name] = generalized_batch(inc, op, [phi])[:, 0]
    rep = stationarity_test(sets)
    assert rep.passed, rep.render()
    assert "p_value" in rep.to_csv()


def test_mild_field_sublattice_is_stationary():
    grid = GridSpec.cube(3, -2, 2, 16)
    G = ClosedFormGreen(3, 4.0)
    t = LevyTriplet(a=0.5, nu=atoms([1.0], [1.0]))
    sets = {}
    for k, idx in enumerate([(6, 6, 6), (9, 7, 6), (7, 9, 8)]):
        vals = []
        for i in range(1500):
            u = mild_field(sample_noise(grid, t, 0.1, 10_000 * (k + 1) + i), G, check=False).value
            vals.append(u[idx])
        sets[str(idx)] = np.array(vals)
    assert stationarity_test(sets).passed


def test_hill_on_pareto():
    x = np.random.default_rng(3).pareto(1.5, 100_000) + 1.0
    ti = tail_index(SampleSet(x), 0.02)
    assert ti.estimate == pytest.approx(1.5, abs=0.15)
    assert ti.ci[0] < ti.estimate < ti.ci[1]
    assert not ti.light_tailed


def test_hill_flags_gaussian_as_light_tailed():
    x = np.random.default_rng(4).standard_normal(100_000)
    assert tail_index(x, 0.02).light_tailed


def test_hill_undefined_for_constant_samples():
    ti = tail_index(np.ones(10_000))
    assert ti.undefined and math.isnan(ti.estimate)


def test_tail_index_rejects_bad_fraction():
    with pytest.raises(ValueError):
        tail_index(np.arange(100.0), 0.5)


def test_solution_tail_index_through_laplacian_kernel():
    grid = GridSpec.cube(3, -1, 1, 8)
    op = assemble(laplacian(3), grid, pad=4)
    t = LevyTriplet(nu=power_law(1.5, r_min=1.0))
    phi = TestFunction((0.0, 0.0, 0.0), 0.9)
    s = np.concatenate([generalized_batch(sample_noise_batch(grid, t, 0.1, 70 + k, 20_000), op, [phi])[:, 0]
                        for k in range(5)])
    ti = tail_index(s, 0.02)
    assert 1.2 <= ti.estimate <= 1.8, ti.render()


def test_moment_estimates():
    assert moment_estimate(np.full(100, 2.0), 3.0).value == pytest.approx(8.0)
    g = np.random.default_rng(5).standard_normal(10_000)
    m = moment_estimate(g, 2.0)
    assert m.value == pytest.approx(1.0, abs=0.05)
    assert m.ci[0] <= m.value <= m.ci[1]
    with pytest.raises(ValueError):
        moment_estimate(g, 0.0)


def test_stabilization_verdicts():
    rng = np.random.default_rng(6)
    heavy = rng.pareto(1.5, 100_000) + 1.0
    assert stabilization(heavy, 2.5).verdict == "infinite"
    assert stabilization(heavy, 0.5).verdict == "finite"
    assert stabilization(rng.standard_normal(100_000), 2.0).verdict == "finite"
    with pytest.raises(ValueError):
        stabilization(heavy[:500], 1.0)


def test_stabilization_survives_one_early_giant_jump():
    heavy = np.random.default_rng(7).pareto(1.5, 100_000) + 1.0
    heavy[3] = 1e9  # dominates every prefix mean of |s|^2.5
    st = stabilization(heavy, 2.5)
    assert st.verdict == "infinite", st.render()


def test_variance_switch():
    assert variance_checks_apply(LevyTriplet(a=1.0))
    assert variance_checks_apply(LevyTriplet(nu=atoms([3.0], [1.0])))
    assert not variance_checks_apply(LevyTriplet(nu=power_law(1.5, r_min=1.0)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 100.0))
def test_hill_is_scale_invariant(seed, c):
    x = np.random.default_rng(seed).pareto(2.0, 2000) + 1.0
    assert hill(c * x, 100) == pytest.approx(hill(x, 100), rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10.0), st.floats(0.2, 4.0))
def test_moment_homogeneity(seed, c, beta):
    x = np.random.default_rng(seed).standard_normal(500)
    assert moment_estimate(c * x, beta, n_boot=10).value == pytest.approx(c**beta * moment_estimate(x, beta, n_boot=10).value, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ks_is_symmetric(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal(300), rng.standard_normal(400)
    r1, r2 = stationarity_test({"a": a, "b": b}), stationarity_test({"b": b, "a": a})
    assert r1.pairs[0][2:] == pytest.approx(r2.pairs[0][2:])


def test_pairing_cf_matches_cellwise_sum_with_signed_repeated_values():
    from levy_spde.levy_core import psi_values

    t = LevyTriplet(a=0.3, gamma=0.2, nu=atoms([1.5, -0.4], [0.5, 1.0]) + power_law(1.5, 0.2, 0.1, r_max=1.0))
    phi = np.array([0.5, -0.5, 0.5, 0.25, 0.0, -1.0, 0.25])
    z = np.array([-2.0, -0.5, 0.0, 1.0, 3.0])
    naive = np.array([np.exp(0.1 * np.sum(psi_values(zz * phi[phi != 0], t))) for zz in z])
    np.testing.assert_allclose(pairing_cf(t, phi, 0.1)(z), naive, rtol=1e-13)
