import math

import numpy as np
import pytest
from scipy import integrate

from levy_spde.elliptic_solver import (
    ClosedFormGreen,
    DiscreteGreen,
    EllipticOperatorSpec,
    apply_kernel,
    assemble,
    convolve_on_grid,
    fit_decay_slope,
    fit_envelope_constant,
    green_column,
    laplacian,
    radial_window,
)
from levy_spde.white_noise import GridSpec, TestFunction, sample_on_grid


def test_seven_point_stencil():
    g = GridSpec.cube(3, 0.0, 1.0, 8)
    h = 1 / 8
    P = assemble(laplacian(3), g).matrix.toarray()
    row = P[np.ravel_multi_index((3, 4, 5), (8, 8, 8))]
    nz = np.sort(row[row != 0])
    assert np.allclose(nz, [-1 / h**2] * 6 + [6 / h**2])


def test_potential_adds_to_diagonal():
    g = GridSpec.cube(2, 0.0, 1.0, 6)
    a = assemble(laplacian(2), g).matrix
    b = assemble(laplacian(2, 2.5), g).matrix
    assert np.allclose((b - a).toarray(), 2.5 * np.eye(36))


def test_row_sums_reproduce_potential_in_interior():
    g = GridSpec.cube(2, 0.0, 1.0, 10)
    spec = EllipticOperatorSpec(2, lambda x: 1 + x[..., 0] ** 2, potential=lambda x: 3 + x[..., 1])
    op = assemble(spec, g)
    out = op.apply(np.ones(g.shape))
    V = spec.potential_values(g.centers())
    assert np.allclose(out[1:-1, 1:-1], V[1:-1, 1:-1], atol=1e-10)


def test_sine_consistency_second_order():
    g = GridSpec.cube(1, 0.0, 1.0, 64)
    op = assemble(EllipticOperatorSpec(1), g)
    x = g.axis_centers(0)
    err = np.abs(op.apply(np.sin(x)) - np.sin(x))[1:-1].max()
    assert err < 4e-4


def test_quadratic_solution_exact():
    # Dirichlet data sit at the ghost centres half a cell outside the box
    n = 50
    g = GridSpec.cube(1, 0.0, 1.0, n)
    h = 1 / n
    op = assemble(EllipticOperatorSpec(1), g)
    x = g.axis_centers(0)
    u = op.solve(np.ones(n), tol=1e-13)
    assert np.abs(u - (x + h / 2) * (1 + h / 2 - x) / 2).max() < 1e-12


def test_zero_rhs_and_manufactured_solution():
    g = GridSpec.cube(3, -1.0, 1.0, 16)
    spec = EllipticOperatorSpec(3, lambda x: 2 + np.sin(2 * np.pi * x[..., 0]), potential=0.5)
    op = assemble(spec, g)
    assert not np.any(op.solve(np.zeros(g.shape)))
    ustar = sample_on_grid(g, TestFunction((0.1, 0, -0.2), 0.7))
    rec = op.solve(op.apply(ustar), tol=1e-13)
    assert np.abs(rec - ustar).max() < 1e-9


def test_symmetric_green_columns():
    g = GridSpec.cube(3, -1.0, 1.0, 12)
    spec = EllipticOperatorSpec(3, lambda x: 1.5 + 0.5 * np.cos(np.pi * x[..., 1]), potential=1.0)
    op = assemble(spec, g)
    y, x = (3, 5, 7), (8, 2, 6)
    ey = op.restrict(green_column(op, y, tol=1e-13))
    ex = op.restrict(green_column(op, x, tol=1e-13))
    assert ey[x] == pytest.approx(ex[y], rel=1e-9)
    assert np.all(ey >= 0)


def test_maximum_principle_nonnegative_rhs():
    g = GridSpec.cube(2, 0.0, 1.0, 20)
    op = assemble(EllipticOperatorSpec(2, lambda x: 1 + x[..., 0], potential=0.3), g, pad=3)
    rhs = np.random.default_rng(0).random(g.shape)
    assert np.all(op.solve(rhs) >= -1e-14)


def test_adjoint_is_weighted_transpose():
    g = GridSpec(((0, 1), (0, 2)), (10, 14))
    spec = EllipticOperatorSpec(2, 1.0, drift=lambda x: np.stack([np.cos(x[..., 0]), x[..., 1]], -1), potential=0.2)
    op = assemble(spec, g, pad=2, growth=1.5)
    rng = np.random.default_rng(1)
    u, w = rng.normal(size=op.shape), rng.normal(size=op.shape)
    lhs = np.sum(op.apply(u) * w * op.volumes)
    rhs = np.sum(u * op.apply_adjoint(w) * op.volumes)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_adjoint_stencil_matches_analytic_adjoint():
    # p* w = -w'' - (b w)' + V w for the operator -u'' + b u' + V u
    errs = []
    for n in (64, 128):
        g = GridSpec.cube(1, 0.0, 1.0, n)
        spec = EllipticOperatorSpec(1, 1.0, drift=lambda x: np.cos(3 * x), potential=1.0)
        op = assemble(spec, g)
        x = g.axis_centers(0)
        w = np.sin(np.pi * x) ** 3
        dw = 3 * np.pi * np.sin(np.pi * x) ** 2 * np.cos(np.pi * x)
        d2w = 3 * np.pi**2 * (2 * np.sin(np.pi * x) * np.cos(np.pi * x) ** 2 - np.sin(np.pi * x) ** 3)
        b, db = np.cos(3 * x), -3 * np.sin(3 * x)
        exact = -d2w - (db * w + b * dw) + w
        errs.append(np.abs(op.apply_adjoint(w) - exact)[2:-2].max())
    assert errs[1] < 0.02
    assert errs[0] / errs[1] > 3.0  # second order


def test_upwind_keeps_m_matrix():
    g = GridSpec.cube(1, 0.0, 1.0, 20)
    op = assemble(EllipticOperatorSpec(1, 1.0, drift=lambda x: 200.0 + 0 * x), g)
    K = op.K.toarray()
    off = K - np.diag(np.diag(K))
    assert np.all(off <= 1e-12)


def test_ellipticity_rejected():
    g = GridSpec.cube(1, 0.0, 1.0, 8)
    with pytest.raises(ValueError, match="positive definite"):
        assemble(EllipticOperatorSpec(1, lambda x: x[..., 0] - 0.5), g)


def test_ellipticity_constant_reported():
    g = GridSpec.cube(1, 0.0, 1.0, 8)
    op = assemble(EllipticOperatorSpec(1, lambda x: 2 + np.sin(2 * np.pi * x[..., 0])), g)
    assert 2.9 < op.ellipticity <= 3.0 + 1e-12


def test_discrete_kernel_left_inverse():
    g = GridSpec.cube(3, -1.0, 1.0, 16)
    op = assemble(EllipticOperatorSpec(3, lambda x: 1 + 0.5 * x[..., 2] ** 2, potential=0.1), g, pad=2)
    phi = TestFunction((0.0, 0.1, 0.0), 0.6, frequency=(2.0, 0.0, 1.0))
    v = apply_kernel(DiscreteGreen(op), phi, tol=1e-13, full=True)
    assert np.abs(op.restrict(op.apply_adjoint(v)) - sample_on_grid(g, phi)).max() < 1e-9
    assert not np.any(apply_kernel(DiscreteGreen(op), np.zeros(g.shape)))


def test_yukawa_green_column_small_grid():
    g = GridSpec.cube(3, -1.0, 1.0, 32)
    op = assemble(laplacian(3, 16.0), g)
    y = (16, 16, 16)
    col = op.restrict(green_column(op, y))
    r, m = radial_window(op, y)
    exact = ClosedFormGreen(3, 16.0).profile(r[m])
    assert np.abs(col[m] / exact - 1).max() < 0.05
    assert fit_decay_slope(col, r, m) == pytest.approx(-4.0, rel=0.15)
    assert fit_envelope_constant(col, r, m, 3) < 4 * math.pi * 1.1 * 1.0 / math.exp(-4 * 0.5) + 1


def test_closed_form_cell_average_against_cubature():
    ref = integrate.nquad(lambda x, y, z: 1 / math.sqrt(x * x + y * y + z * z), [[0, 0.5]] * 3)[0] * 8
    assert ClosedFormGreen(3).cell_average(1.0) * 4 * math.pi == pytest.approx(ref, rel=1e-9)
    # 1-d screened kernel, analytic
    k = 3.0
    assert ClosedFormGreen(1, k * k).cell_average(0.2) == pytest.approx(
        integrate.quad(lambda x: math.exp(-k * abs(x)) / (2 * k), -0.1, 0.1)[0] / 0.2, rel=1e-12
    )


def test_polar_apply_newton_shell():
    # outside the support of a radial bump the Newton potential is (int phi)/(4 pi r)
    G = ClosedFormGreen(3)
    phi = TestFunction((0.0, 0.0, 0.0), 0.5)
    mass = 4 * math.pi * integrate.quad(lambda r: r * r * math.exp(-1 / (1 - (r / 0.5) ** 2)), 0, 0.5)[0]
    pts = np.array([[0.9, 0.0, 0.0], [0.3, 0.6, 0.5]])
    vals = apply_kernel(G, phi, points=pts)
    assert np.allclose(vals, mass / (4 * math.pi * np.linalg.norm(pts, axis=1)), rtol=1e-6)


def test_fft_convolution_matches_direct_sum():
    g = GridSpec.cube(3, 0.0, 1.0, 6)
    G = ClosedFormGreen(3, 4.0)
    rng = np.random.default_rng(0)
    load = rng.normal(size=g.shape)
    out = convolve_on_grid(G, g, load)
    x = g.centers().reshape(-1, 3)
    r = np.linalg.norm(x[:, None] - x[None], axis=-1)
    E = G.profile(np.where(r == 0, 1, r))
    np.fill_diagonal(E, G.cell_average(g.spacing))
    assert np.allclose(out.ravel(), E @ load.ravel(), rtol=1e-10, atol=1e-12)


def test_narrow_bump_looks_like_green_column():
    g = GridSpec.cube(3, -1.0, 1.0, 32)
    G = ClosedFormGreen(3)
    phi = TestFunction((0.0, 0.0, 0.0), 0.3)
    field = apply_kernel(G, phi, grid=g)
    mass = 4 * math.pi * integrate.quad(lambda r: r * r * math.exp(-1 / (1 - (r / 0.3) ** 2)), 0, 0.3)[0]
    r = np.linalg.norm(g.centers(), axis=-1)
    m = (r > 0.5) & (r < 0.9)
    assert np.allclose(field[m], mass * G.profile(r[m]), rtol=0.01)
    assert not np.any(apply_kernel(G, np.zeros(g.shape), grid=g))
