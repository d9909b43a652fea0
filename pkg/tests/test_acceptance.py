"""Acceptance suite: one printed PASS/FAIL line per criterion, tolerances pinned below.

Each criterion is a function returning an :class:`Outcome` whose ``payload`` holds the
canonical bytes of everything it computed; criterion 10 reruns 1-9 and compares them.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass

import numpy as np
import pytest

from levy_spde.admissibility import (
    Status,
    check_variance,
    enveloped_field,
    incomplete_gamma_identity,
    solution_levy_tail,
)
from levy_spde.agmon import agmon_field, constant_potential, max_function
from levy_spde.elliptic_solver import (
    ClosedFormGreen,
    DiscreteGreen,
    EllipticOperatorSpec,
    apply_kernel,
    assemble,
    fit_decay_slope,
    green_column,
    laplacian,
    radial_window,
)
from levy_spde.kernel_analysis import build_profile, yukawa_kernel
from levy_spde.levy_core import LevyTriplet, atoms, moment_integral, power_law
from levy_spde.solutions import generalized_batch, integrate_against, mild_field
from levy_spde.stats import empirical_cf_test, false_alarm_rate, pairing_cf, stabilization, stationarity_test
from levy_spde.white_noise import (
    GridSpec,
    TestFunction,
    centered,
    coarsen,
    pair_batch,
    realization_seed,
    sample_noise,
    sample_noise_batch,
    sample_on_grid,
)

# pinned tolerances
CF_MAX_ERROR = 0.02
CF_RUNTIME = 120.0
IDENTITY_REL = 1e-8
IDENTITY_RUNTIME = 300.0
ENVELOPE_REL = 0.05
SLOPE_REL = 0.15
AGMON_M_ABS = 1e-4
AGMON_AXIS_REL = 0.01
AGMON_GENERAL_REL = 0.09
AGMON_VOLUME_REL = 0.05
GAMMA_ABS = 1e-10
GAMMA_RUNTIME = 1.0
KS_LEVEL = 0.01
FALSE_ALARM_MAX = 0.02
KS_RUNTIME = 900.0
MIN_ORDER = 1.0


@dataclass
class Outcome:
    passed: bool
    detail: str
    payload: bytes


def _digest(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()


def _payload(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, default=repr).encode()


# --- 1: characteristic functional ---------------------------------------------------------------

def criterion_1() -> Outcome:
    start = time.perf_counter()
    grid = GridSpec.cube(2, -1.0, 1.0, 32)
    bumps = [TestFunction((0.0, 0.0), 0.8), TestFunction((0.2, -0.1), 0.6, 1.5, (2.0, 1.0))]
    triplets = {
        "gaussian": LevyTriplet(a=1.0),
        "compound poisson": LevyTriplet(nu=atoms([2.0, -2.0], [1.0, 1.0])),
        "centered mixed": centered(LevyTriplet(a=0.5, nu=atoms([1.5], [1.0])
                                               + power_law(1.5, 0.3, 0.3, r_min=0.0, r_max=1.0))),
    }
    z = np.linspace(-5.0, 5.0, 21)
    worst, record = 0.0, {}
    for k, (name, t) in enumerate(triplets.items()):
        inc = sample_noise_batch(grid, t, 0.1, 100 + k, 100_000)
        for j, phi in enumerate(bumps):
            vals = sample_on_grid(grid, phi)
            rep = empirical_cf_test(pair_batch(inc, vals), pairing_cf(t, vals, grid.cell_volume), z)
            worst = max(worst, rep.max_error)
            record[f"{name}/phi{j}"] = [rep.max_error, _digest(rep.ecf)]
    elapsed = time.perf_counter() - start
    ok = worst < CF_MAX_ERROR and elapsed < CF_RUNTIME
    return Outcome(ok, f"max |ECF - target| = {worst:.4f} (< {CF_MAX_ERROR}) over 3 triplets x 2 bumps, "
                       f"N = 1e5, 21 z-points; {elapsed:.0f} s (< {CF_RUNTIME:.0f} s)", _payload(record))


# --- 2: discrete left inverse ------------------------------------------------------------------

PSIS = [TestFunction((0.0, 0.0, 0.0), 0.8), TestFunction((0.3, -0.2, 0.1), 0.6, 2.0, (3.0, 0.0, 1.0)),
        TestFunction((-0.5, 0.4, 0.0), 0.7, -1.0), TestFunction((0.6, 0.6, -0.4), 0.5),
        TestFunction((-0.2, -0.5, 0.5), 0.9, 1.0, (0.0, 2.0, 2.0))]


def criterion_2() -> Outcome:
    start = time.perf_counter()
    grid = GridSpec.cube(3, -1.5, 1.5, 48)
    t = LevyTriplet(a=0.5, gamma=0.3, nu=atoms([2.0, -1.0], [0.7, 0.4]))
    inc = sample_noise_batch(grid, t, 0.1, 2, 20)
    specs = [laplacian(3),
             EllipticOperatorSpec(3, lambda x: 1 + 0.5 * np.sin(2 * np.pi * x[..., 0]) + 0.25 * x[..., 2] ** 2,
                                  name="variable")]
    worst, record = 0.0, {}
    for spec in specs:
        op = assemble(spec, grid, pad=6)
        vals = [sample_on_grid(grid, psi) for psi in PSIS]
        norms = np.array([math.sqrt(np.sum(v**2) * grid.cell_volume) for v in vals])
        lhs = generalized_batch(inc, op, [op.apply_adjoint(v) for v in vals])
        rhs = np.stack([pair_batch(inc, v) for v in vals], axis=1)
        err = np.abs(lhs - rhs) / norms
        worst = max(worst, float(err.max()))
        record[spec.name] = [float(err.max()), _digest(lhs)]
    elapsed = time.perf_counter() - start
    ok = worst < IDENTITY_REL and elapsed < IDENTITY_RUNTIME
    return Outcome(ok, f"max |<s, p*psi> - <L, psi>| / ||psi|| = {worst:.2e} (< {IDENTITY_REL:g}) "
                       f"for 5 psi x 20 realizations x 2 operators at 48^3; {elapsed:.0f} s", _payload(record))


# --- 3: Green envelopes -----------------------------------------------------------------------

def criterion_3() -> Outcome:
    n = 48
    grid = GridSpec.cube(3, -1.0, 1.0, n)
    y = (n // 2,) * 3
    record = {}
    # the Dirichlet wall is pushed far out by coarse graded padding
    lap = assemble(laplacian(3), grid, pad=12, growth=1.5)
    col = lap.restrict(green_column(lap, y))
    r, mask = radial_window(lap, y)
    lap_dev = float(np.max(np.abs(col[mask] / ClosedFormGreen(3, 0.0).profile(r[mask]) - 1)))
    eps = 16.0
    yuk = assemble(laplacian(3, eps), grid, pad=6)
    col = yuk.restrict(green_column(yuk, y))
    r, mask = radial_window(yuk, y)
    yuk_dev = float(np.max(np.abs(col[mask] / ClosedFormGreen(3, eps).profile(r[mask]) - 1)))
    slope = fit_decay_slope(col, r, mask)
    slope_dev = abs(slope / -math.sqrt(eps) - 1)
    record.update(laplace=lap_dev, yukawa=yuk_dev, slope=slope)
    ok = lap_dev < ENVELOPE_REL and yuk_dev < ENVELOPE_REL and slope_dev < SLOPE_REL
    return Outcome(ok, f"Laplace column off 1/(4 pi r) by {lap_dev:.2%}, Yukawa by {yuk_dev:.2%} (< {ENVELOPE_REL:.0%}) "
                       f"on [5h, box/4]; decay slope {slope:.3f} vs {-math.sqrt(eps):g} "
                       f"({slope_dev:.2%} < {SLOPE_REL:.0%})", _payload(record))


# --- 4: Agmon geometry ------------------------------------------------------------------------

def criterion_4() -> Outcome:
    eps = 2.0
    V = constant_potential(eps)
    m_exact = math.sqrt(4 * math.pi * eps / 3)
    m0 = max_function(np.zeros(3), V)
    af = agmon_field(V, GridSpec.cube(3, -1.0, 1.0, 129))
    m = af.m_values[af.origin]
    x = af.grid.centers()
    r = np.linalg.norm(x - x[af.origin], axis=-1)
    rel = np.zeros_like(r)
    off = r > 0
    rel[off] = af.dist_map[off] / (m * r[off]) - 1
    i, j, k = af.origin
    on_axis = np.zeros(r.shape, bool)
    on_axis[:, j, k] = on_axis[i, :, k] = on_axis[i, j, :] = True
    on_axis &= off
    axis_err = float(np.abs(rel[on_axis]).max())
    general_err = float(np.abs(rel[off]).max())
    vols = {R: af.ball_volume(R).value for R in (1.0, 1.5, 2.5)}
    vol_err = max(abs(v / (4 * math.pi / 3 * (R / m) ** 3) - 1) for R, v in vols.items())
    m_err = abs(m0 - m_exact)
    ok = (m_err < AGMON_M_ABS and axis_err < AGMON_AXIS_REL and general_err <= AGMON_GENERAL_REL
          and vol_err < AGMON_VOLUME_REL)
    record = dict(m=m0, axis=axis_err, general=general_err, volumes=vols, dist=_digest(af.dist_map))
    return Outcome(ok, f"|m(0) - sqrt(4 pi eps/3)| = {m_err:.1e} (< {AGMON_M_ABS:g}); gamma/(m|x|) - 1: axes "
                       f"{axis_err:.1e} (< {AGMON_AXIS_REL:.0%}), all nodes {general_err:.2%} (<= {AGMON_GENERAL_REL:.0%}) "
                       f"at 129^3; ball volumes off by {vol_err:.2%} (< {AGMON_VOLUME_REL:.0%})", _payload(record))


# --- 5: incomplete gamma identity ---------------------------------------------------------------

def criterion_5() -> Outcome:
    start = time.perf_counter()
    worst, record = 0.0, {}
    for d in (1, 2, 3):
        for r in (2.0, math.e, 10.0):
            res = incomplete_gamma_identity(d, r)
            gap = max(abs(res["closed_form"] - res["incomplete_gamma"]), abs(res["closed_form"] - res["quadrature"]))
            worst = max(worst, gap)
            record[f"{d},{r!r}"] = res
    elapsed = time.perf_counter() - start
    ok = worst < GAMMA_ABS and elapsed < GAMMA_RUNTIME
    return Outcome(ok, f"max gap between closed form, incomplete gamma and quadrature {worst:.1e} (< {GAMMA_ABS:g}) "
                       f"for d in 1..3, r in (2, e, 10); {elapsed:.2f} s (< {GAMMA_RUNTIME:g} s)", _payload(record))


# --- 6: admissibility ground truth ------------------------------------------------------------------

def criterion_6() -> Outcome:
    expected = {1.5: Status.FAILS, 1.7: Status.HOLDS, 2.5: Status.HOLDS}
    got = {a: check_variance(LevyTriplet(nu=power_law(a, r_min=1.0)), 5).verdict for a in expected}
    ok = got == expected
    shown = ", ".join(f"alpha={a:g}: {s.value}" for a, s in got.items())
    return Outcome(ok, f"variance condition in d=5 (beta = 5/3): {shown}; expected fails, holds, holds",
                   _payload({str(a): s.value for a, s in got.items()}))


# --- 7: moment transfer ---------------------------------------------------------------------------

MOMENT_CASES = [("power law alpha=1.5", power_law(1.5, r_min=1.0), (0.5, 2.5)),
                ("power law alpha=3", power_law(3.0, r_min=1.0), (1.0, 5.0)),
                ("atoms +-2", atoms([2.0, -2.0], [1.0, 1.0]), (1.0, 4.0))]


def criterion_7() -> Outcome:
    G = ClosedFormGreen(3, 4.0)
    phi = TestFunction((0.0, 0.0, 0.0), 1.0)
    fine = GridSpec.cube(3, -3.0, 3.0, 24)
    field = enveloped_field(apply_kernel(G, phi, fine), fine, build_profile(yukawa_kernel(4.0), 1.0), phi.sup_norm)
    grid = GridSpec.cube(3, -2.5, 2.5, 10)
    weights = apply_kernel(G, phi, grid)
    agree, lines, record = 0, [], {}
    for k, (name, nu, betas) in enumerate(MOMENT_CASES):
        t = LevyTriplet(nu=nu)
        s = np.concatenate([pair_batch(sample_noise_batch(grid, t, 0.1, 700 + k, 10_000, start=10_000 * b), weights)
                            for b in range(10)])
        for beta in betas:
            exact = solution_levy_tail(field, t, beta).finite
            via_nu = moment_integral(beta, nu).finite
            st = stabilization(s, beta)
            empirical = st.verdict == ("finite" if exact else "infinite")
            agree += exact == via_nu and empirical
            lines.append(f"{name} beta={beta:g}: {'finite' if exact else 'infinite'}/{st.verdict} ({st.ratio:.2f})")
            record[f"{name}/{beta:g}"] = [exact, via_nu, st.running, st.ratio]
        record[name] = _digest(s)
    ok = agree == 6
    return Outcome(ok, f"{agree}/6 cases agree (exact vs nu moment vs stabilization at N = 1e5): " + "; ".join(lines),
                   _payload(record))


# --- 8: periodic stationarity -------------------------------------------------------------------

def _periodic_battery(op, t, phi, shifts, base_seed, n):
    sets = {}
    for j, shift in enumerate(shifts):
        inc = sample_noise_batch(op.grid, t, 0.1, base_seed, n, start=j * n)
        sets[f"{shift[0]:g}"] = generalized_batch(inc, op, [phi.shifted(shift)])[:, 0]
    return stationarity_test(sets, KS_LEVEL), sets


def criterion_8() -> Outcome:
    start = time.perf_counter()
    grid = GridSpec.cube(2, -4.0, 4.0, 64)
    spec = EllipticOperatorSpec(2, lambda x: 2 + np.sin(2 * np.pi * x[..., 0]), potential=4.0,
                                periodicity=(1.0, 0.0), name="periodic diffusion")
    op = assemble(spec, grid, pad=6)
    t = LevyTriplet(a=0.3, nu=atoms([2.0, -2.0], [0.5, 0.5]))
    phi = TestFunction((-1.0, 0.0), 0.9)
    shifts = [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]
    main, sets = _periodic_battery(op, t, phi, shifts, 8, 10_000)
    calibration = [_periodic_battery(op, t, phi, shifts, 800 + rep, 10_000)[0] for rep in range(50)]
    rate = false_alarm_rate(calibration)
    elapsed = time.perf_counter() - start
    ok = main.passed and rate <= FALSE_ALARM_MAX and elapsed < KS_RUNTIME
    record = dict(pairs=main.pairs, rate=rate, calibration=[r.pairs for r in calibration],
                  samples=_digest(*sets.values()))
    return Outcome(ok, f"period-shift KS battery min p = {main.min_p:.3f} (> {KS_LEVEL}), N = 1e4 per shift; "
                       f"false alarms {rate:.2%} of {3 * len(calibration)} tests over 50 repetitions "
                       f"(<= {FALSE_ALARM_MAX:.0%}); {elapsed:.0f} s (< {KS_RUNTIME:.0f} s)", _payload(record))


# --- 9: mild / generalized consistency --------------------------------------------------------------

def criterion_9() -> Outcome:
    eps = 4.0
    G = ClosedFormGreen(3, eps)
    phi = TestFunction((0.1, 0.0, -0.1), 1.2)
    t = centered(LevyTriplet(a=0.5, nu=atoms([2.0, -1.0], [0.7, 0.4])))
    fine = GridSpec.cube(3, -2.0, 2.0, 64)
    noises = [sample_noise(fine, t, 0.1, realization_seed(9, i)) for i in range(8)]
    exact, rms, record = [], [], {}
    for factor in (4, 2, 1):
        grid = fine.coarsened(factor) if factor > 1 else fine
        op = assemble(laplacian(3, eps), grid, pad=10)
        v = apply_kernel(DiscreteGreen(op), phi)
        w = apply_kernel(G, phi, grid)
        exact.append(math.sqrt(np.sum((w - v) ** 2) / np.sum(v**2)))
        diff, gen = [], []
        for noise in noises:
            nz = coarsen(noise, factor) if factor > 1 else noise
            g = float(np.sum(v * nz.increments))
            diff.append(integrate_against(mild_field(nz, G), phi) - g)
            gen.append(g)
        rms.append(math.sqrt(np.mean(np.square(diff)) / np.mean(np.square(gen))))
        record[str(grid.resolution[0])] = [exact[-1], rms[-1]]
    order_exact = [math.log2(a / b) for a, b in zip(exact, exact[1:])]
    order_mc = [math.log2(a / b) for a, b in zip(rms, rms[1:])]
    ok = min(order_exact + order_mc) >= MIN_ORDER
    return Outcome(ok, f"relative L2 gap 16/32/64: " + " -> ".join(f"{e:.2e}" for e in exact)
                       + f" (orders {', '.join(f'{o:.2f}' for o in order_exact)}); Monte Carlo RMS over 8 coarsened "
                       f"realizations " + " -> ".join(f"{e:.2e}" for e in rms)
                       + f" (orders {', '.join(f'{o:.2f}' for o in order_mc)}); required order >= {MIN_ORDER:g}",
                   _payload(record))


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9}
FIRST_RUN: dict[int, bytes] = {}


def _announce(capsys, k: int, outcome: Outcome):
    with capsys.disabled():
        print(f"\nACCEPTANCE {k:2d} {'PASS' if outcome.passed else 'FAIL'}: {outcome.detail}")


@pytest.mark.slow
@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k, capsys):
    outcome = CRITERIA[k]()
    FIRST_RUN[k] = outcome.payload
    _announce(capsys, k, outcome)
    assert outcome.passed, outcome.detail


@pytest.mark.slow
def test_criterion_10_determinism(capsys):
    first = {k: FIRST_RUN[k] if k in FIRST_RUN else CRITERIA[k]().payload for k in CRITERIA}
    differing = [k for k in CRITERIA if CRITERIA[k]().payload != first[k]]
    outcome = Outcome(not differing, "rerun of criteria 1-9 with fixed seeds is byte-identical" if not differing
                      else f"criteria {differing} changed on rerun", b"")
    _announce(capsys, 10, outcome)
    assert outcome.passed, outcome.detail
