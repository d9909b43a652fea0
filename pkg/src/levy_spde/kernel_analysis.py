"""Kernel envelopes: ``G_R(x) = int_{B_R(0)} |G(x, y)| dy``, distribution functions and ``h_R``.

Sampled functions come in two flavours:

* :class:`RadialFunction` -- values on a radius grid plus an analytic tail model
  ``A s^{-p} exp(-kappa s)`` beyond the last sample;
* :class:`GridFunction` -- values on the cells of a :class:`GridSpec` plus an optional
  radial bound used outside the box.

Integrals of the form ``int F(f(x)) dx`` are evaluated directly rather than through a
tabulated distribution function; the layer-cake formula links the two:

* ``int_0^T d_f(a) da = int min(f, T) dx``
* ``int_T^inf d_f(a) da = int (f - T)_+ dx``
* ``int_0^T a d_f(a) da = 1/2 int min(f, T)^2 dx``

The tabulated ``d_f`` on a log-spaced grid is kept as an independent route and for
export.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate, interpolate, optimize, special

from ._numerics import Finiteness, Integral, cap_quadrature, quad_interval, sphere_quadrature, unit_ball_volume, unit_sphere_area
from .white_noise import GridSpec

N_ALPHA = 256
SPOT_CHECK_PAIRS = 1000


# --- kernels --------------------------------------------------------------------------------

@dataclass(frozen=True)
class Envelope:
    """``|G(x, y)| <= constant * r^-power * exp(-rate * r^theta)`` with ``r = |x - y|``.

    ``bounded`` replaces ``r^-power`` by ``min(1, r^-power)``.  ``sharp`` states that the
    decay is attained (up to constants) so that a divergent envelope integral certifies
    divergence instead of merely failing to bound it.
    """

    constant: float
    power: float
    rate: float = 0.0
    theta: float = 1.0
    bounded: bool = False
    sharp: bool = True

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, float)
        with np.errstate(divide="ignore"):
            base = r ** (-self.power)
        if self.bounded:
            base = np.minimum(1.0, base)
        return self.constant * base * np.exp(-self.rate * r**self.theta)


@dataclass(frozen=True, eq=False)
class Kernel:
    """A kernel ``G(x, y)`` on ``R^d x R^d`` with its decay envelope.

    ``profile``, when given, means ``G(x, y) = profile(|x - y|)`` and enables the radial
    fast path.  ``periodicity`` is a vector ``l`` with ``G(x + l, y + l) = G(x, y)``.
    """

    d: int
    evaluate: Callable
    envelope: Envelope
    singularity_order: float = 0.0
    profile: Callable | None = None
    periodicity: tuple[float, ...] | None = None
    name: str = "kernel"
    check_box: float = 4.0
    zero: bool = False

    def __post_init__(self):
        if self.singularity_order >= self.d:
            raise ValueError(
                f"singularity order {self.singularity_order} >= d = {self.d}: "
                "G(x, .) is not locally integrable and G_R diverges"
            )
        self.spot_check()

    @property
    def translation_invariant(self) -> bool:
        return self.profile is not None

    def __call__(self, x, y) -> np.ndarray:
        return np.asarray(self.evaluate(np.asarray(x, float), np.asarray(y, float)), float)

    def spot_check(self, n_pairs: int = SPOT_CHECK_PAIRS, seed: int = 12345):
        rng = np.random.default_rng(seed)
        L = self.check_box
        x = rng.uniform(-L, L, (n_pairs, self.d))
        y = rng.uniform(-L, L, (n_pairs, self.d))
        r = np.linalg.norm(x - y, axis=1)
        g = np.abs(self(x, y))
        env = self.envelope(r)
        bad = g > env * (1 + 1e-9) + 1e-300
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ValueError(f"envelope violated at |x-y| = {r[i]:.4g}: |G| = {g[i]:.4g} > {env[i]:.4g}")
        if self.periodicity is not None:
            shift = np.asarray(self.periodicity, float)
            g2 = self(x + shift, y + shift)
            if not np.allclose(g2, self(x, y), rtol=1e-8, atol=1e-300):
                raise ValueError("kernel is not invariant under the joint shift by its periodicity vector")


def laplace_kernel(d: int) -> Kernel:
    if d < 3:
        raise ValueError("the Laplacian fundamental solution decays only for d >= 3")
    c = 1.0 / ((d - 2) * unit_sphere_area(d))
    prof = lambda r: c * np.asarray(r, float) ** (2.0 - d)
    return Kernel(d, lambda x, y: prof(np.linalg.norm(x - y, axis=-1)), Envelope(c, d - 2.0),
                  singularity_order=d - 2.0, profile=prof, name=f"laplace(d={d})")


def yukawa_kernel(eps: float, d: int = 3) -> Kernel:
    k = math.sqrt(eps)
    if d == 3:
        prof = lambda r: np.exp(-k * np.asarray(r, float)) / (4 * math.pi * np.asarray(r, float))
        env = Envelope(1 / (4 * math.pi), 1.0, rate=k)
        order = 1.0
    elif d == 1:
        prof = lambda r: np.exp(-k * np.abs(np.asarray(r, float))) / (2 * k)
        env = Envelope(1 / (2 * k), 0.0, rate=k)
        order = 0.0
    else:
        raise ValueError("screened kernels are implemented for d = 1 and d = 3")
    return Kernel(d, lambda x, y: prof(np.linalg.norm(x - y, axis=-1)), env, singularity_order=order,
                  profile=prof, name=f"yukawa(eps={eps:g}, d={d})")


def power_kernel(d: int, p: float, constant: float = 1.0) -> Kernel:
    """Bounded kernel ``constant * min(1, |x - y|^-p)``."""
    prof = lambda r: constant * np.minimum(1.0, np.asarray(r, float) ** (-p))
    return Kernel(d, lambda x, y: prof(np.linalg.norm(x - y, axis=-1)),
                  Envelope(constant, p, bounded=True), profile=prof, name=f"power(p={p:g}, d={d})")


def zero_kernel(d: int) -> Kernel:
    prof = lambda r: np.zeros(np.shape(r))
    return Kernel(d, lambda x, y: np.zeros(np.shape(x)[:-1]), Envelope(0.0, 0.0, sharp=False),
                  profile=prof, name="zero", zero=True)


# --- sampled functions ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TailModel:
    """``f(s) ~ amplitude * s^-power * exp(-rate * s)`` for ``s >= start``."""

    amplitude: float
    power: float
    rate: float
    start: float
    sharp: bool = True

    def __call__(self, s):
        s = np.asarray(s, float)
        return self.amplitude * s ** (-self.power) * np.exp(-self.rate * s)

    def crossing(self, level: float) -> float:
        """Radius ``s >= start`` where the model falls to ``level`` (``start`` if already below)."""
        if self.amplitude == 0 or self(self.start) <= level:
            return self.start
        if self.rate == 0:
            return (self.amplitude / level) ** (1.0 / self.power)
        f = lambda s: math.log(self.amplitude) - self.power * math.log(s) - self.rate * s - math.log(level)
        hi = self.start * 2
        while f(hi) > 0:
            hi *= 2
        return optimize.brentq(f, self.start, hi, xtol=1e-14 * hi, rtol=1e-14)


def _shell(d: int, a, b):
    """Volume of ``{a <= |x| < b}`` in R^d."""
    return unit_ball_volume(d) * (np.asarray(b, float) ** d - np.asarray(a, float) ** d)


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """Nonnegative radial function sampled at radii ``s`` (starting at 0) with a tail model."""

    d: int
    s: np.ndarray
    values: np.ndarray
    tail: TailModel
    refine: int = 8
    _fine: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        s = np.asarray(self.s, float)
        v = np.asarray(self.values, float)
        if s.ndim != 1 or s.size < 3 or s[0] != 0 or np.any(np.diff(s) <= 0) or v.shape != s.shape:
            raise ValueError("radii must start at 0 and increase; values must match")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("radial samples must be finite and nonnegative")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "values", v)
        interp = interpolate.PchipInterpolator(s, v)
        t = np.linspace(0, 1, self.refine + 1)[:-1]
        sf = np.concatenate([(s[:-1, None] + np.diff(s)[:, None] * t[None, :]).ravel(), s[-1:]])
        vf = np.maximum(interp(sf), 0.0)
        # trapezoid weights of the measure sigma s^{d-1} ds
        dens = unit_sphere_area(self.d) * sf ** (self.d - 1)
        ds = np.diff(sf)
        w = np.zeros_like(sf)
        w[:-1] += 0.5 * ds * dens[:-1]
        w[1:] += 0.5 * ds * dens[1:]
        self._fine.update(s=sf, v=vf, w=w, interp=interp)

    @classmethod
    def from_callable(cls, d: int, fn: Callable, s_max: float, tail_power: float, tail_rate: float = 0.0,
                      n: int = 600, s_min: float | None = None, sharp: bool = True) -> "RadialFunction":
        """Sample ``fn`` on ``[0, s_max]`` (log spaced away from 0); fn may be singular at 0."""
        s_min = s_max * 1e-7 if s_min is None else s_min
        s = np.concatenate([[0.0], np.geomspace(s_min, s_max, n - 1)])
        v = np.asarray(fn(np.maximum(s, s_min)), float)
        amp = v[-1] * s_max**tail_power * math.exp(tail_rate * s_max)
        return cls(d, s, v, TailModel(amp, tail_power, tail_rate, s_max, sharp))

    @property
    def s_max(self) -> float:
        return float(self.s[-1])

    @property
    def sup(self) -> float:
        return float(max(self.values.max(), self.tail(self.s_max) if self.tail.amplitude else 0.0))

    def __call__(self, s) -> np.ndarray:
        s = np.abs(np.asarray(s, float))
        inside = s <= self.s_max
        out = np.empty(s.shape)
        out[inside] = np.maximum(self._fine["interp"](s[inside]), 0.0)
        out[~inside] = self.tail(s[~inside]) if self.tail.amplitude else 0.0
        return out

    # integrals of F(f) over R^d
    def _tail_integral(self, kind: str, T: float, q: float) -> Integral:
        tm = self.tail
        s0 = tm.start
        if tm.amplitude == 0:
            return Integral(0.0)
        sig = unit_sphere_area(self.d)
        d = self.d
        if kind == "excess":
            s_star = tm.crossing(T)
            if s_star <= s0:
                return Integral(0.0)
            val = quad_interval(lambda s: (tm(s) - T) * sig * s ** (d - 1), s0, s_star)[0]
            return Integral(val)
        # kind "min" (q-th power of min(f, T)) or "pow" (q-th power of f)
        s_star = tm.crossing(T) if kind == "min" else s0
        head = sig * T**q * (s_star**d - s0**d) / d if s_star > s0 else 0.0
        start = max(s_star, s0)
        if tm.rate == 0:
            e = q * tm.power - d
            if e <= 0:
                msg = f"tail ~ s^-{tm.power:g} raised to {q:g} is not integrable in d={d}"
                return Integral.diverges(msg) if tm.sharp else Integral.unknown(msg)
            return Integral(head + sig * tm.amplitude**q * start ** (-e) / e)
        val, err = integrate.quad(lambda s: tm(s) ** q * sig * s ** (d - 1), start, math.inf, limit=200)
        return Integral(head + val, err)

    def integral(self, kind: str, T: float = math.inf, q: float = 1.0) -> Integral:
        """``int F(f(x)) dx`` with ``F = min(f, T)^q`` (kind ``"min"``), ``f^q`` (``"pow"``)
        or ``(f - T)_+`` (``"excess"``)."""
        v, w = self._fine["v"], self._fine["w"]
        if kind == "min":
            body = np.minimum(v, T) ** q
        elif kind == "pow":
            body = v**q
        elif kind == "excess":
            body = np.maximum(v - T, 0.0)
        else:
            raise ValueError(kind)
        return Integral(float(body @ w)) + self._tail_integral(kind, T, q)

    def distribution(self, alpha) -> np.ndarray:
        """``d_f(alpha) = |{x : f(|x|) > alpha}|``."""
        alpha = np.atleast_1d(np.asarray(alpha, float))
        sf, vf = self._fine["s"], self._fine["v"]
        out = np.empty(alpha.shape)
        a0, a1 = sf[:-1], sf[1:]
        v0, v1 = vf[:-1], vf[1:]
        for i, al in enumerate(alpha):
            # linear model on each fine interval: portion where v > al
            lo, hi = v0 > al, v1 > al
            with np.errstate(divide="ignore", invalid="ignore"):
                cross = a0 + (al - v0) / (v1 - v0) * (a1 - a0)
            start = np.where(lo, a0, np.where(hi, cross, a1))
            stop = np.where(hi, a1, np.where(lo, cross, a0))
            vol = np.sum(_shell(self.d, start, np.maximum(stop, start)))
            if self.tail.amplitude and self.tail(self.s_max) > al:
                vol += _shell(self.d, self.s_max, self.tail.crossing(al))
            out[i] = vol
        return out


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nonnegative values on the cells of ``grid`` plus an optional radial bound outside."""

    grid: GridSpec
    values: np.ndarray
    outside: TailModel | None = None

    def __post_init__(self):
        v = np.abs(np.asarray(self.values, float))
        if v.shape != self.grid.shape:
            raise ValueError("values must have the grid shape")
        object.__setattr__(self, "values", v)

    @property
    def d(self) -> int:
        return self.grid.d

    @property
    def sup(self) -> float:
        return float(self.values.max())

    def _inner_radius(self) -> float:
        return float(min(min(-lo, hi) for lo, hi in self.grid.box))

    def _boundary_max(self) -> float:
        v = self.values
        out = 0.0
        for ax in range(v.ndim):
            out = max(out, np.take(v, 0, axis=ax).max(), np.take(v, -1, axis=ax).max())
        return float(out)

    def _outside(self, kind: str, T: float, q: float) -> Integral:
        if self.outside is None:
            return Integral(0.0) if self._boundary_max() == 0 else Integral.unknown(
                "function does not vanish at the box boundary and no envelope is given")
        r0 = self._inner_radius()
        if r0 <= 0:
            return Integral.unknown("origin outside the sampled box")
        # bound via the shell |x| > r0, which contains the complement of the box
        tm = TailModel(self.outside.amplitude, self.outside.power, self.outside.rate, r0, self.outside.sharp)
        rf = RadialFunction(self.d, np.array([0.0, r0 / 2, r0]), np.zeros(3), tm, refine=1)
        res = rf._tail_integral(kind, T, q)
        if res.status is Finiteness.FINITE:
            return Integral(0.0, res.value)
        return res

    def integral(self, kind: str, T: float = math.inf, q: float = 1.0) -> Integral:
        v = self.values
        if kind == "min":
            body = np.minimum(v, T) ** q
        elif kind == "pow":
            body = v**q
        elif kind == "excess":
            body = np.maximum(v - T, 0.0)
        else:
            raise ValueError(kind)
        return Integral(float(body.sum() * self.grid.cell_volume)) + self._outside(kind, T, q)

    def distribution(self, alpha) -> np.ndarray:
        alpha = np.atleast_1d(np.asarray(alpha, float))
        flat = np.sort(self.values.ravel())
        counts = flat.size - np.searchsorted(flat, alpha, side="right")
        out = counts * self.grid.cell_volume
        bmax = self._boundary_max()
        for i, al in enumerate(alpha):
            if bmax > al:
                if self.outside is None:
                    raise ValueError(
                        "superlevel set touches the box boundary and no envelope is given; "
                        "the cell count would only be a lower bound"
                    )
            if self.outside is not None:
                r_star = self.outside.crossing(al) if self.outside(max(self._inner_radius(), 1e-300)) > al else 0.0
                if r_star > self._inner_radius():
                    inside_ball = np.linalg.norm(self.grid.centers(), axis=-1) < r_star
                    out[i] += max(unit_ball_volume(self.d) * r_star**self.d
                                  - inside_ball.sum() * self.grid.cell_volume, 0.0)
        return out


# --- G_R --------------------------------------------------------------------------------------

def _cap_fraction(d: int, s: float, rho: float, R: float) -> float:
    """Fraction of the sphere ``|y - x| = rho`` (``|x| = s``) lying inside ``B_R(0)``."""
    if d == 1:
        return 0.5 * ((abs(s + rho) < R) + (abs(s - rho) < R))
    if s == 0 or rho == 0:
        return float(max(rho, s) < R)
    t = (R * R - s * s - rho * rho) / (2 * s * rho)
    if t >= 1:
        return 1.0
    if t <= -1:
        return 0.0
    if d == 3:
        return 0.5 * (1 + t)
    if d == 2:
        return 1.0 - math.acos(t) / math.pi
    k = 0.5 * (d - 1)
    return float(special.betainc(k, k, 0.5 * (1 + t)))


def _radial_G_R_value(kernel: Kernel, R: float, s: float) -> float:
    d = kernel.d
    sig = unit_sphere_area(d)
    prof = kernel.profile
    radial = lambda rho: abs(float(prof(rho))) * sig * rho ** (d - 1)
    lo, hi = abs(R - s), R + s
    total = 0.0
    if s < R:
        # the whole sphere lies inside for rho < R - s
        total += quad_interval(radial, 0.0, lo)[0]
    total += quad_interval(lambda rho: radial(rho) * _cap_fraction(d, s, rho, R), lo, hi, epsrel=1e-9)[0]
    return total


def _grid_G_R(kernel: Kernel, R: float, grid: GridSpec, n_radial: int = 24, n_angular: int = 16) -> np.ndarray:
    """Polar quadrature about each grid centre, with the substitution rho = rho_max t^{1/(d-p)}
    removing the diagonal singularity."""
    d = kernel.d
    p = kernel.singularity_order
    dirs, wd = sphere_quadrature(d, n_angular)
    gt, wt = np.polynomial.legendre.leggauss(n_radial)
    t = 0.5 * (gt + 1)
    wt = 0.5 * wt
    pts = grid.centers().reshape(-1, d)
    out = np.empty(len(pts))
    for i, x in enumerate(pts):
        c = x @ x - R * R
        if c < 0:
            b = dirs @ x
            rho_max = -b + np.sqrt(b * b - c)
            rho = rho_max[None, :] * t[:, None] ** (1.0 / (d - p))
            jac = (rho_max**d / (d - p))[None, :] * t[:, None] ** (p / (d - p))
            y = x + rho[..., None] * dirs[None, :, :]
            vals = np.abs(kernel(np.broadcast_to(x, y.shape), y)) * jac
            out[i] = float(wt @ vals @ wd)
            continue
        # outside the ball: only the cone of directions towards it contributes
        dist = math.sqrt(x @ x)
        cdirs, cw = cap_quadrature(-x / dist, R / dist, n_angular)
        b = cdirs @ x
        sq = np.sqrt(np.maximum(b * b - c, 0.0))
        r1, r2 = -b - sq, -b + sq
        rho = r1[None, :] + (r2 - r1)[None, :] * t[:, None]
        jac = (r2 - r1)[None, :] * rho ** (d - 1)
        y = x + rho[..., None] * cdirs[None, :, :]
        vals = np.abs(kernel(np.broadcast_to(x, y.shape), y)) * jac
        out[i] = float(wt @ vals @ cw)
    return out.reshape(grid.shape)


def compute_G_R(kernel: Kernel, R: float, grid: GridSpec | None = None, n: int = 800):
    """``G_R`` as a :class:`RadialFunction` (translation-invariant kernels) or a
    :class:`GridFunction` on ``grid``."""
    if not R > 0:
        raise ValueError("R must be positive")
    d = kernel.d
    env = kernel.envelope
    vol = unit_ball_volume(d) * R**d
    if kernel.zero:
        s = np.linspace(0, 2 * R, 5)
        return RadialFunction(d, s, np.zeros(5), TailModel(0.0, 1.0, 0.0, 2 * R))
    if kernel.profile is not None and grid is None:
        if env.rate > 0:
            s_max = R + 40.0 / env.rate ** (1.0 / env.theta)
        else:
            s_max = 1e3 * R
        s = np.unique(np.concatenate([np.linspace(0, 2 * R, n // 2), np.geomspace(2 * R, s_max, n // 2)]))
        v = np.array([_radial_G_R_value(kernel, R, si) for si in s])
        # beyond 2R: G_R(s) ~ vol * profile(s); exact for the Laplacian and Yukawa kernels
        amp = v[-1] * s_max**env.power * math.exp(env.rate * s_max)
        return RadialFunction(d, s, v, TailModel(amp, env.power, env.rate, s_max, env.sharp))
    if grid is None:
        raise ValueError("kernels without a radial profile need an x-grid")
    vals = _grid_G_R(kernel, R, grid)
    # outside the box: G_R(x) <= vol(B_R) * envelope(|x| - R), bounded by a shifted power law
    r_in = min(min(-lo, hi) for lo, hi in grid.box)
    if r_in <= R:
        outside = None
    else:
        shift = r_in / (r_in - R)  # (|x| - R)^-p <= shift^p |x|^-p for |x| >= r_in
        outside = TailModel(vol * env.constant * shift**env.power, env.power, 0.0, r_in, sharp=False)
    return GridFunction(grid, vals, outside)


def dist_fn(f, alpha):
    """``d_f(alpha) = |{|f| > alpha}|`` for a sampled radial or grid function."""
    alpha = np.asarray(alpha, float)
    if np.any(alpha <= 0):
        raise ValueError("alpha must be positive")
    out = f.distribution(alpha)
    return float(out[0]) if alpha.ndim == 0 else out


# --- profiles -----------------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KernelProfile:
    R: float
    G_R: RadialFunction | GridFunction
    alpha: np.ndarray
    d_values: np.ndarray
    kernel: Kernel | None = None

    @property
    def d(self) -> int:
        return self.G_R.d

    @property
    def zero(self) -> bool:
        return self.G_R.sup == 0

    def h(self, x: float) -> Integral:
        """``h_R(x) = x int_0^{1/x} d_{G_R}`` evaluated as ``x int min(G_R, 1/x)``."""
        if not x > 0:
            raise ValueError("x must be positive")
        if self.zero:
            return Integral(0.0)
        return self.G_R.integral("min", 1.0 / x).scaled(x)

    def excess(self, T: float) -> Integral:
        """``int_T^inf d_{G_R}(a) da``."""
        if self.zero:
            return Integral(0.0)
        return self.G_R.integral("excess", T)

    def truncated_second_moment(self, T: float) -> Integral:
        """``int_0^T a d_{G_R}(a) da``."""
        if self.zero:
            return Integral(0.0)
        return self.G_R.integral("min", T, 2.0).scaled(0.5)

    def lp_norm(self, p: float) -> Integral:
        """``||G_R||_p^p`` with tail remainder (note: the p-th power)."""
        if p < 1:
            raise ValueError("p must be >= 1")
        if self.zero:
            return Integral(0.0)
        return self.G_R.integral("pow", q=p)

    def layer_cake_l1(self) -> float:
        """``int_0^inf d(a) da`` from the tabulated distribution function alone."""
        a, dv = self.alpha, self.d_values
        body = integrate.trapezoid(dv, a)
        # below the grid: d(a) >= d(alpha_min); above: d vanishes at the sup
        return float(body + a[0] * dv[0])

    def h_growth(self) -> tuple[float, bool]:
        """Exponent ``g`` with ``h_R(x) = O(x^g)`` as ``x -> inf`` and whether it is sharp."""
        tm = self.G_R.tail if isinstance(self.G_R, RadialFunction) else self.G_R.outside
        if self.zero:
            return 0.0, False
        if tm is None or tm.amplitude == 0:
            return 0.0, False
        if tm.rate > 0:
            return 0.0, False  # logarithmic growth
        d = self.d
        return (d / tm.power if tm.power > d else math.inf), tm.sharp

    def to_csv(self, path) -> tuple[Path, Path]:
        path = Path(path)
        dpath = path.with_name(path.stem + "_distribution.csv")
        with dpath.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha", "d"])
            for a, v in zip(self.alpha, self.d_values):
                w.writerow([repr(float(a)), repr(float(v))])
        gpath = path.with_name(path.stem + "_G_R.csv")
        with gpath.open("w", newline="") as fh:
            w = csv.writer(fh)
            if isinstance(self.G_R, RadialFunction):
                w.writerow(["radius", "G_R"])
                for s, v in zip(self.G_R.s, self.G_R.values):
                    w.writerow([repr(float(s)), repr(float(v))])
            else:
                w.writerow([f"x{i}" for i in range(self.d)] + ["G_R"])
                for x, v in zip(self.G_R.grid.centers().reshape(-1, self.d), self.G_R.values.ravel()):
                    w.writerow([repr(float(c)) for c in x] + [repr(float(v))])
        return dpath, gpath


def build_profile(source, R: float = 1.0, grid: GridSpec | None = None, n_alpha: int = N_ALPHA) -> KernelProfile:
    """Profile of a kernel (computing ``G_R``) or of an already sampled ``G_R``."""
    if isinstance(source, Kernel):
        f = compute_G_R(source, R, grid)
        kernel = source
    else:
        f, kernel = source, None
    sup = f.sup
    if sup == 0:
        alpha = np.geomspace(1e-12, 1.0, n_alpha)
        return KernelProfile(R, f, alpha, np.zeros(n_alpha), kernel)
    if isinstance(f, RadialFunction):
        floor = f.values[-1] if f.values[-1] > 0 else sup * 1e-12
    else:
        floor = max(f._boundary_max(), sup * 1e-12)
    a_min = max(min(floor, sup * 1e-3), sup * 1e-12)
    alpha = np.geomspace(a_min, sup, n_alpha)
    try:
        d_values = np.asarray(f.distribution(alpha))
    except ValueError:
        d_values = np.full(n_alpha, np.nan)
    return KernelProfile(R, f, alpha, d_values, kernel)


def compute_h_R(profile: KernelProfile, x: float) -> Integral:
    return profile.h(x)


def lp_norm(profile: KernelProfile, p: float) -> Integral:
    """``||G_R||_{L^p}`` (the norm, not its p-th power) with remainder bound."""
    res = profile.lp_norm(p)
    if not res.finite:
        return res
    val = res.value ** (1.0 / p)
    bound = (res.value + res.bound) ** (1.0 / p) - val
    return Integral(val, bound)
