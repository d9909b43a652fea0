"""Characteristic triplets, Lévy measures and the scalar integrals taken against them.

A Lévy measure is represented in one of three ways:

* :class:`AtomicMeasure` -- finitely many weighted atoms, integrated exactly;
* :class:`DensityMeasure` -- a density on ``{r_min < |r| <= r_max}`` with an optional
  :class:`TailHint` fixing the power-law behaviour of the unbounded tail;
* :class:`TabulatedMeasure` -- a density given on a grid of ``|r|`` values.

Measures can be added (``nu1 + nu2``).  Integrals over unbounded tails are never
truncated silently: they use the tail hint analytically, report divergence when the
integrand grows at least as fast as the tail decays, or refuse with
:class:`MissingTailHint`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, interpolate, special

from ._numerics import QUAD_ABS_TOL, QUAD_LIMIT as _QUAD_LIMIT, QUAD_REL_TOL, Integral, MissingTailHint, QuadratureError
from ._numerics import quad_interval as _quad

__all__ = [
    "AtomicMeasure",
    "DensityMeasure",
    "LevyMeasure",
    "LevyTriplet",
    "MissingTailHint",
    "SumMeasure",
    "TabulatedMeasure",
    "TailHint",
    "atoms",
    "eval_psi",
    "log_moment_integral",
    "moment_integral",
    "power_law",
    "psi_values",
    "small_jump_variance",
    "small_moment_integral",
    "uniform_density",
]

@dataclass(frozen=True)
class TailHint:
    """For ``|r| >= r_cut`` the density is exactly ``f(+-r_cut) * (|r|/r_cut)**(-1-alpha)``."""

    alpha: float
    r_cut: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("tail exponent alpha must be positive")
        if not self.r_cut > 0:
            raise ValueError("r_cut must be positive")


class LevyMeasure:
    """Base class.  Subclasses implement :meth:`integrate`, :meth:`psi_integral` and
    :meth:`sample_jumps`."""

    #: sup of beta with int_{|r|>1} |r|^beta nu(dr) < inf
    tail_index: float = math.inf
    #: inf of beta with int_{0<|r|<=1} |r|^beta nu(dr) < inf (nan when unknown)
    origin_index: float = 0.0

    def integrate(self, g, lo: float = 0.0, hi: float = math.inf, *, growth=None, tail_integral=None) -> Integral:
        """``int_{lo < |r| <= hi} g(r) nu(dr)`` for a vectorised ``g`` on signed ``r``.

        ``growth`` is the power-law growth exponent of ``|g|`` at infinity, used to
        certify divergence; ``tail_integral(T, alpha, sign)`` may supply
        ``int_T^inf g(sign*x) x**(-1-alpha) dx`` in closed form.
        """
        raise NotImplementedError

    def psi_integral(self, z: float) -> complex:
        raise NotImplementedError

    def sample_jumps(self, eps: float, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def mass(self, lo: float, hi: float = math.inf) -> float:
        res = self.integrate(
            lambda r: np.ones_like(r), lo, hi, growth=0.0, tail_integral=lambda T, a, s: T**-a / a
        )
        return res.value

    @property
    def is_zero(self) -> bool:
        return False

    def _far_mass(self) -> Integral:
        return self.integrate(lambda r: np.ones_like(r), 1.0, math.inf, growth=0.0,
                              tail_integral=lambda T, a, s: T**-a / a)

    def __add__(self, other: "LevyMeasure") -> "LevyMeasure":
        if not isinstance(other, LevyMeasure):
            return NotImplemented
        parts = []
        for m in (self, other):
            parts.extend(m.parts if isinstance(m, SumMeasure) else [m])
        return SumMeasure(tuple(p for p in parts if not p.is_zero))

    def _check_levy_condition(self):
        body = self.integrate(lambda r: r**2, 0.0, 1.0)
        far = self._far_mass()
        if not (body.finite and far.finite):
            raise ValueError("not a Lévy measure: int min(1, r^2) nu(dr) is not finite")
        tot = body.value + far.value
        if body.bound + far.bound > 1e-8 * max(tot, 1.0):
            raise ValueError(
                f"cannot verify int min(1, r^2) nu(dr) < inf to 1e-8 (value {tot}, error {body.bound + far.bound})"
            )


def _cos_m1(t: float) -> float:
    """cos(t) - 1 without cancellation."""
    return -2.0 * math.sin(0.5 * t) ** 2


def _sin_m_id(t: float) -> float:
    """sin(t) - t without cancellation."""
    if abs(t) < 1e-2:
        t2 = t * t
        return -t * t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0))
    return math.sin(t) - t


def _power_tail_fourier(w: float, alpha: float) -> tuple[float, float]:
    """``int_w^inf (cos u - 1) u^{-1-alpha} du`` and ``int_w^inf sin(u) u^{-1-alpha} du``."""
    start = max(w, 1.0)
    pw = lambda u: u ** (-1.0 - alpha)
    i_cos = integrate.quad(pw, start, math.inf, weight="cos", wvar=1.0, limlst=200)[0] - start**-alpha / alpha
    i_sin = integrate.quad(pw, start, math.inf, weight="sin", wvar=1.0, limlst=200)[0]
    if w < 1.0:
        mid = max(w, _SERIES_CUT)
        i_cos += _quad(lambda u: _cos_m1(u) * pw(u), mid, 1.0)[0]
        i_sin += _quad(lambda u: math.sin(u) * pw(u), mid, 1.0)[0]
    if w < _SERIES_CUT:
        # two-term Taylor series; avoids overflow of u^{-1-alpha} for tiny u
        def mono(p):
            if p == -1.0:
                return math.log(_SERIES_CUT / w)
            return (_SERIES_CUT ** (p + 1) - w ** (p + 1)) / (p + 1)

        i_cos += -0.5 * mono(1.0 - alpha) + mono(3.0 - alpha) / 24.0
        i_sin += mono(-alpha) - mono(2.0 - alpha) / 6.0
    return i_cos, i_sin


_SERIES_CUT = 1e-4


def _scalar(v) -> float:
    return float(np.asarray(v, dtype=float).reshape(-1)[0])


def _signed(x, s):
    return s * np.asarray(x, dtype=float)


@dataclass(frozen=True, eq=False)
class AtomicMeasure(LevyMeasure):
    positions: tuple[float, ...]
    masses: tuple[float, ...]

    def __post_init__(self):
        pos = np.asarray(self.positions, float)
        mas = np.asarray(self.masses, float)
        if pos.shape != mas.shape or pos.ndim != 1:
            raise ValueError("positions and masses must be 1-d sequences of equal length")
        if np.any(pos == 0):
            raise ValueError("a Lévy measure carries no mass at 0")
        if np.any(mas < 0) or not np.all(np.isfinite(mas)) or not np.all(np.isfinite(pos)):
            raise ValueError("atom masses must be finite and non-negative")
        object.__setattr__(self, "_pos", pos)
        object.__setattr__(self, "_mass", mas)

    @property
    def is_zero(self) -> bool:
        return not np.any(self._mass > 0)

    def integrate(self, g, lo=0.0, hi=math.inf, *, growth=None, tail_integral=None) -> Integral:
        a = np.abs(self._pos)
        sel = (a > lo) & (a <= hi) & (self._mass > 0)
        if not np.any(sel):
            return Integral(0.0)
        vals = np.asarray(g(self._pos[sel]), dtype=float)
        return Integral(float(np.sum(vals * self._mass[sel])))

    def psi_integral(self, z: float) -> complex:
        r, m = self._pos, self._mass
        comp = np.where(np.abs(r) <= 1, r * z, 0.0)
        return complex(np.sum(m * (np.exp(1j * r * z) - 1 - 1j * comp)))

    def sample_jumps(self, eps, n, rng):
        sel = (np.abs(self._pos) > eps) & (self._mass > 0)
        if n == 0 or not np.any(sel):
            return np.zeros(n)
        p = self._mass[sel] / self._mass[sel].sum()
        if p.size == 1:
            return np.full(n, self._pos[sel][0])
        return self._pos[sel][rng.choice(p.size, size=n, p=p)]


@dataclass(frozen=True, eq=False)
class DensityMeasure(LevyMeasure):
    """Lévy measure with a density on ``{r_min < |r| <= r_max}`` restricted to ``sides``."""

    density: Callable[[np.ndarray], np.ndarray]
    r_min: float = 0.0
    r_max: float = math.inf
    sides: str = "both"
    tail: TailHint | None = None
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)
    #: density ~ |r|^{-1-origin} as r -> 0 (only meaningful when r_min == 0)
    origin: float | None = None

    def __post_init__(self):
        if self.sides not in ("both", "positive", "negative"):
            raise ValueError("sides must be 'both', 'positive' or 'negative'")
        if not (0 <= self.r_min < self.r_max):
            raise ValueError("need 0 <= r_min < r_max")
        self._check_levy_condition()

    def _far_mass(self) -> Integral:
        if self.tail is not None or math.isfinite(self.r_max):
            return super()._far_mass()
        # no tail hint: plain improper quadrature is enough to accept the measure
        val, err = 0.0, 0.0
        for s in self._signs:
            v, e = integrate.quad(lambda x, s=s: float(self._f(x, s)), max(1.0, self.r_min), math.inf,
                                  limit=_QUAD_LIMIT)
            val, err = val + v, err + e
        return Integral(val, err) if math.isfinite(val) else Integral.unknown("tail mass quadrature failed")

    @property
    def tail_index(self) -> float:
        if math.isfinite(self.r_max):
            return math.inf
        return self.tail.alpha if self.tail is not None else math.nan

    @property
    def origin_index(self) -> float:
        if self.r_min > 0:
            return 0.0
        return self.origin if self.origin is not None else math.nan

    @property
    def _signs(self) -> tuple[int, ...]:
        return {"both": (1, -1), "positive": (1,), "negative": (-1,)}[self.sides]

    def _f(self, x, s):
        return np.asarray(self.density(_signed(x, s)), dtype=float)

    def _f_scalar(self, x: float, s: int) -> float:
        v = self.density(s * x)
        return v if isinstance(v, float) else _scalar(v)

    def _tail_coeff(self, s) -> float:
        rc = self.tail.r_cut
        return float(self._f(rc, s)) * rc ** (1 + self.tail.alpha)

    def _body_hi(self, hi):
        if math.isfinite(hi) or math.isfinite(self.r_max):
            return min(hi, self.r_max)
        if self.tail is None:
            return math.inf
        return max(self.tail.r_cut, self.r_min)

    def integrate(self, g, lo=0.0, hi=math.inf, *, growth=None, tail_integral=None) -> Integral:
        total, err = 0.0, 0.0
        a = max(lo, self.r_min)
        b = self._body_hi(hi)
        infinite_tail = not math.isfinite(hi) and not math.isfinite(self.r_max)
        if infinite_tail and self.tail is None:
            raise MissingTailHint(
                "density with unbounded support needs a TailHint to integrate over |r| -> inf; "
                "refusing to truncate silently"
            )
        for s in self._signs:
            if math.isfinite(b) and b > a:
                v, e = self._segment(g, a, b, s)
                total += v
                err += e
            if infinite_tail:
                T = max(a, self.tail.r_cut)
                alpha = self.tail.alpha
                if growth is not None and growth >= alpha:
                    return Integral.diverges(
                        f"integrand grows like |r|^{growth:g} against tail |r|^(-1-{alpha:g})"
                    )
                c = self._tail_coeff(s)
                if c == 0:
                    continue
                if tail_integral is not None:
                    total += c * tail_integral(T, alpha, s)
                else:
                    # x = e^u turns the algebraic tail into an exponential one; beyond X the
                    # integrand is extrapolated with its declared growth exponent
                    X = max(T * 1e6, 1e12) if growth is not None else math.inf
                    fun = lambda u, s=s: _scalar(g(_signed(math.exp(u), s))) * math.exp(-alpha * u)
                    v, e = integrate.quad(fun, math.log(T), math.log(X) if growth is not None else 700.0,
                                          limit=_QUAD_LIMIT, epsabs=QUAD_ABS_TOL, epsrel=QUAD_REL_TOL)
                    if growth is not None:
                        v += _scalar(g(_signed(X, s))) * X**-alpha / (alpha - growth)
                    if not math.isfinite(v):
                        return Integral.unknown("tail quadrature did not converge")
                    total += c * v
                    err += c * e
        return Integral(total, err)

    def _segment(self, g, a, b, s):
        fun = lambda x: _scalar(np.asarray(g(_signed(x, s))) * self._f(x, s))
        if a < 1.0 < b:
            v1, e1 = _quad(fun, a, 1.0)
            v2, e2 = _quad(fun, 1.0, b)
            return v1 + v2, e1 + e2
        return _quad(fun, a, b)

    def psi_integral(self, z: float) -> complex:
        if z == 0:
            return 0j
        re, im = 0.0, 0.0
        a = self.r_min
        b = self._body_hi(math.inf)
        if not math.isfinite(b):
            raise MissingTailHint("psi needs a TailHint for a density with unbounded support")
        for s in self._signs:
            f = lambda x, s=s: self._f_scalar(x, s)
            near = min(b, 1.0)
            if near > a:
                re += _quad(lambda x: _cos_m1(z * x) * f(x), a, near)[0]
                im += s * _quad(lambda x: _sin_m_id(z * x) * f(x), a, near)[0]
            lo = max(a, 1.0)
            if b > lo:
                re += _quad(f, lo, b, weight="cos", wvar=z)[0] - _quad(f, lo, b)[0]
                im += s * _quad(f, lo, b, weight="sin", wvar=z)[0]
            if not math.isfinite(self.r_max):
                T = b
                alpha = self.tail.alpha
                c = self._tail_coeff(s)
                # substitute u = |z| x so the oscillation period is fixed
                w = abs(z) * T
                scale = c * abs(z) ** alpha
                if scale == 0.0:
                    continue
                i_cos, i_sin = _power_tail_fourier(w, alpha)
                re += scale * i_cos
                im += s * scale * math.copysign(1.0, z) * i_sin
        return complex(re, im)

    # --- sampling -------------------------------------------------------------------
    def mass(self, lo: float, hi: float = math.inf) -> float:
        # sampling asks for the same jump rate once per chunk; quadrature is the bottleneck
        key = ("mass", float(lo), float(hi))
        if key not in self._cache:
            self._cache[key] = super().mass(lo, hi)
        return self._cache[key]

    def _sampler(self, eps: float):
        key = float(eps)
        if key in self._cache:
            return self._cache[key]
        a = max(eps, self.r_min)
        b = self._body_hi(math.inf)
        if not math.isfinite(b):
            raise MissingTailHint("cannot sample jumps of an unbounded density without a TailHint")
        pieces = []  # (mass, kind, sign, data)
        for s in self._signs:
            if b > a:
                u = np.linspace(math.log(a), math.log(b), 8193)
                x = np.exp(u)
                w = self._f(x, s) * x
                cdf = integrate.cumulative_trapezoid(w, u, initial=0.0)
                if cdf[-1] > 0:
                    pieces.append((cdf[-1], "body", s, (cdf / cdf[-1], u)))
            if not math.isfinite(self.r_max):
                T = max(b, a)
                c = self._tail_coeff(s)
                m = c * T**-self.tail.alpha / self.tail.alpha
                if m > 0:
                    pieces.append((m, "tail", s, T))
        self._cache[key] = pieces
        return pieces

    def sample_jumps(self, eps, n, rng):
        pieces = self._sampler(eps)
        out = np.zeros(n)
        if n == 0 or not pieces:
            return out
        masses = np.array([p[0] for p in pieces])
        which = rng.choice(len(pieces), size=n, p=masses / masses.sum()) if len(pieces) > 1 else np.zeros(n, int)
        for k, (_, kind, s, data) in enumerate(pieces):
            sel = which == k
            m = int(sel.sum())
            if m == 0:
                continue
            v = rng.random(m)
            if kind == "body":
                cdf, u = data
                out[sel] = s * np.exp(np.interp(v, cdf, u))
            else:
                out[sel] = s * data * (1.0 - v) ** (-1.0 / self.tail.alpha)
        return out


class TabulatedMeasure(DensityMeasure):
    """Density tabulated on a grid of ``|r|`` values; compact support ``[r[0], r[-1]]``."""

    def __init__(self, r_grid: Sequence[float], values: Sequence[float], sides: str = "both",
                 interpolation: str = "linear", name: str = ""):
        r = np.asarray(r_grid, float)
        v = np.asarray(values, float)
        if r.ndim != 1 or r.size < 2 or np.any(np.diff(r) <= 0) or r[0] <= 0:
            raise ValueError("r_grid must be increasing, positive, with at least two points")
        if v.shape != r.shape or np.any(v < 0):
            raise ValueError("values must be non-negative and match r_grid")
        if interpolation == "linear":
            interp = interpolate.interp1d(r, v, bounds_error=False, fill_value=0.0)
        elif interpolation == "loglog":
            if np.any(v <= 0):
                raise ValueError("log-log interpolation needs strictly positive values")
            li = interpolate.interp1d(np.log(r), np.log(v), bounds_error=False, fill_value=-np.inf)
            interp = lambda x: np.exp(li(np.log(np.maximum(x, 1e-300))))
        else:
            raise ValueError("interpolation must be 'linear' or 'loglog'")
        density = lambda x: interp(np.abs(x))
        object.__setattr__(self, "_nodes", r)
        super().__init__(density=density, r_min=float(r[0]), r_max=float(r[-1]), sides=sides,
                         tail=None, name=name or "tabulated")

    _GAUSS = np.polynomial.legendre.leggauss(8)

    def _segment(self, g, a, b, s):
        # fixed Gauss-Legendre per table panel: the interpolant is smooth inside each panel
        edges = np.concatenate([[a], self._nodes[(self._nodes > a) & (self._nodes < b)], [b]])
        if a < 1.0 < b:
            edges = np.sort(np.append(edges, 1.0))
        x0, w0 = self._GAUSS
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * np.diff(edges)
        x = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
        w = (half[:, None] * w0[None, :]).ravel()
        vals = np.asarray(g(_signed(x, s)), float) * self._f(x, s)
        return float(np.dot(w, vals)), 0.0


@dataclass(frozen=True, eq=False)
class SumMeasure(LevyMeasure):
    parts: tuple[LevyMeasure, ...]

    @property
    def is_zero(self) -> bool:
        return all(p.is_zero for p in self.parts)

    @property
    def tail_index(self) -> float:
        return min((p.tail_index for p in self.parts), default=math.inf)

    @property
    def origin_index(self) -> float:
        vals = [p.origin_index for p in self.parts]
        return math.nan if any(math.isnan(v) for v in vals) else max(vals, default=0.0)

    def integrate(self, g, lo=0.0, hi=math.inf, *, growth=None, tail_integral=None) -> Integral:
        out = Integral(0.0)
        for p in self.parts:
            out = out + p.integrate(g, lo, hi, growth=growth, tail_integral=tail_integral)
        return out

    def psi_integral(self, z):
        return sum((p.psi_integral(z) for p in self.parts), 0j)

    def sample_jumps(self, eps, n, rng):
        rates = np.array([p.mass(eps) for p in self.parts])
        out = np.zeros(n)
        if n == 0 or rates.sum() == 0:
            return out
        which = rng.choice(len(self.parts), size=n, p=rates / rates.sum())
        for k, p in enumerate(self.parts):
            sel = which == k
            if sel.any():
                out[sel] = p.sample_jumps(eps, int(sel.sum()), rng)
        return out


ZERO_MEASURE = AtomicMeasure((), ())


@dataclass(frozen=True)
class LevyTriplet:
    """Characteristic triplet: Gaussian variance ``a``, drift ``gamma``, Lévy measure ``nu``."""

    a: float = 0.0
    gamma: float = 0.0
    nu: LevyMeasure = ZERO_MEASURE

    def __post_init__(self):
        if not (self.a >= 0 and math.isfinite(self.a)):
            raise ValueError("Gaussian variance a must be finite and >= 0")
        if not math.isfinite(self.gamma):
            raise ValueError("drift must be finite")


# --- constructors ---------------------------------------------------------------------

def atoms(positions: Sequence[float], masses: Sequence[float]) -> AtomicMeasure:
    return AtomicMeasure(tuple(float(p) for p in positions), tuple(float(m) for m in masses))


def power_law(alpha: float, c_pos: float = 1.0, c_neg: float | None = None, r_min: float = 0.0,
              r_max: float = math.inf) -> DensityMeasure:
    """Density ``c_pos r^{-1-alpha}`` for r > 0 and ``c_neg |r|^{-1-alpha}`` for r < 0.

    ``c_neg=None`` means symmetric.  Near zero this is integrable against ``r^2`` only
    for ``alpha < 2``; use ``r_min > 0`` otherwise.
    """
    c_neg = c_pos if c_neg is None else c_neg
    sides = "both" if (c_pos > 0 and c_neg > 0) else ("positive" if c_pos > 0 else "negative")

    def density(r):
        if isinstance(r, float):
            # scalar path for quadrature callbacks
            try:
                return (c_pos if r > 0 else c_neg) * abs(r) ** (-1.0 - alpha)
            except (OverflowError, ZeroDivisionError):
                return math.inf
        r = np.asarray(r, float)
        c = np.where(r > 0, c_pos, c_neg)
        with np.errstate(divide="ignore", over="ignore"):
            return c * np.abs(r) ** (-1.0 - alpha)

    tail = TailHint(alpha, max(r_min, 1.0)) if not math.isfinite(r_max) else None
    return DensityMeasure(density, r_min=r_min, r_max=r_max, sides=sides, tail=tail,
                          name=f"power_law(alpha={alpha:g})", origin=alpha if r_min == 0 else None)


def uniform_density(c: float = 1.0, r_max: float = 1.0, r_min: float = 0.0) -> DensityMeasure:
    return DensityMeasure(lambda r: np.full(np.shape(r), float(c)), r_min=r_min, r_max=r_max,
                          name=f"uniform(c={c:g})")


# --- operations -----------------------------------------------------------------------

def eval_psi(z: float, t: LevyTriplet) -> complex:
    """Lévy exponent ``psi(z) = i gamma z - a z^2/2 + int (e^{irz} - 1 - irz 1_{|r|<=1}) nu(dr)``."""
    z = float(z)
    val = complex(-0.5 * t.a * z * z, t.gamma * z)
    if not t.nu.is_zero:
        val += t.nu.psi_integral(z)
    return val


def psi_values(zs, t: LevyTriplet) -> np.ndarray:
    return np.array([eval_psi(z, t) for z in np.ravel(zs)]).reshape(np.shape(zs))


def moment_integral(beta: float, nu: LevyMeasure) -> Integral:
    """``int_{|r|>1} |r|^beta nu(dr)``, or a divergence flag from the tail hint."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    return nu.integrate(
        lambda r: np.abs(r) ** beta, 1.0, math.inf, growth=beta,
        tail_integral=lambda T, a, s: T ** (beta - a) / (a - beta),
    )


def small_moment_integral(beta: float, nu: LevyMeasure) -> Integral:
    """``int_{0<|r|<=1} |r|^beta nu(dr)``; diverges when ``beta <= nu.origin_index``."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    idx = nu.origin_index
    if not math.isnan(idx) and beta <= idx:
        return Integral.diverges(f"density ~ |r|^(-1-{idx:g}) at 0 against |r|^{beta:g}")
    try:
        res = nu.integrate(lambda r: np.abs(r) ** beta, 0.0, 1.0)
    except QuadratureError as exc:
        return Integral.unknown(f"small-jump quadrature failed: {exc}")
    if math.isnan(idx) and res.bound > 1e-6 * max(abs(res.value), 1.0):
        return Integral.unknown("no origin index and quadrature error too large", res.value)
    return res


def log_moment_integral(power: int, nu: LevyMeasure) -> Integral:
    """``int_{|r|>1} log(|r|)^power nu(dr)``."""
    if int(power) != power or power < 1:
        raise ValueError("power must be an integer >= 1")
    k = int(power)

    def tail(T, a, s):
        # int_T^inf log(x)^k x^{-1-a} dx = Gamma(k+1, a log T) / a^{k+1}
        return special.gammaincc(k + 1, a * math.log(T)) * special.gamma(k + 1) / a ** (k + 1)

    return nu.integrate(lambda r: np.log(np.abs(r)) ** k, 1.0, math.inf, growth=0.0, tail_integral=tail)


def small_jump_variance(eps: float, nu: LevyMeasure) -> float:
    """``sigma^2(eps) = int_{0<|r|<=eps} r^2 nu(dr)``."""
    if not (0 < eps <= 1):
        raise ValueError("eps must lie in (0, 1]")
    res = nu.integrate(lambda r: np.asarray(r) ** 2, 0.0, eps)
    return max(res.value, 0.0)


def compensator(eps: float, nu: LevyMeasure) -> float:
    """``int_{eps<|r|<=1} r nu(dr)``."""
    return nu.integrate(lambda r: np.asarray(r, float), eps, 1.0).value
