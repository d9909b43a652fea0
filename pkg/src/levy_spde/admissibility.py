"""Three-valued checks of the integrability conditions that make ``<L, G(phi)>`` well defined.

Every condition is an integral; its status is *holds* when the value is certified
finite, *fails* when divergence is certified by a sharp tail model, and *inconclusive*
otherwise.  A report's verdict is the conjunction of its entries.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate, special

from ._numerics import Finiteness, Integral, QuadratureError, unit_sphere_area
from .kernel_analysis import GridFunction, Kernel, KernelProfile, RadialFunction, TailModel, build_profile
from .levy_core import (
    AtomicMeasure,
    LevyMeasure,
    LevyTriplet,
    moment_integral,
    small_moment_integral,
)
from .white_noise import GridSpec, mean_formula

DEFAULT_R_LIST = (1.0, 2.0, 4.0)
MEAN_TOL = 1e-10


class Status(str, Enum):
    HOLDS = "holds"
    FAILS = "fails"
    INCONCLUSIVE = "inconclusive"
    NOT_APPLICABLE = "not-applicable"


@dataclass(frozen=True)
class ConditionEntry:
    condition: str
    status: Status
    value: float = math.nan
    bound: float = math.nan
    witness: str = ""

    @classmethod
    def from_integral(cls, condition: str, res: Integral, sharp: bool = True) -> "ConditionEntry":
        if res.status is Finiteness.FINITE:
            return cls(condition, Status.HOLDS, float(res.value), float(res.bound))
        if res.status is Finiteness.DIVERGENT and sharp:
            return cls(condition, Status.FAILS, math.inf, math.inf, res.witness)
        wit = res.witness if res.status is Finiteness.INCONCLUSIVE else f"envelope not sharp: {res.witness}"
        return cls(condition, Status.INCONCLUSIVE, float(res.value), math.inf, wit)


@dataclass(frozen=True)
class AdmissibilityReport:
    name: str
    entries: tuple[ConditionEntry, ...]
    diagnostics: dict = field(default_factory=dict)

    @property
    def verdict(self) -> Status:
        statuses = {e.status for e in self.entries}
        for st in (Status.NOT_APPLICABLE, Status.FAILS, Status.INCONCLUSIVE):
            if st in statuses:
                return st
        return Status.HOLDS

    def __getitem__(self, condition: str) -> ConditionEntry:
        for e in self.entries:
            if e.condition == condition:
                return e
        raise KeyError(condition)

    def render(self) -> str:
        lines = [f"{self.name}: {self.verdict.value}"]
        for e in self.entries:
            line = f"  {e.condition:<40} {e.status.value:<15} value={e.value:.6g} bound={e.bound:.3g}"
            if e.witness:
                line += f"  [{e.witness}]"
            lines.append(line)
        for k, v in self.diagnostics.items():
            lines.append(f"  # {k}: {v}")
        return "\n".join(lines)

    def csv_rows(self) -> list[list[str]]:
        return [[self.name, e.condition, e.status.value, repr(e.value), repr(e.bound), e.witness]
                for e in self.entries]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "condition", "status", "value", "bound", "witness"])
        w.writerows(self.csv_rows())
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _not_applicable(name: str, condition: str, witness: str, value: float = math.nan) -> AdmissibilityReport:
    return AdmissibilityReport(name, (ConditionEntry(condition, Status.NOT_APPLICABLE, value, math.nan, witness),))


# --- growth of the nested integrands -------------------------------------------------------------

def _tail_of(profile: KernelProfile) -> TailModel | None:
    f = profile.G_R
    tm = f.tail if isinstance(f, RadialFunction) else f.outside
    if tm is None or tm.amplitude == 0:
        return None
    return tm


def _growth(profile: KernelProfile, which: str) -> tuple[float, bool]:
    """Power growth in ``|r|`` of the inner functional of condition ``which`` and its sharpness."""
    tm = _tail_of(profile)
    d = profile.d
    if tm is None:
        # compactly supported G_R: h and the second moment saturate at |supp|, the excess grows like |r| ||G_R||_1
        return (1.0 if which == "excess" else 0.0), True
    if tm.rate > 0:
        return (1.0 if which == "excess" else 0.0), tm.sharp
    p = tm.power
    if which == "excess":
        return max(1.0, d / p), tm.sharp
    return d / p, tm.sharp


def _nested(profile: KernelProfile, t: LevyTriplet, inner: Callable[[float], Integral], which: str,
            name: str) -> ConditionEntry:
    """``int_{|r|>1} inner(|r|) nu(dr)``."""
    nu = t.nu
    far_mass = nu.mass(1.0) if not nu.is_zero else 0.0
    if far_mass == 0:
        return ConditionEntry(name, Status.HOLDS, 0.0, 0.0)
    probe = inner(2.0)
    if not probe.finite:
        return ConditionEntry.from_integral(name, probe)
    g_exp, sharp = _growth(profile, which)

    def g(r):
        r = np.atleast_1d(np.abs(np.asarray(r, float)))
        return np.array([inner(x).value for x in r])

    try:
        res = nu.integrate(g, 1.0, math.inf, growth=g_exp)
    except QuadratureError as exc:
        return ConditionEntry(name, Status.INCONCLUSIVE, math.nan, math.inf, str(exc))
    return ConditionEntry.from_integral(name, res, sharp=sharp)


def _profiles(source, R_list: Sequence[float] | None, grid: GridSpec | None) -> list[KernelProfile]:
    if isinstance(source, Kernel):
        return [build_profile(source, R, grid) for R in (R_list or DEFAULT_R_LIST)]
    if isinstance(source, KernelProfile):
        return [source]
    return list(source)


def _membership(profile: KernelProfile, p: float) -> ConditionEntry:
    tm = _tail_of(profile)
    res = profile.lp_norm(p)
    return ConditionEntry.from_integral(f"G_R in L^{p:g} (R={profile.R:g})", res,
                                        sharp=tm is None or tm.sharp)


def _R_growth(entries: Iterable[ConditionEntry], profiles: Sequence[KernelProfile], prefix: str) -> dict:
    """Log-log slope of a condition's value against R over the sampled radii."""
    out = {}
    Rs = [p.R for p in profiles]
    if len(Rs) < 2:
        return out
    vals = []
    for R in Rs:
        e = next((e for e in entries if e.condition == f"{prefix} (R={R:g})"), None)
        vals.append(e.value if e is not None else math.nan)
    v = np.asarray(vals)
    if np.all(np.isfinite(v)) and np.all(v > 0):
        out[f"{prefix} growth exponent in R"] = float(np.polyfit(np.log(Rs), np.log(v), 1)[0])
    return out


# --- condition sets ----------------------------------------------------------------------------------------

def check_integrable_kernel(profiles, t: LevyTriplet, R_list: Sequence[float] | None = None,
                   grid: GridSpec | None = None) -> AdmissibilityReport:
    """``G_R in L^1 cap L^2`` and ``int_{|r|>1} h_R(|r|) nu(dr) < inf`` for each sampled R."""
    profs = _profiles(profiles, R_list, grid)
    entries = []
    for prof in profs:
        entries.append(_membership(prof, 1))
        entries.append(_membership(prof, 2))
        entries.append(_nested(prof, t, prof.h, "h", f"h_R tail integral (R={prof.R:g})"))
    return AdmissibilityReport("integrable-kernel", tuple(entries), _R_growth(entries, profs, "h_R tail integral"))


def check_mild(column: KernelProfile, t: LevyTriplet, singularity_order: float = 0.0) -> AdmissibilityReport:
    """Conditions for ``u(x) = <L, E(x, .)>``: the column in ``L^1 cap L^2`` and
    ``int_{|r|>1} h_x(|r|) nu(dr) < inf``, where ``h_x`` is built from the column itself.

    ``column`` profiles ``E(x, .)`` (not a ball average).  Sampled columns are capped near
    their singularity, so local square integrability is decided by ``singularity_order``.
    """
    entries = [_membership(column, 1)]
    if 2 * singularity_order >= column.d:
        entries.append(ConditionEntry("G_R in L^2 (R=0)", Status.FAILS, math.inf, math.inf,
                                      f"|x|^-{singularity_order:g} is not square integrable near 0 in d={column.d}"))
    else:
        entries.append(_membership(column, 2))
    entries.append(_nested(column, t, column.h, "h", "h_x tail integral"))
    # the column is profiled as is, so relabel the R-specific names
    entries = [ConditionEntry(e.condition.replace("G_R", "E(x,.)").replace(f" (R={column.R:g})", "").replace(" (R=0)", ""),
                              e.status, e.value, e.bound, e.witness) for e in entries]
    return AdmissibilityReport("mild", tuple(entries))


def check_beta_moment(profiles, t: LevyTriplet, beta: float, R_list: Sequence[float] | None = None,
                           grid: GridSpec | None = None) -> AdmissibilityReport:
    if not 1 < beta < 2:
        raise ValueError("beta must lie in (1, 2)")
    if t.a != 0:
        return _not_applicable("beta-moment", "Gaussian part vanishes", f"a = {t.a:g} != 0", t.a)
    profs = _profiles(profiles, R_list, grid)
    entries = [ConditionEntry.from_integral(f"small-jump |r|^{beta:g} integral", small_moment_integral(beta, t.nu))]
    for prof in profs:
        entries.append(_membership(prof, 1))
        entries.append(_membership(prof, beta))
        entries.append(_nested(prof, t, prof.h, "h", f"h_R tail integral (R={prof.R:g})"))
    return AdmissibilityReport("beta-moment", tuple(entries))


def _mean_entry(t: LevyTriplet) -> ConditionEntry | None:
    """``None`` when the first moment exists and vanishes, else a not-applicable entry."""
    m = mean_formula(t)
    if not m.finite:
        return ConditionEntry("vanishing first moment", Status.NOT_APPLICABLE, math.nan, math.nan, m.witness)
    if abs(m.value) > MEAN_TOL:
        return ConditionEntry("vanishing first moment", Status.NOT_APPLICABLE, m.value, m.bound,
                              f"mean density {m.value:.6g} != 0")
    return None


def check_centered_square(profiles, t: LevyTriplet, R_list: Sequence[float] | None = None,
                   grid: GridSpec | None = None) -> AdmissibilityReport:
    """``G_R in L^2`` with the excess and truncated second moment conditions, for centred noise."""
    bad = _mean_entry(t)
    if bad is not None:
        return AdmissibilityReport("centered-square", (bad,))
    profs = _profiles(profiles, R_list, grid)
    entries = []
    for prof in profs:
        entries.append(_membership(prof, 2))
        excess = lambda x, prof=prof: prof.excess(1.0 / x).scaled(x)
        second = lambda x, prof=prof: prof.truncated_second_moment(1.0 / x).scaled(x * x)
        entries.append(_nested(prof, t, excess, "excess", f"excess integral (R={prof.R:g})"))
        entries.append(_nested(prof, t, second, "second", f"truncated second moment integral (R={prof.R:g})"))
    diag = {**_R_growth(entries, profs, "excess integral"), **_R_growth(entries, profs, "truncated second moment integral")}
    return AdmissibilityReport("centered-square", tuple(entries), diag)


def check_variance(t: LevyTriplet, d: int, profiles=None, R_list: Sequence[float] | None = None) -> AdmissibilityReport:
    """Centred noise with ``int_{|r|>1} |r|^{d/(d-2)} nu(dr) < inf`` in ``d >= 5``.

    With ``profiles`` (e.g. of the envelope kernel ``min(1, |x|^{2-d})``) the excess and second
    moment route is evaluated as well.
    """
    if d < 5:
        return _not_applicable("variance", "dimension d >= 5", f"d = {d}", d)
    bad = _mean_entry(t)
    if bad is not None:
        return AdmissibilityReport("variance", (bad,))
    beta = d / (d - 2)
    entries = [ConditionEntry.from_integral(f"|r|^{beta:.6g} tail moment", moment_integral(beta, t.nu))]
    if profiles is not None:
        entries.extend(check_centered_square(profiles, t, R_list).entries)
    return AdmissibilityReport("variance", tuple(entries))


# --- integrability of a concrete integrand -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class _NuFunctional:
    """``u -> F(u)`` for ``u > 0`` with ``F`` an integral against nu, tabulated on a log grid
    (exact for atoms) and extended below the grid by its fitted power law."""

    fn: Callable[[float], float]
    exact: Callable[[np.ndarray], np.ndarray] | None
    u: np.ndarray
    values: np.ndarray
    low_power: float

    @classmethod
    def build(cls, fn, exact, u_lo: float, u_hi: float, n: int = 160) -> "_NuFunctional":
        u = np.geomspace(u_lo, u_hi, n)
        vals = exact(u) if exact is not None else np.array([fn(x) for x in u])
        a, b = vals[0], vals[4]
        q = math.log(b / a) / math.log(u[4] / u[0]) if a > 0 and b > 0 else (math.inf if a == 0 else 0.0)
        return cls(fn, exact, u, vals, q)

    def __call__(self, u) -> np.ndarray:
        u = np.abs(np.asarray(u, float))
        if self.exact is not None:
            return np.where(u > 0, self.exact(np.maximum(u, 1e-300)), 0.0)
        out = np.zeros(u.shape)
        pos = u > 0
        lu = np.log(np.maximum(u[pos], 1e-300))
        inside = np.interp(lu, np.log(self.u), self.values)
        below = u[pos] < self.u[0]
        if math.isfinite(self.low_power):
            inside = np.where(below, self.values[0] * (u[pos] / self.u[0]) ** self.low_power, inside)
        else:
            inside = np.where(below, 0.0, inside)
        out[pos] = inside
        return out


def _space_integral(f, F: _NuFunctional, label: str) -> Integral:
    """``int F(|f(x)|) dx`` with the tail region handled through the envelope model."""
    if isinstance(f, RadialFunction):
        fine = f._fine
        body = float(F(fine["v"]) @ fine["w"])
        tm = f.tail if f.tail.amplitude else None
    else:
        body = float(F(f.values).sum() * f.grid.cell_volume)
        tm = f.outside
        if tm is None:
            if f._boundary_max() > 0:
                return Integral.unknown(f"{label}: field does not vanish at the boundary and has no envelope", body)
            return Integral(body)
        r_in = min(min(-lo, hi) for lo, hi in f.grid.box)
        tm = TailModel(tm.amplitude, tm.power, tm.rate, r_in, tm.sharp)
    if tm is None:
        return Integral(body)
    d = f.d
    sig = unit_sphere_area(d)
    q = F.low_power
    if tm.rate == 0:
        margin = q * tm.power - d
        if math.isfinite(q) and abs(margin) < 0.05:
            return Integral.unknown(f"{label}: tail exponent {q:.3g}*{tm.power:g} too close to d={d}", body)
        if margin < 0:
            msg = f"{label}: F(u) ~ u^{q:.3g} against envelope s^-{tm.power:g} not integrable in d={d}"
            return Integral.diverges(msg) if tm.sharp else Integral.unknown(msg, body)
    elif q < 0.05:
        msg = f"{label}: F does not vanish at 0 and the region is unbounded"
        return Integral.diverges(msg) if tm.sharp else Integral.unknown(msg, body)
    val, err = integrate.quad(lambda s: float(F(tm(s))[()]) * sig * s ** (d - 1), tm.start, math.inf, limit=200)
    if not math.isfinite(val):
        return Integral.unknown(f"{label}: tail quadrature failed", body)
    if tm.sharp and isinstance(f, RadialFunction):
        return Integral(body + val, err)
    # grid envelopes overcount the corners of the box: report the tail as a bound only
    return Integral(body, val + err)


def _data_range(f) -> tuple[float, float]:
    vals = f._fine["v"] if isinstance(f, RadialFunction) else f.values
    pos = vals[vals > 0]
    if pos.size == 0:
        return 1.0, 1.0
    return float(pos.min()), float(pos.max())


def _atom_arrays(nu: LevyMeasure):
    if isinstance(nu, AtomicMeasure):
        sel = nu._mass > 0
        return nu._pos[sel], nu._mass[sel]
    return None


@dataclass(frozen=True)
class RajputRosinski:
    U: Integral
    V: Integral
    W: Integral

    @property
    def finite(self) -> bool:
        return self.U.finite and self.V.finite and self.W.finite

    def __iter__(self):
        return iter((self.U.value, self.V.value, self.W.value))


def _is_zero_function(f) -> bool:
    return _data_range_max(f) == 0


def _data_range_max(f) -> float:
    vals = f._fine["v"] if isinstance(f, RadialFunction) else f.values
    tail = f.tail if isinstance(f, RadialFunction) else f.outside
    return float(max(vals.max(), tail.amplitude if tail is not None else 0.0))


def rajput_rosinski_triple(f, t: LevyTriplet) -> RajputRosinski:
    """The integrability functionals ``(U, V, W)`` of ``f`` against the Lévy basis.

    ``U = int |f| |gamma + Psi(|f|)|`` with ``Psi(u) = int r (1_{|ru|<=1} - 1_{|r|<=1}) nu(dr)``,
    ``V = int Phi(|f|)`` with ``Phi(u) = int min(1, r^2 u^2) nu(dr)``, and ``W = a^2 int f^2``.
    """
    if _is_zero_function(f):
        z = Integral(0.0)
        return RajputRosinski(z, z, z)
    nu = t.nu
    lo, hi = _data_range(f)
    lo = min(lo, 1e-8 * hi)
    W = f.integral("pow", q=2.0).scaled(t.a**2) if t.a else Integral(0.0)
    if nu.is_zero:
        U = f.integral("pow").scaled(abs(t.gamma)) if t.gamma else Integral(0.0)
        return RajputRosinski(U, Integral(0.0), W)

    atoms = _atom_arrays(nu)
    if atoms is not None:
        pos, mass = atoms
        ar = np.abs(pos)

        def phi_exact(u):
            ru = np.abs(pos)[None, :] * np.asarray(u, float).reshape(-1, 1)
            return (np.minimum(1.0, ru * ru) @ mass).reshape(np.shape(u))

        def psi_exact(u):
            u = np.asarray(u, float).reshape(-1, 1)
            ind = (ar[None, :] * u <= 1).astype(float) - (ar[None, :] <= 1).astype(float)
            return (ind * pos[None, :]) @ mass

        def u_exact(u):
            return np.asarray(u, float) * np.abs(t.gamma + psi_exact(u).reshape(np.shape(u)))

        Phi = _NuFunctional.build(None, phi_exact, lo, hi)
        Ufun = _NuFunctional.build(None, u_exact, lo, hi)
    else:
        def phi(u):
            near = nu.integrate(lambda r: (r * u) ** 2, 0.0, 1.0 / u).value
            return near + nu.mass(1.0 / u)

        def psi(u):
            if u < 1:
                return nu.integrate(lambda r: np.asarray(r, float), 1.0, 1.0 / u).value
            return -nu.integrate(lambda r: np.asarray(r, float), 1.0 / u, 1.0).value

        Phi = _NuFunctional.build(phi, None, lo, hi)
        Ufun = _NuFunctional.build(lambda u: u * abs(t.gamma + psi(u)), None, lo, hi)
    V = _space_integral(f, Phi, "V")
    U = _space_integral(f, Ufun, "U")
    return RajputRosinski(U, V, W)


def solution_levy_tail(f, t: LevyTriplet, beta: float) -> Integral:
    """``int_{|z|>1} |z|^beta nu_s(dz)`` where ``nu_s`` is the push-forward of ``nu x dx`` under
    ``(r, x) -> r f(x)``: ``int |f(x)|^beta M(1/|f(x)|) dx`` with ``M(T) = int_{|r|>T} |r|^beta nu``."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    if _is_zero_function(f) or t.nu.is_zero:
        return Integral(0.0)
    nu = t.nu
    tail = moment_integral(beta, nu)
    if not tail.finite:
        return Integral(math.inf, math.inf, tail.status, "nu has no finite beta-tail: " + tail.witness)
    lo, hi = _data_range(f)
    lo = min(lo, 1e-8 * hi)
    atoms = _atom_arrays(nu)
    if atoms is not None:
        pos, mass = atoms
        ar = np.abs(pos)

        def exact(u):
            u = np.asarray(u, float).reshape(-1, 1)
            z = ar[None, :] * u
            return (np.where(z > 1, z**beta, 0.0) @ mass).reshape(-1)

        F = _NuFunctional.build(None, lambda u: exact(u).reshape(np.shape(u)), lo, hi)
    else:
        def fn(u):
            T = 1.0 / u
            far = moment_integral(beta, nu).value if T <= 1 else nu.integrate(
                lambda r: np.abs(r) ** beta, T, math.inf, growth=beta,
                tail_integral=lambda T0, a, s: T0 ** (beta - a) / (a - beta)).value
            near = nu.integrate(lambda r: np.abs(r) ** beta, T, 1.0).value if T < 1 else 0.0
            return u**beta * (far + near)

        F = _NuFunctional.build(fn, None, lo, hi)
    return _space_integral(f, F, "nu_s tail")


def enveloped_field(values: np.ndarray, grid: GridSpec, profile: KernelProfile, phi_sup: float) -> GridFunction:
    """``G(phi)`` sampled on ``grid`` with the bound ``|G(phi)| <= ||phi||_inf G_R`` outside the box
    (valid when the support of phi lies in ``B_R(0)``)."""
    tm = _tail_of(profile)
    outside = None if tm is None else TailModel(phi_sup * tm.amplitude, tm.power, tm.rate, tm.start, tm.sharp)
    return GridFunction(grid, np.abs(values), outside)


# --- Schrödinger condition ---------------------------------------------------------------------------

def incomplete_gamma_identity(d: int, r: float) -> dict:
    """Three evaluations of ``int_0^{1/r} log(1/alpha)^d d alpha`` for ``r > 1``:
    the finite sum, the regularized incomplete gamma function, and direct quadrature."""
    if d < 0 or int(d) != d:
        raise ValueError("d must be a non-negative integer")
    if not r > 1:
        raise ValueError("r must exceed 1")
    L = math.log(r)
    closed = math.factorial(d) / r * sum(L**j / math.factorial(j) for j in range(d + 1))
    gamma = float(special.gammaincc(d + 1, L) * math.gamma(d + 1))
    # alpha = e^{-b}: int_{log r}^inf b^d e^{-b} db
    quad, err = integrate.quad(lambda b: b**d * math.exp(-b), L, math.inf, epsabs=1e-14, epsrel=1e-13, limit=200)
    return {"d": d, "r": r, "closed_form": closed, "incomplete_gamma": gamma, "quadrature": quad,
            "quadrature_error": err}


def check_schrodinger_condition(af, t: LevyTriplet, k: float) -> AdmissibilityReport:
    """``int_{|r|>1} |r| int_0^{1/|r|} vol(B^V(0, -log(alpha)/k)) d alpha nu(dr) < inf``.

    With ``alpha = e^{-k rho}`` the inner integral is ``k int_{log|r|/k}^inf vol(rho) e^{-k rho} d rho``.
    ``af`` must provide ``ball_volume(R) -> Integral``, ``radius_max`` and
    ``volume_envelope`` (``(c, n)`` with ``vol(R) <= c R^n`` beyond the table, or None).
    """
    if not k > 0:
        raise ValueError("k must be positive")
    name = "Agmon-ball condition"
    nu = t.nu
    if nu.is_zero or nu.mass(1.0) == 0:
        return AdmissibilityReport("schrodinger", (ConditionEntry(name, Status.HOLDS, 0.0, 0.0),))
    env = af.volume_envelope
    R_max = af.radius_max

    def tail_part(start):
        if env is None:
            return None
        c, n = env
        return c * float(special.gammaincc(n + 1, k * start) * math.gamma(n + 1)) / k**n

    if env is None:
        return AdmissibilityReport("schrodinger", (ConditionEntry(
            name, Status.INCONCLUSIVE, math.nan, math.inf,
            f"ball volumes known only up to radius {R_max:g}; no envelope beyond it"),))

    def inner(x):
        start = math.log(x) / k
        body = 0.0
        if start < R_max:
            body, _ = integrate.quad(lambda rho: af.ball_volume(rho).value * k * math.exp(-k * rho),
                                     start, R_max, limit=200)
        return x * (body + tail_part(max(start, R_max)))

    g = lambda r: np.array([inner(x) for x in np.atleast_1d(np.abs(np.asarray(r, float)))])
    res = nu.integrate(g, 1.0, math.inf, growth=0.0)
    return AdmissibilityReport("schrodinger", (ConditionEntry.from_integral(name, res),),
                               {"volume envelope": f"{env[0]:.4g} R^{env[1]:g} beyond R={R_max:g}"})
