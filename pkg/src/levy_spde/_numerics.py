"""Shared numerical helpers: integral results with finiteness status, ball geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate


QUAD_ABS_TOL = 1e-10
QUAD_REL_TOL = 1e-10
QUAD_LIMIT = 400


class MissingTailHint(ValueError):
    """An integral over an unbounded support was requested without tail information."""


class QuadratureError(RuntimeError):
    def __init__(self, message: str, remainder: float):
        super().__init__(f"{message} (error estimate {remainder:.3e})")
        self.remainder = remainder


def quad_interval(fun, a: float, b: float, **kw) -> tuple[float, float]:
    """Adaptive Gauss-Kronrod on [a, b]; long positive ranges are mapped to log scale."""
    if not b > a:
        return 0.0, 0.0
    kw.setdefault("limit", QUAD_LIMIT)
    kw.setdefault("epsabs", QUAD_ABS_TOL)
    kw.setdefault("epsrel", QUAD_REL_TOL)
    if math.isfinite(b) and (a == 0 or b / a > 50) and "weight" not in kw:
        # log scale: resolves integrable singularities at 0 and long ranges alike
        def mapped(u):
            x = math.exp(u)
            if x < 1e-50:
                # below this scale an integrable singularity contributes nothing representable
                with np.errstate(all="ignore"):
                    v = fun(x) * x
                return v if math.isfinite(v) else 0.0
            return fun(x) * x

        val, err = integrate.quad(mapped, math.log(a) if a > 0 else -math.inf, math.log(b), **kw)
    else:
        val, err = integrate.quad(fun, a, b, **kw)
    if not math.isfinite(val):
        raise QuadratureError("quadrature did not converge", err)
    return val, err


class Finiteness(str, Enum):
    FINITE = "finite"
    DIVERGENT = "divergent"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Integral:
    """Value of a (possibly improper) integral together with an error/remainder bound.

    ``status`` distinguishes a certified finite value from a certified divergence and
    from the case where the available tail information cannot decide either way.
    """

    value: float
    bound: float = 0.0
    status: Finiteness = Finiteness.FINITE
    witness: str = ""

    @property
    def finite(self) -> bool:
        return self.status is Finiteness.FINITE

    @property
    def divergent(self) -> bool:
        return self.status is Finiteness.DIVERGENT

    @classmethod
    def diverges(cls, witness: str) -> "Integral":
        return cls(math.inf, math.inf, Finiteness.DIVERGENT, witness)

    @classmethod
    def unknown(cls, witness: str, value: float = math.nan) -> "Integral":
        return cls(value, math.inf, Finiteness.INCONCLUSIVE, witness)

    def __add__(self, other: "Integral") -> "Integral":
        if not isinstance(other, Integral):
            return NotImplemented
        for st in (Finiteness.DIVERGENT, Finiteness.INCONCLUSIVE):
            if self.status is st or other.status is st:
                wit = self.witness if self.status is st else other.witness
                return Integral(self.value + other.value, math.inf, st, wit)
        return Integral(self.value + other.value, self.bound + other.bound)

    def scaled(self, c: float) -> "Integral":
        c = abs(c)
        if self.status is not Finiteness.FINITE:
            if c == 0.0 and self.status is Finiteness.DIVERGENT:
                return Integral(0.0)
            return self
        return Integral(c * self.value, c * self.bound, self.status, self.witness)


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def unit_sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d (2 for d=1, 2*pi for d=2, 4*pi for d=3)."""
    return d * unit_ball_volume(d)


def sphere_quadrature(d: int, n_angular: int = 16):
    """Unit directions and weights integrating over the unit sphere in R^d (d = 1, 2, 3).

    The weights sum to the sphere area.  Gauss-Legendre in cos(theta), trapezoid in the
    azimuth.
    """
    if d == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    phi = 2 * np.pi * (np.arange(2 * n_angular) + 0.5) / (2 * n_angular)
    if d == 2:
        dirs = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        return dirs, np.full(phi.size, 2 * np.pi / phi.size)
    if d == 3:
        gc, wc = np.polynomial.legendre.leggauss(n_angular)
        st = np.sqrt(1 - gc**2)
        dirs = np.stack(
            [
                (st[:, None] * np.cos(phi)[None, :]).ravel(),
                (st[:, None] * np.sin(phi)[None, :]).ravel(),
                np.repeat(gc, phi.size),
            ],
            axis=1,
        )
        return dirs, np.repeat(wc, phi.size) * (2 * np.pi / phi.size)
    raise ValueError(f"sphere quadrature implemented for d <= 3, got d={d}")


def cap_quadrature(axis: np.ndarray, sin_max: float, n: int = 16):
    """Directions within the cap of half-angle ``asin(sin_max)`` about the unit vector ``axis``
    (d = 1, 2, 3), with weights integrating over that part of the sphere."""
    d = axis.size
    if d == 1:
        return axis.reshape(1, 1).astype(float), np.array([1.0])
    half = math.asin(min(sin_max, 1.0))
    if d == 2:
        g, w = np.polynomial.legendre.leggauss(2 * n)
        phi = math.atan2(axis[1], axis[0]) + half * g
        return np.stack([np.cos(phi), np.sin(phi)], axis=1), w * half
    cos_min = math.sqrt(max(1.0 - sin_max**2, 0.0))
    gc, wc = np.polynomial.legendre.leggauss(n)
    ct = cos_min + (1 - cos_min) * 0.5 * (gc + 1)
    wc = wc * 0.5 * (1 - cos_min)
    az = 2 * np.pi * (np.arange(2 * n) + 0.5) / (2 * n)
    st = np.sqrt(1 - ct**2)
    local = np.stack([
        (st[:, None] * np.cos(az)[None, :]).ravel(),
        (st[:, None] * np.sin(az)[None, :]).ravel(),
        np.repeat(ct, az.size),
    ], axis=1)
    # orthonormal frame with third vector = axis
    helper = np.array([1.0, 0, 0]) if abs(axis[0]) < 0.9 else np.array([0, 1.0, 0])
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    dirs = local @ np.stack([e1, e2, axis])
    return dirs, np.repeat(wc, az.size) * (2 * np.pi / az.size)


def ball_quadrature(d: int, n_radial: int = 12, n_angular: int = 16):
    """Nodes and weights integrating over the unit ball in R^d (d = 1, 2, 3).

    Gauss-Legendre in the radius with the r^{d-1} Jacobian folded into the weights.
    """
    gr, wr = np.polynomial.legendre.leggauss(n_radial)
    r = 0.5 * (gr + 1.0)
    wr = 0.5 * wr * r ** (d - 1)
    dirs, wd = sphere_quadrature(d, n_angular)
    nodes = (r[:, None, None] * dirs[None, :, :]).reshape(-1, d)
    weights = (wr[:, None] * wd[None, :]).ravel()
    return nodes, weights
