"""Length scale ``1/m(x, V)`` of a potential, the Agmon distance on a lattice and its balls."""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass
from functools import cached_property, reduce
from itertools import product
from pathlib import Path
from typing import Callable

import numba
import numpy as np
from scipy import optimize

from ._numerics import Integral, ball_quadrature, sphere_quadrature, unit_ball_volume
from .white_noise import GridSpec

_KINDS = ("constant", "radial-polynomial", "periodic", "tabulated", "general")


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """Nonnegative potential ``V(x)`` (vectorised over ``x[..., d]``)."""

    d: int
    V: Callable[[np.ndarray], np.ndarray]
    kind: str = "general"
    lower_bound: float | None = None
    name: str = "V"

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}")
        if self.lower_bound is not None and self.lower_bound < 0:
            raise ValueError("lower bound must be >= 0")

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        return np.broadcast_to(np.asarray(self.V(x), float), x.shape[:-1])


def constant_potential(eps: float, d: int = 3) -> PotentialSpec:
    if not eps > 0:
        raise ValueError("eps must be positive")
    return PotentialSpec(d, lambda x: np.full(np.shape(x)[:-1], float(eps)), "constant", eps, f"const({eps:g})")


def radial_power_potential(c: float = 1.0, power: float = 2.0, d: int = 3) -> PotentialSpec:
    return PotentialSpec(d, lambda x: c * np.linalg.norm(x, axis=-1) ** power, "radial-polynomial", None,
                         f"{c:g}|x|^{power:g}")


# --- reverse Hölder ----------------------------------------------------------------------------

def rh_ratio(V: PotentialSpec, center, radius: float, p: float, n_radial: int = 24, n_angular: int = 16) -> float:
    """``(avg_B V^p)^{1/p} / avg_B V`` over the ball ``B(center, radius)``."""
    nodes, w = ball_quadrature(V.d, n_radial, n_angular)
    vals = V(np.asarray(center, float) + radius * nodes)
    if np.any(vals < 0) or (np.sum(w * (vals <= 0)) > 0.01 * w.sum()):
        raise ValueError("potential is not positive on the sampled ball")
    mean = np.sum(w * vals) / w.sum()
    mean_p = np.sum(w * vals**p) / w.sum()
    return float(mean_p ** (1.0 / p) / mean)


def reverse_holder_estimate(V: PotentialSpec, p: float, ball_samples: int = 200, box: float = 10.0,
                            seed: int = 0) -> float:
    """Largest sampled reverse-Hölder ratio over random balls in ``[-box/2, box/2]^d``; a lower
    bound for the RH_p constant."""
    if p < 1:
        raise ValueError("p must be >= 1")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-box / 2, box / 2, (ball_samples, V.d))
    radii = np.exp(rng.uniform(math.log(box * 1e-3), math.log(box / 2), ball_samples))
    return max(rh_ratio(V, c, r, p) for c, r in zip(centers, radii))


# --- maximum function -------------------------------------------------------------------------------

_GAUSS = np.polynomial.legendre.leggauss(8)


def _shell_integrals(V: PotentialSpec, xs: np.ndarray, lo: np.ndarray, hi: np.ndarray, dirs, wd) -> np.ndarray:
    """``int_{lo <= |y - x| <= hi} V(y) dy`` for each point ``x`` (rows of ``xs``) and each radial
    panel, with Gauss-Legendre in ``log |y - x|``."""
    g, wg = _GAUSS
    ulo, uhi = np.log(lo), np.log(hi)
    u = 0.5 * (ulo + uhi)[:, None] + 0.5 * (uhi - ulo)[:, None] * g[None, :]
    rho = np.exp(u)
    wr = 0.5 * (uhi - ulo)[:, None] * wg[None, :] * rho**V.d
    y = xs[:, None, None, None, :] + rho[None, :, :, None, None] * dirs[None, None, None, :, :]
    vals = V(y) @ wd
    return np.einsum("npk,pk->np", vals, wr)


def _cumulative_ball_integrals(V, xs, rs, dirs, wd):
    """``int_{B(x, r_i)} V`` for all points and radii, via the cumulative sum of panels."""
    d = V.d
    inner = V(xs) * unit_ball_volume(d) * rs[0] ** d
    panels = _shell_integrals(V, xs, rs[:-1], rs[1:], dirs, wd)
    return np.concatenate([inner[:, None], inner[:, None] + np.cumsum(panels, axis=1)], axis=1)


def _max_functions(V: PotentialSpec, xs: np.ndarray, r_lo: float, r_hi: float, n_scan: int, n_angular: int,
                   rtol: float) -> np.ndarray:
    d = V.d
    if d < 3:
        raise ValueError("the maximum function is defined here for d >= 3")
    dirs, wd = sphere_quadrature(d, n_angular)
    rs = np.geomspace(r_lo, r_hi, n_scan)
    cum = _cumulative_ball_integrals(V, xs, rs, dirs, wd)
    F = rs[None, :] ** (2 - d) * cum - 1.0
    out = np.empty(len(xs))
    for n, x in enumerate(xs):
        f = F[n]
        if f[0] > 0:
            # refine towards 0 for potentials that are large near x
            if r_lo < 1e-150:
                raise ValueError("r^{2-d} int_B V exceeds 1 at every radius probed; V is not locally integrable")
            out[n] = _max_functions(V, x[None, :], r_lo * 1e-6, r_hi, n_scan + 30, n_angular, rtol)[0]
            continue
        if f[-1] <= 0:
            out[n] = 0.0
            continue
        # the sup of {F <= 1} lies in the last panel where F crosses from <= 0 to > 0
        i = int(np.nonzero(f <= 0)[0][-1])
        base = cum[n, i]

        def G(u):
            r = math.exp(u)
            extra = _shell_integrals(V, x[None, :], rs[i:i + 1], np.array([r]), dirs, wd)[0, 0] if r > rs[i] else 0.0
            return r ** (2 - d) * (base + extra) - 1.0

        u = optimize.brentq(G, math.log(rs[i]), math.log(rs[i + 1]), xtol=rtol, rtol=rtol)
        out[n] = math.exp(-u)
    return out


def max_function(x, V: PotentialSpec, r_lo: float = 1e-6, r_hi: float = 1e6, n_scan: int = 121,
                 n_angular: int = 16, rtol: float = 1e-10) -> float:
    """``m(x, V) = 1 / sup{r > 0 : r^{2-d} int_{B(x, r)} V <= 1}``; ``0.0`` when the set is unbounded."""
    return float(_max_functions(V, np.asarray(x, float).reshape(1, -1), r_lo, r_hi, n_scan, n_angular, rtol)[0])


def max_function_field(V: PotentialSpec, grid: GridSpec, chunk: int = 64, **kw) -> np.ndarray:
    if V.kind == "constant":
        return np.full(grid.shape, max_function(np.zeros(V.d), V, **kw))
    kw.setdefault("n_angular", 8)
    kw.setdefault("n_scan", 91)
    args = (kw.get("r_lo", 1e-6), kw.get("r_hi", 1e6), kw["n_scan"], kw["n_angular"], kw.get("rtol", 1e-10))
    pts = grid.centers().reshape(-1, V.d)
    out = np.concatenate([_max_functions(V, pts[i:i + chunk], *args) for i in range(0, len(pts), chunk)])
    return out.reshape(grid.shape)


# --- Agmon distance ---------------------------------------------------------------------------------

def stencil(d: int, radius: int = 3) -> np.ndarray:
    """Primitive lattice moves ``k`` with ``max |k_i| <= radius`` (gcd of entries 1)."""
    moves = [k for k in product(range(-radius, radius + 1), repeat=d)
             if any(k) and reduce(math.gcd, (abs(c) for c in k)) == 1]
    return np.array(moves, dtype=np.int64)


@numba.njit(cache=True)
def _dijkstra(m, shape, moves, lengths, source):  # pragma: no cover - compiled
    n = m.size
    d = len(shape)
    dist = np.full(n, np.inf)
    done = np.zeros(n, np.bool_)
    strides = np.ones(d, np.int64)
    for a in range(d - 2, -1, -1):
        strides[a] = strides[a + 1] * shape[a + 1]
    dist[source] = 0.0
    heap = [(0.0, source)]
    idx = np.empty(d, np.int64)
    while len(heap) > 0:
        du, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        rem = u
        for a in range(d):
            idx[a] = rem // strides[a]
            rem -= idx[a] * strides[a]
        for k in range(moves.shape[0]):
            v = 0
            ok = True
            for a in range(d):
                c = idx[a] + moves[k, a]
                if c < 0 or c >= shape[a]:
                    ok = False
                    break
                v += c * strides[a]
            if not ok or done[v]:
                continue
            nd = du + 0.5 * (m[u] + m[v]) * lengths[k]
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def agmon_distance_map(origin, m_values: np.ndarray, grid: GridSpec, radius: int = 3) -> tuple[np.ndarray, tuple]:
    """``gamma(origin, x)`` at every grid node by Dijkstra with edge weights
    ``(m(a) + m(b))/2 * |a - b|``; returns the map and the node used as origin."""
    m = np.ascontiguousarray(m_values, float)
    if m.shape != grid.shape or np.any(~np.isfinite(m)) or np.any(m <= 0):
        raise ValueError("m must be positive and finite on every node")
    centers = [grid.axis_centers(i) for i in range(grid.d)]
    src = tuple(int(np.argmin(np.abs(c - o))) for c, o in zip(centers, np.asarray(origin, float)))
    moves = stencil(grid.d, radius)
    lengths = np.linalg.norm(moves * grid.spacing[None, :], axis=1)
    flat_src = int(np.ravel_multi_index(src, grid.shape))
    dist = _dijkstra(m.ravel(), np.array(grid.shape, np.int64), moves, lengths, flat_src)
    return dist.reshape(grid.shape), src


@dataclass(frozen=True, eq=False)
class AgmonField:
    grid: GridSpec
    m_values: np.ndarray
    dist_map: np.ndarray
    origin: tuple
    lower_bound: float | None = None

    @property
    def d(self) -> int:
        return self.grid.d

    @cached_property
    def _sorted(self) -> np.ndarray:
        return np.sort(self.dist_map, axis=None)

    @cached_property
    def radius_max(self) -> float:
        """Largest R for which ``{dist < R}`` stays away from the box boundary."""
        dm = self.dist_map
        edge = min(min(np.take(dm, 0, axis=a).min(), np.take(dm, -1, axis=a).min()) for a in range(dm.ndim))
        return float(edge)

    @property
    def m_floor(self) -> float | None:
        """``m(x, V) >= sqrt(eps |B_1|)`` whenever ``V >= eps``."""
        if not self.lower_bound:
            return None
        return math.sqrt(self.lower_bound * unit_ball_volume(self.d))

    @property
    def volume_envelope(self) -> tuple[float, int] | None:
        """``(c, d)`` with ``vol(B^V(0, R)) <= c R^d``, from the Euclidean ball of radius R / m_floor."""
        mf = self.m_floor
        return None if mf is None else (unit_ball_volume(self.d) * mf ** -self.d, self.d)

    def ball_volume(self, R: float) -> Integral:
        if R <= 0:
            return Integral(0.0)
        if R <= self.radius_max:
            count = int(np.searchsorted(self._sorted, R, side="left"))
            return Integral(count * self.grid.cell_volume)
        env = self.volume_envelope
        if env is None:
            return Integral.unknown(f"radius {R:g} exceeds the resolved radius {self.radius_max:g} "
                                    f"by {R - self.radius_max:g} and no lower bound on V is known")
        upper = env[0] * R ** env[1]
        return Integral(upper, upper, witness="envelope upper bound")

    def volumes(self, radii) -> np.ndarray:
        return np.array([self.ball_volume(R).value for R in np.atleast_1d(radii)])

    def to_csv(self, path) -> tuple[Path, Path]:
        path = Path(path)
        fpath = path.with_name(path.stem + "_field.csv")
        with fpath.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(self.d)] + ["m", "gamma"])
            for x, mv, g in zip(self.grid.centers().reshape(-1, self.d), self.m_values.ravel(), self.dist_map.ravel()):
                w.writerow([repr(float(c)) for c in x] + [repr(float(mv)), repr(float(g))])
        vpath = path.with_name(path.stem + "_volumes.csv")
        radii = np.linspace(0, self.radius_max, 65)[1:]
        with vpath.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["R", "volume"])
            for R, v in zip(radii, self.volumes(radii)):
                w.writerow([repr(float(R)), repr(float(v))])
        return fpath, vpath


def agmon_field(V: PotentialSpec, grid: GridSpec, origin=None, radius: int = 3) -> AgmonField:
    origin = np.zeros(V.d) if origin is None else np.asarray(origin, float)
    m = max_function_field(V, grid)
    dist, src = agmon_distance_map(origin, m, grid, radius)
    return AgmonField(grid, m, dist, src, V.lower_bound)


def ball_volume(af: AgmonField, R: float) -> Integral:
    return af.ball_volume(R)


def fit_max_function_bound(af: AgmonField, kappas=np.linspace(0.05, 0.95, 19)) -> tuple[float, float]:
    """Constants ``(C, kappa)`` with ``m(x) >= C m0 / (1 + |x| m0)^kappa`` on the grid, choosing the
    kappa that maximises C."""
    m = af.m_values
    m0 = float(m[af.origin])
    r = np.linalg.norm(af.grid.centers() - af.grid.centers()[af.origin], axis=-1)
    best = (0.0, float(kappas[0]))
    for k in kappas:
        C = float(np.min(m * (1 + r * m0) ** k / m0))
        if C > best[0]:
            best = (C, float(k))
    return best
