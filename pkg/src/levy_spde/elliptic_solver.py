"""Finite-volume discretisation of ``-div(A grad u) + b.grad u + V u`` and its Green operators.

Unknowns live at cell centres of a tensor grid.  The grid is the noise grid optionally
surrounded by ``pad`` layers of geometrically growing cells, which pushes the
homogeneous Dirichlet condition far away and lets the discrete Green function
approximate the whole-space one.  The Dirichlet value is imposed at a ghost centre one
cell width outside the outermost cell.

Conventions (``K`` flux matrix, ``M`` diagonal of cell volumes):

* discrete operator ``P = M^{-1} K``; its adjoint for ``<u, w> = sum u w vol`` is
  ``P* = M^{-1} K^T``;
* ``E(phi)``, the kernel applied to ``phi`` in the sense ``P* E(phi) = phi``, is one
  adjoint solve;
* the mild field driven by cell increments ``L`` solves ``K u = L``.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import pyamg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._numerics import cap_quadrature, sphere_quadrature, unit_sphere_area
from .white_noise import GridSpec, TestFunction, sample_on_grid

DEFAULT_TOL = 1e-10
PECLET_UPWIND = 2.0
DIRECT_MAX_UNKNOWNS = 100_000  # sparse LU fallback when the Krylov iteration stalls


class SolverError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message}; relative residual achieved {residual:.3e}")
        self.residual = residual


# --- coefficient specifications ------------------------------------------------------------

def _const_field(value):
    return lambda x: np.broadcast_to(np.asarray(value, float), np.shape(x)[:-1]).copy()


@dataclass(frozen=True)
class EllipticOperatorSpec:
    """Coefficients of ``p(x, D) u = -div(A grad u) + b.grad u + V u``.

    ``diffusion`` maps points ``(..., d)`` to either scalars ``(...)`` (meaning ``a(x) I``)
    or diagonal entries ``(..., d)``.  Off-diagonal diffusion is not supported by the
    two-point flux.  ``drift`` returns vectors ``(..., d)``, ``potential`` scalars.
    """

    d: int
    diffusion: Callable | float = 1.0
    drift: Callable | None = None
    potential: Callable | float | None = None
    periodicity: tuple[float, ...] | None = None
    name: str = "operator"

    def diffusion_diagonal(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        f = self.diffusion if callable(self.diffusion) else _const_field(self.diffusion)
        a = np.asarray(f(x), float)
        if a.shape == x.shape[:-1]:
            a = np.repeat(a[..., None], self.d, axis=-1)
        if a.shape != x.shape:
            raise ValueError("diffusion must return scalars or the d diagonal entries per point")
        return a

    def potential_values(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        if self.potential is None:
            return np.zeros(x.shape[:-1])
        f = self.potential if callable(self.potential) else _const_field(self.potential)
        return np.asarray(f(x), float).reshape(x.shape[:-1])

    def drift_values(self, x):
        if self.drift is None:
            return None
        b = np.asarray(self.drift(np.asarray(x, float)), float)
        if b.shape != np.shape(x):
            raise ValueError("drift must return a vector per point")
        return b

    @property
    def symmetric(self) -> bool:
        return self.drift is None

    def ellipticity_constant(self, box, n_samples: int = 1000, seed: int = 0) -> float:
        """``C`` with ``C^-1 |xi|^2 <= xi.A xi <= C |xi|^2`` over random points of ``box``."""
        rng = np.random.default_rng(seed)
        lo = np.array([b[0] for b in box])
        hi = np.array([b[1] for b in box])
        pts = lo + (hi - lo) * rng.random((n_samples, self.d))
        a = self.diffusion_diagonal(pts)
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise ValueError("diffusion matrix is not positive definite at a sampled point")
        return float(max(a.max(), 1.0 / a.min()))


def laplacian(d: int, eps: float = 0.0) -> EllipticOperatorSpec:
    return EllipticOperatorSpec(d, 1.0, None, eps if eps else None, name="laplacian" if not eps else "yukawa")


# --- assembly ------------------------------------------------------------------------------

def padded_widths(n: int, h: float, pad: int, growth: float) -> np.ndarray:
    core = np.full(n, h)
    if pad == 0:
        return core
    p = h * growth ** np.arange(1, pad + 1)
    return np.concatenate([p[::-1], core, p])


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    spec: EllipticOperatorSpec
    grid: GridSpec
    pad: int
    growth: float
    widths: tuple[np.ndarray, ...]
    centers: tuple[np.ndarray, ...]
    volumes: np.ndarray  # extended shape
    K: sp.csr_matrix
    ellipticity: float
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(w) for w in self.widths)

    @property
    def core(self) -> tuple[slice, ...]:
        return tuple(slice(self.pad, self.pad + n) for n in self.grid.resolution)

    @property
    def symmetric(self) -> bool:
        return self.spec.symmetric

    @property
    def matrix(self) -> sp.csr_matrix:
        """``P = M^{-1} K``."""
        if "P" not in self._cache:
            self._cache["P"] = sp.diags(1.0 / self.volumes.ravel()) @ self.K
        return self._cache["P"]

    @property
    def adjoint_matrix(self) -> sp.csr_matrix:
        if "Pt" not in self._cache:
            self._cache["Pt"] = (sp.diags(1.0 / self.volumes.ravel()) @ self.K.T).tocsr()
        return self._cache["Pt"]

    def extend(self, f) -> np.ndarray:
        """Zero-extend a core grid function to the padded grid."""
        f = np.asarray(f, float)
        if f.shape == self.shape:
            return f
        if f.shape != self.grid.shape:
            raise ValueError(f"grid function of shape {f.shape} fits neither {self.grid.shape} nor {self.shape}")
        out = np.zeros(self.shape)
        out[self.core] = f
        return out

    def restrict(self, u) -> np.ndarray:
        return np.asarray(u)[self.core]

    def apply(self, u) -> np.ndarray:
        u = np.asarray(u, float)
        out = (self.matrix @ self.extend(u).ravel()).reshape(self.shape)
        return out if u.shape == self.shape else self.restrict(out)

    def apply_adjoint(self, w) -> np.ndarray:
        w = np.asarray(w, float)
        out = (self.adjoint_matrix @ self.extend(w).ravel()).reshape(self.shape)
        return out if w.shape == self.shape else self.restrict(out)

    @staticmethod
    @contextlib.contextmanager
    def _pinned_global_rng():
        # pyamg draws spectral-radius start vectors from the global numpy state
        state = np.random.get_state()
        np.random.seed(0x5EED)
        try:
            yield
        finally:
            np.random.set_state(state)

    def _amg(self, transpose: bool):
        key = ("amg", transpose and not self.symmetric)
        if key not in self._cache:
            A = self.K.T.tocsr() if key[1] else self.K
            sym = "hermitian" if self.symmetric else "nonsymmetric"
            with self._pinned_global_rng():
                self._cache[key] = pyamg.smoothed_aggregation_solver(A, symmetry=sym, max_coarse=500)
        return self._cache[key]

    def _solve_flux(self, rhs_flat: np.ndarray, transpose: bool, tol: float, maxiter: int) -> np.ndarray:
        nrm = np.linalg.norm(rhs_flat)
        if nrm == 0:
            return np.zeros_like(rhs_flat)
        A = self.K.T.tocsr() if transpose and not self.symmetric else self.K
        ml = self._amg(transpose)
        accel = "cg" if self.symmetric else "gmres"
        with self._pinned_global_rng():
            x = ml.solve(rhs_flat, tol=tol, accel=accel, maxiter=maxiter)
        res = np.linalg.norm(rhs_flat - A @ x) / nrm
        if res > tol:
            # Krylov residuals drift from true residuals near machine precision; restart once
            with self._pinned_global_rng():
                x = ml.solve(rhs_flat, x0=x, tol=tol, accel=accel, maxiter=maxiter)
            res = np.linalg.norm(rhs_flat - A @ x) / nrm
        if res > tol and A.shape[0] <= DIRECT_MAX_UNKNOWNS:
            x = spla.spsolve(A.tocsc(), rhs_flat)
            res = np.linalg.norm(rhs_flat - A @ x) / nrm
        if res > tol:
            raise SolverError("iteration cap exceeded", res)
        return x

    def solve(self, rhs, tol: float = DEFAULT_TOL, maxiter: int = 500) -> np.ndarray:
        """Solve ``P u = rhs``; the result has the shape of ``rhs`` (core or padded)."""
        rhs = np.asarray(rhs, float)
        if not np.all(np.isfinite(rhs)):
            raise ValueError("right-hand side must be finite")
        full = self.extend(rhs)
        u = self._solve_flux((self.volumes * full).ravel(), False, tol, maxiter).reshape(self.shape)
        return u if rhs.shape == self.shape else self.restrict(u)

    def solve_adjoint(self, rhs, tol: float = DEFAULT_TOL, maxiter: int = 500) -> np.ndarray:
        """Solve ``P* v = rhs``."""
        rhs = np.asarray(rhs, float)
        if not np.all(np.isfinite(rhs)):
            raise ValueError("right-hand side must be finite")
        full = self.extend(rhs)
        v = self._solve_flux((self.volumes * full).ravel(), True, tol, maxiter).reshape(self.shape)
        return v if rhs.shape == self.shape else self.restrict(v)

    def solve_flux(self, load, tol: float = DEFAULT_TOL, maxiter: int = 500) -> np.ndarray:
        """Solve ``K u = load`` (cell-integrated right-hand side, e.g. noise increments)."""
        load = np.asarray(load, float)
        u = self._solve_flux(self.extend(load).ravel(), False, tol, maxiter).reshape(self.shape)
        return u if load.shape == self.shape else self.restrict(u)

    def core_index(self, idx) -> tuple[int, ...]:
        return tuple(int(i) + self.pad for i in idx)

    def core_centers(self) -> np.ndarray:
        return self.grid.centers()

    def padded_centers(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.centers, indexing="ij"), axis=-1)


def assemble(spec: EllipticOperatorSpec, grid: GridSpec, pad: int = 0, growth: float = 1.3) -> DiscreteOperator:
    """Two-point-flux finite-volume operator on ``grid`` plus ``pad`` graded layers."""
    d = grid.d
    if spec.d != d:
        raise ValueError("operator and grid dimensions differ")
    if any(n < 4 for n in grid.resolution):
        raise ValueError("resolution must be at least 4 per axis")
    if pad < 0 or growth < 1.0:
        raise ValueError("pad must be >= 0 and growth >= 1")
    h = grid.spacing
    widths = tuple(padded_widths(n, hi, pad, growth) for n, hi in zip(grid.resolution, h))
    centers = []
    for i, w in enumerate(widths):
        lo = grid.box[i][0] - w[:pad].sum()
        centers.append(lo + np.cumsum(w) - 0.5 * w)
    centers = tuple(centers)
    ext_box = [(c[0] - 0.5 * w[0], c[-1] + 0.5 * w[-1]) for c, w in zip(centers, widths)]
    ell = spec.ellipticity_constant(ext_box)

    shape = tuple(len(w) for w in widths)
    pts = np.stack(np.meshgrid(*centers, indexing="ij"), axis=-1)
    kdiag = spec.diffusion_diagonal(pts)
    if not np.all(np.isfinite(kdiag)) or np.any(kdiag <= 0):
        raise ValueError("diffusion matrix is not positive definite at a cell centre")
    vol = np.ones(shape)
    for i, w in enumerate(widths):
        vol = vol * w.reshape([-1 if j == i else 1 for j in range(d)])
    idx = np.arange(int(np.prod(shape))).reshape(shape)
    rows, cols, vals = [], [], []
    diag = spec.potential_values(pts) * vol
    bvals = spec.drift_values(pts)

    for i in range(d):
        w = widths[i].reshape([-1 if j == i else 1 for j in range(d)])
        area = vol / w
        k = kdiag[..., i]
        lo_sl = tuple(slice(None, -1) if j == i else slice(None) for j in range(d))
        hi_sl = tuple(slice(1, None) if j == i else slice(None) for j in range(d))
        wa = np.broadcast_to(w, shape)[lo_sl]
        wb = np.broadcast_to(w, shape)[hi_sl]
        # harmonic average of the two cell conductivities over the centre-to-centre path
        trans = area[lo_sl] / (0.5 * wa / k[lo_sl] + 0.5 * wb / k[hi_sl])
        a, b = idx[lo_sl].ravel(), idx[hi_sl].ravel()
        t = trans.ravel()
        rows += [a, b]
        cols += [b, a]
        vals += [-t, -t]
        np.add.at(diag, np.unravel_index(a, shape), t)
        np.add.at(diag, np.unravel_index(b, shape), t)
        # Dirichlet ghosts one cell width beyond both ends
        first = tuple(slice(0, 1) if j == i else slice(None) for j in range(d))
        last = tuple(slice(-1, None) if j == i else slice(None) for j in range(d))
        for sl in (first, last):
            diag[sl] += area[sl] * k[sl] / np.broadcast_to(w, shape)[sl]

        if bvals is not None:
            bi = bvals[..., i] * vol
            c = centers[i]
            ext = np.concatenate([[c[0] - widths[i][0]], c, [c[-1] + widths[i][-1]]])
            span = (ext[2:] - ext[:-2]).reshape([-1 if j == i else 1 for j in range(d)])
            dminus = (ext[1:-1] - ext[:-2]).reshape([-1 if j == i else 1 for j in range(d)])
            dplus = (ext[2:] - ext[1:-1]).reshape([-1 if j == i else 1 for j in range(d)])
            peclet = np.abs(bvals[..., i]) * np.broadcast_to(w, shape) / k
            upwind = peclet > PECLET_UPWIND
            coef_plus = np.where(upwind, np.where(bi < 0, -bi / dplus, 0.0), bi / span)
            coef_minus = np.where(upwind, np.where(bi > 0, -bi / dminus, 0.0), -bi / span)
            diag -= coef_plus + coef_minus
            up = tuple(slice(None, -1) if j == i else slice(None) for j in range(d))
            dn = tuple(slice(1, None) if j == i else slice(None) for j in range(d))
            rows += [idx[up].ravel(), idx[dn].ravel()]
            cols += [idx[dn].ravel(), idx[up].ravel()]
            vals += [coef_plus[up].ravel(), coef_minus[dn].ravel()]

    n = int(np.prod(shape))
    rows.append(idx.ravel())
    cols.append(idx.ravel())
    vals.append(diag.ravel())
    K = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    K.sum_duplicates()
    K.eliminate_zeros()
    return DiscreteOperator(spec, grid, pad, growth, widths, centers, vol, K, ell)


# --- Green operators ------------------------------------------------------------------------

@dataclass(frozen=True)
class ClosedFormGreen:
    """Translation-invariant radial kernel ``E(x, y) = profile(|x - y|)``."""

    d: int
    eps: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("screening parameter must be >= 0")
        if self.eps == 0 and self.d < 3:
            raise ValueError("the Laplacian kernel decays only for d >= 3")
        if self.eps > 0 and self.d not in (1, 3):
            raise ValueError("screened kernels are implemented for d = 1 and d = 3")

    @property
    def translation_invariant(self) -> bool:
        return True

    @property
    def singularity_order(self) -> float:
        return 0.0 if self.d == 1 else float(self.d - 2)

    @property
    def decay_rate(self) -> float:
        return math.sqrt(self.eps)

    def profile(self, r) -> np.ndarray:
        r = np.asarray(r, float)
        with np.errstate(divide="ignore"):
            if self.d == 1:
                k = math.sqrt(self.eps)
                return np.exp(-k * r) / (2 * k)
            if self.eps == 0:
                return r ** (2 - self.d) / ((self.d - 2) * unit_sphere_area(self.d))
            k = math.sqrt(self.eps)
            return np.exp(-k * r) / (4 * math.pi * r)

    def __call__(self, x, y) -> np.ndarray:
        return self.profile(np.linalg.norm(np.asarray(x, float) - np.asarray(y, float), axis=-1))

    def l2_norm_sq(self) -> float:
        """``int E(z)^2 dz`` (finite for the screened kernels in d = 1, 3)."""
        if self.eps == 0:
            return math.inf
        k = math.sqrt(self.eps)
        return 1 / (4 * k**3) if self.d == 1 else 1 / (8 * math.pi * k)

    def cell_average(self, h) -> float:
        """Mean of ``E(0, y)`` over the cell ``[-h/2, h/2]^d`` centred at the singularity."""
        h = np.broadcast_to(np.asarray(h, float), (self.d,))
        if self.d == 1:
            k = math.sqrt(self.eps)
            a = h[0] / 2
            return (1 - math.exp(-k * a)) / (2 * k**2 * a)
        if self.d != 3:
            raise ValueError("cell averages are implemented for d = 1 and d = 3")
        # split the box into 2d pyramids with apex at the centre
        g, w = np.polynomial.legendre.leggauss(24)
        g = 0.5 * (g + 1)
        w = 0.5 * w
        total = 0.0
        for axis in range(self.d):
            half = h / 2
            others = [j for j in range(self.d) if j != axis]
            # points on the face x_axis = half[axis], parametrised by the other coordinates
            u = (2 * g - 1)[:, None] * half[others[0]]
            v = (2 * g - 1)[None, :] * half[others[1]]
            wu = (w * 2 * half[others[0]])[:, None]
            wv = (w * 2 * half[others[1]])[None, :]
            dist = np.sqrt(half[axis] ** 2 + u**2 + v**2)
            # along each ray from the centre to the face point, int_0^1 E(t dist) t^2 dist^3 ... dt
            t = g[:, None, None]
            rr = t * dist[None]
            radial = np.sum(w[:, None, None] * self.profile(rr) * t**2, axis=0)
            # cone volume element: (face area element) * half[axis] * t^2 dt
            total += 2 * np.sum(wu * wv * half[axis] * radial)
        return float(total / np.prod(h))


@dataclass(frozen=True, eq=False)
class DiscreteGreen:
    """Green operator of an assembled discrete operator."""

    op: DiscreteOperator

    @property
    def translation_invariant(self) -> bool:
        return False


def green_column(op: DiscreteOperator, y, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``e_y`` with ``P e_y = delta_y / vol(y)``; ``y`` is a core cell index.  Padded shape."""
    j = op.core_index(y)
    rhs = np.zeros(op.shape)
    rhs[j] = 1.0 / op.volumes[j]
    return op.solve(rhs, tol=tol)


def apply_kernel(G, phi, grid: GridSpec | None = None, tol: float = DEFAULT_TOL, points=None,
                 full: bool = False) -> np.ndarray:
    """``E(phi)`` on the core grid (or at ``points`` for closed-form kernels).

    For a :class:`DiscreteGreen` this is the adjoint solve ``P* v = phi`` (``full=True``
    returns it on the padded grid rather than the core).  For a
    closed-form kernel the values at given points use polar quadrature around each
    point; on a grid they use a linear FFT convolution with the cell-averaged kernel in
    the singular cell.
    """
    if isinstance(G, DiscreteGreen):
        op = G.op
        if isinstance(phi, TestFunction):
            _check_support(op.grid, phi)
        f = op.extend(sample_on_grid(op.grid, phi))
        v = op.solve_adjoint(f, tol=tol) if np.any(f) else np.zeros(op.shape)
        return v if full else op.restrict(v)
    if points is not None:
        return _polar_apply(G, phi, np.asarray(points, float))
    if grid is None:
        raise ValueError("closed-form kernels need a grid or evaluation points")
    f = sample_on_grid(grid, phi)
    return convolve_on_grid(G, grid, f * grid.cell_volume)


def _check_support(grid: GridSpec, phi: TestFunction):
    c = np.asarray(phi.center)
    lo = np.array([b[0] for b in grid.box])
    hi = np.array([b[1] for b in grid.box])
    if np.any(c - phi.radius < lo) or np.any(c + phi.radius > hi):
        raise ValueError("test function support exceeds the grid box")


def kernel_stencil(G: ClosedFormGreen, grid: GridSpec) -> np.ndarray:
    """``E`` sampled on all centre offsets, with the cell average at offset zero."""
    h = grid.spacing
    axes = [np.arange(-(n - 1), n) * hi for n, hi in zip(grid.resolution, h)]
    off = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    r = np.linalg.norm(off, axis=-1)
    ker = G.profile(np.where(r == 0, 1.0, r))
    ker[tuple(n - 1 for n in grid.resolution)] = G.cell_average(h)
    return ker


def convolve_on_grid(G: ClosedFormGreen, grid: GridSpec, load: np.ndarray) -> np.ndarray:
    """``u_i = sum_j E(x_i - y_j) load_j`` by zero-padded (non-circular) FFT convolution."""
    from scipy.signal import fftconvolve

    ker = kernel_stencil(G, grid)
    full = fftconvolve(np.asarray(load, float), ker, mode="full")
    sl = tuple(slice(n - 1, 2 * n - 1) for n in grid.resolution)
    return full[sl]


def _polar_apply(G: ClosedFormGreen, phi: TestFunction, points: np.ndarray, n_radial: int = 64,
                 n_angular: int = 24) -> np.ndarray:
    """``int E(x - y) phi(y) dy`` by Gauss quadrature in polar coordinates about ``x``."""
    d = G.d
    pts = points.reshape(-1, d)
    out = np.empty(len(pts))
    c = np.asarray(phi.center)
    gr, wr0 = np.polynomial.legendre.leggauss(n_radial)
    full_dirs, full_w = sphere_quadrature(d, n_angular)
    for k, x in enumerate(pts):
        dist = np.linalg.norm(x - c)
        near, far = max(dist - phi.radius, 0.0), dist + phi.radius
        if d == 3 and dist > phi.radius:
            # only the cone of directions hitting the support contributes
            dirs, wdir = cap_quadrature((c - x) / dist, phi.radius / dist, n_angular)
        else:
            dirs, wdir = full_dirs, full_w
        r = near + (far - near) * 0.5 * (gr + 1)
        wr = 0.5 * (far - near) * wr0 * r ** (d - 1) * G.profile(r)
        vals = phi(x + r[:, None, None] * dirs[None, :, :])
        out[k] = float(wr @ vals @ wdir)
    return out.reshape(points.shape[:-1])


# --- diagnostics ------------------------------------------------------------------------------

def radial_window(op: DiscreteOperator, y, r_min: float | None = None, r_max: float | None = None):
    """Distances ``|x - y|`` on the core grid and the mask of the diagnostic window
    ``[5h, box/4]`` (defaults)."""
    x = op.core_centers()
    yc = x[tuple(y)]
    r = np.linalg.norm(x - yc, axis=-1)
    h = float(op.grid.spacing.max())
    box = float(min(hi - lo for lo, hi in op.grid.box))
    lo = 5 * h if r_min is None else r_min
    hi = box / 4 if r_max is None else r_max
    return r, (r >= lo - 1e-12) & (r <= hi + 1e-12)


def fit_envelope_constant(column_core: np.ndarray, r: np.ndarray, mask: np.ndarray, d: int) -> float:
    """Smallest ``N`` with ``N^-1 r^{2-d} <= e(x) <= N r^{2-d}`` on the masked window."""
    ratio = column_core[mask] * r[mask] ** (d - 2)
    if np.any(ratio <= 0):
        return math.inf
    return float(max(ratio.max(), 1.0 / ratio.min()))


def fit_decay_slope(column_core: np.ndarray, r: np.ndarray, mask: np.ndarray) -> float:
    """Least-squares slope of ``log(4 pi r e(x))`` against ``r`` (d = 3)."""
    y = np.log(4 * math.pi * r[mask] * column_core[mask])
    return float(np.polyfit(r[mask], y, 1)[0])
