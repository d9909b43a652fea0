"""Generalized and mild solution samples driven by a grid noise realization.

A generalized sample ``s(phi) = <L, E(phi)>`` costs one adjoint solve.  A mild field
``u(x) = <L, E(x, .)>`` is a linear FFT convolution for closed-form kernels and one
forward solve ``K u = L`` for discrete operators (the sum of Green columns weighted by
the increments).
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate

from .admissibility import AdmissibilityReport, Status, check_mild
from .elliptic_solver import (
    DEFAULT_TOL,
    ClosedFormGreen,
    DiscreteGreen,
    DiscreteOperator,
    apply_kernel,
    convolve_on_grid,
)
from .kernel_analysis import RadialFunction, build_profile
from .levy_core import LevyTriplet
from .white_noise import GridSpec, NoiseRealization, TestFunction, realization_seed, sample_noise, sample_on_grid


class AdmissibilityWarning(UserWarning):
    pass


class InadmissibleKernel(ValueError):
    pass


@dataclass(frozen=True)
class SolutionSample:
    """A scalar ``s(phi)`` or a mild field, with what it was computed from."""

    kind: str  # "generalized" or "mild"
    value: float | np.ndarray = field(repr=False)
    seed: int
    operator: str
    kernel: str
    phi: object = field(default=None, repr=False)
    grid: GridSpec | None = None
    flagged: bool = False
    shift: str = ""

    def to_csv_row(self, phi_id: str = "") -> list[str]:
        return [str(self.seed), phi_id, repr(float(self.value))]


def _operator_label(op: DiscreteOperator) -> str:
    return f"{op.spec.name} on {'x'.join(map(str, op.grid.resolution))} (pad {op.pad})"


def _kernel_label(G) -> str:
    if isinstance(G, ClosedFormGreen):
        return G.name or ("laplace" if G.eps == 0 else f"yukawa(eps={G.eps:g})")
    return f"discrete {_operator_label(G.op)}"


# --- generalized solutions -----------------------------------------------------------------

def generalized_value(noise: NoiseRealization, op: DiscreteOperator, phi, tol: float = DEFAULT_TOL) -> float:
    if noise.grid != op.grid:
        raise ValueError("noise and operator live on different grids")
    v = apply_kernel(DiscreteGreen(op), phi, tol=tol)
    return float(np.sum(v.ravel() * noise.increments.ravel()))


def generalized_sample(noise: NoiseRealization, op: DiscreteOperator, phi, tol: float = DEFAULT_TOL) -> SolutionSample:
    """``s(phi) = <L, E(phi)>`` with ``E(phi)`` from the adjoint solve ``P* v = phi``."""
    val = generalized_value(noise, op, phi, tol)
    return SolutionSample("generalized", val, noise.seed, _operator_label(op), "discrete adjoint", phi, op.grid)


def generalized_batch(increments: np.ndarray, op: DiscreteOperator, phis, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``s(phi_k)`` for every realization row of ``increments``; shape ``(n_real, n_phi)``.

    One adjoint solve per test function, then a matrix product with the increments.
    """
    V = np.stack([apply_kernel(DiscreteGreen(op), phi, tol=tol).ravel() for phi in phis], axis=1)
    return np.asarray(increments, float).reshape(len(increments), -1) @ V


def harmonic_shift(sample: SolutionSample, h: Callable, op: DiscreteOperator, rtol: float = 1e-6) -> SolutionSample:
    """``s'(phi) = s(phi) + int h phi``, another solution when ``p h = 0``.

    Only the pure diffusion part can annihilate ``h``: operators with a potential or a
    drift are rejected, and so is any ``h`` whose discrete image ``P h`` is not small on
    the interior cells (relative to ``|h| / spacing^2``).
    """
    if sample.kind != "generalized":
        raise ValueError("harmonic shifts apply to generalized samples")
    spec = op.spec
    if spec.drift is not None:
        raise ValueError("operator has a drift term; h is not in the kernel of p")
    if spec.potential is not None and np.any(spec.potential_values(op.grid.centers()) != 0):
        raise ValueError("operator has a nonzero potential; h is not in the kernel of p")
    hv = sample_on_grid(op.grid, h)
    res = op.apply(hv)
    interior = tuple(slice(1, n - 1) for n in op.grid.resolution)
    scale = max(np.max(np.abs(hv)), 1.0) / float(np.min(op.grid.spacing)) ** 2
    if np.max(np.abs(res[interior])) > rtol * scale:
        raise ValueError("h is not discretely harmonic for this operator")
    phi = sample_on_grid(op.grid, sample.phi)
    added = float(np.sum(hv * phi) * op.grid.cell_volume)
    label = getattr(h, "__name__", "h")
    return replace(sample, value=float(sample.value) + added, shift=(sample.shift + "+" if sample.shift else "") + label)


# --- mild solutions ------------------------------------------------------------------------

def kernel_column(G: ClosedFormGreen) -> RadialFunction:
    """``E(x, .)`` of a closed-form kernel as a radial function about ``x``."""
    k = G.decay_rate
    if G.d == 1:
        return RadialFunction.from_callable(1, G.profile, 40 / k, 0.0, k)
    s_max = 40 / k if k > 0 else 1e4
    return RadialFunction.from_callable(G.d, G.profile, s_max, float(G.d - 2) if k == 0 else 1.0, k)


def mild_admissibility(G: ClosedFormGreen, t: LevyTriplet) -> AdmissibilityReport:
    return check_mild(build_profile(kernel_column(G)), t, G.singularity_order)


def mild_field(noise: NoiseRealization, G, check: bool = True, tol: float = DEFAULT_TOL) -> SolutionSample:
    """``u(x_i) = sum_j E(x_i, y_j) L(cell_j)`` on the noise grid.

    Closed-form kernels are admissibility checked against the noise triplet: failing
    conditions raise, inconclusive ones warn and the sample is flagged.  Discrete
    operators carry no closed-form column, so their samples are flagged unchecked.
    """
    flagged = False
    if isinstance(G, ClosedFormGreen):
        if G.d != noise.grid.d:
            raise ValueError("kernel and grid dimensions differ")
        if check:
            rep = mild_admissibility(G, noise.triplet)
            if rep.verdict is Status.FAILS:
                raise InadmissibleKernel("kernel columns are not admissible for this noise:\n" + rep.render())
            if rep.verdict is not Status.HOLDS:
                warnings.warn("mild admissibility inconclusive; the field is flagged\n" + rep.render(),
                              AdmissibilityWarning, stacklevel=2)
                flagged = True
        u = convolve_on_grid(G, noise.grid, noise.increments)
    elif isinstance(G, DiscreteGreen):
        if G.op.grid != noise.grid:
            raise ValueError("noise and operator live on different grids")
        if check:
            warnings.warn("no closed-form column to check admissibility of a discrete operator; the field is flagged",
                          AdmissibilityWarning, stacklevel=2)
            flagged = True
        u = G.op.solve_flux(noise.increments, tol=tol)
    else:
        raise TypeError("G must be a ClosedFormGreen or a DiscreteGreen")
    return SolutionSample("mild", u, noise.seed, "", _kernel_label(G), None, noise.grid, flagged)


def integrate_against(sample: SolutionSample, phi) -> float:
    """``int u phi`` by the midpoint rule on the field's grid."""
    if sample.kind != "mild":
        raise ValueError("only mild fields can be integrated against test functions")
    grid = sample.grid
    return float(np.sum(np.asarray(sample.value) * sample_on_grid(grid, phi)) * grid.cell_volume)


def point_weights(G: ClosedFormGreen, grid: GridSpec, points) -> np.ndarray:
    """Rows ``E(x, y_j)`` for each point ``x``; a point at a cell centre uses the cell average."""
    pts = np.atleast_2d(np.asarray(points, float))
    y = grid.centers().reshape(-1, grid.d)
    r = np.linalg.norm(pts[:, None, :] - y[None, :, :], axis=-1)
    hit = r < 1e-12 * float(np.min(grid.spacing))
    W = G.profile(np.where(hit, 1.0, r))
    W[hit] = G.cell_average(grid.spacing)
    return W


# --- stochastic continuity -----------------------------------------------------------------

def _column_difference_norm(G: ClosedFormGreen, delta: float, p: float) -> float:
    """``||E(. + delta e_1) - E(.)||_{L^p}`` for a radial kernel."""
    if delta == 0:
        return 0.0
    f = G.profile
    if G.d == 1:
        g = lambda z: abs(f(abs(z - delta)) - f(abs(z))) ** p
        val = sum(integrate.quad(g, a, b, limit=200)[0] for a, b in
                  ((-math.inf, 0.0), (0.0, delta), (delta, math.inf)))
        return val ** (1 / p)
    if G.d != 3:
        raise ValueError("continuity moduli are implemented for d = 1 and d = 3")

    def shell(r):
        # angular integral over the sphere of radius r about the first singularity
        g = lambda c: abs(f(math.sqrt(max(r * r + delta * delta - 2 * r * delta * c, 0.0))) - f(r)) ** p
        return 2 * math.pi * r * r * integrate.quad(g, -1.0, 1.0, points=[1.0] if abs(r - delta) < 1e-12 else None,
                                                     limit=200)[0]

    k = G.decay_rate
    far = 60 / k if k > 0 else math.inf
    pieces = [(0.0, delta), (delta, 2 * delta), (2 * delta, far)]
    val = sum(integrate.quad(shell, a, b, limit=400, epsrel=1e-8)[0] for a, b in pieces)
    return val ** (1 / p)


@dataclass(frozen=True)
class ContinuityTable:
    deltas: np.ndarray
    exceedance: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    eta: float
    n_real: int

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["delta", "eta", "n_real", "exceedance", "l1_modulus", "l2_modulus"])
        for row in zip(self.deltas, self.exceedance, self.l1, self.l2):
            w.writerow([repr(float(row[0])), repr(self.eta), self.n_real] + [repr(float(v)) for v in row[1:]])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def stochastic_continuity_probe(G: ClosedFormGreen, t: LevyTriplet, x, deltas, grid: GridSpec, eta: float,
                                n_real: int, eps: float, base_seed: int, batch: int = 500) -> ContinuityTable:
    """Monte Carlo ``P(|u(x + delta e_1) - u(x)| > eta)`` plus the deterministic moduli
    ``||E(x + delta e_1, .) - E(x, .)||`` in ``L^1`` and ``L^2``."""
    deltas = np.asarray(deltas, float)
    x = np.asarray(x, float)
    e1 = np.zeros(grid.d)
    e1[0] = 1.0
    pts = np.vstack([x] + [x + dl * e1 for dl in deltas])
    W = point_weights(G, grid, pts)
    counts = np.zeros(len(deltas))
    for start in range(0, n_real, batch):
        inc = np.stack([sample_noise(grid, t, eps, realization_seed(base_seed, i)).increments.ravel()
                        for i in range(start, min(start + batch, n_real))])
        U = inc @ W.T
        counts += np.sum(np.abs(U[:, 1:] - U[:, :1]) > eta, axis=0)
    l1 = np.array([_column_difference_norm(G, dl, 1.0) for dl in deltas])
    l2 = np.array([_column_difference_norm(G, dl, 2.0) for dl in deltas])
    return ContinuityTable(deltas, counts / n_real, l1, l2, float(eta), int(n_real))


def samples_to_csv(rows, path=None) -> str:
    """``(seed, phi_id, value)`` rows as CSV text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "phi_id", "value"])
    for seed, pid, val in rows:
        w.writerow([seed, pid, repr(float(val))])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
