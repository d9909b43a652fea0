"""Lévy bases on rectangular grids and their pairings with test functions.

Each cell of volume ``v`` receives an exact infinitely divisible increment with exponent
``v * psi``, except that jumps of size ``|r| <= eps`` are replaced by a Gaussian with
the same variance.  Jump positions inside a cell are not tracked: pairings evaluate the
test function at cell centres.

Randomness is counter based.  Cells are enumerated in C (lexicographic) order and
split into fixed-size chunks; chunk ``k`` of a realization with seed ``s`` draws from
``Philox(SeedSequence([s, k]))``.  The increments therefore do not depend on how many
workers generate them or in which order.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._numerics import Integral, unit_ball_volume
from .levy_core import LevyTriplet, compensator, moment_integral, small_jump_variance

CHUNK_CELLS = 4096
MAX_JUMPS_PER_CHUNK = 20_000_000
FORMAT_VERSION = 1


class JumpRateOverflow(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """Cell-centred tensor grid on a box; ``box[i] = (lo, hi)``, ``resolution[i]`` cells."""

    box: tuple[tuple[float, float], ...]
    resolution: tuple[int, ...]

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        res = tuple(int(n) for n in self.resolution)
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "resolution", res)
        if len(box) != len(res) or not 1 <= len(res) <= 3:
            raise ValueError("grid dimension must be 1, 2 or 3 and box/resolution must agree")
        if any(n < 2 for n in res):
            raise ValueError("resolution must be at least 2 per axis")
        if any(not hi > lo for lo, hi in box):
            raise ValueError("box intervals must have positive length")

    @classmethod
    def cube(cls, d: int, lo: float, hi: float, n: int) -> "GridSpec":
        return cls(((lo, hi),) * d, (n,) * d)

    @property
    def d(self) -> int:
        return len(self.resolution)

    @property
    def spacing(self) -> np.ndarray:
        return np.array([(hi - lo) / n for (lo, hi), n in zip(self.box, self.resolution)])

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.resolution))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.resolution

    def axis_centers(self, i: int) -> np.ndarray:
        lo, hi = self.box[i]
        n = self.resolution[i]
        return lo + (np.arange(n) + 0.5) * (hi - lo) / n

    def centers(self) -> np.ndarray:
        """Cell centres, shape ``resolution + (d,)``."""
        axes = np.meshgrid(*(self.axis_centers(i) for i in range(self.d)), indexing="ij")
        return np.stack(axes, axis=-1)

    def coarsened(self, factor: int) -> "GridSpec":
        if any(n % factor for n in self.resolution):
            raise ValueError("resolution must be divisible by the coarsening factor")
        return GridSpec(self.box, tuple(n // factor for n in self.resolution))

    def to_dict(self) -> dict:
        return {"box": [list(b) for b in self.box], "resolution": list(self.resolution)}


@dataclass(frozen=True)
class NoiseRealization:
    grid: GridSpec
    triplet: LevyTriplet
    eps: float
    seed: int
    increments: np.ndarray = field(repr=False)

    def __post_init__(self):
        inc = np.asarray(self.increments, dtype=float)
        if inc.shape != self.grid.shape:
            raise ValueError("increments must have the grid shape")
        inc.setflags(write=False)
        object.__setattr__(self, "increments", inc)


@dataclass(frozen=True)
class TestFunction:
    """Smooth bump ``amplitude * exp(-1/(1-|y|^2)) * cos(k.(x-c) + phase)``, ``y=(x-c)/radius``."""

    __test__ = False  # not a pytest class

    center: tuple[float, ...]
    radius: float
    amplitude: float = 1.0
    frequency: tuple[float, ...] | None = None
    phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.frequency is not None:
            fr = tuple(float(k) for k in np.atleast_1d(self.frequency))
            if len(fr) != len(self.center):
                raise ValueError("frequency must have the dimension of the center")
            object.__setattr__(self, "frequency", fr)

    @property
    def d(self) -> int:
        return len(self.center)

    @property
    def support_radius(self) -> float:
        return self.radius

    @property
    def sup_norm(self) -> float:
        return abs(self.amplitude) * math.exp(-1.0)

    def __call__(self, x) -> np.ndarray:
        """Evaluate on points of shape ``(..., d)``."""
        x = np.asarray(x, dtype=float)
        diff = x - np.asarray(self.center)
        q = np.sum(diff**2, axis=-1) / self.radius**2
        out = np.zeros(q.shape)
        inside = q < 1.0
        out[inside] = self.amplitude * np.exp(-1.0 / (1.0 - q[inside]))
        if self.frequency is not None:
            out = out * np.cos(diff @ np.asarray(self.frequency) + self.phase)
        return out

    def shifted(self, offset) -> "TestFunction":
        c = tuple(np.asarray(self.center) + np.asarray(offset, float))
        return TestFunction(c, self.radius, self.amplitude, self.frequency, self.phase)


# --- sampling ---------------------------------------------------------------------------

def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(chunk)])))


@dataclass(frozen=True)
class _CellLaw:
    """Per-cell ingredients shared by all chunks of one (triplet, eps, volume)."""

    drift: float
    gauss_sd: float
    jump_rate: float  # expected number of jumps per cell

    @classmethod
    def build(cls, t: LevyTriplet, eps: float, v: float) -> "_CellLaw":
        if not (0 < eps <= 1):
            raise ValueError("eps must lie in (0, 1]")
        if t.nu.is_zero:
            return cls(t.gamma * v, math.sqrt(t.a * v), 0.0)
        sigma2 = small_jump_variance(eps, t.nu) if eps > 0 else 0.0
        comp = compensator(eps, t.nu) if eps < 1 else 0.0
        rate = t.nu.mass(eps) * v
        return cls(t.gamma * v - v * comp, math.sqrt(t.a * v + sigma2 * v), rate)


def _draw_chunk(law: _CellLaw, t: LevyTriplet, eps: float, n: int, rng: np.random.Generator) -> np.ndarray:
    out = np.full(n, law.drift)
    # two Gaussians are folded into one with the summed variance
    if law.gauss_sd > 0:
        out += law.gauss_sd * rng.standard_normal(n)
    if law.jump_rate > 0:
        counts = rng.poisson(law.jump_rate, size=n)
        total = int(counts.sum())
        if total > MAX_JUMPS_PER_CHUNK:
            raise JumpRateOverflow(
                f"{total} jumps in one chunk of {n} cells (rate {law.jump_rate:.3g} per cell); "
                "increase eps or refine the grid"
            )
        if total:
            jumps = t.nu.sample_jumps(eps, total, rng)
            cell = np.repeat(np.arange(n), counts)
            out += np.bincount(cell, weights=jumps, minlength=n)
    return out


def _check_rate(law: _CellLaw, grid: GridSpec):
    if law.jump_rate * CHUNK_CELLS > MAX_JUMPS_PER_CHUNK / 2:
        raise JumpRateOverflow(
            f"expected {law.jump_rate:.3g} jumps of size > eps per cell; "
            "increase eps or use a finer grid"
        )


def sample_noise(grid: GridSpec, t: LevyTriplet, eps: float, seed: int) -> NoiseRealization:
    """Cell increments ``L(cell)`` of a Lévy white noise with triplet ``t``."""
    law = _CellLaw.build(t, eps, grid.cell_volume)
    _check_rate(law, grid)
    n = grid.n_cells
    flat = np.empty(n)
    for k, start in enumerate(range(0, n, CHUNK_CELLS)):
        stop = min(start + CHUNK_CELLS, n)
        flat[start:stop] = _draw_chunk(law, t, eps, stop - start, _chunk_rng(seed, k))
    return NoiseRealization(grid, t, float(eps), int(seed), flat.reshape(grid.shape))


def realization_seed(base_seed: int, index: int) -> int:
    """Seed of the ``index``-th realization of a batch; distinct from ``base_seed + index``."""
    return int(np.random.SeedSequence([int(base_seed), int(index)]).generate_state(1, np.uint64)[0] >> 1)


def sample_noise_batch(grid: GridSpec, t: LevyTriplet, eps: float, base_seed: int, n_real: int,
                       start: int = 0) -> np.ndarray:
    """Increments of ``n_real`` independent realizations, shape ``(n_real,) + grid.shape``.

    Row ``i`` equals ``sample_noise(grid, t, eps, realization_seed(base_seed, start + i)).increments``.
    """
    law = _CellLaw.build(t, eps, grid.cell_volume)
    _check_rate(law, grid)
    n = grid.n_cells
    out = np.empty((n_real, n))
    for i in range(n_real):
        s = realization_seed(base_seed, start + i)
        for k, lo in enumerate(range(0, n, CHUNK_CELLS)):
            hi = min(lo + CHUNK_CELLS, n)
            out[i, lo:hi] = _draw_chunk(law, t, eps, hi - lo, _chunk_rng(s, k))
    return out.reshape((n_real,) + grid.shape)


def sample_cell_increments(t: LevyTriplet, eps: float, volume: float, n: int, seed: int) -> np.ndarray:
    """``n`` i.i.d. increments of a single cell of the given volume."""
    law = _CellLaw.build(t, eps, volume)
    out = np.empty(n)
    for k, start in enumerate(range(0, n, CHUNK_CELLS)):
        stop = min(start + CHUNK_CELLS, n)
        out[start:stop] = _draw_chunk(law, t, eps, stop - start, _chunk_rng(seed, k))
    return out


# --- pairing ----------------------------------------------------------------------------

def sample_on_grid(grid: GridSpec, f) -> np.ndarray:
    """Values of ``f`` at the cell centres (arrays of grid shape pass through)."""
    if callable(f):
        vals = np.asarray(f(grid.centers()), dtype=float)
    else:
        vals = np.asarray(f, dtype=float)
    if vals.shape != grid.shape:
        raise ValueError(f"function samples have shape {vals.shape}, grid has {grid.shape}")
    return vals


def support_outside_bound(grid: GridSpec, f: TestFunction) -> float:
    """Upper bound on ``int |f|`` over the part of its support outside the grid box."""
    c = np.asarray(f.center)
    lo = np.array([b[0] for b in grid.box])
    hi = np.array([b[1] for b in grid.box])
    if np.all(c - f.radius >= lo) and np.all(c + f.radius <= hi):
        return 0.0
    return f.sup_norm * unit_ball_volume(grid.d) * f.radius**grid.d


def pair(noise: NoiseRealization, f) -> float:
    """``<L, f>`` approximated by ``sum_cells f(centre) L(cell)`` in C order."""
    if isinstance(f, TestFunction):
        if f.d != noise.grid.d:
            raise ValueError("test function and grid dimensions differ")
        outside = support_outside_bound(noise.grid, f)
        if outside > 0:
            warnings.warn(
                f"test function support leaves the grid box; truncated mass is at most {outside:.3e}",
                stacklevel=2,
            )
    vals = sample_on_grid(noise.grid, f)
    return float(np.sum(vals.ravel() * noise.increments.ravel()))


def pair_batch(increments: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Pairings of a batch ``(n_real,) + shape`` with one sampled function."""
    n = increments.shape[0]
    return increments.reshape(n, -1) @ np.asarray(values, float).ravel()


def mean_formula(t: LevyTriplet) -> Integral:
    """Mean density ``gamma + int_{|r|>1} r nu(dr)``; divergent when the first moment is infinite."""
    first = moment_integral(1.0, t.nu)
    if not first.finite:
        return Integral(math.nan, math.inf, first.status, "first moment not finite: " + first.witness)
    signed = t.nu.integrate(lambda r: np.asarray(r, float), 1.0, math.inf, growth=1.0,
                            tail_integral=lambda T, a, s: s * T ** (1 - a) / (a - 1))
    return Integral(t.gamma + signed.value, signed.bound)


def centered(t: LevyTriplet) -> LevyTriplet:
    """Same ``a`` and ``nu`` with the drift chosen so that the mean density vanishes."""
    m = mean_formula(t)
    if not m.finite:
        raise ValueError("cannot center a noise without a finite first moment")
    return LevyTriplet(t.a, t.gamma - m.value, t.nu)


def coarsen(noise: NoiseRealization, factor: int) -> NoiseRealization:
    """Sum increments over ``factor**d`` blocks: the same realization on a coarser grid."""
    g = noise.grid.coarsened(factor)
    shp = []
    for n in g.resolution:
        shp += [n, factor]
    inc = noise.increments.reshape(shp).sum(axis=tuple(range(1, 2 * g.d, 2)))
    return NoiseRealization(g, noise.triplet, noise.eps, noise.seed, inc)


# --- export -------------------------------------------------------------------------------

def save_binary(noise: NoiseRealization, path) -> tuple[Path, Path]:
    """Raw little-endian float64 increments in C order plus a JSON header next to them."""
    path = Path(path)
    header = {
        "format_version": FORMAT_VERSION,
        "dimension": noise.grid.d,
        **noise.grid.to_dict(),
        "seed": noise.seed,
        "eps": noise.eps,
        "dtype": "<f8",
        "order": "C",
    }
    noise.increments.astype("<f8").tofile(path)
    hpath = path.with_suffix(path.suffix + ".json")
    hpath.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    return path, hpath


def load_binary(path) -> tuple[dict, np.ndarray]:
    path = Path(path)
    header = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    data = np.fromfile(path, dtype=header["dtype"]).reshape(header["resolution"])
    return header, data


def save_csv(noise: NoiseRealization, path, max_cells: int = 100_000) -> Path:
    if noise.grid.n_cells > max_cells:
        raise ValueError(f"CSV export is meant for small grids (<= {max_cells} cells)")
    path = Path(path)
    centers = noise.grid.centers().reshape(-1, noise.grid.d)
    cols = [f"x{i}" for i in range(noise.grid.d)] + ["increment"]
    data = np.column_stack([centers, noise.increments.ravel()])
    np.savetxt(path, data, delimiter=",", header=",".join(cols), comments="", fmt="%.17g")
    return path
