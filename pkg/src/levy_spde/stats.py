"""Statistical checks on Monte Carlo samples: characteristic functions, two-sample
Kolmogorov-Smirnov batteries, Hill tail indices and moment stabilization."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats as sps

from .levy_core import LevyTriplet, moment_integral, psi_values

KS_LEVEL = 0.01
INFINITE_RATIO = 1.5
FINITE_RATIO = 1.1


@dataclass(frozen=True)
class SampleSet:
    """I.i.d. real samples sharing one provenance (test function, operator, triplet)."""

    values: np.ndarray = field(repr=False)
    provenance: dict = field(default_factory=dict)
    seeds: tuple[int, int] | None = None  # half-open range of realization indices

    def __post_init__(self):
        v = np.asarray(self.values, float).ravel()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return len(self.values)


def _as_values(samples) -> np.ndarray:
    return samples.values if isinstance(samples, SampleSet) else np.asarray(samples, float).ravel()


def _write_csv(header, rows, path) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def variance_checks_apply(t: LevyTriplet) -> bool:
    """Variance based checks need a finite second moment of ``nu``; otherwise use
    characteristic functions and tail indices."""
    return moment_integral(2.0, t.nu).finite


# --- characteristic functions -------------------------------------------------------------------

def empirical_cf(values, z) -> np.ndarray:
    x = _as_values(values)
    z = np.atleast_1d(np.asarray(z, float))
    return np.array([np.mean(np.exp(1j * zz * x)) for zz in z])


def pairing_cf(t: LevyTriplet, phi_values, cell_volume: float) -> Callable:
    """``z -> exp(sum_cells v psi(z phi(cell)))``, the law of a grid pairing."""
    phi = np.asarray(phi_values, float).ravel()
    phi = phi[phi != 0]

    def target(z):
        z = np.atleast_1d(np.asarray(z, float))
        u = np.outer(z, phi)
        # psi(-u) = conj(psi(u)), and symmetric bumps repeat values: evaluate each |u| once
        mags, inverse = np.unique(np.abs(u), return_inverse=True)
        psi = psi_values(mags, t)[inverse.reshape(u.shape)]
        psi = np.where(u < 0, np.conj(psi), psi)
        return np.exp(cell_volume * np.sum(psi, axis=1))

    return target


@dataclass(frozen=True)
class CFReport:
    z: np.ndarray
    ecf: np.ndarray
    target: np.ndarray
    n: int

    @property
    def errors(self) -> np.ndarray:
        return np.abs(self.ecf - self.target)

    @property
    def max_error(self) -> float:
        return float(self.errors.max())

    @property
    def band(self) -> float:
        return 3 / math.sqrt(self.n)

    @property
    def passed(self) -> bool:
        return self.max_error <= self.band

    def render(self) -> str:
        return (f"ECF test: N={self.n} max|ECF-target|={self.max_error:.4g} band={self.band:.4g} "
                f"{'pass' if self.passed else 'fail'}")

    def to_csv(self, path=None) -> str:
        rows = [[repr(float(z)), repr(e.real), repr(e.imag), repr(t.real), repr(t.imag), repr(float(err))]
                for z, e, t, err in zip(self.z, self.ecf, self.target, self.errors)]
        return _write_csv(["z", "ecf_re", "ecf_im", "target_re", "target_im", "abs_error"], rows, path)


def empirical_cf_test(samples, target: Callable, z_grid) -> CFReport:
    """Compare the empirical characteristic function with ``target`` on ``z_grid``;
    passes when every deviation is inside ``3 / sqrt(N)``."""
    x = _as_values(samples)
    z = np.asarray(z_grid, float)
    return CFReport(z, empirical_cf(x, z), np.asarray(target(z), complex), len(x))


# --- stationarity ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class KSReport:
    pairs: tuple[tuple[str, str, float, float], ...]  # (shift a, shift b, statistic, p-value)
    level: float = KS_LEVEL

    @property
    def min_p(self) -> float:
        return min(p for *_, p in self.pairs)

    @property
    def passed(self) -> bool:
        return all(p > self.level for *_, p in self.pairs)

    def render(self) -> str:
        lines = [f"KS battery: {len(self.pairs)} pairs, min p={self.min_p:.4g} "
                 f"{'pass' if self.passed else 'fail'} at level {self.level}"]
        lines += [f"  {a} vs {b}: D={s:.4g} p={p:.4g}" for a, b, s, p in self.pairs]
        return "\n".join(lines)

    def to_csv(self, path=None) -> str:
        rows = [[a, b, repr(s), repr(p)] for a, b, s, p in self.pairs]
        return _write_csv(["shift_a", "shift_b", "ks_statistic", "p_value"], rows, path)


def stationarity_test(shifted: Mapping, level: float = KS_LEVEL) -> KSReport:
    """Pairwise two-sample KS tests between the sample sets of all shifts."""
    if len(shifted) < 2:
        raise ValueError("need at least two shifts")
    keys = list(shifted)
    pairs = []
    for a, b in itertools.combinations(keys, 2):
        res = sps.ks_2samp(_as_values(shifted[a]), _as_values(shifted[b]))
        pairs.append((str(a), str(b), float(res.statistic), float(res.pvalue)))
    return KSReport(tuple(pairs), level)


def false_alarm_rate(reports: Sequence[KSReport]) -> float:
    """Fraction of individual pairwise tests rejected across repeated batteries."""
    p = np.array([pv for r in reports for *_, pv in r.pairs])
    return float(np.mean(p <= reports[0].level))


# --- tails ----------------------------------------------------------------------------------------------

def hill(values, k: int) -> float:
    """Hill estimate of the tail index from the ``k`` largest ``|x|``."""
    a = np.abs(_as_values(values))
    if not 0 < k < len(a):
        raise ValueError("k must be in (0, N)")
    top = np.partition(a, len(a) - k - 1)[len(a) - k - 1:]
    top.sort()
    thresh = top[0]
    if thresh <= 0:
        return math.nan
    gamma = np.mean(np.log(top[1:])) - math.log(thresh)
    return 1.0 / gamma if gamma > 0 else math.inf


@dataclass(frozen=True)
class TailIndex:
    estimate: float
    ci: tuple[float, float]
    k: int
    deep_estimate: float  # Hill estimate from the top tenth of the k order statistics
    light_tailed: bool
    undefined: bool = False

    def render(self) -> str:
        if self.undefined:
            return "tail index: undefined (samples are constant)"
        flag = " light-tailed" if self.light_tailed else ""
        return (f"tail index: {self.estimate:.4g} CI [{self.ci[0]:.4g}, {self.ci[1]:.4g}] k={self.k}"
                f" deep={self.deep_estimate:.4g}{flag}")


def _bootstrap(x: np.ndarray, stat: Callable, n_boot: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0xB007])))
    return np.array([stat(x[rng.integers(0, len(x), len(x))]) for _ in range(n_boot)])


def tail_index(samples, k_fraction: float = 0.02, n_boot: int = 200, seed: int = 0) -> TailIndex:
    """Hill estimator over the top ``k_fraction`` of ``|samples|`` with a percentile
    bootstrap CI.

    A power tail gives the same index deeper in the tail; light tails do not, their Hill
    estimate keeps increasing with the threshold.  The sample is flagged light-tailed
    when the estimate from the top ``k/10`` order statistics exceeds the main one by
    25% and by three bootstrap standard errors.
    """
    x = np.abs(_as_values(samples))
    if not 0 < k_fraction <= 0.1:
        raise ValueError("k_fraction must be in (0, 0.1]")
    if np.all(x == x[0]):
        return TailIndex(math.nan, (math.nan, math.nan), 0, math.nan, False, True)
    k = max(int(k_fraction * len(x)), 10)
    est = hill(x, k)
    boot = _bootstrap(x, lambda s: hill(s, k), n_boot, seed)
    lo, hi = np.percentile(boot, [2.5, 97.5])
    k_deep = max(k // 10, 5)
    deep = hill(x, k_deep)
    se_deep = deep / math.sqrt(k_deep)
    light = deep > 1.25 * est and deep - est > 3 * math.hypot(se_deep, float(np.std(boot)))
    return TailIndex(float(est), (float(lo), float(hi)), k, float(deep), bool(light))


# --- moments ----------------------------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentEstimate:
    beta: float
    value: float
    ci: tuple[float, float]
    n: int

    def render(self) -> str:
        return f"E|s|^{self.beta:g} ~ {self.value:.6g} CI [{self.ci[0]:.6g}, {self.ci[1]:.6g}] (N={self.n})"


def moment_estimate(samples, beta: float, n_boot: int = 200, seed: int = 0) -> MomentEstimate:
    if not beta > 0:
        raise ValueError("beta must be positive")
    y = np.abs(_as_values(samples)) ** beta
    boot = _bootstrap(y, np.mean, n_boot, seed)
    lo, hi = np.percentile(boot, [2.5, 97.5])
    return MomentEstimate(float(beta), float(np.mean(y)), (float(lo), float(hi)), len(y))


@dataclass(frozen=True)
class Stabilization:
    beta: float
    sizes: tuple[int, ...]
    running: tuple[float, ...]
    ratio: float  # growth factor of the running estimate per decade of N

    @property
    def verdict(self) -> str:
        if self.ratio > INFINITE_RATIO:
            return "infinite"
        if self.ratio < FINITE_RATIO:
            return "finite"
        return "undetermined"

    def render(self) -> str:
        runs = ", ".join(f"N={n}: {m:.4g}" for n, m in zip(self.sizes, self.running))
        return f"|s|^{self.beta:g} running means {runs}; growth per decade {self.ratio:.3g} -> {self.verdict}"


def _median_of_means(y: np.ndarray, blocks: int) -> float:
    return float(np.median([b.mean() for b in np.array_split(y, blocks)]))


def stabilization(samples, beta: float, sizes: Sequence[int] = (1_000, 10_000, 100_000),
                  blocks: int = 10) -> Stabilization:
    """Growth of the running estimate of ``E|s|^beta`` over nested prefixes of the sample.

    The estimate at each prefix is the median of ``blocks`` block means, which a single
    huge jump cannot move.  An infinite moment makes it grow like a power of N; a finite
    one settles.  ``ratio > 1.5`` per decade reads as infinite, ``ratio < 1.1`` as finite.
    """
    y = np.abs(_as_values(samples)) ** beta
    sizes = tuple(int(n) for n in sizes)
    if sizes[-1] > len(y):
        raise ValueError(f"need {sizes[-1]} samples, have {len(y)}")
    if sizes[0] < blocks:
        raise ValueError("every prefix needs at least one sample per block")
    running = tuple(_median_of_means(y[:n], blocks) for n in sizes)
    decades = math.log10(sizes[-1] / sizes[0])
    ratio = (running[-1] / running[0]) ** (1 / decades) if running[0] > 0 else 1.0
    return Stabilization(float(beta), sizes, running, float(ratio))
